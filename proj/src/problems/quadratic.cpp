#include "pnpbo/problems/quadratic.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "pnpbo/rng.hpp"

namespace pnpbo {

namespace {

Matrix random_matrix(RngStream& rng, int rows, int cols, double scale) {
  Matrix out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      // Box-Muller normal draw.
      const double u1 = std::max(rng.next_double(), 1e-300);
      const double u2 = rng.next_double();
      out(r, c) = scale * std::sqrt(-2.0 * std::log(u1)) *
                  std::cos(2.0 * M_PI * u2);
    }
  }
  return out;
}

Matrix random_symmetric(RngStream& rng, int dim, double scale) {
  Matrix raw = random_matrix(rng, dim, dim, scale);
  return 0.5 * (raw + raw.transpose());
}

Vector random_vector(RngStream& rng, int dim, double scale) {
  return random_matrix(rng, dim, 1, scale).col(0);
}

double sym_norm(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Affine map a*X + s*I sending the matrix's extreme eigenvalues onto
// [lo, hi]; collapses to lo*I when either interval is degenerate.
Matrix with_spectrum(const Matrix& sym, double lo, double hi) {
  const int dim = static_cast<int>(sym.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  const double emin = es.eigenvalues().minCoeff();
  const double emax = es.eigenvalues().maxCoeff();
  if (hi - lo < 1e-14 || emax - emin < 1e-14) {
    return lo * Matrix::Identity(dim, dim);
  }
  const double a = (hi - lo) / (emax - emin);
  return a * sym + (lo - a * emin) * Matrix::Identity(dim, dim);
}

// base + zero-mean per-sample deviations, so the ensemble mean equals base
// exactly and the deviation scale is the draw scale.
std::vector<Matrix> blocks_around(RngStream& rng, const Matrix& base, int count,
                                  double scale, bool symmetric) {
  std::vector<Matrix> noise;
  Matrix mean = Matrix::Zero(base.rows(), base.cols());
  for (int k = 0; k < count; ++k) {
    noise.push_back(symmetric
                        ? random_symmetric(rng, static_cast<int>(base.rows()), scale)
                        : random_matrix(rng, static_cast<int>(base.rows()),
                                        static_cast<int>(base.cols()), scale));
    mean += noise.back();
  }
  mean /= count;
  std::vector<Matrix> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) out.push_back(base + (noise[k] - mean));
  return out;
}

std::vector<Vector> vectors_around(RngStream& rng, const Vector& base, int count,
                                   double scale) {
  std::vector<Vector> noise;
  Vector mean = Vector::Zero(base.size());
  for (int k = 0; k < count; ++k) {
    noise.push_back(random_vector(rng, static_cast<int>(base.size()), scale));
    mean += noise.back();
  }
  mean /= count;
  std::vector<Vector> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) out.push_back(base + (noise[k] - mean));
  return out;
}

}  // namespace

QuadraticBilevel::QuadraticBilevel(const QuadraticSpec& spec) : spec_(spec) {
  if (spec.n <= 0 || spec.m <= 0 || spec.dim_x <= 0 || spec.dim_y <= 0) {
    throw std::invalid_argument("quadratic spec dimensions must be positive");
  }
  if (!(spec.mu > 0) || spec.mu > spec.lmax) {
    throw std::invalid_argument("quadratic spec needs 0 < mu <= lmax");
  }
  const int dx = spec.dim_x, dy = spec.dim_y;
  const double disp = spec.dispersion;
  RngStream root(spec.seed);
  RngStream rng_a = root.split(10), rng_b = root.split(11), rng_c = root.split(12);
  RngStream rng_q = root.split(13), rng_s = root.split(14), rng_e = root.split(15);
  RngStream rng_p = root.split(16), rng_qv = root.split(17), rng_t = root.split(18);

  // Lower-level blocks. Mean Hessian spectrum pinned to [mu, lmax].
  a_mean_ = with_spectrum(random_symmetric(rng_a, dy, 1.0), spec.mu, spec.lmax);
  a_ = blocks_around(rng_a, a_mean_, spec.m, disp, /*symmetric=*/true);
  const double coupling = 0.15 * (spec.mu + spec.lmax);
  b_mean_ = random_matrix(rng_b, dy, dx, coupling);
  b_ = blocks_around(rng_b, b_mean_, spec.m, disp, /*symmetric=*/false);
  c_mean_ = random_vector(rng_c, dy, 1.0);
  cvec_ = vectors_around(rng_c, c_mean_, spec.m, disp);

  Eigen::LDLT<Matrix> a_fact(a_mean_);
  solve_map_ = a_fact.solve(b_mean_);   // M
  offset_ = a_fact.solve(c_mean_);      // v = y*(0)

  // Upper-level blocks. The mean coupling cancels the y*-path dependence of
  // grad2 f: s_mean = -M' q_mean, so w = q_mean*v + qv_mean is constant and
  // has unit norm by the choice of qv_mean.
  q_mean_ = random_symmetric(rng_q, dy, 0.2);
  q_ = blocks_around(rng_q, q_mean_, spec.n, disp, /*symmetric=*/true);

  s_mean_ = -(solve_map_.transpose() * q_mean_);
  s_ = blocks_around(rng_s, s_mean_, spec.n, disp, /*symmetric=*/false);

  w_ = random_vector(rng_t, dy, 1.0);
  w_ /= w_.norm();
  qv_mean_ = w_ - q_mean_ * offset_;
  qvec_ = vectors_around(rng_qv, qv_mean_, spec.n, disp);
  zstar_ = a_fact.solve(w_);

  // Total objective curvature: P = M'QM + E with E's mean pinned to
  // [hess_lo, hess_hi], so hess_H equals that mean.
  hess_H_ = with_spectrum(random_symmetric(rng_e, dx, 1.0), spec.hess_lo, spec.hess_hi);
  const Matrix mqm = solve_map_.transpose() * q_mean_ * solve_map_;
  const auto e_blocks = blocks_around(rng_e, hess_H_, spec.n, disp, /*symmetric=*/true);
  p_.reserve(spec.n);
  for (int i = 0; i < spec.n; ++i) p_.push_back(mqm + e_blocks[i]);
  p_mean_ = mqm + hess_H_;

  // Place the minimizer of H at a known random point.
  x_star_ = random_vector(rng_t, dx, 1.0);
  pv_mean_ = -(hess_H_ * x_star_) - s_mean_ * offset_ - b_mean_.transpose() * zstar_;
  pvec_ = vectors_around(rng_p, pv_mean_, spec.n, disp);
  grad_H_const_ = s_mean_ * offset_ + pv_mean_ + b_mean_.transpose() * zstar_;

  // Declared constants from the realized blocks.
  double lf = 0;
  for (int i = 0; i < spec.n; ++i) {
    Matrix joint(dx + dy, dx + dy);
    joint.topLeftCorner(dx, dx) = p_[i];
    joint.topRightCorner(dx, dy) = s_[i];
    joint.bottomLeftCorner(dy, dx) = s_[i].transpose();
    joint.bottomRightCorner(dy, dy) = q_[i];
    lf = std::max(lf, sym_norm(joint));
  }
  double lg1 = 0;
  for (int j = 0; j < spec.m; ++j) {
    Matrix joint = Matrix::Zero(dx + dy, dx + dy);
    joint.topRightCorner(dx, dy) = -b_[j].transpose();
    joint.bottomLeftCorner(dy, dx) = -b_[j];
    joint.bottomRightCorner(dy, dy) = a_[j];
    lg1 = std::max(lg1, sym_norm(joint));
  }
  params_.lf = lf * (1.0 + 1e-9);
  params_.lg1 = lg1 * (1.0 + 1e-9);
  params_.lg2 = std::max(lg1 / 20.0, 1e-6);  // lower level is quadratic
  params_.mu = spec.mu;
  params_.cf = 1.0 + 1e-9;  // ||w|| = 1 by construction
}

Vector QuadraticBilevel::grad1_f(int i, const Vector& x, const Vector& y) const {
  return p_[i] * x + s_[i] * y + pvec_[i];
}

Vector QuadraticBilevel::grad2_f(int i, const Vector& x, const Vector& y) const {
  return q_[i] * y + s_[i].transpose() * x + qvec_[i];
}

Vector QuadraticBilevel::grad2_g(int j, const Vector& x, const Vector& y) const {
  return a_[j] * y - b_[j] * x - cvec_[j];
}

Vector QuadraticBilevel::hvp22_g(int j, const Vector&, const Vector&,
                                 const Vector& v) const {
  return a_[j] * v;
}

Vector QuadraticBilevel::jvp12_g(int j, const Vector&, const Vector&,
                                 const Vector& v) const {
  return -b_[j].transpose() * v;
}

double QuadraticBilevel::value_f(int i, const Vector& x, const Vector& y) const {
  return 0.5 * x.dot(p_[i] * x) + 0.5 * y.dot(q_[i] * y) + x.dot(s_[i] * y) +
         pvec_[i].dot(x) + qvec_[i].dot(y);
}

double QuadraticBilevel::value_g(int j, const Vector& x, const Vector& y) const {
  return 0.5 * y.dot(a_[j] * y) - y.dot(b_[j] * x + cvec_[j]);
}

std::optional<SmoothnessParams> QuadraticBilevel::declared_params() const {
  return params_;
}

void QuadraticBilevel::quadratic_lower(const Vector& x, Matrix& hessian,
                                       Vector& rhs) const {
  hessian = a_mean_;
  rhs = b_mean_ * x + c_mean_;
}

Vector QuadraticBilevel::ystar(const Vector& x) const {
  return solve_map_ * x + offset_;
}

Vector QuadraticBilevel::grad_H(const Vector& x) const {
  return hess_H_ * x + grad_H_const_;
}

std::shared_ptr<QuadraticBilevel> make_quadratic(const QuadraticSpec& spec) {
  return std::make_shared<QuadraticBilevel>(spec);
}

}  // namespace pnpbo
