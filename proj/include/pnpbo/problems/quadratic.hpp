#ifndef PNPBO_PROBLEMS_QUADRATIC_HPP
#define PNPBO_PROBLEMS_QUADRATIC_HPP

#include <memory>
#include <vector>

#include "pnpbo/problem.hpp"

namespace pnpbo {

// Synthetic finite-sum bilevel instance with per-sample quadratics
//
//   F_i(x, y) = 1/2 x'P_i x + 1/2 y'Q_i y + x'S_i y + p_i'x + q_i'y
//   G_j(x, y) = 1/2 y'A_j y - y'(B_j x + c_j)
//
// built so that closed forms exist for y*, z*, the hypergradient and the
// minimizer of the total objective:
//   * the averaged lower Hessian has spectrum exactly in [mu, lmax];
//   * the mean coupling S is chosen so grad2 f(x, y*(x)) is a constant
//     vector of unit norm, making the declared cf bound exact and z*
//     independent of x;
//   * the total objective's Hessian has spectrum in [hess_lo, hess_hi]
//     and its minimizer is placed at a known point.
//
// `dispersion` scales the zero-mean per-sample deviations and therefore the
// minibatch noise the estimators see.
struct QuadraticSpec {
  std::uint64_t seed = 0;
  int n = 100;
  int m = 100;
  int dim_x = 5;
  int dim_y = 5;
  double mu = 1.0;
  double lmax = 2.0;
  double dispersion = 0.02;
  double hess_lo = 0.5;
  double hess_hi = 2.0;
};

class QuadraticBilevel : public BilevelProblem {
 public:
  explicit QuadraticBilevel(const QuadraticSpec& spec);

  int num_upper() const override { return spec_.n; }
  int num_lower() const override { return spec_.m; }
  int dim_x() const override { return spec_.dim_x; }
  int dim_y() const override { return spec_.dim_y; }

  Vector grad1_f(int i, const Vector& x, const Vector& y) const override;
  Vector grad2_f(int i, const Vector& x, const Vector& y) const override;
  Vector grad2_g(int j, const Vector& x, const Vector& y) const override;
  Vector hvp22_g(int j, const Vector& x, const Vector& y,
                 const Vector& v) const override;
  Vector jvp12_g(int j, const Vector& x, const Vector& y,
                 const Vector& v) const override;
  double value_f(int i, const Vector& x, const Vector& y) const override;
  double value_g(int j, const Vector& x, const Vector& y) const override;

  std::optional<SmoothnessParams> declared_params() const override;
  bool has_quadratic_lower() const override { return true; }
  void quadratic_lower(const Vector& x, Matrix& hessian, Vector& rhs) const override;

  // Closed forms.
  Vector ystar(const Vector& x) const;
  Vector zstar() const { return zstar_; }
  Vector grad_H(const Vector& x) const;
  const Matrix& hess_H() const { return hess_H_; }
  const Vector& minimizer() const { return x_star_; }
  const Matrix& mean_lower_hessian() const { return a_mean_; }

  const QuadraticSpec& spec() const { return spec_; }

 private:
  QuadraticSpec spec_;
  std::vector<Matrix> a_, b_, p_, q_, s_;
  std::vector<Vector> cvec_, pvec_, qvec_;
  Matrix a_mean_, b_mean_, s_mean_, q_mean_, p_mean_;
  Vector c_mean_, pv_mean_, qv_mean_;
  Matrix solve_map_;   // M = A_mean^{-1} B_mean
  Vector offset_;      // v = A_mean^{-1} c_mean
  Vector w_;           // grad2 f along the solution path (constant)
  Vector zstar_;
  Matrix hess_H_;
  Vector grad_H_const_;
  Vector x_star_;
  SmoothnessParams params_;
};

std::shared_ptr<QuadraticBilevel> make_quadratic(const QuadraticSpec& spec);

}  // namespace pnpbo

#endif
