#include "pnpbo/oracle.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace pnpbo {

void OracleConfig::validate() const {
  if (!(ll_tol > 0) || !(lin_tol > 0) || max_iters < 1) {
    throw std::invalid_argument("oracle tolerances must be positive");
  }
}

Vector solve_lower(const BilevelProblem& problem, const Vector& x,
                   const OracleConfig& config) {
  config.validate();
  if (problem.has_quadratic_lower()) {
    Matrix hessian;
    Vector rhs;
    problem.quadratic_lower(x, hessian, rhs);
    Vector y = hessian.ldlt().solve(rhs);
    // One refinement pass; the direct solve is normally far below tolerance.
    y += hessian.ldlt().solve(rhs - hessian * y);
    const double residual = problem.mean_grad2_g(x, y).norm();
    if (residual > config.ll_tol) {
      throw NoConvergenceError("direct lower-level solve above tolerance", residual);
    }
    return y;
  }

  const auto params = problem.declared_params();
  if (!params.has_value() || !(params->mu > 0)) {
    throw std::invalid_argument(
        "iterative lower-level solve needs declared mu and lg1");
  }
  const double step = 2.0 / (params->mu + params->lg1);
  Vector y = Vector::Zero(problem.dim_y());
  for (long long it = 0; it < config.max_iters; ++it) {
    const Vector grad = problem.mean_grad2_g(x, y);
    const double norm = grad.norm();
    if (norm <= config.ll_tol) return y;
    y -= step * grad;
  }
  throw NoConvergenceError("lower-level gradient descent exceeded max_iters",
                           problem.mean_grad2_g(x, y).norm());
}

Vector solve_implicit(const BilevelProblem& problem, const Vector& x,
                      const Vector& ystar, const OracleConfig& config) {
  config.validate();
  const int m = problem.num_lower();
  auto apply = [&](const Vector& v) {
    Vector acc = Vector::Zero(problem.dim_y());
    for (int j = 0; j < m; ++j) acc += problem.hvp22_g(j, x, ystar, v);
    return Vector(acc / m);
  };
  const Vector rhs = problem.mean_grad2_f(x, ystar);

  Vector z = Vector::Zero(problem.dim_y());
  Vector r = rhs;  // rhs - A*0
  Vector p = r;
  double rr = r.squaredNorm();
  if (std::sqrt(rr) <= config.lin_tol) return z;

  const long long cap = std::min<long long>(config.max_iters, 20LL * problem.dim_y() + 50);
  for (long long it = 0; it < cap; ++it) {
    const Vector ap = apply(p);
    const double denom = p.dot(ap);
    if (!(denom > 0)) {
      throw NoConvergenceError("conjugate gradient stagnated (non-SPD curvature)",
                               std::sqrt(rr));
    }
    const double alpha = rr / denom;
    z += alpha * p;
    r -= alpha * ap;
    const double rr_new = r.squaredNorm();
    if (std::sqrt(rr_new) <= config.lin_tol) {
      // Re-check the true residual; recurrence drift can flatter it.
      const double true_res = (apply(z) - rhs).norm();
      if (true_res <= config.lin_tol) return z;
      r = rhs - apply(z);
      rr = r.squaredNorm();
      p = r;
      continue;
    }
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  throw NoConvergenceError("conjugate gradient exceeded max_iters", std::sqrt(rr));
}

Vector hypergradient(const BilevelProblem& problem, const Vector& x,
                     const OracleConfig& config) {
  const Vector ystar = solve_lower(problem, x, config);
  const Vector zstar = solve_implicit(problem, x, ystar, config);
  Vector grad1 = Vector::Zero(problem.dim_x());
  for (int i = 0; i < problem.num_upper(); ++i) {
    grad1 += problem.grad1_f(i, x, ystar);
  }
  grad1 /= problem.num_upper();
  Vector jvp = Vector::Zero(problem.dim_x());
  for (int j = 0; j < problem.num_lower(); ++j) {
    jvp += problem.jvp12_g(j, x, ystar, zstar);
  }
  jvp /= problem.num_lower();
  return grad1 - jvp;
}

double stationarity_metric(const BilevelProblem& problem, const Vector& x,
                           const OracleConfig& config) {
  return hypergradient(problem, x, config).squaredNorm();
}

double upper_objective(const BilevelProblem& problem, const Vector& x,
                       const OracleConfig& config) {
  const Vector ystar = solve_lower(problem, x, config);
  return problem.mean_value_f(x, ystar);
}

}  // namespace pnpbo
