#ifndef PNPBO_ORACLE_HPP
#define PNPBO_ORACLE_HPP

#include "pnpbo/problem.hpp"
#include "pnpbo/types.hpp"

namespace pnpbo {

struct OracleConfig {
  double ll_tol = 1e-10;       // gradient norm target for the lower solve
  double lin_tol = 1e-10;      // residual target for the implicit solve
  long long max_iters = 500000;

  void validate() const;
};

// High-precision lower-level solve: returns y with ||grad2 g(x, y)|| <=
// ll_tol. Uses a direct factorization when the problem advertises a
// quadratic lower level, gradient descent with step 2/(mu + lg1) otherwise
// (declared mu, lg1 required). Throws NoConvergenceError past max_iters.
Vector solve_lower(const BilevelProblem& problem, const Vector& x,
                   const OracleConfig& config = {});

// Conjugate gradient on the SPD system  (d^2/dy^2 g(x, y*)) z = grad2 f(x, y*),
// matrix-free through averaged Hessian-vector products.
Vector solve_implicit(const BilevelProblem& problem, const Vector& x,
                      const Vector& ystar, const OracleConfig& config = {});

// Exact hypergradient via the two solves:
//   grad1 f(x, y*) - mean_j (d^2/dxdy G_j)(x, y*) z*.
Vector hypergradient(const BilevelProblem& problem, const Vector& x,
                     const OracleConfig& config = {});

// ||hypergradient(x)||^2, the stationarity measure used in traces.
double stationarity_metric(const BilevelProblem& problem, const Vector& x,
                           const OracleConfig& config = {});

// H(x) = f(x, y*(x)), for finite-difference cross-checks.
double upper_objective(const BilevelProblem& problem, const Vector& x,
                       const OracleConfig& config = {});

}  // namespace pnpbo

#endif
