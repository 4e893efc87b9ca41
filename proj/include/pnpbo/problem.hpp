#ifndef PNPBO_PROBLEM_HPP
#define PNPBO_PROBLEM_HPP

#include <optional>

#include "pnpbo/types.hpp"

namespace pnpbo {

// Lipschitz/convexity parameters a problem declares for itself:
// lf bounds every per-sample upper-level gradient's Lipschitz constant,
// lg1/lg2 the lower-level gradient/Hessian ones, mu the strong convexity
// of the averaged lower level in y, cf the norm bound on grad2 of the
// averaged upper objective along the lower-level solution path.
struct SmoothnessParams {
  double lf = 0;
  double lg1 = 0;
  double lg2 = 0;
  double mu = 0;
  double cf = 0;

  void validate() const;
};

// Per-sample oracle for a finite-sum bilevel problem
//
//   min_x  f(x, y*(x)) = (1/n) sum_i F_i(x, y*(x))
//   s.t.   y*(x) = argmin_y g(x, y) = argmin_y (1/m) sum_j G_j(x, y).
//
// Only gradient and Hessian/Jacobian-vector products are exposed; dense
// second derivatives never materialize. Implementations must be safe to
// call concurrently (read-only shared data).
class BilevelProblem {
 public:
  virtual ~BilevelProblem() = default;

  virtual int num_upper() const = 0;  // n
  virtual int num_lower() const = 0;  // m
  virtual int dim_x() const = 0;
  virtual int dim_y() const = 0;

  virtual Vector grad1_f(int i, const Vector& x, const Vector& y) const = 0;
  virtual Vector grad2_f(int i, const Vector& x, const Vector& y) const = 0;
  virtual Vector grad2_g(int j, const Vector& x, const Vector& y) const = 0;
  // (d^2/dy^2 G_j) * v
  virtual Vector hvp22_g(int j, const Vector& x, const Vector& y,
                         const Vector& v) const = 0;
  // (d^2/dxdy G_j) * v, maps R^{dim_y} -> R^{dim_x}
  virtual Vector jvp12_g(int j, const Vector& x, const Vector& y,
                         const Vector& v) const = 0;

  virtual double value_f(int i, const Vector& x, const Vector& y) const = 0;
  virtual double value_g(int j, const Vector& x, const Vector& y) const = 0;

  virtual std::optional<SmoothnessParams> declared_params() const {
    return std::nullopt;
  }

  // Quadratic lower level: grad2_g(x, y) = A y - rhs(x) with A SPD,
  // allowing a direct solve instead of gradient descent.
  virtual bool has_quadratic_lower() const { return false; }
  virtual void quadratic_lower(const Vector& x, Matrix& hessian,
                               Vector& rhs) const;

  // Task metric for traces (e.g. test error); NaN when undefined.
  virtual double test_metric(const Vector& x, const Vector& y) const;

  // Averaged objectives, for diagnostics.
  double mean_value_f(const Vector& x, const Vector& y) const;
  double mean_value_g(const Vector& x, const Vector& y) const;
  Vector mean_grad2_g(const Vector& x, const Vector& y) const;
  Vector mean_grad2_f(const Vector& x, const Vector& y) const;
};

}  // namespace pnpbo

#endif
