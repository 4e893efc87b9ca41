#ifndef PNPBO_TESTS_CALLBACK_PROBLEM_HPP
#define PNPBO_TESTS_CALLBACK_PROBLEM_HPP

#include <functional>

#include "pnpbo/problem.hpp"

namespace pnpbo::testing {

// Bilevel problem assembled from closures, for scalar toys and hand-built
// finite sums in tests.
class CallbackProblem : public pnpbo::BilevelProblem {
 public:
  using GradFn = std::function<Vector(int, const Vector&, const Vector&)>;
  using ProdFn = std::function<Vector(int, const Vector&, const Vector&, const Vector&)>;
  using ValueFn = std::function<double(int, const Vector&, const Vector&)>;

  CallbackProblem(int n, int m, int dx, int dy)
      : n_(n), m_(m), dx_(dx), dy_(dy) {}

  int num_upper() const override { return n_; }
  int num_lower() const override { return m_; }
  int dim_x() const override { return dx_; }
  int dim_y() const override { return dy_; }

  Vector grad1_f(int i, const Vector& x, const Vector& y) const override {
    return grad1_f_ ? grad1_f_(i, x, y) : Vector::Zero(dx_);
  }
  Vector grad2_f(int i, const Vector& x, const Vector& y) const override {
    return grad2_f_ ? grad2_f_(i, x, y) : Vector::Zero(dy_);
  }
  Vector grad2_g(int j, const Vector& x, const Vector& y) const override {
    return grad2_g_ ? grad2_g_(j, x, y) : Vector::Zero(dy_);
  }
  Vector hvp22_g(int j, const Vector& x, const Vector& y, const Vector& v) const override {
    return hvp22_g_ ? hvp22_g_(j, x, y, v) : Vector::Zero(dy_);
  }
  Vector jvp12_g(int j, const Vector& x, const Vector& y, const Vector& v) const override {
    return jvp12_g_ ? jvp12_g_(j, x, y, v) : Vector::Zero(dx_);
  }
  double value_f(int i, const Vector& x, const Vector& y) const override {
    return value_f_ ? value_f_(i, x, y) : 0.0;
  }
  double value_g(int j, const Vector& x, const Vector& y) const override {
    return value_g_ ? value_g_(j, x, y) : 0.0;
  }
  std::optional<SmoothnessParams> declared_params() const override { return params_; }

  GradFn grad1_f_, grad2_f_, grad2_g_;
  ProdFn hvp22_g_, jvp12_g_;
  ValueFn value_f_, value_g_;
  std::optional<SmoothnessParams> params_;

 private:
  int n_, m_, dx_, dy_;
};

inline Vector scalar_vec(double v) {
  Vector out(1);
  out[0] = v;
  return out;
}

// The worked scalar toy: f = y^2/2, g = (y - x)^2/2 (n = m = 1).
// y*(x) = x, z*(x) = x, hypergradient = x, H = x^2/2.
inline CallbackProblem scalar_toy() {
  CallbackProblem p(1, 1, 1, 1);
  p.grad1_f_ = [](int, const Vector&, const Vector&) { return scalar_vec(0.0); };
  p.grad2_f_ = [](int, const Vector&, const Vector& y) { return y; };
  p.grad2_g_ = [](int, const Vector& x, const Vector& y) { return Vector(y - x); };
  p.hvp22_g_ = [](int, const Vector&, const Vector&, const Vector& v) { return v; };
  p.jvp12_g_ = [](int, const Vector&, const Vector&, const Vector& v) { return Vector(-v); };
  p.value_f_ = [](int, const Vector&, const Vector& y) { return 0.5 * y[0] * y[0]; };
  p.value_g_ = [](int, const Vector& x, const Vector& y) {
    return 0.5 * (y[0] - x[0]) * (y[0] - x[0]);
  };
  SmoothnessParams params;
  params.lf = 1;
  params.lg1 = 1;
  params.lg2 = 0.05;
  params.mu = 1;
  params.cf = 10;
  p.params_ = params;
  return p;
}

inline Iterate make_iterate(double x, double y, double z) {
  Iterate it;
  it.x = scalar_vec(x);
  it.y = scalar_vec(y);
  it.z = scalar_vec(z);
  return it;
}

// Scalar finite sum with per-sample f components f_i(x, y) = a_i * y and
// g components g_j = (b_j/2) (y - x)^2; handy for estimator bookkeeping
// tests where every component is distinct.
inline CallbackProblem weighted_scalar_sum(std::vector<double> f_weights,
                                           std::vector<double> g_weights) {
  const int n = static_cast<int>(f_weights.size());
  const int m = static_cast<int>(g_weights.size());
  CallbackProblem p(n, m, 1, 1);
  auto fw = std::make_shared<std::vector<double>>(std::move(f_weights));
  auto gw = std::make_shared<std::vector<double>>(std::move(g_weights));
  p.grad1_f_ = [fw](int i, const Vector&, const Vector&) { return scalar_vec((*fw)[i]); };
  p.grad2_f_ = [fw](int i, const Vector&, const Vector& y) {
    return scalar_vec((*fw)[i] * y[0]);
  };
  p.grad2_g_ = [gw](int j, const Vector& x, const Vector& y) {
    return scalar_vec((*gw)[j] * (y[0] - x[0]));
  };
  p.hvp22_g_ = [gw](int j, const Vector&, const Vector&, const Vector& v) {
    return scalar_vec((*gw)[j] * v[0]);
  };
  p.jvp12_g_ = [gw](int j, const Vector&, const Vector&, const Vector& v) {
    return scalar_vec(-(*gw)[j] * v[0]);
  };
  return p;
}

}  // namespace pnpbo::testing

#endif
