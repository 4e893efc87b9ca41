#ifndef PNPBO_PROBLEMS_REGPATH_HPP
#define PNPBO_PROBLEMS_REGPATH_HPP

#include <memory>
#include <string>
#include <vector>

#include "pnpbo/problem.hpp"

namespace pnpbo {

// Hyperparameter selection for l2-penalized logistic regression, with the
// regularization weights parameterized as exp(lambda).
//
// per_feature: binary labels in {-1,+1}, theta in R^p,
//   g = mean_i logistic(y_i <d_i, theta>) + 1/2 sum_k exp(lambda_k) theta_k^2,
//   lambda in R^p (one hyperparameter per feature).
//
// per_class: multinomial model, theta in R^{classes*features},
//   g = mean_i ce_i(theta) + sum_c exp(lambda_c) sum_k theta_{c,k}^2,
//   lambda in R^{classes}.
//
// The upper objective is the unregularized validation loss in both modes
// and does not depend on lambda.
enum class RegPathMode { per_feature, per_class };

struct RegPathSpec {
  std::uint64_t seed = 0;
  RegPathMode mode = RegPathMode::per_feature;
  int n_train = 500;
  int n_val = 300;
  int n_test = 500;
  int features = 22;
  int classes = 7;  // per_class only
  // Optional LIBSVM source split train/val/test by the given counts; the
  // blob generators are used when empty.
  std::string libsvm_path;
};

class RegPathLogReg : public BilevelProblem {
 public:
  explicit RegPathLogReg(const RegPathSpec& spec);

  int num_upper() const override { return static_cast<int>(val_x_.rows()); }
  int num_lower() const override { return static_cast<int>(train_x_.rows()); }
  int dim_x() const override;
  int dim_y() const override;

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
  double test_metric(const Vector& x, const Vector& y) const override;

  RegPathMode mode() const { return spec_.mode; }
  int features() const { return features_; }
  int classes() const { return spec_.classes; }

 private:
  RegPathSpec spec_;
  int features_ = 0;
  Matrix train_x_, val_x_, test_x_;
  std::vector<double> train_yb_, val_yb_, test_yb_;  // per_feature labels
  std::vector<int> train_yc_, val_yc_, test_yc_;     // per_class labels
};

std::shared_ptr<RegPathLogReg> make_regpath(const RegPathSpec& spec);

// Binary logistic loss log(1 + exp(-t)) and its first two derivatives,
// evaluated stably for large |t|.
double logistic_loss(double t);
double logistic_loss_d1(double t);
double logistic_loss_d2(double t);

}  // namespace pnpbo

#endif
