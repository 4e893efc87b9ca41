#ifndef PNPBO_PROBLEMS_HYPERCLEANING_HPP
#define PNPBO_PROBLEMS_HYPERCLEANING_HPP

#include <memory>
#include <string>
#include <vector>

#include "pnpbo/problem.hpp"

namespace pnpbo {

// Data hyper-cleaning: learn a per-training-sample weight sigmoid(lambda_i)
// so that a multinomial logistic model trained on a label-corrupted set
// fits the clean validation set.
//
//   upper: f(lambda, theta) = mean over validation of ce(theta d, y)
//   lower: g(lambda, theta) = mean over train of sigmoid(lambda_i) ce_i(theta)
//                             + ridge_weight ||theta||^2
//
// x = lambda in R^{n_train}, y = theta in R^{classes*features} (row-major
// by class). The upper objective does not depend on lambda, so grad1_f is
// identically zero. The validation/test sets are never corrupted.
struct HyperCleaningSpec {
  std::uint64_t seed = 0;
  int n_train = 1000;
  int n_val = 500;
  int n_test = 1000;
  double corruption = 0.5;   // p_tilde
  double ridge_weight = 0.2; // C_r
  // Optional IDX sources; the synthetic digit generator is used when empty.
  std::string images_path;
  std::string labels_path;
};

class HyperCleaning : public BilevelProblem {
 public:
  explicit HyperCleaning(const HyperCleaningSpec& spec);

  int num_upper() const override { return static_cast<int>(val_x_.rows()); }
  int num_lower() const override { return static_cast<int>(train_x_.rows()); }
  int dim_x() const override { return static_cast<int>(train_x_.rows()); }
  int dim_y() const override { return classes_ * features_; }

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

  int classes() const { return classes_; }
  int features() const { return features_; }
  const std::vector<bool>& corruption_flags() const { return corrupt_flags_; }

  // Mean training weight sigmoid(lambda_i) over corrupted / clean samples.
  std::pair<double, double> weight_split(const Vector& lambda) const;

 private:
  int classes_ = 10;
  int features_ = 0;
  Matrix train_x_, val_x_, test_x_;
  std::vector<int> train_y_, val_y_, test_y_;
  std::vector<bool> corrupt_flags_;
  double ridge_;
  double lf_bound_ = 0;
  double lg1_bound_ = 0;
};

std::shared_ptr<HyperCleaning> make_hypercleaning(const HyperCleaningSpec& spec);

}  // namespace pnpbo

#endif
