#include "pnpbo/problems/hypercleaning.hpp"

#include <cmath>

#include "pnpbo/problems/datasets.hpp"

namespace pnpbo {

namespace {

double sigmoid(double t) {
  return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

double sigmoid_d1(double t) {
  const double s = sigmoid(t);
  return s * (1.0 - s);
}

// Stable softmax cross-entropy pieces for logits u.
Vector softmax(const Vector& u) {
  const double shift = u.maxCoeff();
  Vector e = (u.array() - shift).exp();
  return e / e.sum();
}

double log_sum_exp(const Vector& u) {
  const double shift = u.maxCoeff();
  return shift + std::log((u.array() - shift).exp().sum());
}

}  // namespace

HyperCleaning::HyperCleaning(const HyperCleaningSpec& spec) : ridge_(spec.ridge_weight) {
  if (spec.n_train <= 0 || spec.n_val <= 0 || spec.n_test <= 0) {
    throw std::invalid_argument("split sizes must be positive");
  }
  if (!(spec.ridge_weight > 0)) {
    throw std::invalid_argument("ridge weight must be positive");
  }

  Matrix images;
  std::vector<int> labels;
  const int want = spec.n_train + spec.n_val + spec.n_test;
  if (!spec.images_path.empty()) {
    const data::IdxData img = data::load_idx(spec.images_path);
    const data::IdxData lab = data::load_idx(spec.labels_path);
    if (!img.is_images || lab.is_images) {
      throw std::invalid_argument("hypercleaning needs an image and a label IDX file");
    }
    if (img.count() < want || lab.count() < want) {
      throw std::invalid_argument("IDX data smaller than the requested splits");
    }
    images = img.images.topRows(want);
    labels.assign(lab.labels.begin(), lab.labels.begin() + want);
  } else {
    const data::SyntheticDigits synth = data::synthetic_digits(spec.seed, want);
    images = synth.images;
    labels = synth.labels;
  }
  features_ = static_cast<int>(images.cols());

  train_x_ = images.topRows(spec.n_train);
  val_x_ = images.middleRows(spec.n_train, spec.n_val);
  test_x_ = images.bottomRows(spec.n_test);
  std::vector<int> train_labels(labels.begin(), labels.begin() + spec.n_train);
  val_y_.assign(labels.begin() + spec.n_train, labels.begin() + spec.n_train + spec.n_val);
  test_y_.assign(labels.end() - spec.n_test, labels.end());

  // Only the training labels are corrupted.
  const data::CorruptionResult corrupted =
      data::corrupt_labels(train_labels, spec.corruption, spec.seed ^ 0x5bd1e995u, classes_);
  train_y_ = corrupted.labels;
  corrupt_flags_ = corrupted.flags;

  double max_row_sq = 0;
  for (long r = 0; r < train_x_.rows(); ++r) {
    max_row_sq = std::max(max_row_sq, train_x_.row(r).squaredNorm());
  }
  for (long r = 0; r < val_x_.rows(); ++r) {
    max_row_sq = std::max(max_row_sq, val_x_.row(r).squaredNorm());
  }
  // Operating-region bounds (loss values and gradients bounded by assuming
  // ||theta d|| stays within a few units of the origin).
  lf_bound_ = 0.5 * max_row_sq;
  const double loss_cap = std::log(10.0) + 5.0;
  lg1_bound_ = 0.25 * loss_cap + 0.5 * std::sqrt(2.0 * max_row_sq) +
               0.5 * max_row_sq + 2.0 * ridge_;
}

Vector HyperCleaning::grad1_f(int, const Vector&, const Vector&) const {
  return Vector::Zero(dim_x());
}

Vector HyperCleaning::grad2_f(int i, const Vector&, const Vector& theta) const {
  const auto d = val_x_.row(i).transpose();
  Vector logits(classes_);
  const Eigen::Map<const Matrix> th(theta.data(), classes_, features_);
  logits = th * d;
  Vector s = softmax(logits);
  s[val_y_[i]] -= 1.0;
  Vector out(dim_y());
  Eigen::Map<Matrix>(out.data(), classes_, features_) = s * d.transpose();
  return out;
}

Vector HyperCleaning::grad2_g(int j, const Vector& lambda, const Vector& theta) const {
  const auto d = train_x_.row(j).transpose();
  const Eigen::Map<const Matrix> th(theta.data(), classes_, features_);
  Vector s = softmax(th * d);
  s[train_y_[j]] -= 1.0;
  Vector out(dim_y());
  Eigen::Map<Matrix>(out.data(), classes_, features_) =
      sigmoid(lambda[j]) * (s * d.transpose());
  out += 2.0 * ridge_ * theta;
  return out;
}

Vector HyperCleaning::hvp22_g(int j, const Vector& lambda, const Vector& theta,
                              const Vector& v) const {
  const auto d = train_x_.row(j).transpose();
  const Eigen::Map<const Matrix> th(theta.data(), classes_, features_);
  const Eigen::Map<const Matrix> vm(v.data(), classes_, features_);
  const Vector s = softmax(th * d);
  const Vector t = vm * d;
  const Vector hu = s.cwiseProduct(t) - s * s.dot(t);
  Vector out(dim_y());
  Eigen::Map<Matrix>(out.data(), classes_, features_) =
      sigmoid(lambda[j]) * (hu * d.transpose());
  out += 2.0 * ridge_ * v;
  return out;
}

Vector HyperCleaning::jvp12_g(int j, const Vector& lambda, const Vector& theta,
                              const Vector& v) const {
  const auto d = train_x_.row(j).transpose();
  const Eigen::Map<const Matrix> th(theta.data(), classes_, features_);
  Vector s = softmax(th * d);
  s[train_y_[j]] -= 1.0;
  const Eigen::Map<const Matrix> vm(v.data(), classes_, features_);
  const double inner = (s.transpose() * (vm * d)).value();
  Vector out = Vector::Zero(dim_x());
  out[j] = sigmoid_d1(lambda[j]) * inner;
  return out;
}

double HyperCleaning::value_f(int i, const Vector&, const Vector& theta) const {
  const auto d = val_x_.row(i).transpose();
  const Eigen::Map<const Matrix> th(theta.data(), classes_, features_);
  const Vector logits = th * d;
  return log_sum_exp(logits) - logits[val_y_[i]];
}

double HyperCleaning::value_g(int j, const Vector& lambda, const Vector& theta) const {
  const auto d = train_x_.row(j).transpose();
  const Eigen::Map<const Matrix> th(theta.data(), classes_, features_);
  const Vector logits = th * d;
  const double loss = log_sum_exp(logits) - logits[train_y_[j]];
  return sigmoid(lambda[j]) * loss + ridge_ * theta.squaredNorm();
}

std::optional<SmoothnessParams> HyperCleaning::declared_params() const {
  SmoothnessParams p;
  p.lf = lf_bound_;
  p.lg1 = std::max(lg1_bound_, 2.0 * ridge_);
  p.lg2 = lg1_bound_;  // region estimate
  p.mu = 2.0 * ridge_;
  p.cf = std::sqrt(2.0 * lf_bound_) + 1.0;
  return p;
}

double HyperCleaning::test_metric(const Vector&, const Vector& theta) const {
  const Eigen::Map<const Matrix> th(theta.data(), classes_, features_);
  int wrong = 0;
  for (long s = 0; s < test_x_.rows(); ++s) {
    int best = 0;
    const Vector logits = th * test_x_.row(s).transpose();
    logits.maxCoeff(&best);
    if (best != test_y_[static_cast<std::size_t>(s)]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(test_x_.rows());
}

std::pair<double, double> HyperCleaning::weight_split(const Vector& lambda) const {
  double corrupted = 0, clean = 0;
  int n_corr = 0, n_clean = 0;
  for (int j = 0; j < dim_x(); ++j) {
    if (corrupt_flags_[j]) {
      corrupted += sigmoid(lambda[j]);
      ++n_corr;
    } else {
      clean += sigmoid(lambda[j]);
      ++n_clean;
    }
  }
  return {n_corr > 0 ? corrupted / n_corr : 0.0, n_clean > 0 ? clean / n_clean : 0.0};
}

std::shared_ptr<HyperCleaning> make_hypercleaning(const HyperCleaningSpec& spec) {
  return std::make_shared<HyperCleaning>(spec);
}

}  // namespace pnpbo
