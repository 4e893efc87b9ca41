#include "pnpbo/problems/regpath.hpp"

#include <cmath>

#include "pnpbo/problems/datasets.hpp"

namespace pnpbo {

double logistic_loss(double t) {
  // log(1 + exp(-t)) without overflow.
  return t >= 0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
}

double logistic_loss_d1(double t) {
  return t >= 0 ? -std::exp(-t) / (1.0 + std::exp(-t)) : -1.0 / (1.0 + std::exp(t));
}

double logistic_loss_d2(double t) {
  const double s = t >= 0 ? std::exp(-t) / (1.0 + std::exp(-t))
                          : 1.0 / (1.0 + std::exp(t));
  return s * (1.0 - s);
}

namespace {

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

RegPathLogReg::RegPathLogReg(const RegPathSpec& spec) : spec_(spec) {
  const int want = spec.n_train + spec.n_val + spec.n_test;
  if (want <= 0 || spec.features <= 0) {
    throw std::invalid_argument("regpath spec sizes must be positive");
  }
  Matrix features;
  std::vector<double> binary_labels;
  std::vector<int> class_labels;
  if (!spec.libsvm_path.empty()) {
    const data::LibsvmData raw = data::load_libsvm(spec.libsvm_path, spec.features);
    if (static_cast<int>(raw.rows.size()) < want) {
      throw std::invalid_argument("LIBSVM data smaller than the requested splits");
    }
    features = raw.dense().topRows(want);
    for (int s = 0; s < want; ++s) {
      if (spec.mode == RegPathMode::per_feature) {
        binary_labels.push_back(raw.labels[s] > 0 ? 1.0 : -1.0);
      } else {
        class_labels.push_back(static_cast<int>(raw.labels[s]) - 1);
      }
    }
  } else if (spec.mode == RegPathMode::per_feature) {
    const data::BinaryBlobs blobs = data::binary_blobs(spec.seed, want, spec.features);
    features = blobs.features;
    binary_labels = blobs.labels;
  } else {
    const data::MulticlassBlobs blobs =
        data::multiclass_blobs(spec.seed, want, spec.features, spec.classes);
    features = blobs.features;
    class_labels = blobs.labels;
  }
  features_ = static_cast<int>(features.cols());

  train_x_ = features.topRows(spec.n_train);
  val_x_ = features.middleRows(spec.n_train, spec.n_val);
  test_x_ = features.bottomRows(spec.n_test);
  if (spec.mode == RegPathMode::per_feature) {
    train_yb_.assign(binary_labels.begin(), binary_labels.begin() + spec.n_train);
    val_yb_.assign(binary_labels.begin() + spec.n_train,
                   binary_labels.begin() + spec.n_train + spec.n_val);
    test_yb_.assign(binary_labels.end() - spec.n_test, binary_labels.end());
  } else {
    train_yc_.assign(class_labels.begin(), class_labels.begin() + spec.n_train);
    val_yc_.assign(class_labels.begin() + spec.n_train,
                   class_labels.begin() + spec.n_train + spec.n_val);
    test_yc_.assign(class_labels.end() - spec.n_test, class_labels.end());
  }
}

int RegPathLogReg::dim_x() const {
  return spec_.mode == RegPathMode::per_feature ? features_ : spec_.classes;
}

int RegPathLogReg::dim_y() const {
  return spec_.mode == RegPathMode::per_feature ? features_
                                                : spec_.classes * features_;
}

Vector RegPathLogReg::grad1_f(int, const Vector&, const Vector&) const {
  return Vector::Zero(dim_x());
}

Vector RegPathLogReg::grad2_f(int i, const Vector&, const Vector& theta) const {
  if (spec_.mode == RegPathMode::per_feature) {
    const auto d = val_x_.row(i).transpose();
    const double t = val_yb_[i] * d.dot(theta);
    return Vector(logistic_loss_d1(t) * val_yb_[i] * d);
  }
  const auto d = val_x_.row(i).transpose();
  const Eigen::Map<const Matrix> th(theta.data(), spec_.classes, features_);
  Vector s = softmax(th * d);
  s[val_yc_[i]] -= 1.0;
  Vector out(dim_y());
  Eigen::Map<Matrix>(out.data(), spec_.classes, features_) = s * d.transpose();
  return out;
}

Vector RegPathLogReg::grad2_g(int j, const Vector& lambda, const Vector& theta) const {
  if (spec_.mode == RegPathMode::per_feature) {
    const auto d = train_x_.row(j).transpose();
    const double t = train_yb_[j] * d.dot(theta);
    Vector out = logistic_loss_d1(t) * train_yb_[j] * d;
    out += lambda.array().exp().matrix().cwiseProduct(theta);
    return out;
  }
  const auto d = train_x_.row(j).transpose();
  const Eigen::Map<const Matrix> th(theta.data(), spec_.classes, features_);
  Vector s = softmax(th * d);
  s[train_yc_[j]] -= 1.0;
  Vector out(dim_y());
  auto out_m = Eigen::Map<Matrix>(out.data(), spec_.classes, features_);
  out_m = s * d.transpose();
  for (int c = 0; c < spec_.classes; ++c) {
    out_m.row(c) += 2.0 * std::exp(lambda[c]) * th.row(c);
  }
  return out;
}

Vector RegPathLogReg::hvp22_g(int j, const Vector& lambda, const Vector& theta,
                              const Vector& v) const {
  if (spec_.mode == RegPathMode::per_feature) {
    const auto d = train_x_.row(j).transpose();
    const double t = train_yb_[j] * d.dot(theta);
    Vector out = logistic_loss_d2(t) * d.dot(v) * d;  // y^2 = 1
    out += lambda.array().exp().matrix().cwiseProduct(v);
    return out;
  }
  const auto d = train_x_.row(j).transpose();
  const Eigen::Map<const Matrix> th(theta.data(), spec_.classes, features_);
  const Eigen::Map<const Matrix> vm(v.data(), spec_.classes, features_);
  const Vector s = softmax(th * d);
  const Vector t = vm * d;
  const Vector hu = s.cwiseProduct(t) - s * s.dot(t);
  Vector out(dim_y());
  auto out_m = Eigen::Map<Matrix>(out.data(), spec_.classes, features_);
  out_m = hu * d.transpose();
  for (int c = 0; c < spec_.classes; ++c) {
    out_m.row(c) += 2.0 * std::exp(lambda[c]) * vm.row(c);
  }
  return out;
}

Vector RegPathLogReg::jvp12_g(int, const Vector& lambda, const Vector& theta,
                              const Vector& v) const {
  if (spec_.mode == RegPathMode::per_feature) {
    return Vector(lambda.array().exp().matrix()
                      .cwiseProduct(theta)
                      .cwiseProduct(v));
  }
  const Eigen::Map<const Matrix> th(theta.data(), spec_.classes, features_);
  const Eigen::Map<const Matrix> vm(v.data(), spec_.classes, features_);
  Vector out(spec_.classes);
  for (int c = 0; c < spec_.classes; ++c) {
    out[c] = 2.0 * std::exp(lambda[c]) * th.row(c).dot(vm.row(c));
  }
  return out;
}

double RegPathLogReg::value_f(int i, const Vector&, const Vector& theta) const {
  if (spec_.mode == RegPathMode::per_feature) {
    const auto d = val_x_.row(i).transpose();
    return logistic_loss(val_yb_[i] * d.dot(theta));
  }
  const auto d = val_x_.row(i).transpose();
  const Eigen::Map<const Matrix> th(theta.data(), spec_.classes, features_);
  const Vector logits = th * d;
  return log_sum_exp(logits) - logits[val_yc_[i]];
}

double RegPathLogReg::value_g(int j, const Vector& lambda, const Vector& theta) const {
  if (spec_.mode == RegPathMode::per_feature) {
    const auto d = train_x_.row(j).transpose();
    const double loss = logistic_loss(train_yb_[j] * d.dot(theta));
    return loss + 0.5 * lambda.array().exp().matrix().dot(theta.cwiseProduct(theta));
  }
  const auto d = train_x_.row(j).transpose();
  const Eigen::Map<const Matrix> th(theta.data(), spec_.classes, features_);
  const Vector logits = th * d;
  double out = log_sum_exp(logits) - logits[train_yc_[j]];
  for (int c = 0; c < spec_.classes; ++c) {
    out += std::exp(lambda[c]) * th.row(c).squaredNorm();
  }
  return out;
}

std::optional<SmoothnessParams> RegPathLogReg::declared_params() const {
  double max_row_sq = 0;
  for (long r = 0; r < train_x_.rows(); ++r) {
    max_row_sq = std::max(max_row_sq, train_x_.row(r).squaredNorm());
  }
  for (long r = 0; r < val_x_.rows(); ++r) {
    max_row_sq = std::max(max_row_sq, val_x_.row(r).squaredNorm());
  }
  // Region bounds: lambda within [-2, 2], ||theta|| within a few units.
  const double reg_hi = std::exp(2.0);
  const double reg_lo = std::exp(-2.0);
  SmoothnessParams p;
  p.lf = 0.25 * max_row_sq;
  p.lg1 = 0.25 * max_row_sq + 2.0 * reg_hi * (1.0 + 2.0) + 2.0;
  p.lg2 = 2.0 * reg_hi * (1.0 + 2.0);
  p.mu = spec_.mode == RegPathMode::per_feature ? reg_lo : 2.0 * reg_lo;
  p.cf = 0.5 * std::sqrt(max_row_sq) + 1.0;
  return p;
}

double RegPathLogReg::test_metric(const Vector&, const Vector& theta) const {
  int wrong = 0;
  if (spec_.mode == RegPathMode::per_feature) {
    for (long s = 0; s < test_x_.rows(); ++s) {
      const double score = test_x_.row(s) * theta;
      if ((score >= 0 ? 1.0 : -1.0) != test_yb_[static_cast<std::size_t>(s)]) ++wrong;
    }
  } else {
    const Eigen::Map<const Matrix> th(theta.data(), spec_.classes, features_);
    for (long s = 0; s < test_x_.rows(); ++s) {
      int best = 0;
      const Vector logits = th * test_x_.row(s).transpose();
      logits.maxCoeff(&best);
      if (best != test_yc_[static_cast<std::size_t>(s)]) ++wrong;
    }
  }
  return static_cast<double>(wrong) / static_cast<double>(test_x_.rows());
}

std::shared_ptr<RegPathLogReg> make_regpath(const RegPathSpec& spec) {
  return std::make_shared<RegPathLogReg>(spec);
}

}  // namespace pnpbo
