#include <algorithm>
#include <numeric>

#include "pnpbo/directions.hpp"
#include "pnpbo/evaluator.hpp"
#include "pnpbo/problem.hpp"
#include "pnpbo/rng.hpp"
#include "pnpbo/types.hpp"

namespace pnpbo {

SampleDraw full_batch(int n, int m) {
  SampleDraw draw;
  draw.f_indices.resize(n);
  draw.g_indices.resize(m);
  std::iota(draw.f_indices.begin(), draw.f_indices.end(), 0);
  std::iota(draw.g_indices.begin(), draw.g_indices.end(), 0);
  return draw;
}

void SmoothnessParams::validate() const {
  if (!(lf > 0 && lg1 > 0 && lg2 > 0 && mu > 0 && cf > 0)) {
    throw std::invalid_argument("smoothness parameters must all be positive");
  }
  if (mu > lg1) {
    throw std::invalid_argument("mu cannot exceed lg1");
  }
}

void BilevelProblem::quadratic_lower(const Vector&, Matrix&, Vector&) const {
  throw std::logic_error("problem does not advertise a quadratic lower level");
}

double BilevelProblem::test_metric(const Vector&, const Vector&) const {
  return std::numeric_limits<double>::quiet_NaN();
}

double BilevelProblem::mean_value_f(const Vector& x, const Vector& y) const {
  double acc = 0;
  for (int i = 0; i < num_upper(); ++i) acc += value_f(i, x, y);
  return acc / num_upper();
}

double BilevelProblem::mean_value_g(const Vector& x, const Vector& y) const {
  double acc = 0;
  for (int j = 0; j < num_lower(); ++j) acc += value_g(j, x, y);
  return acc / num_lower();
}

Vector BilevelProblem::mean_grad2_g(const Vector& x, const Vector& y) const {
  Vector acc = Vector::Zero(dim_y());
  for (int j = 0; j < num_lower(); ++j) acc += grad2_g(j, x, y);
  return acc / num_lower();
}

Vector BilevelProblem::mean_grad2_f(const Vector& x, const Vector& y) const {
  Vector acc = Vector::Zero(dim_y());
  for (int i = 0; i < num_upper(); ++i) acc += grad2_f(i, x, y);
  return acc / num_upper();
}

// --------------------------------------------------------------------------
// rng

int RngStream::uniform_int(int bound) {
  if (bound <= 0) throw std::invalid_argument("uniform_int: bound must be positive");
  const std::uint64_t ubound = static_cast<std::uint64_t>(bound);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % ubound;
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return static_cast<int>(v % ubound);
}

std::vector<int> RngStream::sample_without_replacement(int population, int count) {
  if (count < 0 || count > population) {
    throw std::invalid_argument("sample_without_replacement: bad count");
  }
  if (count == population) {
    std::vector<int> all(population);
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  // Floyd's algorithm: uniform over subsets, `count` draws.
  std::vector<bool> taken(population, false);
  std::vector<int> out;
  out.reserve(count);
  for (int j = population - count; j < population; ++j) {
    const int t = uniform_int(j + 1);
    if (taken[t]) {
      taken[j] = true;
      out.push_back(j);
    } else {
      taken[t] = true;
      out.push_back(t);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// --------------------------------------------------------------------------
// directions

namespace {

void require_nonempty(std::span<const int> indices, const char* which) {
  if (indices.empty()) {
    throw std::invalid_argument(std::string("empty index set for ") + which);
  }
}

}  // namespace

Vector direction_x(const BilevelProblem& problem, const Iterate& it,
                   std::span<const int> f_indices, std::span<const int> g_indices) {
  require_nonempty(f_indices, "f");
  require_nonempty(g_indices, "g");
  Vector f_part = Vector::Zero(problem.dim_x());
  for (int i : f_indices) f_part += problem.grad1_f(i, it.x, it.y);
  f_part /= static_cast<double>(f_indices.size());
  Vector g_part = Vector::Zero(problem.dim_x());
  for (int j : g_indices) g_part += problem.jvp12_g(j, it.x, it.y, it.z);
  g_part /= static_cast<double>(g_indices.size());
  return f_part - g_part;
}

Vector direction_y(const BilevelProblem& problem, const Iterate& it,
                   std::span<const int> g_indices) {
  require_nonempty(g_indices, "g");
  Vector g_part = Vector::Zero(problem.dim_y());
  for (int j : g_indices) g_part += problem.grad2_g(j, it.x, it.y);
  return g_part / static_cast<double>(g_indices.size());
}

Vector direction_z(const BilevelProblem& problem, const Iterate& it,
                   std::span<const int> f_indices, std::span<const int> g_indices) {
  require_nonempty(f_indices, "f");
  require_nonempty(g_indices, "g");
  Vector g_part = Vector::Zero(problem.dim_y());
  for (int j : g_indices) g_part += problem.hvp22_g(j, it.x, it.y, it.z);
  g_part /= static_cast<double>(g_indices.size());
  Vector f_part = Vector::Zero(problem.dim_y());
  for (int i : f_indices) f_part += problem.grad2_f(i, it.x, it.y);
  f_part /= static_cast<double>(f_indices.size());
  return g_part - f_part;
}

// --------------------------------------------------------------------------
// evaluator

const char* channel_name(Channel c) {
  switch (c) {
    case Channel::x: return "x";
    case Channel::y: return "y";
    case Channel::z: return "z";
  }
  return "?";
}

double ChannelEvaluator::f_sign() const {
  switch (channel_) {
    case Channel::x: return 1.0;
    case Channel::y: return 0.0;
    case Channel::z: return -1.0;
  }
  return 0.0;
}

double ChannelEvaluator::g_sign() const {
  return channel_ == Channel::x ? -1.0 : 1.0;
}

Vector ChannelEvaluator::component_f(int i, const Iterate& it) const {
  if (!has_f_part()) {
    throw std::logic_error("y channel has no f component");
  }
  if (counter_ != nullptr) ++counter_->f;
  return channel_ == Channel::x ? problem_->grad1_f(i, it.x, it.y)
                                : problem_->grad2_f(i, it.x, it.y);
}

Vector ChannelEvaluator::component_g(int j, const Iterate& it) const {
  if (counter_ != nullptr) ++counter_->g;
  switch (channel_) {
    case Channel::x: return problem_->jvp12_g(j, it.x, it.y, it.z);
    case Channel::y: return problem_->grad2_g(j, it.x, it.y);
    case Channel::z: return problem_->hvp22_g(j, it.x, it.y, it.z);
  }
  return Vector();
}

Vector ChannelEvaluator::mean_components_f(const Iterate& it,
                                           std::span<const int> indices) const {
  Vector acc = Vector::Zero(dim());
  for (int i : indices) acc += component_f(i, it);
  return acc / static_cast<double>(indices.size());
}

Vector ChannelEvaluator::mean_components_g(const Iterate& it,
                                           std::span<const int> indices) const {
  Vector acc = Vector::Zero(dim());
  for (int j : indices) acc += component_g(j, it);
  return acc / static_cast<double>(indices.size());
}

Vector ChannelEvaluator::eval_at(const Iterate& it, std::span<const int> f_indices,
                                 std::span<const int> g_indices) const {
  if (g_indices.empty()) {
    throw std::invalid_argument("empty index set for g");
  }
  Vector out = g_sign() * mean_components_g(it, g_indices);
  if (has_f_part()) {
    if (f_indices.empty()) {
      throw std::invalid_argument("empty index set for f");
    }
    out += f_sign() * mean_components_f(it, f_indices);
  }
  return out;
}

Vector ChannelEvaluator::eval_full(const Iterate& it) const {
  const SampleDraw draw = full_batch(num_f(), num_g());
  return eval_at(it, draw.f_indices, draw.g_indices);
}

}  // namespace pnpbo
