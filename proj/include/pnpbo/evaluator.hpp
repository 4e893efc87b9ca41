#ifndef PNPBO_EVALUATOR_HPP
#define PNPBO_EVALUATOR_HPP

#include <span>

#include "pnpbo/problem.hpp"
#include "pnpbo/types.hpp"

namespace pnpbo {

enum class Channel { x, y, z };

const char* channel_name(Channel c);

// Cumulative per-sample oracle calls, split by which objective's data a call
// touches. f counts grad1_f/grad2_f, g counts grad2_g/hvp22_g/jvp12_g.
struct EvalCounter {
  long long f = 0;
  long long g = 0;

  long long total() const { return f + g; }
};

// One channel's minibatch direction, decomposed into its per-sample f-part
// and g-part so estimators can keep per-index tables. The channel fixes the
// sign convention:
//
//   x:  +f - g   (f-part grad1_F_i, g-part (d^2/dxdy G_j) z)
//   y:      + g  (g-part grad2_G_j; no f-part)
//   z:  -f + g   (f-part grad2_F_i, g-part (d^2/dy^2 G_j) z)
//
// eval_at equals f_sign * mean(f parts) + g_sign * mean(g parts) exactly;
// it is computed from the same component calls. Every component call bumps
// the attached counter.
class ChannelEvaluator {
 public:
  ChannelEvaluator(const BilevelProblem& problem, Channel channel,
                   EvalCounter* counter = nullptr)
      : problem_(&problem), channel_(channel), counter_(counter) {}

  Channel channel() const { return channel_; }
  const BilevelProblem& problem() const { return *problem_; }

  int dim() const {
    return channel_ == Channel::x ? problem_->dim_x() : problem_->dim_y();
  }
  bool has_f_part() const { return channel_ != Channel::y; }
  double f_sign() const;
  double g_sign() const;
  int num_f() const { return problem_->num_upper(); }
  int num_g() const { return problem_->num_lower(); }

  Vector component_f(int i, const Iterate& it) const;
  Vector component_g(int j, const Iterate& it) const;

  Vector eval_at(const Iterate& it, std::span<const int> f_indices,
                 std::span<const int> g_indices) const;
  Vector eval_full(const Iterate& it) const;

  Vector mean_components_f(const Iterate& it, std::span<const int> indices) const;
  Vector mean_components_g(const Iterate& it, std::span<const int> indices) const;

 private:
  const BilevelProblem* problem_;
  Channel channel_;
  EvalCounter* counter_;
};

}  // namespace pnpbo

#endif
