#ifndef PNPBO_SOLVER_HPP
#define PNPBO_SOLVER_HPP

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "pnpbo/estimators.hpp"
#include "pnpbo/evaluator.hpp"
#include "pnpbo/problem.hpp"
#include "pnpbo/rng.hpp"
#include "pnpbo/types.hpp"

namespace pnpbo {

using StepSchedule = std::function<double(long long)>;

struct SolverConfig {
  double alpha = 0;
  double beta = 0;
  double gamma = 0;
  StepSchedule alpha_schedule;  // optional, overrides the constant
  StepSchedule beta_schedule;
  StepSchedule gamma_schedule;

  double rho = 1.0;          // x-channel moving average (unbiased estimators)
  double clip_radius = 1.0;  // z ball radius
  int batch = 1;             // b, used for both index sets
  long long iterations = 0;  // K

  EstimatorConfig estimator_x;
  EstimatorConfig estimator_y;
  EstimatorConfig estimator_z;

  std::uint64_t seed = 0;

  void validate(int n, int m) const;
};

// Estimator wiring of the named algorithm; batch and the estimator
// parameters default to the square-root-batch recipe (b = ceil(sqrt(N)),
// rho_bar = b/(2N), p = b/(N+b)). Step sizes are left for the caller.
SolverConfig preset(const std::string& name, int n, int m);
std::vector<std::string> preset_names();

struct TraceRow {
  long long iter = 0;
  long long samples_f = 0;  // cumulative, all channels
  long long samples_g = 0;
  double gradH_sq = std::numeric_limits<double>::quiet_NaN();
  double f_val = std::numeric_limits<double>::quiet_NaN();
  double g_val = std::numeric_limits<double>::quiet_NaN();
  double test_metric = std::numeric_limits<double>::quiet_NaN();
  double wall_ms = 0;
};

struct RunTrace {
  std::vector<TraceRow> rows;
  bool diverged = false;
  long long diverged_iter = -1;
  long long steps_run = 0;
  Iterate final_iterate;
  std::array<EvalCounter, 3> channel_counters;  // x, y, z

  long long samples_f() const;
  long long samples_g() const;
};

// Per-step view handed to the observer: the x-channel draw, the raw and
// averaged x estimates, and the post-step iterate.
struct StepInfo {
  long long iter = 0;
  const SampleDraw* draw_x = nullptr;
  const Vector* vhat_x = nullptr;
  const Vector* v_x = nullptr;
  const Iterate* iterate = nullptr;
};

struct RunOptions {
  int cadence = 0;  // 0 -> ceil(K / 200)
  std::function<double(const Vector&)> gradH_sq;  // optional oracle metric
  std::function<void(const StepInfo&)> observer;  // optional per-step hook
  double stop_below_gradH_sq = 0;  // early stop once the metric reaches this
  bool record_objectives = true;
};

// Single-loop driver. Draws are per channel from split substreams (keys
// 0/1/2), PAGE coins from key 3 sub-split per channel, so swapping one
// channel's estimator never perturbs another channel's draw sequence.
class Solver {
 public:
  Solver(const BilevelProblem& problem, const SolverConfig& config,
         Iterate initial);

  // One iteration of the loop; all three estimates see the pre-step
  // iterate. Throws DivergedError on a non-finite estimate.
  void step();

  const Iterate& iterate() const { return iterate_; }
  long long steps() const { return steps_; }
  const EvalCounter& counter(Channel c) const {
    return counters_[static_cast<int>(c)];
  }
  EvalCounter total_counter() const;
  const Vector& v_x_prev() const { return v_x_prev_; }

  void set_observer(std::function<void(const StepInfo&)> obs) {
    observer_ = std::move(obs);
  }

 private:
  SampleDraw draw_for(Channel c);

  const BilevelProblem* problem_;
  SolverConfig config_;
  Iterate iterate_;
  std::array<EvalCounter, 3> counters_;
  ChannelEvaluator eval_x_, eval_y_, eval_z_;
  ChannelEstimator est_x_, est_y_, est_z_;
  RngStream draw_x_, draw_y_, draw_z_;
  RngStream coin_x_, coin_y_, coin_z_;
  Vector v_x_prev_;
  long long steps_ = 0;
  std::function<void(const StepInfo&)> observer_;
};

RunTrace run(const BilevelProblem& problem, const SolverConfig& config,
             const Iterate& initial, const RunOptions& options = {});

Iterate zero_iterate(const BilevelProblem& problem);

}  // namespace pnpbo

#endif
