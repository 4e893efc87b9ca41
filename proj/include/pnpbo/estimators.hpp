#ifndef PNPBO_ESTIMATORS_HPP
#define PNPBO_ESTIMATORS_HPP

#include <variant>
#include <vector>

#include "pnpbo/evaluator.hpp"
#include "pnpbo/rng.hpp"
#include "pnpbo/types.hpp"

namespace pnpbo {

// ---------------------------------------------------------------------------
// SGD: the plain minibatch direction. Unbiased, stateless.
Vector sgd_estimate(const ChannelEvaluator& eval, const Iterate& iterate,
                    const SampleDraw& draw);

// ---------------------------------------------------------------------------
// ZeroSARAH: recursive estimator with per-index component tables and a
// momentum correction toward the table average. After the one-time init
// pass it never evaluates a full batch again.
//
//   v_k = (1-rho_bar) (v_{k-1} - D(prev_iterate; I,J))
//         + D(iterate_k; I,J)
//         + rho_bar (table_average - table_mean_over(I,J))
//
// Tables store evaluated component vectors (with the iterate's z folded
// into the g-part), so reading them costs no oracle calls. Rows at the
// drawn indices are refreshed at iterate_k afterwards and the running
// averages corrected incrementally.
struct ZeroSarahState {
  std::vector<Vector> table_f;
  std::vector<Vector> table_g;
  Vector avg_f;
  Vector avg_g;
  Vector v_prev;
  Iterate prev_iterate;
  SampleDraw prev_draw;
  double rho_bar = 0;
  bool initialized = false;
};

// Full init pass: tables hold every component at iterate0, v_prev is the
// full-batch direction there.
ZeroSarahState zerosarah_init(const ChannelEvaluator& eval, const Iterate& iterate0,
                              double rho_bar);

// Minibatch-only init for the strict no-full-pass regime: only the drawn
// rows are filled (others zero), v_prev is the minibatch direction. The
// resulting table averages are biased until every row has been touched.
ZeroSarahState zerosarah_init_minibatch(const ChannelEvaluator& eval,
                                        const Iterate& iterate0, double rho_bar,
                                        const SampleDraw& draw);

Vector zerosarah_estimate(ZeroSarahState& state, const ChannelEvaluator& eval,
                          const Iterate& iterate, const SampleDraw& draw);

// ---------------------------------------------------------------------------
// PAGE: with probability p evaluate the full direction, otherwise update the
// previous estimate with a fresh-draw difference, the same draw evaluated at
// both the current and the previous iterate.
struct PageState {
  Vector v_prev;
  Iterate prev_iterate;
  double p = 0.5;
  bool initialized = false;
};

PageState page_init(const ChannelEvaluator& eval, const Iterate& iterate0, double p);

Vector page_estimate(PageState& state, const ChannelEvaluator& eval,
                     const Iterate& iterate, const SampleDraw& draw, bool coin_full);

// ---------------------------------------------------------------------------
// SAGA: fresh minus stored plus table average, per part, then refresh the
// drawn rows. Unbiased for the full direction whatever the tables hold.
struct SagaState {
  std::vector<Vector> table_f;
  std::vector<Vector> table_g;
  Vector avg_f;
  Vector avg_g;
  bool initialized = false;
};

SagaState saga_init(const ChannelEvaluator& eval, const Iterate& iterate0);

Vector saga_estimate(SagaState& state, const ChannelEvaluator& eval,
                     const Iterate& iterate, const SampleDraw& draw);

// ---------------------------------------------------------------------------
// STORM: momentum-corrected minibatch estimate,
//   v_k = D(iterate_k; I,J) + (1-a) (v_{k-1} - D(prev_iterate; I,J)),
// the same draw at both points. a = 1 reduces to SGD.
struct StormState {
  Vector v_prev;
  Iterate prev_iterate;
  double a = 1;
  bool initialized = false;
};

StormState storm_init(const ChannelEvaluator& eval, const Iterate& iterate0,
                      double a, const SampleDraw& draw);

Vector storm_estimate(StormState& state, const ChannelEvaluator& eval,
                      const Iterate& iterate, const SampleDraw& draw);

// ---------------------------------------------------------------------------
// Uniform plug-in facade used by the solver.

enum class EstimatorKind { sgd, saga, page, zerosarah, storm };

const char* estimator_name(EstimatorKind kind);
EstimatorKind estimator_from_name(const std::string& name);

// PAGE and ZeroSARAH recursions track a drifting reference, so their
// conditional expectation is not the current direction; SGD, SAGA and STORM
// produce conditionally unbiased fresh components and are treated as the
// unbiased class (the x-channel moving average applies to them).
bool is_biased(EstimatorKind kind);

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::sgd;
  double p = 0.5;          // PAGE full-gradient probability
  double rho_bar = 0.1;    // ZeroSARAH momentum
  double a = 0.1;          // STORM momentum
  bool full_init = true;   // ZeroSARAH: full init pass vs minibatch-only
};

class ChannelEstimator {
 public:
  explicit ChannelEstimator(const EstimatorConfig& config) : config_(config) {}

  bool biased() const { return is_biased(config_.kind); }
  const EstimatorConfig& config() const { return config_; }

  // Prepares state at the initial iterate and returns the estimator's
  // starting direction estimate (used to seed the x-channel moving
  // average). `draw_stream` supplies the minibatch draws init needs.
  Vector init(const ChannelEvaluator& eval, const Iterate& iterate0,
              RngStream& draw_stream, int batch_f, int batch_g);

  // One estimate at `iterate` with this step's draw. `coin_stream` is
  // consumed by PAGE only.
  Vector estimate(const ChannelEvaluator& eval, const Iterate& iterate,
                  const SampleDraw& draw, RngStream& coin_stream);

 private:
  EstimatorConfig config_;
  std::variant<std::monostate, SagaState, PageState, ZeroSarahState, StormState> state_;
};

}  // namespace pnpbo

#endif
