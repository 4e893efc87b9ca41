#include "pnpbo/estimators.hpp"

#include <algorithm>
#include <cctype>

namespace pnpbo {

namespace {

// Batched component evaluation with the channel's sign applied to the mean.
Vector signed_mean(const ChannelEvaluator& eval, const std::vector<Vector>& parts,
                   double sign) {
  Vector acc = Vector::Zero(eval.dim());
  for (const Vector& v : parts) acc += v;
  return (sign / static_cast<double>(parts.size())) * acc;
}

std::vector<Vector> fresh_components_f(const ChannelEvaluator& eval, const Iterate& it,
                                       const std::vector<int>& indices) {
  std::vector<Vector> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(eval.component_f(i, it));
  return out;
}

std::vector<Vector> fresh_components_g(const ChannelEvaluator& eval, const Iterate& it,
                                       const std::vector<int>& indices) {
  std::vector<Vector> out;
  out.reserve(indices.size());
  for (int j : indices) out.push_back(eval.component_g(j, it));
  return out;
}

Vector table_mean(const std::vector<Vector>& table, const std::vector<int>& indices,
                  int dim) {
  Vector acc = Vector::Zero(dim);
  for (int idx : indices) acc += table[idx];
  return acc / static_cast<double>(indices.size());
}

// Overwrites table rows at `indices` with `fresh` and corrects the running
// average in place.
void refresh_rows(std::vector<Vector>& table, Vector& avg,
                  const std::vector<int>& indices, const std::vector<Vector>& fresh) {
  const double inv = 1.0 / static_cast<double>(table.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    avg += inv * (fresh[k] - table[indices[k]]);
    table[indices[k]] = fresh[k];
  }
}

void require_draw(const ChannelEvaluator& eval, const SampleDraw& draw) {
  if (draw.g_indices.empty() || (eval.has_f_part() && draw.f_indices.empty())) {
    throw std::invalid_argument("estimator draw has an empty index set");
  }
}

}  // namespace

Vector sgd_estimate(const ChannelEvaluator& eval, const Iterate& iterate,
                    const SampleDraw& draw) {
  return eval.eval_at(iterate, draw.f_indices, draw.g_indices);
}

// --------------------------------------------------------------------------
// ZeroSARAH

namespace {

void zerosarah_fill_tables(ZeroSarahState& state, const ChannelEvaluator& eval,
                           const Iterate& it0) {
  const int dim = eval.dim();
  state.avg_f = Vector::Zero(dim);
  state.avg_g = Vector::Zero(dim);
  if (eval.has_f_part()) {
    state.table_f.resize(eval.num_f());
    for (int i = 0; i < eval.num_f(); ++i) {
      state.table_f[i] = eval.component_f(i, it0);
      state.avg_f += state.table_f[i];
    }
    state.avg_f /= eval.num_f();
  }
  state.table_g.resize(eval.num_g());
  for (int j = 0; j < eval.num_g(); ++j) {
    state.table_g[j] = eval.component_g(j, it0);
    state.avg_g += state.table_g[j];
  }
  state.avg_g /= eval.num_g();
}

Vector zerosarah_table_direction(const ZeroSarahState& state,
                                 const ChannelEvaluator& eval) {
  Vector out = eval.g_sign() * state.avg_g;
  if (eval.has_f_part()) out += eval.f_sign() * state.avg_f;
  return out;
}

}  // namespace

ZeroSarahState zerosarah_init(const ChannelEvaluator& eval, const Iterate& iterate0,
                              double rho_bar) {
  ZeroSarahState state;
  state.rho_bar = rho_bar;
  zerosarah_fill_tables(state, eval, iterate0);
  state.v_prev = zerosarah_table_direction(state, eval);
  state.prev_iterate = iterate0;
  state.initialized = true;
  return state;
}

ZeroSarahState zerosarah_init_minibatch(const ChannelEvaluator& eval,
                                        const Iterate& iterate0, double rho_bar,
                                        const SampleDraw& draw) {
  require_draw(eval, draw);
  ZeroSarahState state;
  state.rho_bar = rho_bar;
  const int dim = eval.dim();
  state.avg_f = Vector::Zero(dim);
  state.avg_g = Vector::Zero(dim);
  if (eval.has_f_part()) {
    state.table_f.assign(eval.num_f(), Vector::Zero(dim));
    const auto fresh = fresh_components_f(eval, iterate0, draw.f_indices);
    refresh_rows(state.table_f, state.avg_f, draw.f_indices, fresh);
  }
  state.table_g.assign(eval.num_g(), Vector::Zero(dim));
  const auto fresh_g = fresh_components_g(eval, iterate0, draw.g_indices);
  refresh_rows(state.table_g, state.avg_g, draw.g_indices, fresh_g);
  state.v_prev = eval.eval_at(iterate0, draw.f_indices, draw.g_indices);
  state.prev_iterate = iterate0;
  state.prev_draw = draw;
  state.initialized = true;
  return state;
}

Vector zerosarah_estimate(ZeroSarahState& state, const ChannelEvaluator& eval,
                          const Iterate& iterate, const SampleDraw& draw) {
  if (!state.initialized) {
    throw std::logic_error("zerosarah_estimate: state not initialized");
  }
  require_draw(eval, draw);
  const double rho = state.rho_bar;

  // Fresh components at the current iterate, reused for the table refresh.
  std::vector<Vector> fresh_f, fresh_g;
  Vector d_now = Vector::Zero(eval.dim());
  if (eval.has_f_part()) {
    fresh_f = fresh_components_f(eval, iterate, draw.f_indices);
    d_now += signed_mean(eval, fresh_f, eval.f_sign());
  }
  fresh_g = fresh_components_g(eval, iterate, draw.g_indices);
  d_now += signed_mean(eval, fresh_g, eval.g_sign());

  const Vector d_prev = eval.eval_at(state.prev_iterate, draw.f_indices, draw.g_indices);

  // Memory terms read from the tables, no oracle calls.
  const Vector d_hat_full = zerosarah_table_direction(state, eval);
  Vector d_hat_draw = eval.g_sign() * table_mean(state.table_g, draw.g_indices, eval.dim());
  if (eval.has_f_part()) {
    d_hat_draw += eval.f_sign() * table_mean(state.table_f, draw.f_indices, eval.dim());
  }

  Vector v = (1.0 - rho) * (state.v_prev - d_prev) + d_now + rho * (d_hat_full - d_hat_draw);

  if (eval.has_f_part()) {
    refresh_rows(state.table_f, state.avg_f, draw.f_indices, fresh_f);
  }
  refresh_rows(state.table_g, state.avg_g, draw.g_indices, fresh_g);

  state.v_prev = v;
  state.prev_iterate = iterate;
  state.prev_draw = draw;
  return v;
}

// --------------------------------------------------------------------------
// PAGE

PageState page_init(const ChannelEvaluator& eval, const Iterate& iterate0, double p) {
  if (!(p > 0 && p <= 1)) {
    throw std::invalid_argument("page: p must lie in (0, 1]");
  }
  PageState state;
  state.p = p;
  state.v_prev = eval.eval_full(iterate0);
  state.prev_iterate = iterate0;
  state.initialized = true;
  return state;
}

Vector page_estimate(PageState& state, const ChannelEvaluator& eval,
                     const Iterate& iterate, const SampleDraw& draw, bool coin_full) {
  if (!state.initialized) {
    throw std::logic_error("page_estimate: state not initialized");
  }
  Vector v;
  if (coin_full) {
    v = eval.eval_full(iterate);
  } else {
    require_draw(eval, draw);
    v = state.v_prev + eval.eval_at(iterate, draw.f_indices, draw.g_indices) -
        eval.eval_at(state.prev_iterate, draw.f_indices, draw.g_indices);
  }
  state.v_prev = v;
  state.prev_iterate = iterate;
  return v;
}

// --------------------------------------------------------------------------
// SAGA

SagaState saga_init(const ChannelEvaluator& eval, const Iterate& iterate0) {
  SagaState state;
  ZeroSarahState tmp;
  zerosarah_fill_tables(tmp, eval, iterate0);
  state.table_f = std::move(tmp.table_f);
  state.table_g = std::move(tmp.table_g);
  state.avg_f = std::move(tmp.avg_f);
  state.avg_g = std::move(tmp.avg_g);
  state.initialized = true;
  return state;
}

Vector saga_estimate(SagaState& state, const ChannelEvaluator& eval,
                     const Iterate& iterate, const SampleDraw& draw) {
  if (!state.initialized) {
    throw std::logic_error("saga_estimate: state not initialized");
  }
  require_draw(eval, draw);
  Vector v = Vector::Zero(eval.dim());
  if (eval.has_f_part()) {
    const auto fresh = fresh_components_f(eval, iterate, draw.f_indices);
    v += eval.f_sign() * (signed_mean(eval, fresh, 1.0) -
                          table_mean(state.table_f, draw.f_indices, eval.dim()) +
                          state.avg_f);
    refresh_rows(state.table_f, state.avg_f, draw.f_indices, fresh);
  }
  const auto fresh_g = fresh_components_g(eval, iterate, draw.g_indices);
  v += eval.g_sign() * (signed_mean(eval, fresh_g, 1.0) -
                        table_mean(state.table_g, draw.g_indices, eval.dim()) +
                        state.avg_g);
  refresh_rows(state.table_g, state.avg_g, draw.g_indices, fresh_g);
  return v;
}

// --------------------------------------------------------------------------
// STORM

StormState storm_init(const ChannelEvaluator& eval, const Iterate& iterate0,
                      double a, const SampleDraw& draw) {
  if (!(a > 0 && a <= 1)) {
    throw std::invalid_argument("storm: a must lie in (0, 1]");
  }
  require_draw(eval, draw);
  StormState state;
  state.a = a;
  state.v_prev = eval.eval_at(iterate0, draw.f_indices, draw.g_indices);
  state.prev_iterate = iterate0;
  state.initialized = true;
  return state;
}

Vector storm_estimate(StormState& state, const ChannelEvaluator& eval,
                      const Iterate& iterate, const SampleDraw& draw) {
  if (!state.initialized) {
    throw std::logic_error("storm_estimate: state not initialized");
  }
  require_draw(eval, draw);
  Vector v = eval.eval_at(iterate, draw.f_indices, draw.g_indices) +
             (1.0 - state.a) *
                 (state.v_prev -
                  eval.eval_at(state.prev_iterate, draw.f_indices, draw.g_indices));
  state.v_prev = v;
  state.prev_iterate = iterate;
  return v;
}

// --------------------------------------------------------------------------
// facade

const char* estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::sgd: return "sgd";
    case EstimatorKind::saga: return "saga";
    case EstimatorKind::page: return "page";
    case EstimatorKind::zerosarah: return "zerosarah";
    case EstimatorKind::storm: return "storm";
  }
  return "?";
}

EstimatorKind estimator_from_name(const std::string& name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(c)));
  if (lower == "sgd") return EstimatorKind::sgd;
  if (lower == "saga") return EstimatorKind::saga;
  if (lower == "page") return EstimatorKind::page;
  if (lower == "zerosarah") return EstimatorKind::zerosarah;
  if (lower == "storm") return EstimatorKind::storm;
  throw std::invalid_argument("unknown estimator '" + name +
                              "' (valid: sgd, saga, page, zerosarah, storm)");
}

bool is_biased(EstimatorKind kind) {
  return kind == EstimatorKind::page || kind == EstimatorKind::zerosarah;
}

Vector ChannelEstimator::init(const ChannelEvaluator& eval, const Iterate& iterate0,
                              RngStream& draw_stream, int batch_f, int batch_g) {
  switch (config_.kind) {
    case EstimatorKind::sgd: {
      state_ = std::monostate{};
      SampleDraw draw;
      if (eval.has_f_part()) {
        draw.f_indices = draw_stream.sample_without_replacement(eval.num_f(), batch_f);
      }
      draw.g_indices = draw_stream.sample_without_replacement(eval.num_g(), batch_g);
      return sgd_estimate(eval, iterate0, draw);
    }
    case EstimatorKind::saga: {
      state_ = saga_init(eval, iterate0);
      const auto& st = std::get<SagaState>(state_);
      Vector v = eval.g_sign() * st.avg_g;
      if (eval.has_f_part()) v += eval.f_sign() * st.avg_f;
      return v;
    }
    case EstimatorKind::page: {
      state_ = page_init(eval, iterate0, config_.p);
      return std::get<PageState>(state_).v_prev;
    }
    case EstimatorKind::zerosarah: {
      if (config_.full_init) {
        state_ = zerosarah_init(eval, iterate0, config_.rho_bar);
      } else {
        SampleDraw draw;
        if (eval.has_f_part()) {
          draw.f_indices = draw_stream.sample_without_replacement(eval.num_f(), batch_f);
        }
        draw.g_indices = draw_stream.sample_without_replacement(eval.num_g(), batch_g);
        state_ = zerosarah_init_minibatch(eval, iterate0, config_.rho_bar, draw);
      }
      return std::get<ZeroSarahState>(state_).v_prev;
    }
    case EstimatorKind::storm: {
      SampleDraw draw;
      if (eval.has_f_part()) {
        draw.f_indices = draw_stream.sample_without_replacement(eval.num_f(), batch_f);
      }
      draw.g_indices = draw_stream.sample_without_replacement(eval.num_g(), batch_g);
      state_ = storm_init(eval, iterate0, config_.a, draw);
      return std::get<StormState>(state_).v_prev;
    }
  }
  throw std::logic_error("unreachable");
}

Vector ChannelEstimator::estimate(const ChannelEvaluator& eval, const Iterate& iterate,
                                  const SampleDraw& draw, RngStream& coin_stream) {
  switch (config_.kind) {
    case EstimatorKind::sgd:
      return sgd_estimate(eval, iterate, draw);
    case EstimatorKind::saga:
      return saga_estimate(std::get<SagaState>(state_), eval, iterate, draw);
    case EstimatorKind::page: {
      auto& st = std::get<PageState>(state_);
      const bool coin = coin_stream.bernoulli(st.p);
      return page_estimate(st, eval, iterate, draw, coin);
    }
    case EstimatorKind::zerosarah:
      return zerosarah_estimate(std::get<ZeroSarahState>(state_), eval, iterate, draw);
    case EstimatorKind::storm:
      return storm_estimate(std::get<StormState>(state_), eval, iterate, draw);
  }
  throw std::logic_error("unreachable");
}

}  // namespace pnpbo
