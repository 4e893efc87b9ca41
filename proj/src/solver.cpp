#include "pnpbo/solver.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>

#include "pnpbo/directions.hpp"

namespace pnpbo {

namespace {

// Substream keys; the documented split order. Channel draws come first,
// estimator coins are sub-split off key 3 per channel.
constexpr std::uint64_t kStreamX = 0;
constexpr std::uint64_t kStreamY = 1;
constexpr std::uint64_t kStreamZ = 2;
constexpr std::uint64_t kStreamCoins = 3;

double stepsize_at(double constant, const StepSchedule& schedule, long long k) {
  return schedule ? schedule(k) : constant;
}

std::string lower_copy(const std::string& s) {
  std::string out;
  for (char c : s) out.push_back(static_cast<char>(std::tolower(c)));
  return out;
}

}  // namespace

void SolverConfig::validate(int n, int m) const {
  if (alpha < 0 || beta < 0 || gamma < 0) {
    throw std::invalid_argument("step sizes must be nonnegative");
  }
  if (!(clip_radius > 0)) {
    throw std::invalid_argument("clip radius must be positive");
  }
  if (batch < 1 || batch > std::min(n, m)) {
    throw std::invalid_argument("batch must lie in [1, min(n, m)]");
  }
  if (!(rho > 0 && rho <= 1)) {
    throw std::invalid_argument("rho must lie in (0, 1]");
  }
  if (iterations < 0) {
    throw std::invalid_argument("iterations must be nonnegative");
  }
}

SolverConfig preset(const std::string& name, int n, int m) {
  const long long total = static_cast<long long>(n) + m;
  const int b = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(total)))));
  const double rho_bar = static_cast<double>(b) / (2.0 * static_cast<double>(total));
  const double p = static_cast<double>(b) / static_cast<double>(total + b);

  SolverConfig cfg;
  cfg.batch = std::min({b, n, m});

  EstimatorConfig sgd{EstimatorKind::sgd, p, rho_bar, 0.1, true};
  EstimatorConfig saga{EstimatorKind::saga, p, rho_bar, 0.1, true};
  EstimatorConfig page{EstimatorKind::page, p, rho_bar, 0.1, true};
  EstimatorConfig zs{EstimatorKind::zerosarah, p, rho_bar, 0.1, true};
  EstimatorConfig storm{EstimatorKind::storm, p, rho_bar, 0.1, true};

  const std::string key = lower_copy(name);
  if (key == "soba") {
    cfg.estimator_x = cfg.estimator_y = cfg.estimator_z = sgd;
    cfg.rho = 1.0;
  } else if (key == "ma-soba") {
    cfg.estimator_x = cfg.estimator_y = cfg.estimator_z = sgd;
    cfg.rho = 0.5;
  } else if (key == "saba") {
    cfg.estimator_x = cfg.estimator_y = cfg.estimator_z = saga;
    cfg.rho = 1.0;
  } else if (key == "ma-saba") {
    cfg.estimator_x = cfg.estimator_y = cfg.estimator_z = saga;
    cfg.rho = 0.5;
  } else if (key == "spaba") {
    cfg.estimator_x = cfg.estimator_y = cfg.estimator_z = page;
  } else if (key == "sffba") {
    cfg.estimator_x = cfg.estimator_y = cfg.estimator_z = zs;
  } else if (key == "mseba") {
    cfg.estimator_x = page;
    cfg.estimator_y = zs;
    cfg.estimator_z = page;
  } else if (key == "srmba") {
    cfg.estimator_x = cfg.estimator_y = cfg.estimator_z = storm;
    cfg.rho = 0.5;
  } else {
    std::string valid;
    for (const auto& s : preset_names()) valid += (valid.empty() ? "" : ", ") + s;
    throw std::invalid_argument("unknown preset '" + name + "' (valid: " + valid + ")");
  }
  return cfg;
}

std::vector<std::string> preset_names() {
  return {"SOBA", "MA-SOBA", "SABA", "MA-SABA", "SPABA", "SFFBA", "MSEBA", "SRMBA"};
}

long long RunTrace::samples_f() const {
  long long acc = 0;
  for (const auto& c : channel_counters) acc += c.f;
  return acc;
}

long long RunTrace::samples_g() const {
  long long acc = 0;
  for (const auto& c : channel_counters) acc += c.g;
  return acc;
}

Solver::Solver(const BilevelProblem& problem, const SolverConfig& config,
               Iterate initial)
    : problem_(&problem),
      config_(config),
      iterate_(std::move(initial)),
      eval_x_(problem, Channel::x, &counters_[0]),
      eval_y_(problem, Channel::y, &counters_[1]),
      eval_z_(problem, Channel::z, &counters_[2]),
      est_x_(config.estimator_x),
      est_y_(config.estimator_y),
      est_z_(config.estimator_z),
      draw_x_(RngStream(config.seed).split(kStreamX)),
      draw_y_(RngStream(config.seed).split(kStreamY)),
      draw_z_(RngStream(config.seed).split(kStreamZ)),
      coin_x_(RngStream(config.seed).split(kStreamCoins).split(0)),
      coin_y_(RngStream(config.seed).split(kStreamCoins).split(1)),
      coin_z_(RngStream(config.seed).split(kStreamCoins).split(2)) {
  config_.validate(problem.num_upper(), problem.num_lower());
  if (iterate_.x.size() != problem.dim_x() || iterate_.y.size() != problem.dim_y() ||
      iterate_.z.size() != problem.dim_y()) {
    throw std::invalid_argument("initial iterate dimensions do not match problem");
  }
  const int b = config_.batch;
  v_x_prev_ = est_x_.init(eval_x_, iterate_, draw_x_, b, b);
  est_y_.init(eval_y_, iterate_, draw_y_, b, b);
  est_z_.init(eval_z_, iterate_, draw_z_, b, b);
}

SampleDraw Solver::draw_for(Channel c) {
  const int b = config_.batch;
  RngStream* stream = nullptr;
  const ChannelEvaluator* eval = nullptr;
  switch (c) {
    case Channel::x: stream = &draw_x_; eval = &eval_x_; break;
    case Channel::y: stream = &draw_y_; eval = &eval_y_; break;
    case Channel::z: stream = &draw_z_; eval = &eval_z_; break;
  }
  SampleDraw draw;
  if (eval->has_f_part()) {
    draw.f_indices = stream->sample_without_replacement(eval->num_f(), b);
  }
  draw.g_indices = stream->sample_without_replacement(eval->num_g(), b);
  return draw;
}

EvalCounter Solver::total_counter() const {
  EvalCounter total;
  for (const auto& c : counters_) {
    total.f += c.f;
    total.g += c.g;
  }
  return total;
}

void Solver::step() {
  const long long k = steps_;
  const double alpha = stepsize_at(config_.alpha, config_.alpha_schedule, k);
  const double beta = stepsize_at(config_.beta, config_.beta_schedule, k);
  const double gamma = stepsize_at(config_.gamma, config_.gamma_schedule, k);

  const SampleDraw dx = draw_for(Channel::x);
  const SampleDraw dy = draw_for(Channel::y);
  const SampleDraw dz = draw_for(Channel::z);

  // All three estimates see the pre-step iterate.
  const Vector vhat_x = est_x_.estimate(eval_x_, iterate_, dx, coin_x_);
  const Vector v_y = est_y_.estimate(eval_y_, iterate_, dy, coin_y_);
  const Vector v_z = est_z_.estimate(eval_z_, iterate_, dz, coin_z_);

  if (!vhat_x.allFinite()) throw DivergedError(k, "x");
  if (!v_y.allFinite()) throw DivergedError(k, "y");
  if (!v_z.allFinite()) throw DivergedError(k, "z");

  Vector v_x;
  if (est_x_.biased()) {
    v_x = vhat_x;
  } else {
    v_x = (1.0 - config_.rho) * v_x_prev_ + config_.rho * vhat_x;
  }

  iterate_.x -= alpha * v_x;
  iterate_.y -= beta * v_y;
  iterate_.z = clip(Vector(iterate_.z - gamma * v_z), config_.clip_radius);
  v_x_prev_ = v_x;
  ++steps_;

  if (!iterate_.all_finite()) throw DivergedError(k, "iterate");

  if (observer_) {
    StepInfo info;
    info.iter = steps_;
    info.draw_x = &dx;
    info.vhat_x = &vhat_x;
    info.v_x = &v_x;
    info.iterate = &iterate_;
    observer_(info);
  }
}

Iterate zero_iterate(const BilevelProblem& problem) {
  Iterate it;
  it.x = Vector::Zero(problem.dim_x());
  it.y = Vector::Zero(problem.dim_y());
  it.z = Vector::Zero(problem.dim_y());
  return it;
}

RunTrace run(const BilevelProblem& problem, const SolverConfig& config,
             const Iterate& initial, const RunOptions& options) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();

  RunTrace trace;
  Solver solver(problem, config, initial);
  if (options.observer) solver.set_observer(options.observer);

  const long long total = config.iterations;
  const int cadence = options.cadence > 0
                          ? options.cadence
                          : std::max(1LL, (total + 199) / 200);

  auto record = [&](long long iter) {
    TraceRow row;
    row.iter = iter;
    const EvalCounter counts = solver.total_counter();
    row.samples_f = counts.f;
    row.samples_g = counts.g;
    const Iterate& it = solver.iterate();
    if (options.gradH_sq) row.gradH_sq = options.gradH_sq(it.x);
    if (options.record_objectives) {
      row.f_val = problem.mean_value_f(it.x, it.y);
      row.g_val = problem.mean_value_g(it.x, it.y);
    }
    row.test_metric = problem.test_metric(it.x, it.y);
    row.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - start).count();
    trace.rows.push_back(row);
    return row;
  };

  if (total > 0) record(0);
  for (long long k = 0; k < total; ++k) {
    try {
      solver.step();
    } catch (const DivergedError& err) {
      trace.diverged = true;
      trace.diverged_iter = err.iteration();
      break;
    }
    const long long done = k + 1;
    if (done % cadence == 0 || done == total) {
      const TraceRow row = record(done);
      if (options.stop_below_gradH_sq > 0 && options.gradH_sq &&
          row.gradH_sq <= options.stop_below_gradH_sq) {
        break;
      }
    }
  }

  trace.steps_run = solver.steps();
  trace.final_iterate = solver.iterate();
  for (int c = 0; c < 3; ++c) {
    trace.channel_counters[c] = solver.counter(static_cast<Channel>(c));
  }
  return trace;
}

}  // namespace pnpbo
