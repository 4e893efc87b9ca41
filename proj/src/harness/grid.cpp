#include "pnpbo/harness/grid.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <thread>

namespace pnpbo::harness {

namespace {

std::vector<double> log_spaced(double lo, double hi, int points) {
  std::vector<double> out;
  if (points <= 1) {
    out.push_back(lo);
    return out;
  }
  const double llo = std::log10(lo), lhi = std::log10(hi);
  for (int k = 0; k < points; ++k) {
    out.push_back(std::pow(10.0, llo + (lhi - llo) * k / (points - 1)));
  }
  return out;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

GridSpec build_grid_spec(const Config& config) {
  GridSpec spec;
  if (config.has("grid.alphas")) {
    spec.alphas = config.get_double_list("grid.alphas");
  } else {
    spec.alphas = log_spaced(config.get_double_or("grid.alpha_min", 1e-3),
                             config.get_double_or("grid.alpha_max", 1e0),
                             static_cast<int>(config.get_int_or("grid.alpha_points", 11)));
  }
  if (config.has("grid.phis")) {
    spec.phis = config.get_double_list("grid.phis");
  } else {
    spec.phis = log_spaced(config.get_double_or("grid.phi_min", 1e-5),
                           config.get_double_or("grid.phi_max", 1e0),
                           static_cast<int>(config.get_int_or("grid.phi_points", 11)));
  }
  if (config.has("grid.kappas")) {
    spec.kappas = config.get_double_list("grid.kappas");
  } else {
    spec.kappas = log_spaced(config.get_double_or("grid.kappa_min", 1e-5),
                             config.get_double_or("grid.kappa_max", 1e0),
                             static_cast<int>(config.get_int_or("grid.kappa_points", 11)));
  }
  if (config.has("grid.one_minus_p")) {
    spec.one_minus_p = config.get_double_list("grid.one_minus_p");
  }
  if (config.has("grid.rho_bars")) {
    spec.rho_bars = config.get_double_list("grid.rho_bars");
  }
  spec.metric = config.get_or("grid.metric", "final_gradh");
  spec.workers = static_cast<int>(config.get_int_or("grid.workers", 1));
  if (spec.alphas.empty() || spec.phis.empty() || spec.kappas.empty()) {
    throw ConfigError("grid axes must be non-empty", 0, 0);
  }
  return spec;
}

GridResult run_grid(const Config& config, const GridSpec& spec) {
  const ProblemBundle bundle = build_problem(config);
  const SolverConfig base = build_solver_config(config, bundle);
  const RunOptions options = build_run_options(config, bundle);

  // Optional estimator axes collapse to a single "unset" slot.
  const std::vector<double> pages =
      spec.one_minus_p.empty() ? std::vector<double>{-1.0} : spec.one_minus_p;
  const std::vector<double> rhos =
      spec.rho_bars.empty() ? std::vector<double>{-1.0} : spec.rho_bars;

  std::vector<GridCell> cells;
  int index = 0;
  for (double alpha : spec.alphas) {
    for (double phi : spec.phis) {
      for (double kappa : spec.kappas) {
        for (double omp : pages) {
          for (double rb : rhos) {
            GridCell cell;
            cell.index = index++;
            cell.alpha = alpha;
            cell.phi = phi;
            cell.kappa = kappa;
            cell.beta = alpha / phi;
            cell.gamma = alpha / kappa;
            cell.one_minus_p = omp;
            cell.rho_bar = rb;
            cells.push_back(cell);
          }
        }
      }
    }
  }

  auto run_cell = [&](GridCell& cell) {
    SolverConfig cfg = base;
    cfg.alpha = cell.alpha;
    cfg.beta = cell.beta;
    cfg.gamma = cell.gamma;
    if (cell.one_minus_p >= 0) {
      const double p = 1.0 - cell.one_minus_p;
      cfg.estimator_x.p = cfg.estimator_y.p = cfg.estimator_z.p = p;
    }
    if (cell.rho_bar >= 0) {
      cfg.estimator_x.rho_bar = cfg.estimator_y.rho_bar = cfg.estimator_z.rho_bar =
          cell.rho_bar;
    }
    cfg.seed = base.seed ^ static_cast<std::uint64_t>(cell.index);
    const RunTrace trace = run(*bundle.problem, cfg, zero_iterate(*bundle.problem), options);
    cell.diverged = trace.diverged;
    if (trace.diverged || trace.rows.empty()) return;
    const TraceRow& last = trace.rows.back();
    cell.final_gradh = last.gradH_sq;
    cell.final_test = last.test_metric;
    cell.samples = last.samples_f + last.samples_g;
    double min_gradh = std::numeric_limits<double>::infinity();
    for (const TraceRow& row : trace.rows) {
      if (!std::isnan(row.gradH_sq)) min_gradh = std::min(min_gradh, row.gradH_sq);
    }
    cell.min_gradh = std::isinf(min_gradh) ? std::numeric_limits<double>::quiet_NaN()
                                           : min_gradh;
    if (spec.metric == "min_gradh") {
      cell.metric = cell.min_gradh;
    } else if (spec.metric == "final_test") {
      cell.metric = cell.final_test;
    } else if (spec.metric == "final_f") {
      cell.metric = last.f_val;
    } else {
      cell.metric = cell.final_gradh;
    }
    if (std::isnan(cell.metric)) cell.diverged = true;
  };

  const int workers = std::max(1, spec.workers);
  if (workers == 1) {
    for (auto& cell : cells) run_cell(cell);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        while (true) {
          const std::size_t k = next.fetch_add(1);
          if (k >= cells.size()) break;
          run_cell(cells[k]);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  GridResult result;
  result.leaderboard = cells;
  std::stable_sort(result.leaderboard.begin(), result.leaderboard.end(),
                   [](const GridCell& a, const GridCell& b) {
                     if (a.diverged != b.diverged) return !a.diverged;
                     if (a.diverged) return a.index < b.index;
                     if (a.metric != b.metric) return a.metric < b.metric;
                     return a.index < b.index;
                   });
  if (!result.leaderboard.empty() && !result.leaderboard.front().diverged) {
    result.best_cell = result.leaderboard.front().index;
  }
  return result;
}

std::string leaderboard_csv(const GridResult& result) {
  std::string out =
      "rank,cell,alpha,beta,gamma,phi,kappa,one_minus_p,rho_bar,status,metric,"
      "final_gradH_sq,min_gradH_sq,final_test_metric,samples\n";
  int rank = 0;
  for (const GridCell& cell : result.leaderboard) {
    out += std::to_string(rank++);
    out += ',' + std::to_string(cell.index);
    out += ',' + fmt(cell.alpha);
    out += ',' + fmt(cell.beta);
    out += ',' + fmt(cell.gamma);
    out += ',' + fmt(cell.phi);
    out += ',' + fmt(cell.kappa);
    out += ',' + (cell.one_minus_p >= 0 ? fmt(cell.one_minus_p) : std::string("-"));
    out += ',' + (cell.rho_bar >= 0 ? fmt(cell.rho_bar) : std::string("-"));
    out += ',';
    out += cell.diverged ? "diverged" : "ok";
    out += ',' + fmt(cell.metric);
    out += ',' + fmt(cell.final_gradh);
    out += ',' + fmt(cell.min_gradh);
    out += ',' + fmt(cell.final_test);
    out += ',' + std::to_string(cell.samples);
    out += '\n';
  }
  return out;
}

int cli_grid(const Config& config) {
  const GridSpec spec = build_grid_spec(config);
  const GridResult result = run_grid(config, spec);
  const std::string csv = leaderboard_csv(result);
  const std::string path = config.get_or("output.leaderboard", "");
  if (!path.empty()) {
    write_file(path, csv);
  } else {
    std::fputs(csv.c_str(), stdout);
  }
  bool all_diverged = true;
  for (const auto& cell : result.leaderboard) {
    if (!cell.diverged) {
      all_diverged = false;
      break;
    }
  }
  return all_diverged ? kExitAllDiverged : kExitOk;
}

}  // namespace pnpbo::harness
