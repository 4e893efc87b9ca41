#include "pnpbo/harness/harness.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "pnpbo/problems/hypercleaning.hpp"
#include "pnpbo/problems/regpath.hpp"

namespace pnpbo::harness {

namespace {

using nlohmann::json;

const std::vector<std::string> kRunKeys = {
    "problem.*", "solver.*", "run.*", "output.*", "grid.*", "metrics.*",
};

std::string resolve_data_path(const std::string& path) {
  if (path.empty() || std::filesystem::path(path).is_absolute()) return path;
  const char* root = std::getenv(kDataRootEnv);
  if (root == nullptr || *root == '\0') return path;
  return (std::filesystem::path(root) / path).string();
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

ProblemBundle build_problem(const Config& config) {
  ProblemBundle bundle;
  const std::string kind = config.get("problem.kind");
  if (kind == "quadratic") {
    QuadraticSpec spec;
    spec.seed = static_cast<std::uint64_t>(config.get_int_or("problem.seed", 0));
    spec.n = static_cast<int>(config.get_int_or("problem.n", spec.n));
    spec.m = static_cast<int>(config.get_int_or("problem.m", spec.m));
    spec.dim_x = static_cast<int>(config.get_int_or("problem.dim_x", spec.dim_x));
    spec.dim_y = static_cast<int>(config.get_int_or("problem.dim_y", spec.dim_y));
    spec.mu = config.get_double_or("problem.mu", spec.mu);
    spec.lmax = config.get_double_or("problem.lmax", spec.lmax);
    spec.dispersion = config.get_double_or("problem.dispersion", spec.dispersion);
    spec.hess_lo = config.get_double_or("problem.hess_lo", spec.hess_lo);
    spec.hess_hi = config.get_double_or("problem.hess_hi", spec.hess_hi);
    bundle.quadratic = make_quadratic(spec);
    bundle.problem = bundle.quadratic;
  } else if (kind == "hypercleaning") {
    HyperCleaningSpec spec;
    spec.seed = static_cast<std::uint64_t>(config.get_int_or("problem.seed", 0));
    spec.n_train = static_cast<int>(config.get_int_or("problem.n_train", spec.n_train));
    spec.n_val = static_cast<int>(config.get_int_or("problem.n_val", spec.n_val));
    spec.n_test = static_cast<int>(config.get_int_or("problem.n_test", spec.n_test));
    spec.corruption = config.get_double_or("problem.corruption", spec.corruption);
    spec.ridge_weight = config.get_double_or("problem.ridge", spec.ridge_weight);
    spec.images_path = resolve_data_path(config.get_or("problem.images", ""));
    spec.labels_path = resolve_data_path(config.get_or("problem.labels", ""));
    bundle.problem = make_hypercleaning(spec);
  } else if (kind == "regpath-feature" || kind == "regpath-class") {
    RegPathSpec spec;
    spec.mode = kind == "regpath-feature" ? RegPathMode::per_feature
                                          : RegPathMode::per_class;
    spec.seed = static_cast<std::uint64_t>(config.get_int_or("problem.seed", 0));
    spec.n_train = static_cast<int>(config.get_int_or("problem.n_train", spec.n_train));
    spec.n_val = static_cast<int>(config.get_int_or("problem.n_val", spec.n_val));
    spec.n_test = static_cast<int>(config.get_int_or("problem.n_test", spec.n_test));
    spec.features = static_cast<int>(config.get_int_or("problem.features", spec.features));
    spec.classes = static_cast<int>(config.get_int_or("problem.classes", spec.classes));
    spec.libsvm_path = resolve_data_path(config.get_or("problem.libsvm", ""));
    bundle.problem = make_regpath(spec);
  } else {
    throw ConfigError("unknown problem kind '" + kind +
                          "' (quadratic, hypercleaning, regpath-feature, regpath-class)",
                      0, 0);
  }
  return bundle;
}

SolverConfig build_solver_config(const Config& config, const ProblemBundle& bundle) {
  const int n = bundle.problem->num_upper();
  const int m = bundle.problem->num_lower();

  SolverConfig solver;
  std::string algorithm;
  if (config.has("solver.preset")) {
    algorithm = config.get("solver.preset");
    solver = preset(algorithm, n, m);
  } else {
    solver.estimator_x.kind = estimator_from_name(config.get_or("solver.estimator_x", "sgd"));
    solver.estimator_y.kind = estimator_from_name(config.get_or("solver.estimator_y", "sgd"));
    solver.estimator_z.kind = estimator_from_name(config.get_or("solver.estimator_z", "sgd"));
  }

  solver.batch = static_cast<int>(config.get_int_or("solver.batch", solver.batch));
  solver.rho = config.get_double_or("solver.rho", solver.rho);
  solver.iterations = config.get_int_or("solver.iterations", 0);
  solver.seed = static_cast<std::uint64_t>(config.get_int_or("solver.seed", 0));

  // Clipping radius: configured value, else the declared cf/mu bound, else 1.
  if (config.has("solver.R")) {
    solver.clip_radius = config.get_double("solver.R");
  } else if (auto params = bundle.problem->declared_params()) {
    solver.clip_radius = params->cf / params->mu;
  } else {
    solver.clip_radius = 1.0;
  }

  auto apply_estimator_params = [&](EstimatorConfig& est) {
    est.p = config.get_double_or("solver.p", est.p);
    est.rho_bar = config.get_double_or("solver.rho_bar", est.rho_bar);
    est.a = config.get_double_or("solver.a", est.a);
    est.full_init = config.get_bool_or("solver.full_init", est.full_init);
  };
  apply_estimator_params(solver.estimator_x);
  apply_estimator_params(solver.estimator_y);
  apply_estimator_params(solver.estimator_z);

  if (config.get_or("solver.steps", "") == "suggest") {
    const auto params = bundle.problem->declared_params();
    if (!params.has_value()) {
      throw ConfigError("solver.steps = suggest needs declared problem constants", 0, 0);
    }
    if (algorithm.empty()) {
      throw ConfigError("solver.steps = suggest needs solver.preset", 0, 0);
    }
    const ConstantsLedger ledger = build_ledger(*params, n, m);
    const StepSuggestion sug = suggest_steps(ledger, algorithm, n + m);
    if (!sug.certificate.feasible) {
      throw ConfigError("no feasible step sizes for " + algorithm, 0, 0);
    }
    solver.alpha = sug.steps.alpha;
    solver.beta = sug.steps.beta;
    solver.gamma = sug.steps.gamma;
    solver.batch = sug.batch;
    solver.estimator_x.rho_bar = solver.estimator_y.rho_bar =
        solver.estimator_z.rho_bar = sug.rho_bar;
    solver.estimator_x.p = solver.estimator_y.p = solver.estimator_z.p = sug.p;
  } else {
    solver.alpha = config.get_double_or("solver.alpha", 0.0);
    solver.beta = config.get_double_or("solver.beta", 0.0);
    solver.gamma = config.get_double_or("solver.gamma", 0.0);
  }
  return solver;
}

RunOptions build_run_options(const Config& config, const ProblemBundle& bundle) {
  RunOptions options;
  options.cadence = static_cast<int>(config.get_int_or("run.cadence", 0));
  const bool default_gradh = bundle.quadratic != nullptr;
  if (config.get_bool_or("run.gradh", default_gradh)) {
    OracleConfig oracle_cfg;
    oracle_cfg.ll_tol = config.get_double_or("run.oracle_tol", 1e-10);
    oracle_cfg.lin_tol = oracle_cfg.ll_tol;
    auto problem = bundle.problem;
    options.gradH_sq = [problem, oracle_cfg](const Vector& x) {
      return stationarity_metric(*problem, x, oracle_cfg);
    };
  }
  options.stop_below_gradH_sq = config.get_double_or("run.stop_gradh", 0.0);
  options.record_objectives = config.get_bool_or("run.objectives", true);
  return options;
}

std::string trace_to_csv(const RunTrace& trace, bool include_timing) {
  std::string out = "iter,samples_f,samples_g,gradH_sq,f_val,g_val,test_metric,wall_ms\n";
  for (const TraceRow& row : trace.rows) {
    out += std::to_string(row.iter);
    out += ',';
    out += std::to_string(row.samples_f);
    out += ',';
    out += std::to_string(row.samples_g);
    out += ',';
    out += fmt_double(row.gradH_sq);
    out += ',';
    out += fmt_double(row.f_val);
    out += ',';
    out += fmt_double(row.g_val);
    out += ',';
    out += fmt_double(row.test_metric);
    out += ',';
    out += fmt_double(include_timing ? row.wall_ms : 0.0);
    out += '\n';
  }
  return out;
}

void write_file(const std::string& path, const std::string& contents) {
  if (path.empty()) return;
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << contents;
}

Iterate read_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  Iterate it;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string tag;
    row >> tag;
    if (tag.empty() || tag[0] == '#') continue;
    std::vector<double> values;
    double v;
    while (row >> v) values.push_back(v);
    Vector vec = Eigen::Map<Vector>(values.data(), static_cast<long>(values.size()));
    if (tag == "x") {
      it.x = vec;
    } else if (tag == "y") {
      it.y = vec;
    } else if (tag == "z") {
      it.z = vec;
    } else {
      throw std::runtime_error("unknown checkpoint tag '" + tag + "'");
    }
  }
  if (it.x.size() == 0) throw std::runtime_error("checkpoint has no x line");
  return it;
}

void write_checkpoint(const std::string& path, const Iterate& iterate) {
  std::string out = "x";
  for (long i = 0; i < iterate.x.size(); ++i) out += " " + fmt_double(iterate.x[i]);
  out += "\ny";
  for (long i = 0; i < iterate.y.size(); ++i) out += " " + fmt_double(iterate.y[i]);
  out += "\nz";
  for (long i = 0; i < iterate.z.size(); ++i) out += " " + fmt_double(iterate.z[i]);
  out += "\n";
  write_file(path, out);
}

namespace {

json summary_entry(const RunTrace& trace) {
  json entry;
  entry["steps_run"] = trace.steps_run;
  entry["diverged"] = trace.diverged;
  if (trace.diverged) entry["diverged_iter"] = trace.diverged_iter;
  entry["samples_f"] = trace.samples_f();
  entry["samples_g"] = trace.samples_g();
  if (!trace.rows.empty()) {
    const TraceRow& last = trace.rows.back();
    entry["final_iter"] = last.iter;
    if (!std::isnan(last.gradH_sq)) entry["final_gradH_sq"] = last.gradH_sq;
    if (!std::isnan(last.f_val)) entry["final_f"] = last.f_val;
    if (!std::isnan(last.test_metric)) entry["final_test_metric"] = last.test_metric;
    entry["wall_ms"] = last.wall_ms;
  }
  return entry;
}

std::string repeat_path(const std::string& base, int repeat) {
  if (repeat == 0) return base;
  const std::filesystem::path p(base);
  std::filesystem::path out = p.parent_path();
  out /= p.stem().string() + ".r" + std::to_string(repeat) + p.extension().string();
  return out.string();
}

}  // namespace

int cli_run(const Config& config, RunArtifacts* artifacts) {
  config.validate_keys(kRunKeys);
  const ProblemBundle bundle = build_problem(config);
  const SolverConfig solver = build_solver_config(config, bundle);
  const RunOptions options = build_run_options(config, bundle);

  const int repeats = static_cast<int>(config.get_int_or("run.repeats", 1));
  const bool timing = config.get_or("output.timing", "wall") != "none";
  const std::string trace_path = config.get_or("output.trace", "");
  const std::string summary_path = config.get_or("output.summary", "");
  const std::string final_path = config.get_or("run.save_final", "");

  json summary;
  summary["config_hash"] = config.hash();
  summary["seed"] = solver.seed;
  json repeat_entries = json::array();

  bool any_diverged = false;
  std::vector<double> final_gradh, final_test;
  RunTrace first_trace;
  for (int r = 0; r < repeats; ++r) {
    SolverConfig cfg = solver;
    if (r > 0) {
      // Derived per-repeat seed, documented: substream r of the base seed.
      cfg.seed = RngStream(solver.seed).split(0x7265706561740000ULL + r).next_u64();
    }
    RunTrace trace = run(*bundle.problem, cfg, zero_iterate(*bundle.problem), options);
    any_diverged = any_diverged || trace.diverged;
    if (!trace.rows.empty()) {
      const TraceRow& last = trace.rows.back();
      if (!std::isnan(last.gradH_sq)) final_gradh.push_back(last.gradH_sq);
      if (!std::isnan(last.test_metric)) final_test.push_back(last.test_metric);
    }
    json entry = summary_entry(trace);
    entry["seed"] = cfg.seed;
    repeat_entries.push_back(entry);
    if (!trace_path.empty()) {
      write_file(repeat_path(trace_path, r), trace_to_csv(trace, timing));
    }
    if (r == 0) {
      if (!final_path.empty() && !trace.diverged) {
        write_checkpoint(final_path, trace.final_iterate);
      }
      first_trace = std::move(trace);
    }
  }

  auto mean_std = [](const std::vector<double>& xs) {
    json out;
    if (xs.empty()) return out;
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var = xs.size() > 1 ? var / static_cast<double>(xs.size() - 1) : 0.0;
    out["mean"] = mean;
    out["std"] = std::sqrt(var);
    return out;
  };
  summary["repeats"] = repeat_entries;
  if (!final_gradh.empty()) summary["gradH_sq"] = mean_std(final_gradh);
  if (!final_test.empty()) summary["test_metric"] = mean_std(final_test);
  summary["diverged"] = any_diverged;

  if (!summary_path.empty()) write_file(summary_path, summary.dump(2) + "\n");

  if (artifacts != nullptr) {
    artifacts->trace = std::move(first_trace);
    artifacts->config_hash = config.hash();
    artifacts->trace_path = trace_path;
    artifacts->summary_path = summary_path;
  }
  return any_diverged ? kExitDiverged : kExitOk;
}

int cli_check(const Config& config, std::string* rendered) {
  config.validate_keys({"params.*", "check.*"});
  SmoothnessParams params;
  params.lf = config.get_double("params.lf");
  params.lg1 = config.get_double("params.lg1");
  params.lg2 = config.get_double("params.lg2");
  params.mu = config.get_double("params.mu");
  params.cf = config.get_double("params.cf");
  const int n = static_cast<int>(config.get_int("check.n"));
  const int m = static_cast<int>(config.get_int("check.m"));
  const ConstantsLedger ledger = build_ledger(params, n, m);

  StepSizeCertificate cert;
  StepSizes steps;
  std::ostringstream out;
  if (config.get_bool_or("check.suggest", false)) {
    const std::string algorithm = config.get("check.algorithm");
    const StepSuggestion sug = suggest_steps(ledger, algorithm, n + m);
    steps = sug.steps;
    cert = sug.certificate;
    out << "suggested: alpha=" << fmt_double(steps.alpha)
        << " beta=" << fmt_double(steps.beta) << " gamma=" << fmt_double(steps.gamma)
        << " b=" << sug.batch << " rho_bar=" << fmt_double(sug.rho_bar)
        << " p=" << fmt_double(sug.p) << "\n";
  } else {
    steps.alpha = config.get_double("check.alpha");
    steps.beta = config.get_double("check.beta");
    steps.gamma = config.get_double("check.gamma");
    if (config.has("check.algorithm")) {
      const std::string algorithm = config.get("check.algorithm");
      const long long total = n + m;
      const int b = static_cast<int>(config.get_int_or(
          "check.batch",
          static_cast<long long>(std::ceil(std::sqrt(static_cast<double>(total))))));
      const double rho_bar = config.get_double_or(
          "check.rho_bar", static_cast<double>(b) / (2.0 * static_cast<double>(total)));
      const double p = config.get_double_or(
          "check.p", static_cast<double>(b) / static_cast<double>(total + b));
      cert = certify(ledger, algorithm, steps, b, rho_bar, p);
    } else if (config.get_or("check.regime", "biased") == "unbiased") {
      UnbiasedCoeffs coeffs;
      coeffs.bracket_x = config.get_double_or("check.bracket_x", 0.0);
      coeffs.bracket_y = config.get_double_or("check.bracket_y", 0.0);
      coeffs.bracket_z = config.get_double_or("check.bracket_z", 0.0);
      coeffs.a_pp = config.get_double_or("check.app", 0.0);
      coeffs.eta_x = config.get_double_or("check.eta_x", 0.0);
      cert = check_unbiased(ledger, steps, config.get_double_or("check.rho", 1.0), coeffs);
    } else {
      BiasedCoeffs coeffs;
      coeffs.bracket_x = config.get_double_or("check.bracket_x", 0.0);
      coeffs.bracket_y = config.get_double_or("check.bracket_y", 0.0);
      coeffs.bracket_z = config.get_double_or("check.bracket_z", 0.0);
      cert = check_biased(ledger, steps, coeffs);
    }
  }

  for (const auto& row : cert.rows) {
    out << (row.ok() ? "  ok  " : " FAIL ") << row.name << "  lhs=" << fmt_double(row.lhs)
        << " rhs=" << fmt_double(row.rhs) << "\n";
    json line;
    line["name"] = row.name;
    line["lhs"] = row.lhs;
    line["rhs"] = row.rhs;
    line["ok"] = row.ok();
    out << line.dump() << "\n";
  }
  json verdict;
  verdict["feasible"] = cert.feasible;
  verdict["binding"] = cert.binding;
  verdict["binding_lhs"] = cert.binding_lhs;
  verdict["binding_rhs"] = cert.binding_rhs;
  verdict["binding_ratio"] = cert.binding_ratio;
  out << (cert.feasible ? "FEASIBLE" : "INFEASIBLE") << " binding: " << cert.binding
      << "\n" << verdict.dump() << "\n";

  if (rendered != nullptr) {
    *rendered = out.str();
  } else {
    std::cout << out.str();
  }
  return cert.feasible ? kExitOk : kExitInfeasible;
}

int cli_oracle(const Config& config, const std::string& checkpoint_path,
               std::string* rendered) {
  const ProblemBundle bundle = build_problem(config);
  const Iterate it = read_checkpoint(checkpoint_path);
  OracleConfig oracle_cfg;
  oracle_cfg.ll_tol = config.get_double_or("run.oracle_tol", 1e-10);
  oracle_cfg.lin_tol = oracle_cfg.ll_tol;
  const Vector grad = hypergradient(*bundle.problem, it.x, oracle_cfg);
  json out;
  out["gradH"] = std::vector<double>(grad.data(), grad.data() + grad.size());
  out["gradH_sq"] = grad.squaredNorm();
  const std::string text = out.dump(2) + "\n";
  if (rendered != nullptr) {
    *rendered = text;
  } else {
    std::cout << text;
  }
  return kExitOk;
}

}  // namespace pnpbo::harness
