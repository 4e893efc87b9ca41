#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pnpbo/harness/grid.hpp"
#include "pnpbo/harness/harness.hpp"
#include "pnpbo/harness/plotdata.hpp"
#include "pnpbo/problems/datasets.hpp"

namespace hn = pnpbo::harness;

namespace {

// Shared flag overrides merged into the parsed config.
struct CommonArgs {
  std::string config_path;
  long long seed = -1;
  std::string out_dir;
  int workers = 0;
  int cadence = 0;
  int repeats = 0;
};

hn::Config load_config(const CommonArgs& args) {
  hn::Config config = hn::Config::parse_file(args.config_path);
  if (args.seed >= 0) config.set("solver.seed", std::to_string(args.seed));
  if (args.workers > 0) config.set("grid.workers", std::to_string(args.workers));
  if (args.cadence > 0) config.set("run.cadence", std::to_string(args.cadence));
  if (args.repeats > 0) config.set("run.repeats", std::to_string(args.repeats));
  if (!args.out_dir.empty()) {
    auto redirect = [&](const char* key, const char* name) {
      config.set(key, args.out_dir + "/" + name);
    };
    redirect("output.trace", "trace.csv");
    redirect("output.summary", "summary.json");
    redirect("output.leaderboard", "leaderboard.csv");
  }
  return config;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  cmd->add_option("--config", args.config_path, "config file")->required(config_required);
  cmd->add_option("--seed", args.seed, "override solver.seed");
  cmd->add_option("--out", args.out_dir, "output directory override");
  cmd->add_option("--workers", args.workers, "grid worker threads");
  cmd->add_option("--cadence", args.cadence, "metric recording cadence");
  cmd->add_option("--repeats", args.repeats, "repeat count with derived seeds");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pnpbo: plug-and-play stochastic bilevel optimization"};
  app.require_subcommand(1);

  CommonArgs run_args, grid_args, check_args, oracle_args;
  std::string checkpoint_path;
  std::vector<std::string> plot_paths, plot_labels;
  std::string plot_out;
  int plot_points = 0;

  CLI::App* cmd_run = app.add_subcommand("run", "execute one solver configuration");
  add_common(cmd_run, run_args);

  CLI::App* cmd_grid = app.add_subcommand("grid", "grid search over step sizes");
  add_common(cmd_grid, grid_args);

  CLI::App* cmd_check = app.add_subcommand("check", "step-size feasibility certificate");
  add_common(cmd_check, check_args);

  CLI::App* cmd_oracle = app.add_subcommand("oracle", "exact hypergradient at a checkpoint");
  add_common(cmd_oracle, oracle_args);
  cmd_oracle->add_option("--checkpoint", checkpoint_path, "iterate file")->required();

  CLI::App* cmd_plot = app.add_subcommand("plotdata", "merge traces into long-format CSV");
  cmd_plot->add_option("traces", plot_paths, "trace CSV paths")->required();
  cmd_plot->add_option("--labels", plot_labels, "algorithm labels (per trace)");
  cmd_plot->add_option("--points", plot_points, "downsample to at most N points");
  cmd_plot->add_option("--out", plot_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) return hn::cli_run(load_config(run_args));
    if (cmd_grid->parsed()) return hn::cli_grid(load_config(grid_args));
    if (cmd_check->parsed()) return hn::cli_check(load_config(check_args));
    if (cmd_oracle->parsed()) {
      return hn::cli_oracle(load_config(oracle_args), checkpoint_path);
    }
    if (cmd_plot->parsed()) {
      return hn::cli_plotdata(plot_paths, plot_labels, plot_points, plot_out);
    }
  } catch (const hn::ConfigError& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return hn::kExitConfig;
  } catch (const pnpbo::data::ParseError& err) {
    std::fprintf(stderr, "parse error: %s\n", err.what());
    return hn::kExitConfig;
  } catch (const pnpbo::DivergedError& err) {
    std::fprintf(stderr, "diverged: %s\n", err.what());
    return hn::kExitDiverged;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return hn::kExitError;
  }
  return hn::kExitError;
}
