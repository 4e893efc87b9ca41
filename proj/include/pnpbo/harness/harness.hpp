#ifndef PNPBO_HARNESS_HARNESS_HPP
#define PNPBO_HARNESS_HARNESS_HPP

#include <memory>
#include <string>

#include "pnpbo/harness/config.hpp"
#include "pnpbo/oracle.hpp"
#include "pnpbo/problems/quadratic.hpp"
#include "pnpbo/solver.hpp"
#include "pnpbo/theory.hpp"

namespace pnpbo::harness {

// CLI exit codes.
constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitAllDiverged = 4;
constexpr int kExitInfeasible = 5;

// Environment variable naming the dataset root directory; relative dataset
// paths in configs are resolved against it.
constexpr const char* kDataRootEnv = "PNPBO_DATA_ROOT";

struct ProblemBundle {
  std::shared_ptr<BilevelProblem> problem;
  std::shared_ptr<QuadraticBilevel> quadratic;  // set for the synthetic task
};

ProblemBundle build_problem(const Config& config);

// Solver config from [solver]; `suggest` resolves step sizes through the
// certificate when solver.steps = suggest.
SolverConfig build_solver_config(const Config& config, const ProblemBundle& bundle);

RunOptions build_run_options(const Config& config, const ProblemBundle& bundle);

// Writes the trace as RFC-4180 CSV. With include_timing=false the wall_ms
// column is written as 0 so byte-level comparisons cover only computed
// quantities.
std::string trace_to_csv(const RunTrace& trace, bool include_timing);
void write_file(const std::string& path, const std::string& contents);

struct RunArtifacts {
  RunTrace trace;
  std::uint64_t config_hash = 0;
  std::string trace_path;
  std::string summary_path;
};

// Executes [solver] on [problem] and writes trace + summary. Returns the
// exit code contract: 0 ok, 3 diverged (partial trace still written).
int cli_run(const Config& config, RunArtifacts* artifacts = nullptr);

// Step-size certificate front end; prints a table and JSON lines, exit 0
// when feasible, 5 otherwise.
int cli_check(const Config& config, std::string* rendered = nullptr);

// Evaluates the exact hypergradient at a checkpoint file (lines "x ...",
// "y ...", "z ..."). Prints a JSON object.
int cli_oracle(const Config& config, const std::string& checkpoint_path,
               std::string* rendered = nullptr);

Iterate read_checkpoint(const std::string& path);
void write_checkpoint(const std::string& path, const Iterate& iterate);

}  // namespace pnpbo::harness

#endif
