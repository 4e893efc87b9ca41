#ifndef PNPBO_HARNESS_GRID_HPP
#define PNPBO_HARNESS_GRID_HPP

#include <string>
#include <vector>

#include "pnpbo/harness/config.hpp"
#include "pnpbo/harness/harness.hpp"

namespace pnpbo::harness {

// Grid search over (alpha, phi, kappa) with beta = alpha/phi and
// gamma = alpha/kappa; optional extra axes over the PAGE tail probability
// (as 1-p) and the ZeroSARAH momentum. Cells run on a worker pool, each
// with seed = base_seed xor cell_index; results are collected by cell
// index so the leaderboard is identical for any worker count.
struct GridSpec {
  std::vector<double> alphas;
  std::vector<double> phis;
  std::vector<double> kappas;
  std::vector<double> one_minus_p;  // optional PAGE axis
  std::vector<double> rho_bars;     // optional ZeroSARAH axis
  std::string metric = "final_gradh";  // final_gradh | min_gradh | final_test
  int workers = 1;
};

GridSpec build_grid_spec(const Config& config);

struct GridCell {
  int index = 0;
  double alpha = 0, beta = 0, gamma = 0, phi = 0, kappa = 0;
  double one_minus_p = -1, rho_bar = -1;
  bool diverged = false;
  double metric = std::numeric_limits<double>::quiet_NaN();
  double final_gradh = std::numeric_limits<double>::quiet_NaN();
  double min_gradh = std::numeric_limits<double>::quiet_NaN();
  double final_test = std::numeric_limits<double>::quiet_NaN();
  long long samples = 0;
};

struct GridResult {
  std::vector<GridCell> leaderboard;  // ranked, diverged cells last
  int best_cell = -1;
};

GridResult run_grid(const Config& config, const GridSpec& spec);

std::string leaderboard_csv(const GridResult& result);

// Exit 0 with a leaderboard, 4 when every cell diverged.
int cli_grid(const Config& config);

}  // namespace pnpbo::harness

#endif
