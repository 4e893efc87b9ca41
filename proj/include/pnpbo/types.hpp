#ifndef PNPBO_TYPES_HPP
#define PNPBO_TYPES_HPP

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace pnpbo {

using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Current point of the three update modules: upper-level x, lower-level y,
// implicit variable z (same dimension as y).
struct Iterate {
  Vector x;
  Vector y;
  Vector z;

  bool all_finite() const {
    return x.allFinite() && y.allFinite() && z.allFinite();
  }
};

// Index sets drawn for one iteration: f_indices ⊂ [n], g_indices ⊂ [m].
struct SampleDraw {
  std::vector<int> f_indices;
  std::vector<int> g_indices;
};

SampleDraw full_batch(int n, int m);

// A non-finite estimate aborted the run at `iteration`.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(long long iteration, const std::string& channel)
      : std::runtime_error("diverged at iteration " + std::to_string(iteration) +
                           " in channel " + channel),
        iteration_(iteration),
        channel_(channel) {}

  long long iteration() const { return iteration_; }
  const std::string& channel() const { return channel_; }

 private:
  long long iteration_;
  std::string channel_;
};

// An iterative solve hit its iteration cap before reaching tolerance.
class NoConvergenceError : public std::runtime_error {
 public:
  NoConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what + " (final residual " + std::to_string(residual) + ")"),
        residual_(residual) {}

  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace pnpbo

#endif
