#ifndef PNPBO_HARNESS_PLOTDATA_HPP
#define PNPBO_HARNESS_PLOTDATA_HPP

#include <string>
#include <vector>

#include "pnpbo/solver.hpp"

namespace pnpbo::harness {

// Parses a trace CSV produced by cli_run. Throws std::runtime_error on a
// schema mismatch.
RunTrace read_trace_csv(const std::string& path);

// Long-format merge of several traces, keyed (algorithm, metric, x_axis)
// with x_axis in {iterations, samples, wall_ms}. With max_points > 0 each
// trace is downsampled to at most that many rows; the gradH_sq series is
// replaced by its running minimum (computed on the full trace first) so the
// min-so-far envelope at the sampled points is exact.
std::string plotdata_csv(const std::vector<std::string>& labels,
                         const std::vector<RunTrace>& traces, int max_points = 0);

int cli_plotdata(const std::vector<std::string>& paths,
                 const std::vector<std::string>& labels, int max_points,
                 const std::string& out_path);

}  // namespace pnpbo::harness

#endif
