#include "pnpbo/harness/plotdata.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pnpbo/harness/harness.hpp"

namespace pnpbo::harness {

namespace {

const char* kTraceHeader = "iter,samples_f,samples_g,gradH_sq,f_val,g_val,test_metric,wall_ms";

double parse_double(const std::string& tok) {
  if (tok == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (tok == "inf") return std::numeric_limits<double>::infinity();
  if (tok == "-inf") return -std::numeric_limits<double>::infinity();
  return std::stod(tok);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

RunTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw std::runtime_error("trace schema mismatch in '" + path + "'");
  }
  RunTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string tok;
    std::vector<std::string> toks;
    while (std::getline(row, tok, ',')) toks.push_back(tok);
    if (toks.size() != 8) {
      throw std::runtime_error("trace schema mismatch in '" + path + "'");
    }
    TraceRow r;
    r.iter = std::stoll(toks[0]);
    r.samples_f = std::stoll(toks[1]);
    r.samples_g = std::stoll(toks[2]);
    r.gradH_sq = parse_double(toks[3]);
    r.f_val = parse_double(toks[4]);
    r.g_val = parse_double(toks[5]);
    r.test_metric = parse_double(toks[6]);
    r.wall_ms = parse_double(toks[7]);
    trace.rows.push_back(r);
  }
  return trace;
}

std::string plotdata_csv(const std::vector<std::string>& labels,
                         const std::vector<RunTrace>& traces, int max_points) {
  std::string out = "algorithm,metric,x_axis,x,value\n";
  for (std::size_t t = 0; t < traces.size(); ++t) {
    const RunTrace& trace = traces[t];
    const std::string& label = labels[t];
    const std::size_t count = trace.rows.size();
    if (count == 0) continue;

    // Running minimum of gradH_sq over the full trace; downsampling keeps
    // the envelope exact at the sampled rows.
    std::vector<double> gradh_env(count);
    double best = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < count; ++k) {
      const double v = trace.rows[k].gradH_sq;
      if (!std::isnan(v) && (std::isnan(best) || v < best)) best = v;
      gradh_env[k] = best;
    }

    std::vector<std::size_t> picks;
    if (max_points <= 0 || count <= static_cast<std::size_t>(max_points)) {
      picks.resize(count);
      for (std::size_t k = 0; k < count; ++k) picks[k] = k;
    } else {
      for (int k = 0; k < max_points; ++k) {
        picks.push_back(k * (count - 1) / (max_points - 1));
      }
      picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
    }

    const bool downsampled = max_points > 0 && count > static_cast<std::size_t>(max_points);
    for (std::size_t k : picks) {
      const TraceRow& row = trace.rows[k];
      const double xs[3] = {static_cast<double>(row.iter),
                            static_cast<double>(row.samples_f + row.samples_g),
                            row.wall_ms};
      const char* axes[3] = {"iterations", "samples", "wall_ms"};
      const double gradh = downsampled ? gradh_env[k] : row.gradH_sq;
      const std::pair<const char*, double> metrics[4] = {
          {"gradH_sq", gradh},
          {"f_val", row.f_val},
          {"g_val", row.g_val},
          {"test_metric", row.test_metric},
      };
      for (int a = 0; a < 3; ++a) {
        for (const auto& [name, value] : metrics) {
          if (std::isnan(value)) continue;
          out += label;
          out += ',';
          out += name;
          out += ',';
          out += axes[a];
          out += ',';
          out += fmt(xs[a]);
          out += ',';
          out += fmt(value);
          out += '\n';
        }
      }
    }
  }
  return out;
}

int cli_plotdata(const std::vector<std::string>& paths,
                 const std::vector<std::string>& labels, int max_points,
                 const std::string& out_path) {
  if (paths.empty()) return kExitConfig;
  std::vector<RunTrace> traces;
  std::vector<std::string> use_labels;
  for (std::size_t k = 0; k < paths.size(); ++k) {
    try {
      traces.push_back(read_trace_csv(paths[k]));
    } catch (const std::exception& err) {
      std::fprintf(stderr, "plotdata: %s\n", err.what());
      return kExitConfig;
    }
    use_labels.push_back(k < labels.size() && !labels[k].empty()
                             ? labels[k]
                             : std::filesystem::path(paths[k]).stem().string());
  }
  const std::string csv = plotdata_csv(use_labels, traces, max_points);
  if (out_path.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    write_file(out_path, csv);
  }
  return kExitOk;
}

}  // namespace pnpbo::harness
