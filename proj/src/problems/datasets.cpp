#include "pnpbo/problems/datasets.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pnpbo/rng.hpp"

namespace pnpbo::data {

namespace {

constexpr std::uint32_t kMagicImages = 0x00000803;
constexpr std::uint32_t kMagicLabels = 0x00000801;

std::uint32_t read_be32(std::istream& in, long long offset) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (in.gcount() != 4) {
    throw ParseError("truncated IDX header", offset);
  }
  return (static_cast<std::uint32_t>(buf[0]) << 24) |
         (static_cast<std::uint32_t>(buf[1]) << 16) |
         (static_cast<std::uint32_t>(buf[2]) << 8) | static_cast<std::uint32_t>(buf[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
  unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

}  // namespace

IdxData load_idx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open IDX file '" + path + "'", 0);
  }
  const std::uint32_t magic = read_be32(in, 0);
  IdxData out;
  if (magic == kMagicImages) {
    out.is_images = true;
    const std::uint32_t count = read_be32(in, 4);
    out.rows = static_cast<int>(read_be32(in, 8));
    out.cols = static_cast<int>(read_be32(in, 12));
    if (out.rows <= 0 || out.cols <= 0) {
      throw ParseError("IDX image dimensions must be positive", 8);
    }
    const long long pixels = static_cast<long long>(count) * out.rows * out.cols;
    std::vector<unsigned char> raw(static_cast<std::size_t>(pixels));
    in.read(reinterpret_cast<char*>(raw.data()), pixels);
    if (in.gcount() != pixels) {
      throw ParseError("truncated IDX pixel data", 16 + in.gcount());
    }
    out.images.resize(count, out.rows * out.cols);
    for (std::uint32_t s = 0; s < count; ++s) {
      for (int p = 0; p < out.rows * out.cols; ++p) {
        out.images(s, p) =
            raw[static_cast<std::size_t>(s) * out.rows * out.cols + p] / 255.0;
      }
    }
  } else if (magic == kMagicLabels) {
    const std::uint32_t count = read_be32(in, 4);
    std::vector<unsigned char> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), count);
    if (in.gcount() != static_cast<long long>(count)) {
      throw ParseError("truncated IDX label data", 8 + in.gcount());
    }
    out.labels.assign(raw.begin(), raw.end());
  } else {
    throw ParseError("bad IDX magic", 0);
  }
  return out;
}

void write_idx_images(const std::string& path, const Matrix& images, int rows,
                      int cols) {
  if (images.cols() != static_cast<long>(rows) * cols) {
    throw std::invalid_argument("image width mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  write_be32(out, kMagicImages);
  write_be32(out, static_cast<std::uint32_t>(images.rows()));
  write_be32(out, static_cast<std::uint32_t>(rows));
  write_be32(out, static_cast<std::uint32_t>(cols));
  for (long s = 0; s < images.rows(); ++s) {
    for (long p = 0; p < images.cols(); ++p) {
      const double v = std::min(1.0, std::max(0.0, images(s, p)));
      const unsigned char byte = static_cast<unsigned char>(std::lround(v * 255.0));
      out.write(reinterpret_cast<const char*>(&byte), 1);
    }
  }
}

void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary);
  write_be32(out, kMagicLabels);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  for (int label : labels) {
    const unsigned char byte = static_cast<unsigned char>(label);
    out.write(reinterpret_cast<const char*>(&byte), 1);
  }
}

Matrix LibsvmData::dense() const {
  Matrix out = Matrix::Zero(static_cast<long>(rows.size()), dims);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [idx, val] : rows[r].entries) {
      out(static_cast<long>(r), idx) = val;
    }
  }
  return out;
}

LibsvmData load_libsvm(const std::string& path, int dims) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open LIBSVM file '" + path + "'", 0);
  }
  LibsvmData out;
  out.dims = dims;
  int max_index = -1;
  std::string line;
  long long line_no = 0;
  long long line_start = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const long long advance = static_cast<long long>(line.size()) + 1;
    if (line.empty() || line[0] == '#') {
      line_start += advance;
      continue;
    }
    std::size_t pos = 0;
    auto skip_spaces = [&] {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    };
    auto token = [&]() -> std::string {
      skip_spaces();
      const std::size_t start = pos;
      while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
      return line.substr(start, pos - start);
    };

    const std::string label_tok = token();
    std::size_t used = 0;
    double label = 0;
    try {
      label = std::stod(label_tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != label_tok.size() || label_tok.empty()) {
      throw ParseError("non-numeric label token '" + label_tok + "'",
                       line_start + static_cast<long long>(pos - label_tok.size()),
                       line_no);
    }

    SparseRow row;
    while (true) {
      skip_spaces();
      if (pos >= line.size()) break;
      const long long tok_offset = line_start + static_cast<long long>(pos);
      const std::string tok = token();
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos) {
        throw ParseError("expected index:value, got '" + tok + "'", tok_offset, line_no);
      }
      const std::string idx_tok = tok.substr(0, colon);
      const std::string val_tok = tok.substr(colon + 1);
      long idx = 0;
      try {
        idx = std::stol(idx_tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != idx_tok.size() || idx_tok.empty()) {
        throw ParseError("non-numeric feature index '" + idx_tok + "'", tok_offset,
                         line_no);
      }
      double val = 0;
      try {
        val = std::stod(val_tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != val_tok.size() || val_tok.empty()) {
        throw ParseError("non-numeric feature value '" + val_tok + "'", tok_offset,
                         line_no);
      }
      if (idx < 1) {
        throw ParseError("feature index must be >= 1", tok_offset, line_no);
      }
      if (dims > 0 && idx > dims) {
        throw ParseError("feature index " + std::to_string(idx) + " out of range",
                         tok_offset, line_no);
      }
      row.entries.emplace_back(static_cast<int>(idx - 1), val);
      max_index = std::max(max_index, static_cast<int>(idx - 1));
    }
    out.rows.push_back(std::move(row));
    out.labels.push_back(label);
    line_start += advance;
  }
  if (dims <= 0) out.dims = max_index + 1;
  return out;
}

CorruptionResult corrupt_labels(const std::vector<int>& labels, double p_tilde,
                                std::uint64_t seed, int num_classes) {
  if (p_tilde < 0 || p_tilde > 1) {
    throw std::invalid_argument("corruption probability must lie in [0, 1]");
  }
  RngStream rng(seed);
  CorruptionResult out;
  out.labels = labels;
  out.flags.assign(labels.size(), false);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (rng.bernoulli(p_tilde)) {
      out.flags[i] = true;
      out.labels[i] = rng.uniform_int(num_classes);
    }
  }
  return out;
}

SyntheticDigits synthetic_digits(std::uint64_t seed, int count) {
  constexpr int kSide = 8;
  constexpr int kDim = kSide * kSide;
  constexpr int kClasses = 10;
  RngStream rng(seed);
  RngStream proto_rng = rng.split(0);
  RngStream sample_rng = rng.split(1);

  // Class prototypes: smooth random blobs in [0, 1].
  Matrix prototypes(kClasses, kDim);
  for (int c = 0; c < kClasses; ++c) {
    const double cx = 1.0 + 6.0 * proto_rng.next_double();
    const double cy = 1.0 + 6.0 * proto_rng.next_double();
    const double sx = 0.8 + 1.6 * proto_rng.next_double();
    const double sy = 0.8 + 1.6 * proto_rng.next_double();
    const double cx2 = 1.0 + 6.0 * proto_rng.next_double();
    const double cy2 = 1.0 + 6.0 * proto_rng.next_double();
    for (int r = 0; r < kSide; ++r) {
      for (int col = 0; col < kSide; ++col) {
        const double d1 = (r - cx) * (r - cx) / (sx * sx) +
                          (col - cy) * (col - cy) / (sy * sy);
        const double d2 = (r - cx2) * (r - cx2) + (col - cy2) * (col - cy2);
        prototypes(c, r * kSide + col) =
            0.7 * std::exp(-0.5 * d1) + 0.3 * std::exp(-0.25 * d2);
      }
    }
  }

  SyntheticDigits out;
  out.images.resize(count, kDim);
  out.labels.resize(count);
  for (int s = 0; s < count; ++s) {
    const int label = sample_rng.uniform_int(kClasses);
    out.labels[s] = label;
    for (int p = 0; p < kDim; ++p) {
      const double noise = 0.25 * (sample_rng.next_double() - 0.5);
      out.images(s, p) = std::min(1.0, std::max(0.0, prototypes(label, p) + noise));
    }
  }
  return out;
}

BinaryBlobs binary_blobs(std::uint64_t seed, int count, int dims) {
  RngStream rng(seed);
  RngStream center_rng = rng.split(0);
  RngStream sample_rng = rng.split(1);
  Vector center(dims);
  for (int d = 0; d < dims; ++d) center[d] = 2.0 * center_rng.next_double() - 1.0;
  center *= 1.5 / std::max(center.norm(), 1e-12);

  BinaryBlobs out;
  out.features.resize(count, dims);
  out.labels.resize(count);
  for (int s = 0; s < count; ++s) {
    const double label = sample_rng.bernoulli(0.5) ? 1.0 : -1.0;
    out.labels[s] = label;
    for (int d = 0; d < dims; ++d) {
      const double u1 = std::max(sample_rng.next_double(), 1e-300);
      const double u2 = sample_rng.next_double();
      const double normal =
          std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
      out.features(s, d) = label * center[d] + normal;
    }
  }
  return out;
}

MulticlassBlobs multiclass_blobs(std::uint64_t seed, int count, int dims,
                                 int classes) {
  RngStream rng(seed);
  RngStream center_rng = rng.split(0);
  RngStream sample_rng = rng.split(1);
  Matrix centers(classes, dims);
  for (int c = 0; c < classes; ++c) {
    for (int d = 0; d < dims; ++d) {
      centers(c, d) = 3.0 * (center_rng.next_double() - 0.5);
    }
  }
  MulticlassBlobs out;
  out.features.resize(count, dims);
  out.labels.resize(count);
  for (int s = 0; s < count; ++s) {
    const int label = sample_rng.uniform_int(classes);
    out.labels[s] = label;
    for (int d = 0; d < dims; ++d) {
      const double u1 = std::max(sample_rng.next_double(), 1e-300);
      const double u2 = sample_rng.next_double();
      const double normal =
          std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
      out.features(s, d) = centers(label, d) + 0.8 * normal;
    }
  }
  return out;
}

}  // namespace pnpbo::data
