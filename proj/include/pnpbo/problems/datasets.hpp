#ifndef PNPBO_PROBLEMS_DATASETS_HPP
#define PNPBO_PROBLEMS_DATASETS_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pnpbo/types.hpp"

namespace pnpbo::data {

// Malformed input; position is tracked as a byte offset (and a 1-based line
// for text formats).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long long byte_offset, long long line = -1)
      : std::runtime_error(what + " at byte offset " + std::to_string(byte_offset) +
                           (line >= 0 ? " (line " + std::to_string(line) + ")" : "")),
        byte_offset_(byte_offset),
        line_(line) {}

  long long byte_offset() const { return byte_offset_; }
  long long line() const { return line_; }

 private:
  long long byte_offset_;
  long long line_;
};

// IDX (big-endian) image/label container. Images are flattened row-major,
// one sample per matrix row, pixel values scaled to [0, 1].
struct IdxData {
  bool is_images = false;
  int rows = 0;  // image height (0 for labels)
  int cols = 0;  // image width
  Matrix images;            // count x (rows*cols)
  std::vector<int> labels;  // for label files

  int count() const {
    return is_images ? static_cast<int>(images.rows())
                     : static_cast<int>(labels.size());
  }
};

// Accepts magic 0x00000803 (unsigned-byte images, 3 dims) and 0x00000801
// (unsigned-byte labels, 1 dim).
IdxData load_idx(const std::string& path);
void write_idx_images(const std::string& path, const Matrix& images, int rows, int cols);
void write_idx_labels(const std::string& path, const std::vector<int>& labels);

// LIBSVM sparse text rows: "label idx:val idx:val ...", indices 1-based in
// the file, 0-based here.
struct SparseRow {
  std::vector<std::pair<int, double>> entries;
};

struct LibsvmData {
  std::vector<SparseRow> rows;
  std::vector<double> labels;
  int dims = 0;

  Matrix dense() const;
};

// `dims` = feature count; 0 infers it from the largest index seen.
LibsvmData load_libsvm(const std::string& path, int dims);

// Each label is independently replaced, with probability p_tilde, by a
// uniform draw from {0, ..., num_classes-1}; the replacement may coincide
// with the original. flags[i] marks that the replacement event happened.
struct CorruptionResult {
  std::vector<int> labels;
  std::vector<bool> flags;
};

CorruptionResult corrupt_labels(const std::vector<int>& labels, double p_tilde,
                                std::uint64_t seed, int num_classes = 10);

// Built-in stand-in for digit data: 10 class prototypes on an 8x8 grid plus
// pixel noise, values in [0, 1]. Deterministic in the seed.
struct SyntheticDigits {
  Matrix images;  // count x 64
  std::vector<int> labels;
};

SyntheticDigits synthetic_digits(std::uint64_t seed, int count);

// Two-class Gaussian blobs with labels in {-1, +1}, for the per-feature
// regularization task.
struct BinaryBlobs {
  Matrix features;  // count x dims
  std::vector<double> labels;
};

BinaryBlobs binary_blobs(std::uint64_t seed, int count, int dims);

// Multiclass Gaussian blobs with labels in {0, ..., classes-1}.
struct MulticlassBlobs {
  Matrix features;
  std::vector<int> labels;
};

MulticlassBlobs multiclass_blobs(std::uint64_t seed, int count, int dims, int classes);

}  // namespace pnpbo::data

#endif
