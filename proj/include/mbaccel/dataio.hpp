#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "mbaccel/vectorspace.hpp"

namespace mbaccel {

/// One labeled instance z = (x, y) with y in {-1, +1}.
struct Example {
  Example() = default;
  Example(SparseVector features, int label);

  SparseVector features;
  int label = 1;

  friend bool operator==(const Example&, const Example&) = default;
};

/// An in-memory sample. Every example lives in the same ambient dimension.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Example> examples, std::size_t dimension, std::string provenance = {});

  std::span<const Example> examples() const noexcept { return examples_; }
  std::size_t size() const noexcept { return examples_.size(); }
  bool empty() const noexcept { return examples_.empty(); }
  std::size_t dimension() const noexcept { return dimension_; }
  const std::string& provenance() const noexcept { return provenance_; }
  const Example& operator[](std::size_t i) const noexcept { return examples_[i]; }

  /// First `count` examples, same dimension.
  Dataset head(std::size_t count) const;

 private:
  std::vector<Example> examples_;
  std::size_t dimension_ = 0;
  std::string provenance_;
};

/// Parses "label idx:val idx:val ..." lines. Labels +1/-1/1/0 (0 becomes -1
/// with a warning); blank lines and '#' comments are skipped; LF or CRLF.
/// Dimension is the largest index seen (at least 1).
Dataset parse_libsvm(std::istream& in, std::string provenance = {});
Dataset parse_libsvm_string(const std::string& text);
Dataset read_libsvm_file(const std::string& path);

/// Writes LF-terminated lines with shortest round-trippable decimals.
void write_libsvm(const Dataset& dataset, std::ostream& out);
std::string write_libsvm_string(const Dataset& dataset);
void write_libsvm_file(const Dataset& dataset, const std::string& path);

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

struct SplitFractions {
  double train = 0.5;
  double validation = 0.25;
  double test = 0.25;
};

struct DatasetSplit {
  Dataset train;
  Dataset validation;
  Dataset test;
};

/// Seeded shuffle followed by a contiguous split; part sizes are
/// floor(fraction * size).
DatasetSplit split(const Dataset& dataset, SplitFractions fractions, std::uint64_t seed);

/// Permutation of [0, count) from a seeded Fisher-Yates pass. Portable:
/// does not depend on the standard library's distribution algorithms.
std::vector<std::size_t> seeded_permutation(std::size_t count, std::uint64_t seed);

Dataset shuffled(const Dataset& dataset, std::uint64_t seed);

struct SynthesisSpec {
  std::size_t m = 1024;
  std::size_t dimension = 20;
  double margin = 1.5;
  double label_noise = 0.0;
};

struct SynthesizedData {
  Dataset dataset;
  DenseVector planted_w;
};

/// Linearly separable sample with a planted predictor. Each x is unit-norm
/// with at most 10 nonzeros and |planted_w . x| >= margin before label noise;
/// each label is then flipped with probability label_noise.
SynthesizedData synthesize(const SynthesisSpec& spec, std::uint64_t seed);

/// Keeps the examples with y * (predictor . x) >= 1, in order.
Dataset censor(const Dataset& dataset, const DenseVector& predictor);

}  // namespace mbaccel
