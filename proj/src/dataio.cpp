#include "mbaccel/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string_view>

#include "mbaccel/errors.hpp"

namespace mbaccel {

namespace {

bool parse_real(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  if (token.empty()) return false;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_index(std::string_view token, std::uint64_t& out) {
  if (token.empty()) return false;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
    if (pos > start) tokens.push_back(line.substr(start, pos - start));
  }
  return tokens;
}

}  // namespace

Example::Example(SparseVector features_in, int label_in)
    : features(std::move(features_in)), label(label_in) {
  if (label != 1 && label != -1) throw ValidationError("Example: label must be -1 or +1");
}

Dataset::Dataset(std::vector<Example> examples, std::size_t dimension, std::string provenance)
    : examples_(std::move(examples)), dimension_(dimension), provenance_(std::move(provenance)) {
  if (dimension_ == 0) throw ValidationError("Dataset: dimension must be positive");
  for (auto& ex : examples_) {
    if (ex.features.dimension() != dimension_) {
      ex.features = ex.features.with_dimension(dimension_);
    }
  }
}

Dataset Dataset::head(std::size_t count) const {
  count = std::min(count, examples_.size());
  return Dataset(std::vector<Example>(examples_.begin(), examples_.begin() + count), dimension_,
                 provenance_);
}

Dataset parse_libsvm(std::istream& in, std::string provenance) {
  struct Row {
    std::vector<SparseEntry> entries;
    int label;
  };
  std::vector<Row> rows;
  std::uint32_t max_index = 0;
  std::size_t zero_labels = 0;
  std::size_t first_zero_line = 0;
  std::size_t lineno = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    auto tokens = tokenize(view);
    if (tokens.empty()) continue;

    double label_value = 0.0;
    if (!parse_real(tokens[0], label_value)) {
      throw ParseError(lineno, "non-numeric label '" + std::string(tokens[0]) + "'");
    }
    int label;
    if (label_value == 1.0) {
      label = 1;
    } else if (label_value == -1.0) {
      label = -1;
    } else if (label_value == 0.0) {
      label = -1;
      if (zero_labels++ == 0) first_zero_line = lineno;
    } else {
      throw ParseError(lineno, "label must be +1, -1 or 0, got '" + std::string(tokens[0]) + "'");
    }

    Row row{{}, label};
    std::uint64_t prev = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      auto tok = tokens[t];
      auto colon = tok.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(lineno, "expected index:value, got '" + std::string(tok) + "'");
      }
      std::uint64_t index = 0;
      double value = 0.0;
      if (!parse_index(tok.substr(0, colon), index)) {
        throw ParseError(lineno, "non-numeric index in '" + std::string(tok) + "'");
      }
      if (!parse_real(tok.substr(colon + 1), value)) {
        throw ParseError(lineno, "non-numeric value in '" + std::string(tok) + "'");
      }
      if (index == 0 || index > std::numeric_limits<std::uint32_t>::max()) {
        throw ParseError(lineno, "index out of range in '" + std::string(tok) + "'");
      }
      if (index <= prev) throw ParseError(lineno, "indices must be strictly increasing");
      if (!std::isfinite(value)) throw ParseError(lineno, "non-finite value");
      prev = index;
      if (value == 0.0) continue;  // explicit zeros carry no information
      row.entries.push_back({static_cast<std::uint32_t>(index), value});
      max_index = std::max(max_index, static_cast<std::uint32_t>(index));
    }
    rows.push_back(std::move(row));
  }
  if (in.bad()) throw ValidationError("I/O error while reading LIBSVM input");
  if (rows.empty()) throw ValidationError("empty LIBSVM input: no examples");
  if (zero_labels > 0) {
    warn(std::to_string(zero_labels) + " label(s) equal to 0 mapped to -1 (first on line " +
         std::to_string(first_zero_line) + ")");
  }

  const std::size_t dimension = std::max<std::size_t>(1, max_index);
  std::vector<Example> examples;
  examples.reserve(rows.size());
  for (auto& r : rows) examples.emplace_back(SparseVector(std::move(r.entries), dimension), r.label);
  return Dataset(std::move(examples), dimension, std::move(provenance));
}

Dataset parse_libsvm_string(const std::string& text) {
  std::istringstream in(text);
  return parse_libsvm(in, "<string>");
}

Dataset read_libsvm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return parse_libsvm(in, path);
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_libsvm(const Dataset& dataset, std::ostream& out) {
  for (const auto& ex : dataset.examples()) {
    out << (ex.label > 0 ? "+1" : "-1");
    for (const auto& e : ex.features.entries()) {
      out << ' ' << e.index << ':' << format_double(e.value);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("I/O error while writing LIBSVM output");
}

std::string write_libsvm_string(const Dataset& dataset) {
  std::ostringstream out;
  write_libsvm(dataset, out);
  return out.str();
}

void write_libsvm_file(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  write_libsvm(dataset, out);
}

std::vector<std::size_t> seeded_permutation(std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> perm(count);
  for (std::size_t i = 0; i < count; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = count; i > 1; --i) {
    // Unbiased draw from [0, i) by rejection.
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
      r = rng();
    } while (r >= limit);
    std::swap(perm[i - 1], perm[r % bound]);
  }
  return perm;
}

Dataset shuffled(const Dataset& dataset, std::uint64_t seed) {
  auto perm = seeded_permutation(dataset.size(), seed);
  std::vector<Example> out;
  out.reserve(perm.size());
  for (auto k : perm) out.push_back(dataset[k]);
  return Dataset(std::move(out), dataset.dimension(), dataset.provenance());
}

DatasetSplit split(const Dataset& dataset, SplitFractions f, std::uint64_t seed) {
  for (double v : {f.train, f.validation, f.test}) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("split: fractions must lie in [0, 1]");
  }
  if (f.train + f.validation + f.test > 1.0 + 1e-12) {
    throw ValidationError("split: fractions must sum to at most 1");
  }
  const auto m = static_cast<double>(dataset.size());
  auto part = [&](double frac) { return static_cast<std::size_t>(std::floor(frac * m + 1e-9)); };
  std::size_t n_train = part(f.train);
  std::size_t n_val = part(f.validation);
  std::size_t n_test = part(f.test);
  // Guard against rounding pushing the total past the sample size.
  n_test = std::min(n_test, dataset.size() - std::min(dataset.size(), n_train + n_val));

  Dataset mixed = shuffled(dataset, seed);
  auto ex = mixed.examples();
  auto slice = [&](std::size_t begin, std::size_t count) {
    return Dataset(std::vector<Example>(ex.begin() + begin, ex.begin() + begin + count),
                   dataset.dimension(), dataset.provenance());
  };
  return {slice(0, n_train), slice(n_train, n_val), slice(n_train + n_val, n_test)};
}

SynthesizedData synthesize(const SynthesisSpec& spec, std::uint64_t seed) {
  if (spec.m == 0 || spec.dimension == 0) throw ValidationError("synthesize: m and dimension must be >= 1");
  if (!(spec.margin > 0.0)) throw ValidationError("synthesize: margin must be positive");
  if (!(spec.label_noise >= 0.0 && spec.label_noise <= 1.0)) {
    throw ValidationError("synthesize: label_noise must lie in [0, 1]");
  }
  const std::size_t d = spec.dimension;
  const std::size_t nnz = std::min<std::size_t>(d, 10);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<double> u(d);
  double un = 0.0;
  do {
    un = 0.0;
    for (auto& v : u) {
      v = gauss(rng);
      un += v * v;
    }
  } while (un == 0.0);
  un = std::sqrt(un);
  for (auto& v : u) v /= un;

  // Instances whose direction is within cos_floor of orthogonal to the
  // planted direction are redrawn; scaling the planted predictor by
  // margin / cos_floor then guarantees |w . x| >= margin with unit-norm x.
  const double cos_floor = 0.5 / std::sqrt(static_cast<double>(d));
  const double scale = spec.margin / cos_floor;
  std::vector<double> w(d);
  for (std::size_t j = 0; j < d; ++j) w[j] = scale * u[j];
  DenseVector planted(std::move(w));

  std::vector<Example> examples;
  examples.reserve(spec.m);
  std::vector<std::size_t> perm(d);
  for (std::size_t j = 0; j < d; ++j) perm[j] = j;
  while (examples.size() < spec.m) {
    // Partial Fisher-Yates for the support; perm stays a permutation.
    for (std::size_t k = 0; k < nnz; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, d - 1);
      std::swap(perm[k], perm[pick(rng)]);
    }
    std::vector<std::size_t> support(perm.begin(), perm.begin() + nnz);
    std::sort(support.begin(), support.end());
    std::vector<SparseEntry> entries;
    double sq = 0.0;
    for (auto j : support) {
      double v = gauss(rng);
      if (v == 0.0) continue;
      entries.push_back({static_cast<std::uint32_t>(j + 1), v});
      sq += v * v;
    }
    if (entries.empty()) continue;
    const double inv = 1.0 / std::sqrt(sq);
    double cosine = 0.0;
    for (auto& e : entries) {
      e.value *= inv;
      cosine += e.value * u[e.index - 1];
    }
    if (std::abs(cosine) < cos_floor) continue;
    SparseVector x(std::move(entries), d);
    int label = dot(x, planted) >= 0.0 ? 1 : -1;
    if (spec.label_noise > 0.0 && unif(rng) < spec.label_noise) label = -label;
    examples.emplace_back(std::move(x), label);
  }
  std::ostringstream prov;
  prov << "synthesize(m=" << spec.m << ",d=" << d << ",margin=" << format_double(spec.margin)
       << ",noise=" << format_double(spec.label_noise) << ",seed=" << seed << ")";
  return {Dataset(std::move(examples), d, prov.str()), std::move(planted)};
}

Dataset censor(const Dataset& dataset, const DenseVector& predictor) {
  if (predictor.size() != dataset.dimension()) {
    throw ValidationError("censor: predictor dimension does not match dataset");
  }
  std::vector<Example> kept;
  for (const auto& ex : dataset.examples()) {
    if (ex.label * dot(ex.features, predictor) >= 1.0) kept.push_back(ex);
  }
  if (kept.empty()) {
    throw ValidationError("censor: every example violates the margin; train a better predictor");
  }
  return Dataset(std::move(kept), dataset.dimension(), dataset.provenance() + " [censored]");
}

}  // namespace mbaccel
