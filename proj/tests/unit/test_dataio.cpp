#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "mbaccel/dataio.hpp"
#include "mbaccel/errors.hpp"
#include "mbaccel/losses.hpp"

using namespace mbaccel;

namespace {

Dataset random_dataset(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> count(1, 40);
  std::uniform_int_distribution<std::uint32_t> dim(1, 60);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  const std::size_t m = count(rng);
  const std::uint32_t d = dim(rng);
  std::vector<Example> ex;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<SparseEntry> e;
    for (std::uint32_t j = 1; j <= d; ++j) {
      if (u(rng) < 0.3) {
        // Mix magnitudes so the shortest-decimal writer is exercised.
        double v = g(rng) * std::pow(10.0, std::floor(12 * u(rng)) - 6);
        if (v != 0.0) e.push_back({j, v});
      }
    }
    ex.emplace_back(SparseVector(std::move(e), d), u(rng) < 0.5 ? 1 : -1);
  }
  return Dataset(std::move(ex), d);
}

std::size_t error_line(const std::string& text) {
  try {
    parse_libsvm_string(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("parse examples") {
  auto d = parse_libsvm_string("+1 1:0.5 3:-2\n");
  REQUIRE(d.size() == 1);
  CHECK(d.dimension() == 3);
  CHECK(d[0].label == 1);
  CHECK(d[0].features == SparseVector({{1, 0.5}, {3, -2.0}}, 3));

  auto e = parse_libsvm_string("-1\n");
  REQUIRE(e.size() == 1);
  CHECK(e[0].label == -1);
  CHECK(e[0].features.nnz() == 0);
  CHECK(e.dimension() == 1);

  auto f = parse_libsvm_string("# header\n\n1 2:1\r\n0 1:3 # trailing\n-1 5:1\n");
  REQUIRE(f.size() == 3);
  CHECK(f[1].label == -1);
  CHECK(f.dimension() == 5);
  CHECK(f[0].features.dimension() == 5);
}

TEST_CASE("parse errors carry line numbers") {
  CHECK_THROWS_AS(parse_libsvm_string(""), ValidationError);
  CHECK_THROWS_AS(parse_libsvm_string("# only comments\n\n"), ValidationError);
  CHECK(error_line("abc 1:2\n") == 1);
  CHECK(error_line("+1 1:2\n+1 x:2\n") == 2);
  CHECK(error_line("+1 1:2\n\n# c\n-1 1:zz\n") == 4);
  CHECK(error_line("+1 3:1 2:1\n") == 1);
  CHECK(error_line("+1 1:1\n+1 2:1 2:3\n") == 2);
  CHECK(error_line("+1 0:1\n") == 1);
  CHECK(error_line("+1 1\n") == 1);
  CHECK(error_line("+1 1:nan\n") == 1);
  CHECK(error_line("+1 1:1\n2 1:1\n") == 2);
  CHECK(error_line("+1 1:1e999\n") == 1);
}

TEST_CASE("property: LIBSVM round trip on 100 random datasets") {
  std::mt19937_64 rng(12345);
  for (int t = 0; t < 100; ++t) {
    auto d = random_dataset(rng);
    const std::string text = write_libsvm_string(d);
    auto back = parse_libsvm_string(text);
    REQUIRE(back.size() == d.size());
    std::size_t max_index = 1;
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(back[i].label == d[i].label);
      auto a = back[i].features.entries();
      auto b = d[i].features.entries();
      REQUIRE(a.size() == b.size());
      for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].index == b[k].index);
        CHECK(a[k].value == b[k].value);
        max_index = std::max<std::size_t>(max_index, b[k].index);
      }
    }
    CHECK(back.dimension() == max_index);
    CHECK(write_libsvm_string(back) == text);
  }
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-2.0) == "-2");
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("split") {
  std::vector<Example> ex;
  for (int i = 0; i < 100; ++i) ex.emplace_back(SparseVector({{1, static_cast<double>(i + 1)}}, 1), 1);
  Dataset d(ex, 1);
  auto s = split(d, {0.5, 0.25, 0.25}, 3);
  CHECK(s.train.size() == 50);
  CHECK(s.validation.size() == 25);
  CHECK(s.test.size() == 25);
  std::set<double> seen;
  for (const auto* part : {&s.train, &s.validation, &s.test}) {
    for (const auto& z : part->examples()) seen.insert(z.features.entries()[0].value);
  }
  CHECK(seen.size() == 100);
  auto again = split(d, {0.5, 0.25, 0.25}, 3);
  CHECK(std::equal(again.train.examples().begin(), again.train.examples().end(), s.train.examples().begin()));
  auto other = split(d, {0.5, 0.25, 0.25}, 4);
  CHECK_FALSE(std::equal(other.train.examples().begin(), other.train.examples().end(), s.train.examples().begin()));
  auto all = split(d, {1.0, 0.0, 0.0}, 1);
  CHECK(all.train.size() == 100);
  CHECK(all.validation.empty());
  CHECK(all.test.empty());
  CHECK_THROWS_AS(split(d, {0.8, 0.3, 0.0}, 1), ValidationError);
  CHECK_THROWS_AS(split(d, {-0.1, 0.5, 0.5}, 1), ValidationError);
}

TEST_CASE("seeded permutation is a fixed, portable permutation") {
  auto p = seeded_permutation(10, 42);
  auto sorted = p;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 10; ++i) CHECK(sorted[i] == i);
  CHECK(seeded_permutation(10, 42) == p);
  CHECK(seeded_permutation(0, 1).empty());
}

TEST_CASE("synthesize") {
  auto s = synthesize({2000, 20, 1.5, 0.0}, 9);
  CHECK(s.dataset.size() == 2000);
  CHECK(s.dataset.dimension() == 20);
  const LossModel model(LossKind::smoothed_hinge, 1.0);
  double min_margin = 1e300;
  for (const auto& z : s.dataset.examples()) {
    min_margin = std::min(min_margin, z.label * dot(z.features, s.planted_w));
    CHECK(z.features.squared_norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(z.features.nnz() <= 10);
  }
  CHECK(min_margin >= 1.5 - 1e-12);
  CHECK(mean_loss(model, s.planted_w, s.dataset.examples()) == 0.0);
  CHECK(synthesize({2000, 20, 1.5, 0.0}, 9).dataset.examples()[17] == s.dataset.examples()[17]);

  auto noisy = synthesize({10000, 10, 1.0, 0.5}, 2);
  const double acc = 1.0 - misclassification_rate(noisy.planted_w, noisy.dataset.examples());
  CHECK(acc == doctest::Approx(0.5).epsilon(0.1));
  CHECK_THROWS_AS(synthesize({0, 10, 1.0, 0.0}, 1), ValidationError);
  CHECK_THROWS_AS(synthesize({10, 10, 1.0, 1.5}, 1), ValidationError);
}

TEST_CASE("censor") {
  const DenseVector w({1.0, 0.0});
  Dataset kept({Example(SparseVector({{1, 2.0}}, 2), 1), Example(SparseVector({{1, -1.0}}, 2), -1)}, 2);
  auto same = censor(kept, w);
  CHECK(same.size() == 2);
  CHECK(same[0] == kept[0]);
  Dataset one({Example(SparseVector({{1, 0.3}}, 2), 1)}, 2);
  CHECK_THROWS_AS(censor(one, w), ValidationError);

  auto s = synthesize({3000, 10, 1.0, 0.2}, 5);
  auto c = censor(s.dataset, s.planted_w);
  CHECK(c.size() < s.dataset.size());
  CHECK(mean_loss(LossModel(LossKind::smoothed_hinge, 1.0), s.planted_w, c.examples()) == 0.0);
  // Subsequence, order preserved.
  std::size_t j = 0;
  for (const auto& z : s.dataset.examples()) {
    if (j < c.size() && c[j] == z) ++j;
  }
  CHECK(j == c.size());
}
