#include <doctest.h>

#include <cmath>
#include <random>

#include "mbaccel/errors.hpp"
#include "mbaccel/geometry.hpp"
#include "test_support.hpp"

using namespace mbaccel;
using testing_support::random_dense;
using testing_support::random_simplex;

TEST_CASE("map construction") {
  auto e = MirrorMap::euclidean(3, 2.0);
  CHECK(e.constant_K() == 1.0);
  CHECK(e.radius() == 2.0);
  CHECK(e.paired_norm() == NormKind::two);
  auto h = MirrorMap::entropy(8);
  CHECK(h.constant_K() == doctest::Approx(std::sqrt(2.0 * std::log(8.0))));
  CHECK(h.radius() == 1.0);
  CHECK(h.paired_norm() == NormKind::one);
  CHECK_THROWS_AS(MirrorMap::entropy(1), ValidationError);
  CHECK_THROWS_AS(MirrorMap::euclidean(3, 0.0), ValidationError);
  CHECK_THROWS_AS(MirrorMap::euclidean(0, 1.0), ValidationError);
}

TEST_CASE("potential examples") {
  auto e = MirrorMap::euclidean(2, 10.0);
  CHECK(e.potential(DenseVector::zeros(2)) == 0.0);
  CHECK(e.potential(DenseVector({3, 4})) == 12.5);
  auto h = MirrorMap::entropy(4);
  CHECK(std::abs(h.potential(DenseVector({0.25, 0.25, 0.25, 0.25}))) <= 1e-15);
  CHECK(h.potential(DenseVector({1, 0, 0, 0})) == doctest::Approx(std::log(4.0)));
  CHECK_THROWS_AS(h.potential(DenseVector({1.5, -0.5, 0, 0})), DomainError);
  CHECK_THROWS_AS(e.potential(DenseVector({1, 2, 3})), ValidationError);
}

TEST_CASE("gradient maps") {
  auto e = MirrorMap::euclidean(3, 1.0);
  const DenseVector w({0.1, -2, 3});
  CHECK(e.grad_potential(w) == w);
  CHECK(e.grad_conjugate(w) == w);
  auto h = MirrorMap::entropy(5);
  auto u = h.grad_conjugate(DenseVector::zeros(5));
  for (double x : u.values()) CHECK(x == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS_AS(h.grad_potential(DenseVector({1, 0, 0, 0, 0})), DomainError);
  // Large exponents do not overflow.
  auto big = h.grad_conjugate(DenseVector({1000, 999, 0, 0, 0}));
  CHECK(std::isfinite(big[0]));
  CHECK(big[0] + big[1] == doctest::Approx(1.0));

  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    auto p = random_simplex(rng, 5);
    worst = std::max(worst, norm(axpy(-1.0, p, h.grad_conjugate(h.grad_potential(p)))));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("bregman divergence") {
  auto e = MirrorMap::euclidean(2, 5.0);
  CHECK(e.bregman(DenseVector({1, 2}), DenseVector({4, 6})).value == 12.5);
  CHECK(e.bregman(DenseVector({1, 2}), DenseVector({1, 2})).value == 0.0);
  auto h = MirrorMap::entropy(3);
  const DenseVector p({0.2, 0.3, 0.5}), q({0.4, 0.4, 0.2});
  double kl = 0.0;
  for (int j = 0; j < 3; ++j) kl += p[j] * std::log(p[j] / q[j]);
  CHECK(h.bregman(p, q).value == doctest::Approx(kl).epsilon(1e-12));
  CHECK(h.bregman(p, p).value == 0.0);
}

TEST_CASE("property: strong convexity witness in the paired norm") {
  std::mt19937_64 rng(17);
  auto e = MirrorMap::euclidean(6, 100.0);
  auto h = MirrorMap::entropy(6);
  for (int t = 0; t < 2000; ++t) {
    auto a = random_dense(rng, 6), b = random_dense(rng, 6);
    CHECK(e.bregman(a, b).value >= 0.5 * std::pow(norm(axpy(-1.0, b, a)), 2) - 1e-12);
    auto p = random_simplex(rng, 6), q = random_simplex(rng, 6);
    CHECK(h.bregman(p, q).value >= 0.5 * std::pow(norm(axpy(-1.0, q, p), NormKind::one), 2) - 1e-12);
  }
}

TEST_CASE("projection") {
  auto e = MirrorMap::euclidean(2, 1.0);
  CHECK(e.project(DenseVector({0.3, 0.4})) == DenseVector({0.3, 0.4}));
  auto half = e.project(DenseVector({1.2, 1.6}));
  CHECK(half[0] == doctest::Approx(0.6));
  CHECK(half[1] == doctest::Approx(0.8));
  auto h = MirrorMap::entropy(3);
  auto n = h.project(DenseVector({1, 2, 1}));
  CHECK(n == DenseVector({0.25, 0.5, 0.25}));
  CHECK_THROWS_AS(h.project(DenseVector({1, -2, 1})), DomainError);
  CHECK_THROWS_AS(h.project(DenseVector({0, 0, 0})), DomainError);
}

TEST_CASE("property: projection idempotence and optimality") {
  std::mt19937_64 rng(23);
  auto e = MirrorMap::euclidean(5, 1.5);
  auto h = MirrorMap::entropy(5);
  std::uniform_real_distribution<double> u(0.01, 3.0);
  for (int t = 0; t < 100; ++t) {
    auto x = random_dense(rng, 5, 3.0);
    auto px = e.project(x);
    CHECK(max_abs_diff(e.project(px), px) <= 1e-12);
    CHECK(e.contains(px));
    std::vector<double> pos(5);
    for (auto& v : pos) v = u(rng);
    auto hx = h.project(DenseVector(pos));
    CHECK(max_abs_diff(h.project(hx), hx) <= 1e-12);
    CHECK(h.contains(hx, 1e-12));
  }
  int outside = 0;
  while (outside < 100) {
    auto x = random_dense(rng, 5, 3.0);
    if (norm(x) <= 1.5) continue;
    ++outside;
    auto px = e.project(x);
    const double best = 0.5 * std::pow(norm(axpy(-1.0, x, px)), 2);
    for (int k = 0; k < 100; ++k) {
      auto y = e.project(random_dense(rng, 5, 1.0));
      CHECK(best <= 0.5 * std::pow(norm(axpy(-1.0, x, y)), 2) + 1e-12);
    }
  }
}

TEST_CASE("property: constant_K bounds 2 R over the unit ball") {
  std::mt19937_64 rng(41);
  auto e = MirrorMap::euclidean(4, 1.0);
  double best = 0.0;
  for (int t = 0; t < 100000; ++t) best = std::max(best, 2.0 * e.potential(e.project(random_dense(rng, 4, 2.0))));
  CHECK(best <= e.constant_K() * e.constant_K() * (1 + 1e-9));
  // Entropy: the l1 unit ball intersected with the domain is the simplex.
  auto h = MirrorMap::entropy(4);
  double hbest = 0.0;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100000; ++t) {
    std::vector<double> v(4);
    for (auto& x : v) x = std::pow(u(rng), 8.0) + 1e-300;
    hbest = std::max(hbest, 2.0 * h.potential(h.project(DenseVector(v))));
  }
  CHECK(hbest <= h.constant_K() * h.constant_K() * (1 + 1e-9));
  CHECK(hbest >= 0.5 * h.constant_K() * h.constant_K());
}

TEST_CASE("minimizer and contains") {
  CHECK(MirrorMap::euclidean(3, 1.0).minimizer() == DenseVector::zeros(3));
  auto m = MirrorMap::entropy(4).minimizer();
  CHECK(m == DenseVector({0.25, 0.25, 0.25, 0.25}));
  CHECK_FALSE(MirrorMap::entropy(2).contains(DenseVector({0.7, 0.7})));
  CHECK_FALSE(MirrorMap::euclidean(2, 1.0).contains(DenseVector({1.0, 1.0})));
}
