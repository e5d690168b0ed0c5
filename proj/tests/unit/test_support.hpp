#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mbaccel/dataio.hpp"
#include "mbaccel/vectorspace.hpp"

namespace testing_support {

inline mbaccel::DenseVector random_dense(std::mt19937_64& rng, std::size_t d, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> v(d);
  for (auto& x : v) x = n(rng);
  return mbaccel::DenseVector(std::move(v));
}

inline mbaccel::SparseVector random_sparse(std::mt19937_64& rng, std::size_t d, double density = 0.5,
                                           double scale = 1.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, scale);
  std::vector<mbaccel::SparseEntry> e;
  for (std::uint32_t j = 1; j <= d; ++j) {
    if (u(rng) < density) {
      double v = n(rng);
      if (v != 0.0) e.push_back({j, v});
    }
  }
  return mbaccel::SparseVector(std::move(e), d);
}

inline mbaccel::DenseVector random_simplex(std::mt19937_64& rng, std::size_t d) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> v(d);
  double s = 0.0;
  for (auto& x : v) s += (x = ex(rng) + 1e-6);
  for (auto& x : v) x /= s;
  return mbaccel::DenseVector(std::move(v));
}

}  // namespace testing_support
