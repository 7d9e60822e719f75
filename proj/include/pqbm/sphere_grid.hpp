#pragma once

#include "pqbm/core.hpp"

#include <boost/math/distributions/normal.hpp>

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

namespace pqbm {

struct GridOptions {
  int circle_points = 720;   // n = 2
  int sphere_points = 4096;  // n >= 3, before the +-axis directions are appended
};

// Deterministic evaluation directions shared by every module. Rows are unit
// vectors. The set is closed under negation.
inline Mat make_direction_grid(int n, const GridOptions& opt = {}) {
  check_dim(n);
  if (n == 2) {
    const int m = opt.circle_points;
    require(m >= 8 && m % 4 == 0, "circle grid size must be a multiple of 4");
    Mat dirs(m, 2);
    for (int j = 0; j < m; ++j) {
      const double t = 2.0 * std::numbers::pi * j / m;
      dirs(j, 0) = std::cos(t);
      dirs(j, 1) = std::sin(t);
    }
    return dirs;
  }
  const int half = opt.sphere_points / 2;
  require(half >= 16, "sphere grid too small");
  Mat dirs(2 * half + 2 * n, n);
  if (n == 3) {
    // Spherical Fibonacci lattice on the upper hemisphere side of z; the
    // antipodes fill the rest.
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int j = 0; j < half; ++j) {
      const double z = 1.0 - (j + 0.5) / half;  // z in (0,1)
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * j;
      dirs.row(j) << r * std::cos(phi), r * std::sin(phi), z;
    }
  } else {
    static constexpr std::array<int, 6> primes{2, 3, 5, 7, 11, 13};
    const boost::math::normal_distribution<double> nd;
    for (int j = 0; j < half; ++j) {
      Vec g(n);
      for (int d = 0; d < n; ++d) {
        // Halton radical inverse, offset by one to avoid the zero point.
        double f = 1.0, x = 0.0;
        int k = j + 1;
        while (k > 0) {
          f /= primes[d];
          x += f * (k % primes[d]);
          k /= primes[d];
        }
        x = std::clamp(x, 1e-12, 1.0 - 1e-12);
        g[d] = boost::math::quantile(nd, x);
      }
      dirs.row(j) = g.normalized().transpose();
    }
  }
  for (int j = 0; j < half; ++j) dirs.row(half + j) = -dirs.row(j);
  for (int d = 0; d < n; ++d) {
    dirs.row(2 * half + 2 * d).setZero();
    dirs(2 * half + 2 * d, d) = 1.0;
    dirs.row(2 * half + 2 * d + 1).setZero();
    dirs(2 * half + 2 * d + 1, d) = -1.0;
  }
  return dirs;
}

// Default grid, built once per dimension.
inline const Mat& default_grid(int n) {
  static std::mutex mu;
  static std::map<int, Mat> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_direction_grid(n)).first;
  return it->second;
}

}  // namespace pqbm
