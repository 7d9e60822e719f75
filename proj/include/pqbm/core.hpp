#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pqbm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr int kMinDim = 2;
inline constexpr int kMaxDim = 6;

// Error taxonomy shared by every module. Callers (the CLI in particular)
// map these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed arguments: wrong dimension, out-of-range parameter, bad config.
class InputError : public Error {
 public:
  using Error::Error;
};

// Arguments are well-formed but outside the mathematical domain of the
// operation (nonpositive support with p < 1, unbounded body, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A numerical procedure failed (quadrature, nonpositive estimate, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Gram or moment matrix is singular for the requested basis.
class DegenerateBasisError : public NumericError {
 public:
  using NumericError::NumericError;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InputError(what);
}

inline void check_dim(int n) {
  if (n < kMinDim || n > kMaxDim)
    throw InputError("dimension must be in [2,6], got " + std::to_string(n));
}

inline constexpr double kUnitTol = 1e-12;

// Unit direction in R^n.
class Direction {
 public:
  explicit Direction(Vec u) : u_(std::move(u)) {
    if (std::abs(u_.norm() - 1.0) > kUnitTol)
      throw InputError("direction is not a unit vector");
  }
  static Direction normalized(const Vec& v) {
    const double r = v.norm();
    if (!(r > 0.0)) throw InputError("cannot normalize a zero vector");
    return Direction(v / r);
  }
  static Direction angle(double theta) {
    Vec u(2);
    u << std::cos(theta), std::sin(theta);
    return Direction(std::move(u));
  }
  const Vec& vec() const { return u_; }
  int dim() const { return static_cast<int>(u_.size()); }
  double operator[](int i) const { return u_[i]; }

 private:
  Vec u_;
};

inline Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

inline Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

// splitmix64: derives independent stream seeds from (master, index).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double unit_ball_volume(int n) {
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

inline double unit_sphere_area(int n) { return n * unit_ball_volume(n); }

}  // namespace pqbm
