#pragma once

#include "pqbm/core.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

namespace pqbm {

enum class DensityKind { Gaussian, Lebesgue, Power };

// Log-concave density e^{-V} on R^n.
//   Gaussian: V = |x|^2/2 + (n/2) log(2 pi)
//   Lebesgue: V = 0
//   Power:    V = |x|^alpha / alpha, alpha >= 2
class Density {
 public:
  static Density gaussian(int n) {
    check_dim(n);
    return Density(DensityKind::Gaussian, n, 2.0);
  }
  static Density lebesgue(int n) {
    check_dim(n);
    return Density(DensityKind::Lebesgue, n, 0.0);
  }
  static Density power(int n, double alpha) {
    check_dim(n);
    require(alpha >= 2.0, "power density: alpha must be >= 2");
    return Density(DensityKind::Power, n, alpha);
  }

  DensityKind kind() const { return kind_; }
  int dim() const { return n_; }
  double alpha() const { return alpha_; }
  bool is_gaussian() const { return kind_ == DensityKind::Gaussian; }
  bool is_lebesgue() const { return kind_ == DensityKind::Lebesgue; }

  std::string name() const {
    switch (kind_) {
      case DensityKind::Gaussian: return "gaussian";
      case DensityKind::Lebesgue: return "lebesgue";
      case DensityKind::Power: return "power(" + fmt(alpha_) + ")";
    }
    return "?";
  }

  // V as a function of r = |x|.
  double V_radial(double r) const {
    switch (kind_) {
      case DensityKind::Gaussian: return 0.5 * r * r + 0.5 * n_ * std::log(2.0 * std::numbers::pi);
      case DensityKind::Lebesgue: return 0.0;
      case DensityKind::Power: return std::pow(r, alpha_) / alpha_;
    }
    return 0.0;
  }
  double V(const Vec& x) const { return V_radial(x.norm()); }
  double weight(const Vec& x) const { return std::exp(-V(x)); }
  double weight_radial(double r) const { return std::exp(-V_radial(r)); }

  Vec grad_V(const Vec& x) const {
    switch (kind_) {
      case DensityKind::Gaussian: return x;
      case DensityKind::Lebesgue: return Vec::Zero(x.size());
      case DensityKind::Power: {
        const double r = x.norm();
        if (r == 0.0) return Vec::Zero(x.size());
        return std::pow(r, alpha_ - 2.0) * x;
      }
    }
    return Vec::Zero(x.size());
  }

  Mat hess_V(const Vec& x) const {
    const Eigen::Index n = x.size();
    switch (kind_) {
      case DensityKind::Gaussian: return Mat::Identity(n, n);
      case DensityKind::Lebesgue: return Mat::Zero(n, n);
      case DensityKind::Power: {
        const double r = x.norm();
        if (alpha_ == 2.0) return Mat::Identity(n, n);
        if (r == 0.0) return Mat::Zero(n, n);
        const Vec xh = x / r;
        return std::pow(r, alpha_ - 2.0) * (Mat::Identity(n, n) + (alpha_ - 2.0) * xh * xh.transpose());
      }
    }
    return Mat::Zero(n, n);
  }

  double laplacian_V(const Vec& x) const {
    switch (kind_) {
      case DensityKind::Gaussian: return n_;
      case DensityKind::Lebesgue: return 0.0;
      case DensityKind::Power: return std::pow(x.norm(), alpha_ - 2.0) * (n_ + alpha_ - 2.0);
    }
    return 0.0;
  }

  // Uniform convexity constant: hess V >= k1 Id on R^n.
  double k1() const {
    switch (kind_) {
      case DensityKind::Gaussian: return 1.0;
      case DensityKind::Lebesgue: return 0.0;
      case DensityKind::Power: return alpha_ == 2.0 ? 1.0 : 0.0;
    }
    return 0.0;
  }

  // Exact k2 when Laplacian V is constant.
  std::optional<double> k2_exact() const {
    if (kind_ == DensityKind::Gaussian) return 1.0;
    if (kind_ == DensityKind::Lebesgue) return 0.0;
    if (alpha_ == 2.0) return 1.0;
    return std::nullopt;
  }

 private:
  Density(DensityKind k, int n, double alpha) : kind_(k), n_(n), alpha_(alpha) {}

  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
  }

  DensityKind kind_;
  int n_;
  double alpha_;
};

}  // namespace pqbm
