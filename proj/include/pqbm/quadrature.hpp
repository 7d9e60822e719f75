#pragma once

#include "pqbm/core.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

namespace pqbm::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre rule on [-1,1], Newton iteration on P_n.
inline Rule gauss_legendre(int n) {
  require(n >= 1, "gauss_legendre: need at least one node");
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  return r;
}

// Cached rules; the table is filled once per order.
inline const Rule& gl(int n) {
  static std::mutex mu;
  static std::map<int, Rule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gauss_legendre(n)).first;
  return it->second;
}

// Fixed-order Gauss-Legendre on [a,b] split into `panels` equal panels.
template <class F>
double integrate_gl(F&& f, double a, double b, int order = 20, int panels = 1) {
  const Rule& r = gl(order);
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double lo = a + k * h;
    const double mid = lo + 0.5 * h;
    double s = 0.0;
    for (int i = 0; i < order; ++i) s += r.weights[i] * f(mid + 0.5 * h * r.nodes[i]);
    total += 0.5 * h * s;
  }
  return total;
}

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
};

// Adaptive Gauss-Kronrod (G15/K31). The rule stops once the error estimate
// is below tol times the L1 norm of f; tolerances under 1e-14 are clamped
// since they cannot be met in double precision.
inline AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, double a,
                                         double b, double tol = 1e-12) {
  AdaptiveResult res;
  res.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, 15, std::max(tol, 1e-14), &res.error);
  if (!std::isfinite(res.value)) throw NumericError("adaptive quadrature produced a non-finite value");
  return res;
}

inline double std_normal_pdf(double t) {
  return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi);
}

// P(|Z| <= a) for a standard normal Z, by adaptive quadrature of the density.
inline double normal_interval_mass(double a) {
  if (a <= 0.0) return 0.0;
  const double upper = std::min(a, 40.0);
  return 2.0 * integrate_adaptive(std_normal_pdf, 0.0, upper, 1e-15).value;
}

// Phi(x) by quadrature.
inline double normal_cdf(double x) {
  const double m = 0.5 * normal_interval_mass(std::abs(x));
  return x >= 0.0 ? 0.5 + m : 0.5 - m;
}

// int_0^R t^{n-1} e^{-t^2/2} dt, the radial Gaussian integral.
inline double gaussian_radial_integral(int n, double R) {
  if (R <= 0.0) return 0.0;
  const double upper = std::min(R, 60.0);
  auto f = [n](double t) { return std::pow(t, n - 1) * std::exp(-0.5 * t * t); };
  // Split so the adaptive rule sees the peak near sqrt(n-1).
  const double peak = std::sqrt(std::max(n - 1, 1));
  if (upper <= peak) return integrate_adaptive(f, 0.0, upper, 1e-15).value;
  return integrate_adaptive(f, 0.0, peak, 1e-15).value +
         integrate_adaptive(f, peak, upper, 1e-15).value;
}

}  // namespace pqbm::quad
