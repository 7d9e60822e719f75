#pragma once

#include "pqbm/boundary.hpp"
#include "pqbm/global.hpp"
#include "pqbm/measures.hpp"
#include "pqbm/support.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace pqbm {

// Two polytopes on a shared normal fan: K has heights h, L has heights hL.
struct IsomorphicPair {
  Mat normals;  // N x n, unit rows
  Vec h;        // h_K(u_i) > 0
  Vec hL;       // h_L(u_i) > 0
  double p = 1.0;

  IsomorphicPair(Mat normals_, Vec h_, Vec hL_, double p_)
      : normals(std::move(normals_)), h(std::move(h_)), hL(std::move(hL_)), p(p_) {
    require(normals.rows() == h.size() && h.size() == hL.size(), "IsomorphicPair: size mismatch");
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("IsomorphicPair: p must lie in [0,1]");
    for (Eigen::Index i = 0; i < normals.rows(); ++i) {
      const double r = normals.row(i).norm();
      require(r > 0.0, "IsomorphicPair: zero normal");
      normals.row(i) /= r;
      h[i] /= r;
      hL[i] /= r;
    }
    if (!(h.minCoeff() > 0.0 && hL.minCoeff() > 0.0)) throw DomainError("IsomorphicPair: heights must be positive");
  }

  int dim() const { return static_cast<int>(normals.cols()); }
  int size() const { return static_cast<int>(normals.rows()); }

  // h_L(u_i) = h_i (1 + p s_i)^{1/p}; s_i = log(hL/h) at p = 0.
  Vec s() const {
    Vec out(size());
    for (int i = 0; i < size(); ++i) {
      const double ratio = hL[i] / h[i];
      out[i] = p == 0.0 ? std::log(ratio) : (std::pow(ratio, p) - 1.0) / p;
    }
    return out;
  }
};

struct InterpHeights {
  Vec heights;  // h_i a_i(lambda)
  Vec a, b, c;  // (1 + lambda p s)^{1/p}, ^{(1-p)/p}, ^{(1-2p)/p}
};

inline InterpHeights interp_heights(const IsomorphicPair& pair, double lambda) {
  const Vec s = pair.s();
  const double p = pair.p;
  const int N = pair.size();
  InterpHeights out{Vec(N), Vec(N), Vec(N), Vec(N)};
  for (int i = 0; i < N; ++i) {
    if (p == 0.0) {
      out.a[i] = out.b[i] = out.c[i] = std::exp(lambda * s[i]);
    } else {
      const double base = 1.0 + lambda * p * s[i];
      if (!(base > 0.0)) throw DomainError("interp_heights: nonpositive base");
      out.a[i] = std::pow(base, 1.0 / p);
      out.b[i] = std::pow(base, (1.0 - p) / p);
      out.c[i] = std::pow(base, (1.0 - 2.0 * p) / p);
    }
    out.heights[i] = pair.h[i] * out.a[i];
  }
  return out;
}

inline Body body_at(const IsomorphicPair& pair, double lambda) {
  return Body::polytope(HPolytope(pair.normals, interp_heights(pair, lambda).heights));
}

enum class FacetMethod { Exact2D, AnalyticBox, FacetMC };

inline std::string facet_method_name(FacetMethod m) {
  switch (m) {
    case FacetMethod::Exact2D: return "exact-2D";
    case FacetMethod::AnalyticBox: return "analytic-box";
    case FacetMethod::FacetMC: return "facet-MC";
  }
  return "?";
}

struct FacetMeasureTable {
  Vec values;  // mu_{n-1}(F_i), aligned with the polytope's halfspaces
  Vec stderr_;
  FacetMethod method = FacetMethod::Exact2D;
  std::vector<bool> present;  // facet has positive (n-1)-volume

  double total() const { return values.sum(); }
};

namespace detail {

inline double segment_weight(const Vec& a, const Vec& b, const Density& mu) {
  const double len = (b - a).norm();
  if (len == 0.0) return 0.0;
  if (mu.is_lebesgue()) return len;
  auto f = [&](double t) { return mu.weight(a + t * (b - a)); };
  return len * quad::integrate_adaptive(f, 0.0, 1.0, 1e-14).value;
}

// Vertices of facet i of a 3-polytope, ordered around the facet.
inline std::vector<Vec> facet_polygon_3d(const std::vector<Vec>& verts, const Vec& normal, double height) {
  std::vector<Vec> pts;
  for (const Vec& v : verts)
    if (std::abs(v.dot(normal) - height) <= 1e-9 * std::max(1.0, std::abs(height))) pts.push_back(v);
  if (pts.size() < 3) return {};
  Vec c = Vec::Zero(3);
  for (const Vec& v : pts) c += v;
  c /= static_cast<double>(pts.size());
  Eigen::Vector3d nz = normal;
  Eigen::Vector3d e1 = pts[0] - c;
  e1.normalize();
  const Eigen::Vector3d e2 = nz.cross(e1);
  std::sort(pts.begin(), pts.end(), [&](const Vec& x, const Vec& y) {
    const Eigen::Vector3d dx = x - c, dy = y - c;
    return std::atan2(dx.dot(e2), dx.dot(e1)) < std::atan2(dy.dot(e2), dy.dot(e1));
  });
  return pts;
}

}  // namespace detail

// Weighted facet areas of a polytope: exact edges in the plane, analytic
// facets for boxes, and uniform sampling on facet polygons for n = 3.
inline FacetMeasureTable facet_measures(const Body& P, const Density& mu, const EstimateOptions& opt = {}) {
  require(P.dim() == mu.dim(), "facet_measures: dimension mismatch");
  const int n = P.dim();
  FacetMeasureTable t;
  if (const auto* bx = std::get_if<BoxShape>(&P.shape()); bx && (mu.is_gaussian() || mu.is_lebesgue())) {
    const Vec& a = bx->half_widths;
    t.method = FacetMethod::AnalyticBox;
    t.values.resize(2 * n);
    t.stderr_ = Vec::Zero(2 * n);
    t.present.assign(2 * n, true);
    for (int d = 0; d < n; ++d) {
      double v = mu.is_gaussian() ? quad::std_normal_pdf(a[d]) : 1.0;
      for (int e = 0; e < n; ++e)
        if (e != d) v *= mu.is_gaussian() ? quad::normal_interval_mass(a[e]) : 2.0 * a[e];
      t.values[2 * d] = t.values[2 * d + 1] = v;
    }
    return t;
  }
  const auto hp = P.as_hpolytope();
  if (!hp) throw InputError("facet_measures: polytope required, got " + P.family());
  const int N = hp->size();
  t.values = Vec::Zero(N);
  t.stderr_ = Vec::Zero(N);
  t.present.assign(N, false);
  if (n == 2) {
    t.method = FacetMethod::Exact2D;
    const auto& poly = hp->polygon();
    const std::size_t m = poly.vertices.size();
    for (int i = 0; i < N; ++i) {
      const int k = poly.edge_of[i];
      if (k < 0) continue;
      const Vec& a = poly.vertices[k];
      const Vec& b = poly.vertices[(k + 1) % m];
      if ((b - a).norm() <= 1e-14 * std::max(1.0, a.norm())) continue;
      t.present[i] = true;
      t.values[i] = detail::segment_weight(a, b, mu);
    }
    return t;
  }
  if (n != 3) throw InputError("facet_measures: non-box polytopes are supported for n = 2, 3");
  if (N > 64) throw InputError("facet_measures: at most 64 facets in dimension 3");
  t.method = mu.is_lebesgue() ? FacetMethod::Exact2D : FacetMethod::FacetMC;
  const auto verts = hp->vertices();
  for (int i = 0; i < N; ++i) {
    const auto poly = detail::facet_polygon_3d(verts, hp->normal(i), hp->heights()[i]);
    if (poly.empty()) continue;
    // Fan triangulation from the first vertex.
    std::vector<double> areas;
    double area = 0.0;
    for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
      const Eigen::Vector3d e1 = poly[k] - poly[0];
      const Eigen::Vector3d e2 = poly[k + 1] - poly[0];
      areas.push_back(0.5 * e1.cross(e2).norm());
      area += areas.back();
    }
    if (area <= 1e-14) continue;
    t.present[i] = true;
    if (mu.is_lebesgue()) {
      t.values[i] = area;
      continue;
    }
    if (opt.budget < kMinBudget) throw InputError("facet_measures: budget must be at least 1000");
    std::mt19937_64 rng(derive_seed(opt.seed, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    std::discrete_distribution<int> pick(areas.begin(), areas.end());
    double s = 0.0, ss = 0.0;
    const std::uint64_t B = opt.budget;
    for (std::uint64_t j = 0; j < B; ++j) {
      const int k = pick(rng) + 1;
      double r1 = ud(rng), r2 = ud(rng);
      if (r1 + r2 > 1.0) {
        r1 = 1.0 - r1;
        r2 = 1.0 - r2;
      }
      const Vec x = poly[0] + r1 * (poly[k] - poly[0]) + r2 * (poly[k + 1] - poly[0]);
      const double w = mu.weight(x);
      s += w;
      ss += w * w;
    }
    const double mean = s / B;
    const double var = std::max(0.0, ss / B - mean * mean) / (B - 1.0);
    t.values[i] = area * mean;
    t.stderr_[i] = area * std::sqrt(var);
  }
  return t;
}

inline FacetMeasureTable facet_measures(const HPolytope& P, const Density& mu, const EstimateOptions& opt = {}) {
  return facet_measures(Body::polytope(P), mu, opt);
}

struct DerivativeReport {
  double value = 0.0;
  double stderr_ = 0.0;
  bool type_change = false;  // facet set differs on the two sides of lambda
};

namespace detail {

inline std::vector<bool> active_facets(const IsomorphicPair& pair, double lambda) {
  const Body b = body_at(pair, lambda);
  const auto& poly = std::get<HPolytope>(b.shape()).polygon();
  std::vector<bool> act(pair.size(), false);
  const std::size_t m = poly.vertices.size();
  for (int i = 0; i < pair.size(); ++i) {
    const int k = poly.edge_of[i];
    if (k < 0) continue;
    const Vec& a = poly.vertices[k];
    act[i] = (poly.vertices[(k + 1) % m] - a).norm() > 1e-12 * std::max(1.0, a.norm());
  }
  return act;
}

}  // namespace detail

// d/dlambda mu(K_lambda) = sum_i h_i s_i b_i(lambda) mu_{n-1}(F_i(K_lambda)).
inline DerivativeReport measure_derivative(const IsomorphicPair& pair, double lambda, const Density& mu,
                                           const EstimateOptions& opt = {}) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InputError("lambda must lie in [0,1]");
  const auto ih = interp_heights(pair, lambda);
  const Vec s = pair.s();
  const Body b = body_at(pair, lambda);
  const auto fm = facet_measures(b, mu, opt);
  DerivativeReport r;
  double var = 0.0;
  for (int i = 0; i < pair.size(); ++i) {
    const double c = pair.h[i] * s[i] * ih.b[i];
    r.value += c * fm.values[i];
    var += c * c * fm.stderr_[i] * fm.stderr_[i];
  }
  r.stderr_ = std::sqrt(var);
  if (pair.dim() == 2) {
    const double d = 1e-7;
    const double lo = std::max(0.0, lambda - d), hi = std::min(1.0, lambda + d);
    r.type_change = detail::active_facets(pair, lo) != detail::active_facets(pair, hi);
  }
  return r;
}

struct IsomorphyInterval {
  double lo = 0.0, hi = 1.0;
  std::vector<bool> active;
};

// Maximal subintervals of [0,1] on which the set of facets with positive
// length is constant; breakpoints are bracketed by the grid and refined by
// bisection to 1e-10.
inline std::vector<IsomorphyInterval> strong_isomorphy_probe(const IsomorphicPair& pair,
                                                             const std::vector<double>& lambdas) {
  if (pair.dim() != 2) {
    // Only the box fan is accepted in higher dimension; all facets persist.
    for (int i = 0; i < pair.size(); ++i) {
      const Vec u = pair.normals.row(i).transpose();
      if (std::abs(u.cwiseAbs().maxCoeff() - 1.0) > 1e-12)
        throw InputError("strong_isomorphy_probe: n > 2 supports box fans only");
    }
    return {{0.0, 1.0, std::vector<bool>(pair.size(), true)}};
  }
  std::vector<double> grid = lambdas;
  grid.push_back(0.0);
  grid.push_back(1.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<IsomorphyInterval> out;
  auto cur = detail::active_facets(pair, grid.front());
  double start = grid.front();
  for (std::size_t k = 1; k < grid.size(); ++k) {
    auto next = detail::active_facets(pair, grid[k]);
    double a = grid[k - 1];
    double b = grid[k];
    while (next != cur) {
      // Find the first change after a.
      double lo = a, hi = b;
      while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (detail::active_facets(pair, mid) == cur) lo = mid;
        else hi = mid;
      }
      out.push_back({start, lo, cur});
      start = hi;
      // The set right after the breakpoint; a vanishing facet may exist only
      // at the breakpoint itself.
      cur = detail::active_facets(pair, std::min(b, hi + 1e-9));
      a = hi;
      if (a >= b) break;
    }
  }
  out.push_back({start, grid.back(), cur});
  return out;
}

struct FirstVariationRow {
  double eps = 0.0;
  double delta = 0.0;  // [mu(W(h + eps w)) - mu(K)] / eps
  double stderr_ = 0.0;
  double error = 0.0;  // delta - integral
};

struct FirstVariationReport {
  std::string formula = "first-variation";
  double integral = 0.0;  // int w d sigma_{mu,K}
  double integral_stderr = 0.0;
  std::vector<FirstVariationRow> rows;
  double rate = 0.0;          // fitted exponent of |delta - integral| ~ eps^rate
  double extrapolated = 0.0;  // Richardson limit from the two smallest eps at the fitted order
  double extrapolated_stderr = 0.0;
  bool converges = false;
  bool limit_agrees = false;
};

struct FirstVariationOptions {
  EstimateOptions est;
  Mat extra_normals;  // normals of w's polytopal pieces, if any
  double smooth_eps = 0.05;
};

// int w d sigma_{mu,K}: facet sums for polytopes, boundary quadrature for
// smooth bodies.
inline std::pair<double, double> surface_integral(const Body& K, const SphereFunction& w, const Density& mu,
                                                  const EstimateOptions& opt) {
  if (K.is_polytope()) {
    const auto fm = facet_measures(K, mu, opt);
    const auto hp = K.as_hpolytope();
    double v = 0.0, var = 0.0;
    for (int i = 0; i < hp->size(); ++i) {
      const double wi = w(hp->normal(i));
      v += wi * fm.values[i];
      var += wi * wi * fm.stderr_[i] * fm.stderr_[i];
    }
    return {v, std::sqrt(var)};
  }
  const auto grid = make_boundary_grid(SmoothBody::from_body(K), mu);
  double v = 0.0;
  for (const auto& nd : grid.nodes()) v += nd.w * w(nd.u);
  return {v, 0.0};
}

inline FirstVariationReport first_variation_check(const Body& K, const SphereFunction& w, const Density& mu,
                                                  std::vector<double> eps_grid, const FirstVariationOptions& opt = {}) {
  require(eps_grid.size() >= 2, "first_variation_check: need at least two eps values");
  std::sort(eps_grid.begin(), eps_grid.end(), std::greater<>());
  FirstVariationReport rep;
  const auto si = surface_integral(K, w, mu, opt.est);
  rep.integral = si.first;
  rep.integral_stderr = si.second;

  const auto base = SupportFunction::of(K);
  std::vector<Body> bodies{K};
  std::vector<double> used;
  for (double e : eps_grid) {
    // Shrink eps until h + eps w stays positive on the grid.
    double eps = e;
    const Mat& g = default_grid(K.dim());
    for (int tries = 0; tries < 60; ++tries) {
      bool ok = true;
      for (Eigen::Index j = 0; j < g.rows() && ok; ++j) {
        const Vec u = g.row(j).transpose();
        ok = K.support(u) + eps * w(u) > 0.0;
      }
      if (ok) break;
      eps *= 0.5;
    }
    used.push_back(eps);
    bodies.push_back(wulff(SupportFunction::perturbed(base, eps, w, opt.extra_normals)));
  }
  std::vector<Channel> ch;
  for (const Body& b : bodies) ch.push_back({&b, Integrand::one()});
  const auto est = estimate_integrals(ch, mu, opt.est);
  const int m = static_cast<int>(used.size());
  for (int i = 0; i < m; ++i) {
    FirstVariationRow row;
    row.eps = used[i];
    row.delta = (est.mean[i + 1] - est.mean[0]) / row.eps;
    Vec g = Vec::Zero(m + 1);
    g[0] = -1.0 / row.eps;
    g[i + 1] = 1.0 / row.eps;
    row.stderr_ = delta_stderr(g, est.cov);
    row.error = row.delta - rep.integral;
    rep.rows.push_back(row);
  }
  // Least-squares slope of log|error| against log eps over rows whose error
  // stands clear of the noise.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (const auto& r : rep.rows) {
    const double noise = 3.0 * std::hypot(r.stderr_, rep.integral_stderr);
    if (std::abs(r.error) <= noise || r.error == 0.0) continue;
    const double x = std::log(r.eps), y = std::log(std::abs(r.error));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  rep.rate = cnt >= 2 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) : std::numeric_limits<double>::infinity();
  // Richardson on the two smallest eps with the fitted integer order; the
  // change against the previous pair serves as its error estimate.
  const double order = std::isfinite(rep.rate) ? std::clamp(std::round(rep.rate), 1.0, 3.0) : 1.0;
  auto richardson = [&](int a, int b, double& value, double& sd) {
    const auto& r1 = rep.rows[a];
    const auto& r2 = rep.rows[b];
    const double f = std::pow(r1.eps / r2.eps, order);
    value = (f * r2.delta - r1.delta) / (f - 1.0);
    Vec g = Vec::Zero(m + 1);
    g[0] = (-f / r2.eps + 1.0 / r1.eps) / (f - 1.0);
    g[b + 1] = f / r2.eps / (f - 1.0);
    g[a + 1] = -1.0 / r1.eps / (f - 1.0);
    sd = delta_stderr(g, est.cov);
  };
  richardson(m - 2, m - 1, rep.extrapolated, rep.extrapolated_stderr);
  const auto& r2 = rep.rows[m - 1];
  double bias = std::abs(r2.error) * r2.eps;
  if (m >= 3) {
    double prev = 0.0, prev_sd = 0.0;
    richardson(m - 3, m - 2, prev, prev_sd);
    bias = std::abs(prev - rep.extrapolated);
  }
  const double smallest_err = std::abs(r2.error);
  rep.converges = rep.rate >= 0.8 || smallest_err <= 3.0 * std::hypot(r2.stderr_, rep.integral_stderr) + 1e-9 * std::abs(rep.integral);
  const double tol = 3.0 * std::hypot(rep.extrapolated_stderr, rep.integral_stderr) + bias + 1e-8 * std::abs(rep.integral);
  rep.limit_agrees = std::abs(rep.extrapolated - rep.integral) <= tol;
  return rep;
}

}  // namespace pqbm
