#pragma once

#include "pqbm/bodies.hpp"
#include "pqbm/density.hpp"
#include "pqbm/quadrature.hpp"

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace pqbm {

enum class Method { Auto, MonteCarlo, PolarQuadrature, ClosedForm };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::Auto: return "auto";
    case Method::MonteCarlo: return "monte-carlo";
    case Method::PolarQuadrature: return "polar-quadrature";
    case Method::ClosedForm: return "closed-form";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "auto") return Method::Auto;
  if (s == "monte-carlo" || s == "mc") return Method::MonteCarlo;
  if (s == "polar-quadrature" || s == "polar") return Method::PolarQuadrature;
  if (s == "closed-form") return Method::ClosedForm;
  throw InputError("unknown method '" + s + "'");
}

inline constexpr std::uint64_t kDefaultBudget = 1000000;
inline constexpr std::uint64_t kMinBudget = 1000;

struct MeasureEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  Method method = Method::ClosedForm;
  std::uint64_t budget = 0;  // samples, or quadrature nodes
  std::uint64_t seed = 0;
};

// Worker count for Monte Carlo chunks. Results do not depend on it.
inline std::atomic<int>& mc_jobs() {
  static std::atomic<int> jobs{1};
  return jobs;
}

// Integrands against mu restricted to K. The named kinds are radial, which
// lets closed forms and radial quadrature handle them.
struct Integrand {
  enum class Kind { One, Radius2, Radius4, LaplacianV, GradV2, Custom };
  Kind kind = Kind::One;
  std::function<double(const Vec&)> custom;

  static Integrand one() { return {Kind::One, {}}; }
  static Integrand radius2() { return {Kind::Radius2, {}}; }
  static Integrand radius4() { return {Kind::Radius4, {}}; }
  static Integrand laplacian_v() { return {Kind::LaplacianV, {}}; }
  static Integrand grad_v2() { return {Kind::GradV2, {}}; }
  static Integrand of(std::function<double(const Vec&)> f) { return {Kind::Custom, std::move(f)}; }

  bool radial() const { return kind != Kind::Custom; }

  double at_radius(double r, const Density& mu) const {
    switch (kind) {
      case Kind::One: return 1.0;
      case Kind::Radius2: return r * r;
      case Kind::Radius4: return r * r * r * r;
      case Kind::LaplacianV: {
        Vec x = Vec::Zero(mu.dim());
        x[0] = r;
        return mu.laplacian_V(x);
      }
      case Kind::GradV2: {
        Vec x = Vec::Zero(mu.dim());
        x[0] = r;
        return mu.grad_V(x).squaredNorm();
      }
      case Kind::Custom: break;
    }
    throw InputError("Integrand::at_radius on a non-radial integrand");
  }

  double operator()(const Vec& x, const Density& mu) const {
    switch (kind) {
      case Kind::One: return 1.0;
      case Kind::Radius2: return x.squaredNorm();
      case Kind::Radius4: return x.squaredNorm() * x.squaredNorm();
      case Kind::LaplacianV: return mu.laplacian_V(x);
      case Kind::GradV2: return mu.grad_V(x).squaredNorm();
      case Kind::Custom: return custom(x);
    }
    return 0.0;
  }
};

// One integral int_K f dmu in a joint estimation.
struct Channel {
  const Body* body;
  Integrand f;
};

struct JointEstimate {
  Vec mean;
  Mat cov;  // covariance of the estimates (zero off-diagonal for deterministic methods)
  Method method = Method::ClosedForm;
  std::uint64_t budget = 0;
  std::uint64_t seed = 0;

  MeasureEstimate get(int i) const {
    return {mean[i], std::sqrt(std::max(0.0, cov(i, i))), method, budget, seed};
  }
};

struct EstimateOptions {
  Method method = Method::Auto;
  std::uint64_t budget = kDefaultBudget;
  std::uint64_t seed = 1;
};

namespace detail {

// P(|X| <= a) and the second/fourth truncated moments of a standard normal:
// int_{-a}^{a} t^k phi(t) dt for k = 0, 2, 4.
inline double normal_truncated_moment(double a, int k) {
  if (k == 0) return quad::normal_interval_mass(a);
  const double upper = std::min(a, 40.0);
  auto f = [k](double t) { return std::pow(t, k) * quad::std_normal_pdf(t); };
  return 2.0 * quad::integrate_adaptive(f, 0.0, upper, 1e-15).value;
}

// int_0^R g(r) e^{-V(r)} r^{n-1} dr by adaptive quadrature, split at the
// Gaussian bulk so that very large R is harmless.
inline double radial_integral(const Density& mu, const std::function<double(double)>& g, double R) {
  const int n = mu.dim();
  auto f = [&](double r) { return g(r) * mu.weight_radial(r) * std::pow(r, n - 1); };
  double cap = R;
  if (!mu.is_lebesgue()) {
    // Beyond this radius the weight is below 1e-300 relative to the bulk.
    double t = 1.0;
    while (mu.V_radial(t) - mu.V_radial(0.0) < 750.0) t *= 1.5;
    cap = std::min(R, t);
  }
  double total = 0.0;
  const int pieces = std::max(1, static_cast<int>(std::ceil(cap / 2.0)));
  const double h = cap / pieces;
  for (int k = 0; k < pieces; ++k) total += quad::integrate_adaptive(f, k * h, (k + 1) * h, 1e-16).value;
  return total;
}

// Polytope volume (1/n) sum h_i |F_i| for n = 3 from enumerated vertices.
inline double facet_area_3d(const std::vector<Vec>& verts, const Vec& normal, double height) {
  std::vector<Vec> pts;
  for (const Vec& v : verts)
    if (std::abs(v.dot(normal) - height) <= 1e-9 * std::max(1.0, std::abs(height))) pts.push_back(v);
  if (pts.size() < 3) return 0.0;
  Vec c = Vec::Zero(3);
  for (const Vec& v : pts) c += v;
  c /= static_cast<double>(pts.size());
  Eigen::Vector3d nz = normal;
  Eigen::Vector3d e1 = (pts[0] - c);
  if (e1.norm() == 0.0) e1 = (pts[1] - c);
  e1.normalize();
  Eigen::Vector3d e2 = nz.cross(e1);
  std::sort(pts.begin(), pts.end(), [&](const Vec& a, const Vec& b) {
    const Eigen::Vector3d da = a - c, db = b - c;
    return std::atan2(da.dot(e2), da.dot(e1)) < std::atan2(db.dot(e2), db.dot(e1));
  });
  double area = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const Eigen::Vector3d a = pts[k] - c;
    const Eigen::Vector3d b = pts[(k + 1) % pts.size()] - c;
    area += 0.5 * a.cross(b).dot(nz);
  }
  return std::abs(area);
}

}  // namespace detail

// Closed-form (or one-dimensional quadrature) value of int_K f dmu, if the
// (family, density, integrand) combination has one.
inline std::optional<double> closed_form_integral(const Body& k, const Density& mu, const Integrand& f) {
  const int n = k.dim();
  require(mu.dim() == n, "density/body dimension mismatch");
  const Shape& s = k.shape();
  if (const auto* b = std::get_if<BallShape>(&s)) {
    if (!f.radial()) return std::nullopt;
    auto g = [&](double r) { return f.at_radius(r, mu); };
    return unit_sphere_area(n) * detail::radial_integral(mu, g, b->radius);
  }
  if (mu.is_lebesgue() && f.kind == Integrand::Kind::One) {
    if (const auto* x = std::get_if<BoxShape>(&s)) return (2.0 * x->half_widths).prod();
    if (const auto* e = std::get_if<EllipsoidShape>(&s)) return unit_ball_volume(n) * e->semi_axes.prod();
    if (const auto* c = std::get_if<CrossPolytopeShape>(&s)) return std::pow(2.0 * c->scale, n) / std::tgamma(n + 1.0);
    if (const auto* q = std::get_if<LqBallShape>(&s))
      return std::pow(2.0 * std::tgamma(1.0 + 1.0 / q->q), n) / std::tgamma(1.0 + n / q->q) * std::pow(q->scale, n);
    if (const auto* sb = std::get_if<ShiftedBallShape>(&s)) return unit_ball_volume(n) * std::pow(sb->radius, n);
    if (const auto* p = std::get_if<HPolytope>(&s)) {
      if (n == 2) return p->polygon().area();
      if (n == 3 && p->size() <= 64) {
        const auto verts = p->vertices();
        double vol = 0.0;
        for (int i = 0; i < p->size(); ++i)
          vol += p->heights()[i] * detail::facet_area_3d(verts, p->normal(i), p->heights()[i]);
        return vol / 3.0;
      }
    }
    return std::nullopt;
  }
  if (mu.is_gaussian()) {
    if (const auto* x = std::get_if<BoxShape>(&s)) {
      const Vec& a = x->half_widths;
      Vec m0(n), m2(n), m4(n);
      for (int d = 0; d < n; ++d) {
        m0[d] = detail::normal_truncated_moment(a[d], 0);
        if (f.kind != Integrand::Kind::One && f.kind != Integrand::Kind::LaplacianV) {
          m2[d] = detail::normal_truncated_moment(a[d], 2);
          m4[d] = detail::normal_truncated_moment(a[d], 4);
        }
      }
      auto prod_except = [&](std::initializer_list<int> skip) {
        double r = 1.0;
        for (int d = 0; d < n; ++d)
          if (std::find(skip.begin(), skip.end(), d) == skip.end()) r *= m0[d];
        return r;
      };
      switch (f.kind) {
        case Integrand::Kind::One: return m0.prod();
        case Integrand::Kind::LaplacianV: return n * m0.prod();
        case Integrand::Kind::Radius2:
        case Integrand::Kind::GradV2: {
          double t = 0.0;
          for (int d = 0; d < n; ++d) t += m2[d] * prod_except({d});
          return t;
        }
        case Integrand::Kind::Radius4: {
          double t = 0.0;
          for (int d = 0; d < n; ++d) t += m4[d] * prod_except({d});
          for (int d = 0; d < n; ++d)
            for (int e = d + 1; e < n; ++e) t += 2.0 * m2[d] * m2[e] * prod_except({d, e});
          return t;
        }
        case Integrand::Kind::Custom: return std::nullopt;
      }
    }
    if (const auto* sb = std::get_if<ShiftedBallShape>(&s)) {
      if (f.kind != Integrand::Kind::One) return std::nullopt;
      const double lam = sb->center.squaredNorm();
      const double r2 = sb->radius * sb->radius;
      if (lam == 0.0) return boost::math::gamma_p(0.5 * n, 0.5 * r2);
      boost::math::non_central_chi_squared_distribution<double> dist(n, lam);
      return boost::math::cdf(dist, r2);
    }
  }
  return std::nullopt;
}

// Tensor polar quadrature (n = 2, 3) at a given resolution level.
inline double polar_integral(const Body& k, const Density& mu, const Integrand& f, int level) {
  const int n = k.dim();
  if (n != 2 && n != 3) throw InputError("polar quadrature supports n = 2, 3 only");
  auto radial_part = [&](const Vec& u, double rho) {
    if (mu.is_gaussian() && f.kind == Integrand::Kind::One) {
      if (n == 2) return (1.0 - std::exp(-0.5 * rho * rho)) / (2.0 * std::numbers::pi);
    }
    const int order = 12 * level;
    return quad::integrate_gl(
        [&](double r) {
          const Vec x = r * u;
          return f(x, mu) * mu.weight(x) * std::pow(r, n - 1);
        },
        0.0, rho, order, std::max(1, static_cast<int>(std::ceil(rho / 1.5))));
  };
  if (n == 2) {
    std::vector<double> cuts = k.kink_angles();
    if (cuts.empty()) cuts.push_back(0.0);
    std::vector<double> b = cuts;
    b.push_back(cuts.front() + 2.0 * std::numbers::pi);
    // Subdivide long panels so smooth parts are resolved too.
    double total = 0.0;
    const int order = 8 * level;
    for (std::size_t i = 0; i + 1 < b.size(); ++i) {
      const double len = b[i + 1] - b[i];
      if (len <= 0.0) continue;
      const int panels = std::max(1, static_cast<int>(std::ceil(len / (std::numbers::pi / 16))));
      total += quad::integrate_gl(
          [&](double t) {
            const Vec u = vec2(std::cos(t), std::sin(t));
            return radial_part(u, k.radial(u));
          },
          b[i], b[i + 1], order, panels);
    }
    return total;
  }
  const int nz = 24 * level;
  const int nphi = 48 * level;
  const quad::Rule& rz = quad::gl(nz);
  double total = 0.0;
  for (int i = 0; i < nz; ++i) {
    const double z = rz.nodes[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    double ring = 0.0;
    for (int j = 0; j < nphi; ++j) {
      const double phi = 2.0 * std::numbers::pi * (j + 0.5) / nphi;
      const Vec u = vec3(s * std::cos(phi), s * std::sin(phi), z);
      ring += radial_part(u, k.radial(u));
    }
    total += rz.weights[i] * ring * 2.0 * std::numbers::pi / nphi;
  }
  return total;
}

namespace detail {

inline void check_body_for_measure(const Body& k) {
  if (!(k.inradius() > 0.0) && !std::holds_alternative<ShiftedBallShape>(k.shape()))
    throw DomainError("measure: body must have positive inradius");
  if (!std::isfinite(k.circumradius())) throw DomainError("measure: unbounded body");
}

// Sample means and their covariance over all channels with common samples.
inline JointEstimate monte_carlo(const std::vector<Channel>& ch, const Density& mu, std::uint64_t budget,
                                 std::uint64_t seed) {
  if (budget < kMinBudget) throw InputError("Monte Carlo budget must be at least 1000");
  const int n = mu.dim();
  const int c = static_cast<int>(ch.size());
  Vec lo = Vec::Constant(n, 0.0), hi = Vec::Constant(n, 0.0);
  for (const Channel& x : ch) {
    require(x.body->dim() == n, "channel dimension mismatch");
    lo = lo.cwiseMin(x.body->box_lo());
    hi = hi.cwiseMax(x.body->box_hi());
  }
  const bool gauss = mu.is_gaussian();
  const double box_vol = (hi - lo).prod();

  constexpr std::uint64_t chunk = 1 << 15;
  const std::uint64_t nchunks = (budget + chunk - 1) / chunk;
  struct Acc {
    Vec s;
    Mat ss;
  };
  std::vector<Acc> acc(nchunks, Acc{Vec::Zero(c), Mat::Zero(c, c)});

  auto run_chunk = [&](std::uint64_t ci) {
    std::mt19937_64 rng(derive_seed(seed, ci));
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    const std::uint64_t count = std::min(chunk, budget - ci * chunk);
    Vec x(n), y(c);
    Acc& a = acc[ci];
    for (std::uint64_t s = 0; s < count; ++s) {
      double w = 1.0;
      if (gauss) {
        for (int d = 0; d < n; ++d) x[d] = nd(rng);
      } else {
        for (int d = 0; d < n; ++d) x[d] = lo[d] + (hi[d] - lo[d]) * ud(rng);
        w = box_vol * mu.weight(x);
      }
      for (int j = 0; j < c; ++j) y[j] = ch[j].body->contains(x) ? w * ch[j].f(x, mu) : 0.0;
      a.s += y;
      a.ss.noalias() += y * y.transpose();
    }
  };

  const int jobs = std::max(1, std::min<int>(mc_jobs().load(), static_cast<int>(nchunks)));
  if (jobs == 1) {
    for (std::uint64_t ci = 0; ci < nchunks; ++ci) run_chunk(ci);
  } else {
    std::atomic<std::uint64_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (std::uint64_t ci = next++; ci < nchunks; ci = next++) run_chunk(ci);
      });
    for (auto& t : pool) t.join();
  }
  Vec s = Vec::Zero(c);
  Mat ss = Mat::Zero(c, c);
  for (const Acc& a : acc) {
    s += a.s;
    ss += a.ss;
  }
  const double N = static_cast<double>(budget);
  JointEstimate out;
  out.mean = s / N;
  out.cov = (ss / N - out.mean * out.mean.transpose()) * (N / (N - 1.0)) / N;
  out.method = Method::MonteCarlo;
  out.budget = budget;
  out.seed = seed;
  return out;
}

}  // namespace detail

// Joint estimate of several integrals. Monte Carlo shares the samples across
// channels so that differences and ratios have small variance; the
// deterministic methods fill only the diagonal of the covariance.
inline JointEstimate estimate_integrals(const std::vector<Channel>& ch, const Density& mu,
                                        const EstimateOptions& opt = {}) {
  require(!ch.empty(), "estimate_integrals: no channels");
  for (const Channel& c : ch) detail::check_body_for_measure(*c.body);
  Method m = opt.method;
  const int c = static_cast<int>(ch.size());
  std::vector<std::optional<double>> closed(c);
  bool any_polar = false;
  if (m == Method::Auto || m == Method::ClosedForm) {
    bool all_det = true;
    for (int j = 0; j < c; ++j) {
      closed[j] = closed_form_integral(*ch[j].body, mu, ch[j].f);
      if (!closed[j]) {
        if (m == Method::ClosedForm)
          throw InputError("no closed form for " + ch[j].body->family() + " under " + mu.name());
        const bool polar_ok = mu.dim() == 2 && !std::holds_alternative<ShiftedBallShape>(ch[j].body->shape());
        all_det = all_det && polar_ok;
        any_polar = true;
      }
    }
    if (!all_det) m = Method::MonteCarlo;
  } else if (m == Method::PolarQuadrature) {
    any_polar = true;
  }
  if (m == Method::MonteCarlo) return detail::monte_carlo(ch, mu, opt.budget, opt.seed);
  JointEstimate out;
  out.mean.resize(c);
  out.cov = Mat::Zero(c, c);
  out.method = any_polar ? Method::PolarQuadrature : Method::ClosedForm;
  for (int j = 0; j < c; ++j) {
    if (m != Method::PolarQuadrature && closed[j]) {
      out.mean[j] = *closed[j];
    } else {
      const double a = polar_integral(*ch[j].body, mu, ch[j].f, 2);
      const double b = polar_integral(*ch[j].body, mu, ch[j].f, 3);
      out.mean[j] = b;
      out.cov(j, j) = (a - b) * (a - b);
    }
  }
  return out;
}

// mu(K).
inline MeasureEstimate measure(const Body& k, const Density& mu, const EstimateOptions& opt = {}) {
  require(k.dim() == mu.dim(), "measure: dimension mismatch");
  const auto est = estimate_integrals({{&k, Integrand::one()}}, mu, opt);
  return est.get(0);
}

inline MeasureEstimate measure(const Body& k, const Density& mu, Method method, std::uint64_t budget = kDefaultBudget,
                               std::uint64_t seed = 1) {
  return measure(k, mu, EstimateOptions{method, budget, seed});
}

// a / b with first-order error propagation from the joint covariance.
struct Ratio {
  double value;
  double stderr_;
};

inline Ratio ratio_of(const JointEstimate& e, int a, int b) {
  const double A = e.mean[a], B = e.mean[b];
  if (!(B > 0.0)) throw NumericError("nonpositive measure estimate");
  const double r = A / B;
  const double var = e.cov(a, a) / (B * B) - 2.0 * A * e.cov(a, b) / (B * B * B) + A * A * e.cov(b, b) / (B * B * B * B);
  return {r, std::sqrt(std::max(0.0, var))};
}

// (1/mu(K)) int_K f dmu.
inline Ratio restricted_mean(const Body& k, const Density& mu, const Integrand& f, const EstimateOptions& opt = {}) {
  const auto e = estimate_integrals({{&k, f}, {&k, Integrand::one()}}, mu, opt);
  return ratio_of(e, 0, 1);
}

inline Ratio restricted_moment(const Body& k, const Density& mu, int power, const EstimateOptions& opt = {}) {
  if (power != 2 && power != 4) throw InputError("restricted_moment: power must be 2 or 4");
  return restricted_mean(k, mu, power == 2 ? Integrand::radius2() : Integrand::radius4(), opt);
}

// (int_K Lap V dmu) / (n mu(K)).
inline Ratio k2_estimate(const Body& k, const Density& mu, const EstimateOptions& opt = {}) {
  if (auto exact = mu.k2_exact()) return {*exact, 0.0};
  const Ratio r = restricted_mean(k, mu, Integrand::laplacian_v(), opt);
  return {r.value / mu.dim(), r.stderr_ / mu.dim()};
}

struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  double stderr_ = 0.0;
  bool holds = false;
  Method method = Method::ClosedForm;
};

// (1/mu(K)) int_K |grad V|^2 <= (1/mu(K)) int_K Lap V.
inline BoundCheck grad_v_bound_check(const Body& k, const Density& mu, const EstimateOptions& opt = {}) {
  const auto e = estimate_integrals({{&k, Integrand::grad_v2()}, {&k, Integrand::laplacian_v()}, {&k, Integrand::one()}},
                                    mu, opt);
  const Ratio l = ratio_of(e, 0, 2);
  const Ratio r = ratio_of(e, 1, 2);
  // Margin (A - B)/M with A = int Lap V, B = int |grad V|^2.
  const double M = e.mean[2];
  Vec g(3);
  g << -1.0 / M, 1.0 / M, -(e.mean[1] - e.mean[0]) / (M * M);
  BoundCheck out;
  out.lhs = l.value;
  out.rhs = r.value;
  out.margin = r.value - l.value;
  out.stderr_ = std::sqrt(std::max(0.0, g.dot(e.cov * g)));
  out.holds = out.margin >= -3.0 * out.stderr_ - 1e-12 * std::max(1.0, std::abs(out.rhs));
  out.method = e.method;
  return out;
}

}  // namespace pqbm
