#pragma once

#include "pqbm/bodies.hpp"
#include "pqbm/density.hpp"
#include "pqbm/measures.hpp"
#include "pqbm/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace pqbm {

struct ConditionInput {
  int n = 2;
  double p = 0.0, q = 0.0;
  double r = 1.0;                // inradius
  std::optional<double> R;       // circumradius
  double k1 = 1.0, k2 = 1.0;
  std::optional<double> c_poin;  // Poincare constant C (not C^{-2})

  void validate() const {
    require(n >= 1, "condition input: n must be positive");
    if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0)) throw InputError("condition input: p, q must lie in [0,1]");
    if (q > p) throw InputError("condition input: q must not exceed p");
    require(r > 0.0, "condition input: r must be positive");
    require(k1 >= 0.0 && k2 >= 0.0, "condition input: k1, k2 must be nonnegative");
    if (R) require(*R >= r, "condition input: R must be at least r");
    if (c_poin) require(*c_poin > 0.0, "condition input: C_poin must be positive");
  }
};

// slack = right side - left side of one displayed inequality.
struct ConditionComponent {
  std::string id;
  double slack = 0.0;
  bool applicable = true;
};

struct ConditionVerdict {
  bool satisfied = false;
  std::string branch;   // id of the branch that decided the verdict
  double slack = 0.0;   // best slack over applicable branches
  std::string formula;  // evaluator identifier
  bool out_of_hypothesis = false;
  std::vector<ConditionComponent> components;

  const ConditionComponent& component(const std::string& id) const {
    for (const auto& c : components)
      if (c.id == id) return c;
    throw InputError("no component " + id);
  }
};

namespace detail {

// Slacks within round-off of zero are reported as exactly zero.
inline double snap(double slack, double scale) { return std::abs(slack) <= 1e-14 * scale ? 0.0 : slack; }

// Picks the applicable branch with the largest slack.
inline void decide(ConditionVerdict& v, const std::vector<std::pair<std::string, double>>& branches) {
  bool any = false;
  for (const auto& [id, s] : branches) {
    if (!any || s > v.slack) {
      v.slack = s;
      v.branch = id;
      any = true;
    }
  }
  v.satisfied = any && v.slack >= 0.0;
  if (!any) {
    v.slack = -std::numeric_limits<double>::infinity();
    v.branch = "none";
  }
}

}  // namespace detail

// Two sufficient conditions for the (p,q)-inequality from uniform convexity
// k1 and the Laplacian bound k2, with theta = (1-p)/r^2:
//   branch1 (k1 in [1/n,1]): (1-p)(1+n)/r^2 + q(1+k2)(1+k1) <= 2 k1
//   branch2 (any k1 >= 0):   q(k1^2 + k1 k2 - (n k1 + k2) theta) <= k1^2 + n theta^2 - theta (n+1) k1
//                            and theta <= k1/n
inline ConditionVerdict theorem_main_check(const ConditionInput& in) {
  in.validate();
  ConditionVerdict v;
  v.formula = "uniform-convexity";
  const double n = in.n, p = in.p, q = in.q, r = in.r, k1 = in.k1, k2 = in.k2;
  const double theta = (1.0 - p) / (r * r);
  const bool b1_ok = k1 >= 1.0 / n && k1 <= 1.0;
  const double s1 = detail::snap(2.0 * k1 - ((1.0 - p) * (1.0 + n) / (r * r) + q * (1.0 + k2) * (1.0 + k1)),
                                 2.0 * k1 + (1.0 - p) * (1.0 + n) / (r * r) + q * (1.0 + k2) * (1.0 + k1));
  const double a2 = detail::snap(
      k1 * k1 + n * theta * theta - theta * (n + 1.0) * k1 - q * (k1 * k1 + k1 * k2 - (n * k1 + k2) * theta),
      k1 * k1 + n * theta * theta + theta * (n + 1.0) * k1 + q * (k1 * k1 + k1 * k2 + (n * k1 + k2) * theta));
  const double b2 = detail::snap(k1 / n - theta, k1 / n + theta);
  const double s2 = std::min(a2, b2);
  v.components = {{"branch1", s1, b1_ok}, {"branch2-quadratic", a2, k1 > 0.0}, {"branch2-linear", b2, k1 > 0.0}};
  if (k1 == 0.0) {
    // Degenerate: with k1 = 0 both branches collapse; reported, not extrapolated.
    v.out_of_hypothesis = true;
    v.satisfied = false;
    v.branch = "out-of-hypothesis";
    v.slack = s2;
    return v;
  }
  std::vector<std::pair<std::string, double>> br;
  if (b1_ok) br.push_back({"branch1", s1});
  br.push_back({"branch2", s2});
  detail::decide(v, br);
  return v;
}

// Inclusion case (K subset L, k1 <= 1):
//   (1-p)(2 sqrt(n) sqrt(1+k2) sqrt(1+k1) + sqrt(k1)) / (2r) + q(1+k2)(1+k1) <= 2 k1
inline ConditionVerdict prop_main_check(const ConditionInput& in) {
  in.validate();
  ConditionVerdict v;
  v.formula = "inclusion-case";
  const double n = in.n, p = in.p, q = in.q, r = in.r, k1 = in.k1, k2 = in.k2;
  const double lhs = (1.0 - p) * (2.0 * std::sqrt(n) * std::sqrt(1.0 + k2) * std::sqrt(1.0 + k1) + std::sqrt(k1)) / (2.0 * r) +
                     q * (1.0 + k2) * (1.0 + k1);
  const double s = detail::snap(2.0 * k1 - lhs, 2.0 * k1 + lhs);
  v.components = {{"inclusion", s, k1 <= 1.0}};
  v.out_of_hypothesis = k1 > 1.0;
  v.slack = s;
  v.branch = v.out_of_hypothesis ? "out-of-hypothesis" : "inclusion";
  v.satisfied = !v.out_of_hypothesis && s >= 0.0;
  return v;
}

// Gaussian specializations (k1 = k2 = 1), as slacks.
namespace gaussian {
// q = 0: p >= 1 - 2 r^2 / (n+1)
inline double log_threshold(int n, double r) { return 1.0 - 2.0 * r * r / (n + 1.0); }
// 4q + (n+1)(1-p)/r^2 <= 2
inline double general_slack(int n, double p, double q, double r) { return 2.0 - 4.0 * q - (n + 1.0) * (1.0 - p) / (r * r); }
// r^2 = (n+1)/2 makes p = q = 0 admissible
inline double log_bm_radius(int n) { return std::sqrt(0.5 * (n + 1.0)); }
// inclusion case, q = 0: p >= 1 - r / (sqrt(n) + 0.25)
inline double inclusion_threshold(int n, double r) { return 1.0 - r / (std::sqrt(static_cast<double>(n)) + 0.25); }
inline double inclusion_slack(int n, double p, double r) {
  return 2.0 - 2.0 * (1.0 - p) * (std::sqrt(static_cast<double>(n)) + 0.25) / r;
}
}  // namespace gaussian

// Conditions in terms of the Poincare constant C of mu restricted to K
// (s = C^{-2}, c = C^{-1}):
//   (i)   (1-p)(1/k1 - n)/r^2 <= 1 - k1
//   (ii)  (1-p)(s/k1 + n)/r^2 + q(1+k2)(1+s) <= k1 + s
// or, with K, L subset R B and R <= c/k1,
//   (iii) (1-p)(2Rc + n - k1 R^2)/r^2 + q(1+k2)(1+s) <= k1 + s
//   (iv)  (1-p)(k1 R^2 - n)/r^2 <= 1 - k1
// and, for the inclusion case,
//   (v)   (1-p)(2 sqrt(n) sqrt(1+k2) sqrt(1+s) + c)/(2r) + q(1+k2)(1+s) <= k1 + s
//   (vi)  (1-p)(C - c - sqrt(n) sqrt(1+k2) sqrt(1+s))/(2r) <= 1 - k1
// (i) and (ii) are evaluated as a joint system.
inline ConditionVerdict remark_conditions_check(const ConditionInput& in) {
  in.validate();
  if (!in.c_poin) throw InputError("remark_conditions_check: C_poin is required");
  ConditionVerdict v;
  v.formula = "poincare-general";
  const double n = in.n, p = in.p, q = in.q, r = in.r, k1 = in.k1, k2 = in.k2;
  const double C = *in.c_poin, c = 1.0 / C, s = c * c;
  const double t = (1.0 - p) / (r * r);
  const bool k1pos = k1 > 0.0;
  const double ninf = -std::numeric_limits<double>::infinity();
  const double si = k1pos ? detail::snap((1.0 - k1) - t * (1.0 / k1 - n), 1.0 + k1 + t * (1.0 / k1 + n)) : ninf;
  const double sii = k1pos ? detail::snap((k1 + s) - (t * (s / k1 + n) + q * (1.0 + k2) * (1.0 + s)),
                                          k1 + s + t * (s / k1 + n) + q * (1.0 + k2) * (1.0 + s))
                           : ninf;
  v.components.push_back({"i", si, k1pos});
  v.components.push_back({"ii", sii, k1pos});
  std::vector<std::pair<std::string, double>> br;
  if (k1pos) br.push_back({"general", std::min(si, sii)});
  if (in.R) {
    const double R = *in.R;
    const bool pre = !k1pos || R <= c / k1;
    const double siii = detail::snap((k1 + s) - (t * (2.0 * R * c + n - k1 * R * R) + q * (1.0 + k2) * (1.0 + s)),
                                     k1 + s + t * (2.0 * R * c + n + k1 * R * R) + q * (1.0 + k2) * (1.0 + s));
    const double siv = detail::snap((1.0 - k1) - t * (k1 * R * R - n), 1.0 + k1 + t * (k1 * R * R + n));
    v.components.push_back({"iii", siii, pre});
    v.components.push_back({"iv", siv, pre});
    if (pre) br.push_back({"bounded", std::min(siii, siv)});
  }
  const double lv = (1.0 - p) * (2.0 * std::sqrt(n) * std::sqrt(1.0 + k2) * std::sqrt(1.0 + s) + c) / (2.0 * r) +
                    q * (1.0 + k2) * (1.0 + s);
  const double sv = detail::snap((k1 + s) - lv, k1 + s + lv);
  const double lvi = (1.0 - p) * (C - c - std::sqrt(n) * std::sqrt(1.0 + k2) * std::sqrt(1.0 + s)) / (2.0 * r);
  const double svi = detail::snap((1.0 - k1) - lvi, 1.0 + k1 + std::abs(lvi));
  v.components.push_back({"v", sv, true});
  v.components.push_back({"vi", svi, true});
  v.out_of_hypothesis = !k1pos;
  detail::decide(v, br);
  return v;
}

// Inclusion-case variant (v)-(vi) alone.
inline ConditionVerdict remark_inclusion_check(const ConditionInput& in) {
  auto v = remark_conditions_check(in);
  v.formula = "poincare-inclusion";
  const double s = std::min(v.component("v").slack, v.component("vi").slack);
  v.slack = s;
  v.branch = "inclusion";
  v.satisfied = s >= 0.0;
  v.out_of_hypothesis = false;
  return v;
}

struct ThresholdReport {
  double p_star = 0.0;   // max(1 - C n^{-0.75}, 0)
  double p_prior = 0.0;  // max(1 - C n^{-1.5}, 0)
  double C = 0.1;
  std::string label = "asymptotic, constant unspecified";
};

inline constexpr double kDefaultLebesgueC = 0.1;

inline ThresholdReport lebesgue_threshold(int n, double C_user) {
  require(n >= 1, "lebesgue_threshold: n must be positive");
  require(C_user > 0.0, "lebesgue_threshold: C must be positive");
  ThresholdReport t;
  t.C = C_user;
  t.p_star = std::max(1.0 - C_user * std::pow(static_cast<double>(n), -0.75), 0.0);
  t.p_prior = std::max(1.0 - C_user * std::pow(static_cast<double>(n), -1.5), 0.0);
  return t;
}

// ---------------------------------------------------------------------------
// Poincare constant by a Rayleigh-Ritz procedure on polynomials
// ---------------------------------------------------------------------------

struct PoincareEstimate {
  double inv2 = 0.0;     // subspace estimate of C^{-2} (biased upward)
  double c_poin = 0.0;   // 1/sqrt(inv2)
  double floor_k1 = 0.0;  // lower end of the bracket [k1, inv2]
  double spread = 0.0;   // half-sample disagreement (Monte Carlo only)
  int basis_size = 0;
  Method method = Method::PolarQuadrature;
  std::string label = "subspace estimate, biased toward larger C_poin^{-2}";
};

namespace detail {

struct WeightedNodes {
  std::vector<Vec> x;
  std::vector<double> w;
};

// Product polar rule for int_K f dmu in the plane.
inline WeightedNodes polar_nodes_2d(const Body& k, const Density& mu, int level = 3) {
  WeightedNodes out;
  std::vector<double> cuts = k.kink_angles();
  if (cuts.empty()) cuts.push_back(0.0);
  std::vector<double> b = cuts;
  b.push_back(cuts.front() + 2.0 * std::numbers::pi);
  const quad::Rule& ra = quad::gl(8 * level);
  const quad::Rule& rr = quad::gl(12 * level);
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    const double len = b[i + 1] - b[i];
    if (len <= 0.0) continue;
    const int panels = std::max(1, static_cast<int>(std::ceil(len / (std::numbers::pi / 16))));
    const double hp = len / panels;
    for (int pn = 0; pn < panels; ++pn) {
      const double mid = b[i] + (pn + 0.5) * hp;
      for (std::size_t a = 0; a < ra.nodes.size(); ++a) {
        const double t = mid + 0.5 * hp * ra.nodes[a];
        const Vec u = vec2(std::cos(t), std::sin(t));
        double rho = k.radial(u);
        if (!mu.is_lebesgue()) {
          double cap = 1.0;
          while (mu.V_radial(cap) - mu.V_radial(0.0) < 70.0) cap *= 1.25;
          rho = std::min(rho, cap);
        }
        const int rp = std::max(1, static_cast<int>(std::ceil(rho / 1.5)));
        const double hr = rho / rp;
        for (int q = 0; q < rp; ++q) {
          const double rm = (q + 0.5) * hr;
          for (std::size_t j = 0; j < rr.nodes.size(); ++j) {
            const double r = rm + 0.5 * hr * rr.nodes[j];
            const Vec x = r * u;
            out.x.push_back(x);
            out.w.push_back(0.5 * hp * ra.weights[a] * 0.5 * hr * rr.weights[j] * r * mu.weight(x));
          }
        }
      }
    }
  }
  return out;
}

inline WeightedNodes mc_nodes(const Body& k, const Density& mu, std::uint64_t budget, std::uint64_t seed) {
  if (budget < kMinBudget) throw InputError("Monte Carlo budget must be at least 1000");
  WeightedNodes out;
  const int n = k.dim();
  std::mt19937_64 rng(derive_seed(seed, 0));
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const Vec lo = k.box_lo(), hi = k.box_hi();
  const double vol = (hi - lo).prod();
  Vec x(n);
  for (std::uint64_t s = 0; s < budget; ++s) {
    double w = 1.0;
    if (mu.is_gaussian()) {
      for (int d = 0; d < n; ++d) x[d] = nd(rng);
    } else {
      for (int d = 0; d < n; ++d) x[d] = lo[d] + (hi[d] - lo[d]) * ud(rng);
      w = vol * mu.weight(x);
    }
    if (!k.contains(x)) continue;
    out.x.push_back(x);
    out.w.push_back(w / static_cast<double>(budget));
  }
  return out;
}

// Exponent vectors with 1 <= |alpha| <= d.
inline std::vector<std::vector<int>> monomial_exponents(int n, int d) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(n, 0);
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == n - 1) {
      e[i] = left;
      out.push_back(e);
      return;
    }
    for (int k = left; k >= 0; --k) {
      e[i] = k;
      rec(i + 1, left - k);
    }
  };
  for (int deg = 1; deg <= d; ++deg) rec(0, deg);
  return out;
}

inline double smallest_ratio(const WeightedNodes& nodes, std::size_t begin, std::size_t end,
                             const std::vector<std::vector<int>>& ex, int n) {
  const int m = static_cast<int>(ex.size());
  Mat A = Mat::Zero(m, m), S = Mat::Zero(m, m);
  Vec mean = Vec::Zero(m);
  double W = 0.0;
  Vec v(m);
  Mat g(n, m);
  for (std::size_t k = begin; k < end; ++k) {
    const Vec& x = nodes.x[k];
    const double w = nodes.w[k];
    for (int i = 0; i < m; ++i) {
      double val = 1.0;
      for (int d = 0; d < n; ++d) val *= std::pow(x[d], ex[i][d]);
      v[i] = val;
      for (int d = 0; d < n; ++d) {
        if (ex[i][d] == 0) {
          g(d, i) = 0.0;
          continue;
        }
        double gv = ex[i][d] * std::pow(x[d], ex[i][d] - 1);
        for (int e = 0; e < n; ++e)
          if (e != d) gv *= std::pow(x[e], ex[i][e]);
        g(d, i) = gv;
      }
    }
    W += w;
    mean += w * v;
    S.noalias() += w * v * v.transpose();
    A.noalias() += w * g.transpose() * g;
  }
  if (!(W > 0.0)) throw NumericError("poincare_estimate: empty quadrature");
  mean /= W;
  S = S / W - mean * mean.transpose();
  A /= W;
  S = 0.5 * (S + S.transpose());
  A = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> sv(S);
  if (sv.eigenvalues().minCoeff() <= 1e-14 * sv.eigenvalues().maxCoeff())
    throw DegenerateBasisError("poincare_estimate: singular moment matrix");
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(A, S);
  if (es.info() != Eigen::Success) throw NumericError("poincare_estimate: eigen-solve failed");
  return es.eigenvalues()[0];
}

}  // namespace detail

// min over polynomials f of degree <= d of int |grad f|^2 dmu / Var_mu(f),
// with mu restricted to K and normalized.
inline PoincareEstimate poincare_estimate(const Body& k, const Density& mu, int degree, const EstimateOptions& opt = {}) {
  require(k.dim() == mu.dim(), "poincare_estimate: dimension mismatch");
  require(degree >= 1 && degree <= 10, "poincare_estimate: degree must be in [1,10]");
  const int n = k.dim();
  if (n != 2 && n != 3) throw InputError("poincare_estimate supports n = 2, 3");
  const auto ex = detail::monomial_exponents(n, degree);
  PoincareEstimate out;
  out.basis_size = static_cast<int>(ex.size());
  out.floor_k1 = mu.k1();
  if (n == 2 && opt.method != Method::MonteCarlo) {
    const auto nodes = detail::polar_nodes_2d(k, mu);
    out.inv2 = detail::smallest_ratio(nodes, 0, nodes.x.size(), ex, n);
    out.method = Method::PolarQuadrature;
  } else {
    const auto nodes = detail::mc_nodes(k, mu, opt.budget, opt.seed);
    const std::size_t N = nodes.x.size();
    out.inv2 = detail::smallest_ratio(nodes, 0, N, ex, n);
    const double a = detail::smallest_ratio(nodes, 0, N / 2, ex, n);
    const double b = detail::smallest_ratio(nodes, N / 2, N, ex, n);
    out.spread = 0.5 * std::abs(a - b);
    out.method = Method::MonteCarlo;
  }
  out.c_poin = 1.0 / std::sqrt(out.inv2);
  return out;
}

}  // namespace pqbm
