#pragma once

#include "pqbm/measures.hpp"
#include "pqbm/support.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace pqbm {

enum class Verdict { Holds, Fails, Inconclusive };

inline std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::Fails: return "fails";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

// holds iff x >= -3 sigma; fails iff x < -3 sigma and |x| > 10 sigma.
inline Verdict classify(double deficit, double sigma) {
  if (deficit >= -3.0 * sigma) return Verdict::Holds;
  if (std::abs(deficit) > 10.0 * sigma) return Verdict::Fails;
  return Verdict::Inconclusive;
}

// Floor on the uncertainty of deterministic estimates, relative to the size
// of the terms being compared; keeps round-off from reading as a violation.
inline constexpr double kRoundoffFloor = 1e-11;

inline double delta_stderr(const Vec& grad, const Mat& cov) { return std::sqrt(std::max(0.0, grad.dot(cov * grad))); }

struct InequalityReport {
  std::string formula = "pq-midpoint";
  double deficit = 0.0;
  double stderr_ = 0.0;
  Verdict verdict = Verdict::Holds;
  // inputs
  std::string K, L, density;
  double lambda = 0.5, p = 1.0, q = 0.0;
  std::uint64_t budget = 0, seed = 0;
  Method method = Method::ClosedForm;
  // derived
  double mu_K = 0.0, mu_L = 0.0, mu_M = 0.0;
  std::vector<std::string> notes;
};

struct GlobalOptions {
  EstimateOptions est;
  // Permits the translated-ball demonstration (p = 1 only).
  bool allow_nonsymmetric = false;
};

namespace detail {

inline void check_pq_global(double p, double q) {
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("p must lie in [0,1]");
  if (!(q >= 0.0 && q <= 1.0)) throw InputError("q must lie in [0,1]");
  if (q > p) throw InputError("q must not exceed p");
}

inline void check_symmetry(const Body& k, double p, bool allow) {
  if (k.symmetric()) return;
  if (!allow) throw InputError("non-symmetric body " + describe(k) + " requires counterexample mode");
  if (p != 1.0) throw InputError("counterexample mode is restricted to p = 1");
}

// phi(mu) = mu^{q/n}, or log mu when q = 0, with derivative.
inline double phi(double m, double q, int n) {
  if (!(m > 0.0)) throw NumericError("nonpositive measure estimate");
  return q == 0.0 ? std::log(m) : std::pow(m, q / n);
}
inline double dphi(double m, double q, int n) { return q == 0.0 ? 1.0 / m : (q / n) * std::pow(m, q / n - 1.0); }

}  // namespace detail

// Deficit of mu(lambda K +_p (1-lambda) L)^{q/n} >= lambda mu(K)^{q/n} + (1-lambda) mu(L)^{q/n}
// (log form when q = 0).
inline InequalityReport midpoint_check(const Body& K, const Body& L, double lambda, double p, double q,
                                       const Density& mu, const GlobalOptions& opt = {}) {
  detail::check_pq_global(p, q);
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InputError("lambda must lie in [0,1]");
  require(K.dim() == L.dim() && K.dim() == mu.dim(), "midpoint_check: dimension mismatch");
  detail::check_symmetry(K, p, opt.allow_nonsymmetric);
  detail::check_symmetry(L, p, opt.allow_nonsymmetric);

  InequalityReport r;
  r.K = describe(K);
  r.L = describe(L);
  r.density = mu.name();
  r.lambda = lambda;
  r.p = p;
  r.q = q;
  r.notes.push_back("(p,q) for all symmetric K,L implies (p+t,q+t)");
  const int n = K.dim();

  if (K.same_as(L) || lambda == 0.0 || lambda == 1.0) {
    const Body& only = lambda == 0.0 ? L : K;
    const auto e = measure(only, mu, opt.est);
    r.mu_K = K.same_as(only) ? e.value : measure(K, mu, opt.est).value;
    r.mu_L = L.same_as(only) ? e.value : measure(L, mu, opt.est).value;
    r.mu_M = e.value;
    r.method = e.method;
    r.budget = e.budget;
    r.seed = e.seed;
    r.deficit = 0.0;
    r.verdict = Verdict::Holds;
    return r;
  }

  const Body M = wulff(p_combine(K, L, lambda, p));
  const auto e = estimate_integrals({{&K, Integrand::one()}, {&L, Integrand::one()}, {&M, Integrand::one()}}, mu,
                                    opt.est);
  r.mu_K = e.mean[0];
  r.mu_L = e.mean[1];
  r.mu_M = e.mean[2];
  r.method = e.method;
  r.budget = e.budget;
  r.seed = e.seed;
  const double fK = detail::phi(r.mu_K, q, n), fL = detail::phi(r.mu_L, q, n), fM = detail::phi(r.mu_M, q, n);
  r.deficit = lambda * (fM - fK) + (1.0 - lambda) * (fM - fL);
  Vec g(3);
  g << -lambda * detail::dphi(r.mu_K, q, n), -(1.0 - lambda) * detail::dphi(r.mu_L, q, n), detail::dphi(r.mu_M, q, n);
  r.stderr_ = delta_stderr(g, e.cov);
  if (e.method != Method::MonteCarlo)
    r.stderr_ = std::max(r.stderr_, kRoundoffFloor * (std::abs(fM) + std::abs(fK) + std::abs(fL)));
  r.verdict = classify(r.deficit, r.stderr_);
  return r;
}

struct SweepRow {
  double lambda = 0.0;
  double mu = 0.0;
  double phi = 0.0;
  double phi_stderr = 0.0;
  double second_diff = 0.0;  // at interior points; 0 at the ends
  double second_diff_stderr = 0.0;
  Verdict verdict = Verdict::Holds;  // concavity at this point
};

struct SweepReport {
  std::string formula = "pq-concavity";
  std::string K, L, density;
  double p = 1.0, q = 0.0;
  std::uint64_t budget = 0, seed = 0;
  Method method = Method::ClosedForm;
  std::vector<SweepRow> rows;
  double min_margin = 0.0;  // min over interior points of -(second difference)
  Verdict verdict = Verdict::Holds;
};

inline std::vector<double> lambda_grid(int points) {
  require(points >= 5, "lambda grid needs at least 5 points");
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = static_cast<double>(i) / (points - 1);
  return g;
}

// phi(lambda) = mu(K_lambda)^{q/n} (log when q = 0) along
// K_lambda = (1-lambda) K +_p lambda L; concave iff every second difference
// is <= 0 within 3 sigma.
inline SweepReport concavity_sweep(const Body& K, const Body& L, double p, double q, const Density& mu,
                                   const std::vector<double>& lambdas, const GlobalOptions& opt = {}) {
  detail::check_pq_global(p, q);
  require(K.dim() == L.dim() && K.dim() == mu.dim(), "concavity_sweep: dimension mismatch");
  require(lambdas.size() >= 5, "lambda grid needs at least 5 points");
  const double step = lambdas[1] - lambdas[0];
  for (std::size_t i = 1; i < lambdas.size(); ++i)
    require(std::abs(lambdas[i] - lambdas[i - 1] - step) <= 1e-12 && step > 0.0, "lambda grid must be equally spaced");
  detail::check_symmetry(K, p, opt.allow_nonsymmetric);
  detail::check_symmetry(L, p, opt.allow_nonsymmetric);
  const int n = K.dim();

  SweepReport rep;
  rep.K = describe(K);
  rep.L = describe(L);
  rep.density = mu.name();
  rep.p = p;
  rep.q = q;

  std::vector<Body> bodies;
  for (double lam : lambdas) bodies.push_back(wulff(p_combine(K, L, 1.0 - lam, p)));
  std::vector<Channel> ch;
  for (const Body& b : bodies) ch.push_back({&b, Integrand::one()});
  const auto e = estimate_integrals(ch, mu, opt.est);
  rep.method = e.method;
  rep.budget = e.budget;
  rep.seed = e.seed;

  const int m = static_cast<int>(lambdas.size());
  Vec f(m), df(m);
  for (int i = 0; i < m; ++i) {
    f[i] = detail::phi(e.mean[i], q, n);
    df[i] = detail::dphi(e.mean[i], q, n);
  }
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    SweepRow row;
    row.lambda = lambdas[i];
    row.mu = e.mean[i];
    row.phi = f[i];
    row.phi_stderr = df[i] * std::sqrt(std::max(0.0, e.cov(i, i)));
    if (i > 0 && i + 1 < m) {
      row.second_diff = f[i - 1] - 2.0 * f[i] + f[i + 1];
      Vec g = Vec::Zero(m);
      g[i - 1] = df[i - 1];
      g[i] = -2.0 * df[i];
      g[i + 1] = df[i + 1];
      row.second_diff_stderr = delta_stderr(g, e.cov);
      if (e.method != Method::MonteCarlo)
        row.second_diff_stderr = std::max(row.second_diff_stderr,
                                          kRoundoffFloor * (std::abs(f[i - 1]) + 2.0 * std::abs(f[i]) + std::abs(f[i + 1])));
      row.verdict = classify(-row.second_diff, row.second_diff_stderr);
      rep.min_margin = std::min(rep.min_margin, -row.second_diff);
      if (row.verdict == Verdict::Fails) rep.verdict = Verdict::Fails;
      else if (row.verdict == Verdict::Inconclusive && rep.verdict == Verdict::Holds) rep.verdict = Verdict::Inconclusive;
    }
    rep.rows.push_back(row);
  }
  return rep;
}

struct DilatesOptions {
  GlobalOptions global;
  // Caller asserts the Gaussian barycenter of K is the origin.
  bool barycentered = false;
};

// Gaussian sweep with L = tK and q = p.
inline SweepReport dilates_check(const Body& K, double t, double p, const std::vector<double>& lambdas,
                                 const DilatesOptions& opt = {}) {
  require(t > 0.0, "dilates_check: t must be positive");
  if (!K.symmetric() && !opt.barycentered)
    throw InputError("dilates_check: K must be origin-symmetric or flagged as barycentered");
  GlobalOptions g = opt.global;
  g.allow_nonsymmetric = g.allow_nonsymmetric || opt.barycentered;
  const Density mu = Density::gaussian(K.dim());
  auto rep = concavity_sweep(K, K.scaled(t), p, p, mu, lambdas, g);
  rep.formula = "gaussian-dilates";
  return rep;
}

inline SweepReport dilates_check(const Body& K, double t, double p, const Density& mu,
                                 const std::vector<double>& lambdas, const DilatesOptions& opt = {}) {
  if (!mu.is_gaussian()) throw InputError("dilates_check requires the Gaussian density");
  return dilates_check(K, t, p, lambdas, opt);
}

struct MomentReport {
  std::string formula;
  double m2 = 0.0, m4 = 0.0;  // restricted moments E_K|x|^2, E_K|x|^4
  double lhs = 0.0, rhs = 0.0;
  double margin = 0.0;
  double stderr_ = 0.0;
  Verdict verdict = Verdict::Holds;
  Method method = Method::ClosedForm;
};

namespace detail {

struct Moments {
  double A, B, M;  // int |x|^2, int |x|^4, mu(K)
  Mat cov;
  Method method;
};

inline Moments moments(const Body& K, const Density& mu, const EstimateOptions& opt) {
  const auto e = estimate_integrals({{&K, Integrand::radius2()}, {&K, Integrand::radius4()}, {&K, Integrand::one()}}, mu,
                                    opt);
  if (!(e.mean[2] > 0.0)) throw NumericError("nonpositive measure estimate");
  return {e.mean[0], e.mean[1], e.mean[2], e.cov, e.method};
}

inline void finish(MomentReport& r, const Vec& grad, const detail::Moments& m) {
  r.stderr_ = delta_stderr(grad, m.cov);
  if (m.method != Method::MonteCarlo)
    r.stderr_ = std::max(r.stderr_, kRoundoffFloor * (std::abs(r.lhs) + std::abs(r.rhs)));
  r.verdict = classify(r.margin, r.stderr_);
  r.method = m.method;
}

}  // namespace detail

// Var(|x|^2) <= 2 E|x|^2 under the Gaussian measure restricted to K.
inline MomentReport cfm_moment_check(const Body& K, const EstimateOptions& opt = {}) {
  if (!K.symmetric()) throw InputError("cfm_moment_check: K must be symmetric");
  const Density mu = Density::gaussian(K.dim());
  const auto m = detail::moments(K, mu, opt);
  MomentReport r;
  r.formula = "cfm-variance";
  r.m2 = m.A / m.M;
  r.m4 = m.B / m.M;
  r.lhs = r.m4 - r.m2 * r.m2;  // variance
  r.rhs = 2.0 * r.m2;          // bound
  r.margin = r.rhs - r.lhs;
  Vec g(3);
  g << 2.0 / m.M + 2.0 * m.A / (m.M * m.M), -1.0 / m.M,
      -2.0 * m.A / (m.M * m.M) + m.B / (m.M * m.M) - 2.0 * m.A * m.A / (m.M * m.M * m.M);
  detail::finish(r, g, m);
  return r;
}

// n + E|x|^2 >= Var(|x|^2) + (p/n)(n - E|x|^2)^2 + (1-p)(n - E|x|^2).
inline MomentReport dilates_local_check(const Body& K, double p, const EstimateOptions& opt = {}) {
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("p must lie in [0,1]");
  if (!K.symmetric()) throw InputError("dilates_local_check: K must be symmetric");
  const int n = K.dim();
  const Density mu = Density::gaussian(n);
  const auto m = detail::moments(K, mu, opt);
  MomentReport r;
  r.formula = "gaussian-dilates-local";
  const double a = m.A / m.M, b = m.B / m.M;
  r.m2 = a;
  r.m4 = b;
  r.lhs = n + a;
  r.rhs = (b - a * a) + (p / n) * (n - a) * (n - a) + (1.0 - p) * (n - a);
  r.margin = r.lhs - r.rhs;
  // d margin / da and / db, chained through a = A/M, b = B/M.
  const double dma = 1.0 + 2.0 * a + 2.0 * (p / n) * (n - a) + (1.0 - p);
  const double dmb = -1.0;
  Vec g(3);
  g << dma / m.M, dmb / m.M, -(dma * a + dmb * b) / m.M;
  detail::finish(r, g, m);
  return r;
}

}  // namespace pqbm
