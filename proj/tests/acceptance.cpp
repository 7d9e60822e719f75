// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include "catalog.hpp"
#include "pqbm/cli.hpp"
#include "pqbm/pqbm.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

using namespace pqbm;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::uint64_t kBudget = 1000000;
const std::string kScenarios = PQBM_SCENARIO_DIR;

struct Result {
  bool pass = true;
  std::string detail;
};

double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

template <class F>
double simpson(F f, double a, double b, int m = 20000) {
  const double h = (b - a) / m;
  double s = f(a) + f(b);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// Gaussian mass of the centered ball of radius R in R^n from the radial density.
double radial_oracle(int n, double R) {
  const double c = unit_sphere_area(n) / std::pow(2.0 * kPi, 0.5 * n);
  return c * simpson([n](double r) { return std::pow(r, n - 1) * std::exp(-0.5 * r * r); }, 0.0, R);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

EstimateOptions mc(std::uint64_t seed) { return {Method::MonteCarlo, kBudget, seed}; }

Result measure_oracles() {
  Result r;
  double worst = 0.0;
  for (int n : {2, 3})
    for (double R : {0.5, 1.0, 2.0}) {
      const auto e = measure(Body::ball(n, R), Density::gaussian(n), mc(100 + n * 10 + static_cast<int>(4 * R)));
      const double z = std::abs(e.value - radial_oracle(n, R)) / e.stderr_;
      worst = std::max(worst, z);
    }
  for (const Vec& a : {vec2(0.5, 1.5), vec3(1.0, 0.7, 2.0)}) {
    const int n = static_cast<int>(a.size());
    const auto e = measure(Body::box(a), Density::gaussian(n), mc(200 + n));
    double oracle = 1.0;
    for (int i = 0; i < n; ++i) oracle *= 2.0 * Phi(a[i]) - 1.0;
    worst = std::max(worst, std::abs(e.value - oracle) / e.stderr_);
  }
  r.pass = worst <= 3.0;
  r.detail = fmt("max |z| = %.3f over 8 MC estimates at budget 1e6", worst);
  return r;
}

Result psum_monotone() {
  std::mt19937_64 rng(2);
  const std::vector<double> ps = {0.0, 0.25, 0.5, 0.75, 1.0};
  int violations = 0, compared = 0;
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Body k = pqbm::testing::random_body_2d(rng), l = pqbm::testing::random_body_2d(rng);
    std::vector<Body> sums;
    for (double p : ps) sums.push_back(p_sum(k, l, 0.5, p));
    for (int d = 0; d < 200; ++d) {
      const Vec u = pqbm::testing::random_unit(rng, 2);
      for (std::size_t i = 0; i + 1 < ps.size(); ++i) {
        const double gap = sums[i].support(u) - sums[i + 1].support(u);
        worst = std::max(worst, gap);
        if (gap > 1e-10) ++violations;
        ++compared;
      }
    }
  }
  Result r;
  r.pass = violations == 0;
  r.detail = std::to_string(violations) + " violations in " + std::to_string(compared) +
             " comparisons, max excess " + fmt("%.2e", worst);
  return r;
}

Result borell() {
  std::mt19937_64 rng(3);
  int bad = 0;
  double worst = 1e300;
  for (int t = 0; t < 50; ++t) {
    const Body k = pqbm::testing::random_polygon(rng, 2 + t % 4), l = pqbm::testing::random_polygon(rng, 2 + (t + 1) % 4);
    const auto leb = midpoint_check(k, l, 0.5, 1.0, 0.0, Density::lebesgue(2));
    if (!(leb.method == Method::ClosedForm && leb.deficit >= -3.0 * leb.stderr_)) ++bad;
    const auto g = midpoint_check(k, l, 0.5, 1.0, 0.0, Density::gaussian(2), {mc(300 + t), false});
    if (!(g.deficit >= -3.0 * g.stderr_)) ++bad;
    worst = std::min(worst, g.deficit / g.stderr_);
  }
  return {bad == 0, std::to_string(bad) + " of 100 checks below -3 sigma; min Gaussian deficit/sigma " + fmt("%.2f", worst)};
}

Result log_bm_large_inradius() {
  const std::vector<Body> bodies = {Body::cube(2, 1.3), Body::ball(2, 1.3), Body::ellipsoid(vec2(1.3, 2.5)),
                                    Body::box(vec2(2.0, 1.25)), Body::lq_ball(2, 4.0, 1.4)};
  int bad = 0, pairs = 0;
  for (std::size_t i = 0; i < bodies.size(); ++i)
    for (std::size_t j = i + 1; j < bodies.size(); ++j) {
      if (bodies[i].inradius() < std::sqrt(1.5) - 1e-12 || bodies[j].inradius() < std::sqrt(1.5) - 1e-12) ++bad;
      const auto r = midpoint_check(bodies[i], bodies[j], 0.5, 0.0, 0.0, Density::gaussian(2), {mc(400 + pairs), false});
      if (!(r.deficit >= -3.0 * r.stderr_)) ++bad;
      ++pairs;
    }
  return {bad == 0 && pairs == 10, std::to_string(pairs) + " pairs, " + std::to_string(bad) + " below -3 sigma"};
}

Result dilates() {
  const auto sq = dilates_check(Body::cube(2, 1.0), 2.0, 0.5, lambda_grid(11));
  const auto ball = dilates_check(Body::ball(2, 1.0), 3.0, 1.0, lambda_grid(11));
  bool ok = true;
  for (const auto* rep : {&sq, &ball})
    for (std::size_t i = 1; i + 1 < rep->rows.size(); ++i)
      ok = ok && rep->rows[i].second_diff <= 3.0 * rep->rows[i].second_diff_stderr;
  double err = 0.0;
  for (const auto& row : ball.rows) {
    const double rad = 1.0 + 2.0 * row.lambda;
    err = std::max(err, std::abs(row.phi - std::sqrt(1.0 - std::exp(-0.5 * rad * rad))));
  }
  return {ok && err <= 1e-6, fmt("square min margin %.3e, ball min margin %.3e, ball closed-form error %.1e",
                                 sq.min_margin, ball.min_margin, err)};
}

Result local_disk() {
  const auto grid = make_boundary_grid(SmoothBody::disk(), Density::lebesgue(2));
  const auto r10 = local_form_max(grid, 1.0, 0.0);
  const auto r11 = local_form_max(grid, 1.0, 1.0);
  const double scale10 = r10.M.cwiseAbs().maxCoeff(), scale11 = r11.M.cwiseAbs().maxCoeff();
  const Vec mode = mode_values(grid, default_basis(2), r11.argmax);
  const Vec h = support_mode(grid).g;
  const double s = mode.dot(h) / h.dot(h);
  const double rel = (mode - s * h).norm() / (std::abs(s) * h.norm());
  const bool ok = r10.max_eigenvalue <= 1e-8 * scale10 && std::abs(r11.max_eigenvalue) <= 1e-8 * scale11 && rel <= 1e-6;
  return {ok, fmt("(1,0) max eig %.3e; (1,1) max eig %.3e; mode vs support %.1e", r10.max_eigenvalue,
                  r11.max_eigenvalue, rel)};
}

Result bochner() {
  double worst = 0.0;
  for (const auto& k : {SmoothBody::disk(), SmoothBody::ellipsoid(vec2(2, 1))})
    for (const Density& mu : {Density::lebesgue(2), Density::gaussian(2)}) {
      const auto grid = make_boundary_grid(k, mu);
      for (const auto& u : {ScalarField::half_norm2(2), ScalarField::saddle(2), ScalarField::product(2)}) {
        const auto t = bochner_residual(u, grid);
        worst = std::max(worst, std::abs(t.residual) / t.scale);
      }
    }
  return {worst <= 1e-6, fmt("max relative residual %.2e over 12 cases", worst)};
}

IsomorphicPair random_pair(std::mt19937_64& rng, int k, double p) {
  std::uniform_real_distribution<double> jit(-0.15, 0.15), hj(0.9, 1.1), hl(0.85, 1.25);
  Mat N(2 * k, 2);
  Vec h(2 * k), hL(2 * k);
  for (int i = 0; i < k; ++i) {
    const double t = kPi * (i + 0.5 * jit(rng)) / k;
    N.row(i) << std::cos(t), std::sin(t);
    N.row(i + k) = -N.row(i);
    h[i] = h[i + k] = hj(rng);
    hL[i] = hL[i + k] = h[i] * hl(rng);
  }
  return IsomorphicPair(N, h, hL, p);
}

bool all_present(const IsomorphicPair& pair, double lam) {
  for (bool b : facet_measures(body_at(pair, lam), Density::lebesgue(2)).present)
    if (!b) return false;
  return true;
}

Result polytope_derivative() {
  std::mt19937_64 rng(8);
  const Density leb = Density::lebesgue(2), g = Density::gaussian(2);
  double worst_rel = 0.0, worst_z = 0.0, zsum = 0.0, zsq = 0.0;
  int cases = 0;
  for (double p : {1.0, 0.5, 0.0}) {
    int done = 0;
    while (done < 20) {
      const auto pair = random_pair(rng, 3 + done % 4, p);
      const double lam = 0.5;
      if (!all_present(pair, 0.45) || !all_present(pair, 0.55)) continue;
      const double d = 1e-4;
      const double fd = (measure(body_at(pair, lam + d), leb).value - measure(body_at(pair, lam - d), leb).value) / (2 * d);
      const auto ex = measure_derivative(pair, lam, leb);
      worst_rel = std::max(worst_rel, std::abs(ex.value - fd) / std::abs(fd));
      // Gaussian: sampled central difference with common random numbers at step D
      const double D = 0.02;
      const Body lo = body_at(pair, lam - D), hi = body_at(pair, lam + D);
      const auto e = estimate_integrals({{&lo, Integrand::one()}, {&hi, Integrand::one()}}, g, mc(800 + cases));
      const double fd_mc = (e.mean[1] - e.mean[0]) / (2 * D);
      const double sd = std::sqrt(std::max(0.0, e.cov(0, 0) + e.cov(1, 1) - 2 * e.cov(0, 1))) / (2 * D);
      const auto gd = measure_derivative(pair, lam, g);
      const double trunc = std::abs((measure(hi, g).value - measure(lo, g).value) / (2 * D) - gd.value);
      worst_z = std::max(worst_z, std::max(0.0, std::abs(fd_mc - gd.value) - trunc) / sd);
      zsum += (fd_mc - gd.value) / sd;
      zsq += std::pow((fd_mc - gd.value) / sd, 2);
      ++done;
      ++cases;
    }
  }
  // facet sampling in 3D against the product formula for boxes
  Mat N(6, 3);
  N << 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1, 0, 0, 0, 1, 0, 0, -1;
  const Vec h = (Vec(6) << 0.6, 0.8, 1.0, 0.7, 1.2, 1.2).finished();
  const Vec hL = (Vec(6) << 1.1, 0.9, 0.5, 1.0, 1.3, 0.9).finished();
  double worst_box = 0.0;
  for (double p : {1.0, 0.5, 0.0}) {
    const IsomorphicPair pair(N, h, hL, p);
    auto mu_at = [&](double l) {
      const Vec H = interp_heights(pair, l).heights;
      double m = 1.0;
      for (int k = 0; k < 3; ++k) m *= Phi(H[2 * k]) + Phi(H[2 * k + 1]) - 1.0;
      return m;
    };
    const double oracle = (mu_at(0.35 + 1e-5) - mu_at(0.35 - 1e-5)) / 2e-5;
    const auto r = measure_derivative(pair, 0.35, Density::gaussian(3), mc(900));
    worst_box = std::max(worst_box, std::abs(r.value - oracle) / r.stderr_);
  }
  const bool ok = worst_rel <= 1e-6 && worst_z <= 3.0 && worst_box <= 3.0;
  const double zm = zsum / cases, zsd = std::sqrt(std::max(0.0, zsq / cases - zm * zm));
  return {ok, fmt("Lebesgue max rel error %.2e; Gaussian planar max |z| %.2f; 3D facet sampling max |z| %.2f", worst_rel,
                  worst_z, worst_box) +
                  fmt(" (%.0f cases, planar z mean %.2f sd %.2f)", cases, zm, zsd)};
}

Result first_variation() {
  const Density g = Density::gaussian(2);
  const auto one = SphereFunction::constant_fn(1.0);
  const std::vector<double> eps = {0.2, 0.1, 0.05, 0.025, 0.0125};
  bool ok = true;
  std::string detail;
  for (const Body& k : {Body::ball(2, 1.0), Body::cube(2, 1.0)}) {
    const auto det = first_variation_check(k, one, g, eps);
    FirstVariationOptions o;
    o.est = mc(1000);
    const auto sam = first_variation_check(k, one, g, {0.2, 0.1, 0.05}, o);
    const double z = std::abs(sam.extrapolated - sam.integral) / std::hypot(sam.extrapolated_stderr, sam.integral_stderr);
    ok = ok && det.converges && det.rate >= 0.8 && det.limit_agrees && z <= 3.0;
    detail += k.family() + fmt(": rate %.2f, limit error %.1e, sampled |z| %.2f; ", det.rate,
                               std::abs(det.extrapolated - det.integral), z);
  }
  return {ok, detail};
}

Result moment_lemmas() {
  std::mt19937_64 rng(10);
  int bad = 0;
  const Density pw = Density::power(2, 4.0), g = Density::gaussian(2);
  for (int t = 0; t < 20; ++t) {
    const Body k = pqbm::testing::random_body_2d(rng);
    const auto c = cfm_moment_check(k, mc(1100 + t));
    if (!(c.margin >= -3.0 * c.stderr_)) ++bad;
    for (const Density* mu : {&g, &pw}) {
      const auto b = grad_v_bound_check(k, *mu, mc(1200 + t));
      if (!(b.margin >= -3.0 * b.stderr_)) ++bad;
    }
  }
  double worst = 0.0;
  for (int n : {2, 3}) {
    const Body big = Body::ball(n, 1e3);
    const auto m2 = restricted_moment(big, Density::gaussian(n), 2, mc(1300 + n));
    const auto m4 = restricted_moment(big, Density::gaussian(n), 4, mc(1300 + n));
    worst = std::max({worst, std::abs(m2.value - n) / m2.stderr_, std::abs(m4.value - n * (n + 2.0)) / m4.stderr_});
  }
  return {bad == 0 && worst <= 3.0,
          std::to_string(bad) + " of 60 margins below -3 sigma; full-space moments max |z| " + fmt("%.2f", worst)};
}

Result condition_algebra() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 60);
  double worst = 0.0;
  int verdict_mismatch = 0;
  for (int t = 0; t < 100; ++t) {
    ConditionInput in;
    in.n = dim(rng);
    in.p = u(rng);
    in.q = in.p * u(rng);
    in.r = 0.2 + 6.0 * u(rng);
    in.k1 = in.k2 = 1.0;
    const double n = in.n, p = in.p, q = in.q, r = in.r;
    const auto th = theorem_main_check(in);
    const auto pr = prop_main_check(in);
    // (3) general form and its q = 0 specialization (1)
    const double s3 = 2.0 - 4.0 * q - (n + 1.0) * (1.0 - p) / (r * r);
    worst = std::max(worst, std::abs(th.component("branch1").slack - s3));
    if (th.satisfied != (s3 >= 0.0)) ++verdict_mismatch;
    ConditionInput in0 = in;
    in0.q = 0.0;
    const auto th0 = theorem_main_check(in0);
    const double thr1 = 1.0 - 2.0 * r * r / (n + 1.0);
    if (std::abs(p - thr1) > 1e-9 && th0.satisfied != (p >= thr1)) ++verdict_mismatch;
    // (4) inclusion case
    const double s4 = 2.0 - (1.0 - p) * (4.0 * std::sqrt(n) + 1.0) / (2.0 * r) - 4.0 * q;
    worst = std::max(worst, std::abs(pr.slack - s4));
    const auto pr0 = prop_main_check(in0);
    const double thr4 = 1.0 - r / (std::sqrt(n) + 0.25);
    if (std::abs(p - thr4) > 1e-9 && pr0.satisfied != (p >= thr4)) ++verdict_mismatch;
    // (2) p = q = 0 at r = sqrt((n+1)/2)
    ConditionInput in2;
    in2.n = in.n;
    in2.p = in2.q = 0.0;
    in2.r = std::sqrt(0.5 * (n + 1.0));
    const auto th2 = theorem_main_check(in2);
    worst = std::max(worst, std::abs(th2.component("branch1").slack));
    if (!th2.satisfied) ++verdict_mismatch;
    // Poincare form with C^{-2} = k1 = 1
    ConditionInput ip = in;
    ip.c_poin = 1.0;
    const auto rm = remark_conditions_check(ip);
    const auto ri = remark_inclusion_check(ip);
    worst = std::max(worst, std::abs(rm.component("ii").slack - th.component("branch1").slack));
    worst = std::max(worst, std::abs(rm.component("v").slack - pr.slack));
    if (rm.satisfied != th.satisfied || ri.satisfied != pr.satisfied) ++verdict_mismatch;
  }
  return {worst <= 1e-12 && verdict_mismatch == 0,
          fmt("max slack disagreement %.2e", worst) + ", " + std::to_string(verdict_mismatch) + " verdict mismatches"};
}

Result counterexample() {
  GlobalOptions o{mc(11), true};
  const auto r = midpoint_check(Body::ball(2, 1.0), Body::shifted_ball(1.0, vec2(5, 0)), 0.5, 1.0, 1.0,
                                Density::gaussian(2), o);
  return {r.deficit < -10.0 * r.stderr_ && r.verdict == Verdict::Fails,
          fmt("deficit %.4f, sigma %.2e, deficit/sigma %.1f", r.deficit, r.stderr_, r.deficit / r.stderr_)};
}

Result pointwise_matrix() {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> pos(0.01, 10.0);
  std::uniform_int_distribution<int> dim(1, 6);
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const int n = dim(rng);
    Mat A(n, n);
    Vec v(n), w(n);
    for (int i = 0; i < n; ++i) {
      v[i] = nd(rng);
      w[i] = nd(rng);
      for (int j = 0; j < n; ++j) A(i, j) = nd(rng);
    }
    A = (0.5 * (A + A.transpose())).eval();
    worst = std::min(worst, pointwise_matrix_margin(A, v, w, pos(rng), pos(rng)));
  }
  return {worst >= -1e-9, fmt("min margin %.3e over 1e4 draws", worst)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

Result determinism() {
  const auto base = std::filesystem::temp_directory_path() / "pqbm-acceptance";
  std::filesystem::remove_all(base);
  int differ = 0, runs = 0;
  std::ostringstream sink;
  for (const char* name : {"gauss-logbm-n2.json", "gz-counterexample.json", "gaussian-dilates.json",
                           "local-ellipse-gauss.json", "conditions-gaussian.json"}) {
    const std::string cfg = kScenarios + "/" + name;
    std::string cmd = io::read_json_file(cfg)["command"].get<std::string>();
    cli::Overrides ov;
    ov.command = cmd;
    const auto a = base / (std::string(name) + ".a"), b = base / (std::string(name) + ".b");
    cli::run_file(cfg, ov, a.string(), sink, sink);
    mc_jobs() = 3;
    cli::run_file(cfg, ov, b.string(), sink, sink);
    mc_jobs() = 1;
    for (const char* f : {"report.csv", "summary.json"}) {
      const std::string x = slurp(a / f), y = slurp(b / f);
      if (x.empty() || x != y) ++differ;
      ++runs;
    }
  }
  std::filesystem::remove_all(base);
  return {differ == 0, std::to_string(differ) + " of " + std::to_string(runs) + " report files differ across reruns"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
      {"measure oracles", measure_oracles},
      {"p-sum monotonicity", psum_monotone},
      {"Borell ground truth", borell},
      {"Gaussian log-BM for large inradius", log_bm_large_inradius},
      {"Gaussian dilates concavity", dilates},
      {"local form on the disk", local_disk},
      {"Bochner identity", bochner},
      {"polytope measure derivative", polytope_derivative},
      {"first variation", first_variation},
      {"moment lemmas", moment_lemmas},
      {"condition algebra", condition_algebra},
      {"counterexample detection", counterexample},
      {"pointwise matrix inequality", pointwise_matrix},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!r.pass) ++failed;
    std::printf("%s %2zu %s: %s [%.1fs]\n", r.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), r.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
