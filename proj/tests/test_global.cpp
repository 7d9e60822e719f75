#include "catalog.hpp"
#include "pqbm/conditions.hpp"
#include "pqbm/global.hpp"

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <gtest/gtest.h>

#include <numbers>

using namespace pqbm;

namespace {

constexpr double kPi = std::numbers::pi;

double gauss_ball(double r) { return 1.0 - std::exp(-0.5 * r * r); }
double gauss_square(double a) { return std::pow(std::erf(a / std::sqrt(2.0)), 2); }

// P(|X - c| <= r) for a standard planar Gaussian
double gauss_shifted_disk(double r, double c) {
  boost::math::non_central_chi_squared d(2.0, c * c);
  return boost::math::cdf(d, r * r);
}

GlobalOptions mc(std::uint64_t budget, std::uint64_t seed) { return {{Method::MonteCarlo, budget, seed}, false}; }

}  // namespace

TEST(Classify, Thresholds) {
  EXPECT_EQ(classify(0.0, 0.0), Verdict::Holds);
  EXPECT_EQ(classify(-2.9, 1.0), Verdict::Holds);
  EXPECT_EQ(classify(-3.1, 1.0), Verdict::Inconclusive);
  EXPECT_EQ(classify(-10.0, 1.0), Verdict::Inconclusive);
  EXPECT_EQ(classify(-10.5, 1.0), Verdict::Fails);
  EXPECT_EQ(classify(-1e-300, 0.0), Verdict::Fails);
  EXPECT_EQ(verdict_name(Verdict::Inconclusive), "inconclusive");
}

TEST(Midpoint, LebesgueBallsClosedForm) {
  const double a = 0.7, b = 1.9;
  for (double lam : {0.2, 0.5, 0.8})
    for (auto [p, q] : {std::pair{1.0, 0.0}, {1.0, 1.0}, {1.0, 0.5}}) {
      const auto r = midpoint_check(Body::ball(2, a), Body::ball(2, b), lam, p, q, Density::lebesgue(2));
      const double m = lam * a + (1.0 - lam) * b;
      auto f = [q](double rad) { return q == 0.0 ? std::log(kPi * rad * rad) : std::pow(kPi * rad * rad, q / 2.0); };
      const double expect = f(m) - lam * f(a) - (1.0 - lam) * f(b);
      EXPECT_NEAR(r.deficit, expect, 1e-12);
      EXPECT_EQ(r.verdict, Verdict::Holds);
      EXPECT_EQ(r.method, Method::ClosedForm);
      EXPECT_NEAR(r.mu_M, kPi * m * m, 1e-12);
    }
  // Brunn-Minkowski equality for homothetic bodies
  const auto eq = midpoint_check(Body::ball(2, a), Body::ball(2, b), 0.3, 1.0, 1.0, Density::lebesgue(2));
  EXPECT_NEAR(eq.deficit, 0.0, 1e-12);
  EXPECT_EQ(eq.verdict, Verdict::Holds);
}

TEST(Midpoint, GaussianSquaresClosedForm) {
  const double a = 0.5, b = 2.0, lam = 0.4;
  for (double p : {1.0, 0.5, 0.0}) {
    const auto r = midpoint_check(Body::cube(2, a), Body::cube(2, b), lam, p, 0.0, Density::gaussian(2));
    // cubes stay cubes under every L_p combination
    const double m = p == 0.0 ? std::pow(a, lam) * std::pow(b, 1.0 - lam)
                              : std::pow(lam * std::pow(a, p) + (1.0 - lam) * std::pow(b, p), 1.0 / p);
    const double expect = std::log(gauss_square(m)) - lam * std::log(gauss_square(a)) - (1.0 - lam) * std::log(gauss_square(b));
    EXPECT_NEAR(r.deficit, expect, 1e-10);
    EXPECT_GE(r.deficit, 0.0);
  }
}

TEST(Midpoint, IdenticalBodiesZeroDeficit) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    const Body k = pqbm::testing::random_body_2d(rng);
    const auto r = midpoint_check(k, k, 0.5, 0.5, 0.3, Density::gaussian(2), mc(100000, t));
    EXPECT_EQ(r.deficit, 0.0);
    EXPECT_EQ(r.verdict, Verdict::Holds);
  }
  const auto end = midpoint_check(Body::ball(2, 1.0), Body::cube(2, 1.0), 1.0, 1.0, 0.0, Density::gaussian(2));
  EXPECT_EQ(end.deficit, 0.0);
  EXPECT_NEAR(end.mu_K, gauss_ball(1.0), 1e-12);
  EXPECT_NEAR(end.mu_L, gauss_square(1.0), 1e-12);
}

TEST(Midpoint, BorellOnRandomPolygons) {
  std::mt19937_64 rng(2);
  int leb_exact = 0;
  for (int t = 0; t < 30; ++t) {
    const Body k = pqbm::testing::random_polygon(rng, 3), l = pqbm::testing::random_polygon(rng, 4);
    const auto leb = midpoint_check(k, l, 0.5, 1.0, 0.0, Density::lebesgue(2));
    EXPECT_EQ(leb.verdict, Verdict::Holds) << leb.deficit;
    if (leb.method == Method::ClosedForm) ++leb_exact;
    const auto g = midpoint_check(k, l, 0.5, 1.0, 0.0, Density::gaussian(2), mc(200000, 100 + t));
    EXPECT_EQ(g.verdict, Verdict::Holds) << g.deficit << " " << g.stderr_;
  }
  EXPECT_EQ(leb_exact, 30);
}

TEST(Midpoint, GaussianLogBrunnMinkowskiLargeInradius) {
  // bodies containing sqrt(1.5) B
  const std::vector<Body> bodies = {Body::cube(2, 1.3), Body::ball(2, 1.3), Body::ellipsoid(vec2(1.3, 2.0)),
                                    Body::box(vec2(1.5, 1.25))};
  for (std::size_t i = 0; i < bodies.size(); ++i)
    for (std::size_t j = i + 1; j < bodies.size(); ++j) {
      const auto r = midpoint_check(bodies[i], bodies[j], 0.5, 0.0, 0.0, Density::gaussian(2), mc(200000, 7 * i + j));
      EXPECT_EQ(r.verdict, Verdict::Holds) << r.K << " " << r.L << " " << r.deficit << " " << r.stderr_;
    }
}

TEST(Midpoint, TranslatedBallCounterexample) {
  const Body k = Body::ball(2, 1.0), l = Body::shifted_ball(1.0, vec2(5, 0));
  GlobalOptions opt = mc(1000000, 11);
  opt.allow_nonsymmetric = true;
  const auto r = midpoint_check(k, l, 0.5, 1.0, 1.0, Density::gaussian(2), opt);
  const double expect =
      std::sqrt(gauss_shifted_disk(1.0, 2.5)) - 0.5 * std::sqrt(gauss_ball(1.0)) - 0.5 * std::sqrt(gauss_shifted_disk(1.0, 5.0));
  EXPECT_NEAR(r.deficit, expect, 3.0 * r.stderr_);
  EXPECT_LT(r.deficit, -10.0 * r.stderr_);
  EXPECT_EQ(r.verdict, Verdict::Fails);
  EXPECT_THROW(midpoint_check(k, l, 0.5, 1.0, 1.0, Density::gaussian(2)), InputError);
  EXPECT_THROW(midpoint_check(k, l, 0.5, 0.5, 0.5, Density::gaussian(2), opt), InputError);
}

TEST(Midpoint, Errors) {
  const Body k = Body::ball(2, 1.0);
  const Density g = Density::gaussian(2);
  EXPECT_THROW(midpoint_check(k, k, 0.5, 0.2, 0.5, g), InputError);
  EXPECT_THROW(midpoint_check(k, k, 1.5, 1.0, 0.0, g), InputError);
  EXPECT_THROW(midpoint_check(k, k, 0.5, -0.1, 0.0, g), InputError);
  EXPECT_THROW(midpoint_check(k, Body::ball(3, 1.0), 0.5, 1.0, 0.0, g), InputError);
}

TEST(Midpoint, DeterministicUnderSeed) {
  const Body k = Body::ellipsoid(vec2(1.0, 0.4)), l = Body::lq_ball(2, 3.0, 0.8);
  const auto a = midpoint_check(k, l, 0.5, 0.5, 0.0, Density::power(2, 4.0), mc(100000, 3));
  const auto b = midpoint_check(k, l, 0.5, 0.5, 0.0, Density::power(2, 4.0), mc(100000, 3));
  EXPECT_EQ(a.deficit, b.deficit);
  EXPECT_EQ(a.stderr_, b.stderr_);
  EXPECT_EQ(a.budget, 100000u);
  EXPECT_EQ(a.seed, 3u);
}

// Verdict from the condition algebra implies the sampled inequality.
TEST(Midpoint, ConditionVerdictImpliesHolds) {
  std::mt19937_64 rng(4);
  int tested = 0;
  for (int t = 0; t < 40 && tested < 12; ++t) {
    const Body k = pqbm::testing::random_body_2d(rng), l = pqbm::testing::random_body_2d(rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double p = u(rng), q = p * u(rng);
    ConditionInput in;
    in.n = 2;
    in.p = p;
    in.q = q;
    in.r = std::min(k.inradius(), l.inradius());
    if (!theorem_main_check(in).satisfied) continue;
    ++tested;
    const auto r = midpoint_check(k, l, 0.5, p, q, Density::gaussian(2), mc(200000, t));
    EXPECT_EQ(r.verdict, Verdict::Holds) << r.K << " " << r.L << " p=" << p << " q=" << q;
  }
  EXPECT_GE(tested, 5);
}

TEST(Sweep, BallDilatesClosedForm) {
  const auto lam = lambda_grid(11);
  const auto rep = dilates_check(Body::ball(2, 1.0), 3.0, 1.0, lam);
  EXPECT_EQ(rep.formula, "gaussian-dilates");
  EXPECT_EQ(rep.verdict, Verdict::Holds);
  for (const auto& row : rep.rows) {
    const double rad = 1.0 + 2.0 * row.lambda;
    EXPECT_NEAR(row.phi, std::sqrt(gauss_ball(rad)), 1e-6);
  }
  for (std::size_t i = 1; i + 1 < rep.rows.size(); ++i) EXPECT_LE(rep.rows[i].second_diff, 3.0 * rep.rows[i].second_diff_stderr);
}

TEST(Sweep, SquareDilates) {
  const auto lam = lambda_grid(9);
  const auto rep = dilates_check(Body::cube(2, 1.0), 2.0, 0.5, lam);
  EXPECT_EQ(rep.verdict, Verdict::Holds);
  for (const auto& row : rep.rows) {
    const double s = std::pow(1.0 - row.lambda + row.lambda * std::sqrt(2.0), 2.0);
    EXPECT_NEAR(row.phi, std::pow(gauss_square(s), 0.25), 1e-9);
  }
  const auto mcrep = dilates_check(Body::cube(2, 1.0), 2.0, 0.5, lam, {mc(200000, 5), false});
  EXPECT_NE(mcrep.verdict, Verdict::Fails);
  for (std::size_t i = 1; i + 1 < mcrep.rows.size(); ++i)
    EXPECT_LE(mcrep.rows[i].second_diff, 3.0 * mcrep.rows[i].second_diff_stderr + 1e-12);
}

TEST(Sweep, LebesgueLogConcaveAlongPSums) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 5; ++t) {
    const Body k = pqbm::testing::random_polygon(rng, 3), l = pqbm::testing::random_polygon(rng, 3);
    const auto rep = concavity_sweep(k, l, 1.0, 0.0, Density::lebesgue(2), lambda_grid(7));
    EXPECT_EQ(rep.verdict, Verdict::Holds);
    EXPECT_NEAR(rep.rows.front().mu, measure(k, Density::lebesgue(2)).value, 1e-9);
    EXPECT_NEAR(rep.rows.back().mu, measure(l, Density::lebesgue(2)).value, 1e-9);
  }
}

TEST(Sweep, Errors) {
  const Body k = Body::ball(2, 1.0);
  EXPECT_THROW(lambda_grid(3), InputError);
  EXPECT_THROW(concavity_sweep(k, k, 1.0, 0.0, Density::gaussian(2), {0.0, 0.1, 0.3, 0.6, 1.0}), InputError);
  EXPECT_THROW(dilates_check(k, -1.0, 0.5, lambda_grid(5)), InputError);
  EXPECT_THROW(dilates_check(k, 2.0, 0.5, Density::lebesgue(2), lambda_grid(5)), InputError);
  EXPECT_THROW(dilates_check(Body::shifted_ball(1.0, vec2(0.5, 0)), 2.0, 0.5, lambda_grid(5)), InputError);
}

TEST(Moments, FullSpaceEquality) {
  for (int n : {2, 3}) {
    const Body big = Body::ball(n, 1e3);
    const auto c = cfm_moment_check(big);
    EXPECT_NEAR(c.m2, n, 1e-8);
    EXPECT_NEAR(c.m4, n * (n + 2.0), 1e-7);
    EXPECT_NEAR(c.margin, 0.0, 1e-7);
    EXPECT_EQ(c.verdict, Verdict::Holds);
    for (double p : {0.0, 0.5, 1.0}) EXPECT_NEAR(dilates_local_check(big, p).margin, 0.0, 1e-7);
  }
  const auto m = cfm_moment_check(Body::ball(2, 1e3), {Method::MonteCarlo, 1000000, 9});
  EXPECT_LE(std::abs(m.m2 - 2.0), 3.0 * 2.0 / 1e3 + 0.02);
  EXPECT_EQ(m.verdict, Verdict::Holds);
}

TEST(Moments, RandomBodies) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const Body k = pqbm::testing::random_body_2d(rng);
    const auto c = cfm_moment_check(k);
    EXPECT_EQ(c.verdict, Verdict::Holds) << describe(k) << " " << c.margin;
    EXPECT_GE(c.margin, -3.0 * c.stderr_);
    const auto cm = cfm_moment_check(k, {Method::MonteCarlo, 200000, t + 1ull});
    EXPECT_GE(cm.margin, -3.0 * cm.stderr_);
    EXPECT_LE(std::abs(cm.margin - c.margin), 3.5 * std::hypot(cm.stderr_, c.stderr_) + 1e-9);
    for (double p : {0.0, 0.5, 1.0}) EXPECT_EQ(dilates_local_check(k, p).verdict, Verdict::Holds) << describe(k);
  }
  EXPECT_THROW(cfm_moment_check(Body::shifted_ball(1.0, vec2(0.2, 0))), InputError);
  EXPECT_THROW(dilates_local_check(Body::ball(2, 1.0), 1.2), InputError);
}

// Var(|x|^2) on the unit disk by hand: E|x|^2 and E|x|^4 from radial integrals.
TEST(Moments, DiskByHand) {
  const double Z = 1.0 - std::exp(-0.5);
  // int_0^1 r^3 e^{-r^2/2} dr = 2 - 3 e^{-1/2}; int_0^1 r^5 e^{-r^2/2} dr = 8 - 13 e^{-1/2}
  const double m2 = (2.0 - 3.0 * std::exp(-0.5)) / Z, m4 = (8.0 - 13.0 * std::exp(-0.5)) / Z;
  const auto c = cfm_moment_check(Body::ball(2, 1.0));
  EXPECT_NEAR(c.m2, m2, 1e-10);
  EXPECT_NEAR(c.m4, m4, 1e-10);
  EXPECT_NEAR(c.lhs, m4 - m2 * m2, 1e-10);
}
