#include "catalog.hpp"
#include "pqbm/boundary.hpp"

#include <boost/math/special_functions/ellint_2.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>

using namespace pqbm;

namespace {

constexpr double kPi = std::numbers::pi;

double ellipse_perimeter(double a, double b) {
  const double e = std::sqrt(1.0 - (b * b) / (a * a));
  return 4.0 * a * boost::math::ellint_2(e);
}

}  // namespace

TEST(BoundaryGrid, DiskAndEllipse) {
  const auto disk = make_boundary_grid(SmoothBody::disk(1.5), Density::lebesgue(2));
  EXPECT_NEAR(disk.measure(), kPi * 2.25, 1e-12);
  EXPECT_NEAR(disk.surface_area(), 3.0 * kPi, 1e-12);
  for (const auto& nd : disk.nodes()) {
    EXPECT_NEAR(nd.h, 1.5, 1e-14);
    EXPECT_NEAR(nd.H, 1.0 / 1.5, 1e-12);
  }
  const auto ell = make_boundary_grid(SmoothBody::ellipsoid(vec2(2, 1)), Density::lebesgue(2));
  EXPECT_NEAR(ell.measure(), 2.0 * kPi, 1e-10);
  EXPECT_NEAR(ell.surface_area(), ellipse_perimeter(2.0, 1.0), 1e-10);
  const auto g = make_boundary_grid(SmoothBody::disk(1.0), Density::gaussian(2));
  EXPECT_NEAR(g.measure(), 1.0 - std::exp(-0.5), 1e-12);
  EXPECT_NEAR(g.weighted_surface(), 2.0 * kPi * std::exp(-0.5) / (2.0 * kPi), 1e-12);
}

TEST(BoundaryGrid, BoundaryPointsLieOnBody) {
  const auto ell = make_boundary_grid(SmoothBody::ellipsoid(vec2(2, 0.7)), Density::lebesgue(2));
  for (const auto& nd : ell.nodes()) {
    EXPECT_NEAR(std::pow(nd.x[0] / 2.0, 2) + std::pow(nd.x[1] / 0.7, 2), 1.0, 1e-12);
    // outer normal of the ellipse at x is proportional to (x/a^2, y/b^2)
    const Vec nrm = vec2(nd.x[0] / 4.0, nd.x[1] / 0.49).normalized();
    EXPECT_NEAR((nrm - nd.u).norm(), 0.0, 1e-12);
  }
}

TEST(BoundaryGrid, ThreeDimensionalBall) {
  const auto b = make_boundary_grid(SmoothBody::ball(3, 1.0), Density::lebesgue(3));
  EXPECT_NEAR(b.measure(), 4.0 * kPi / 3.0, 1e-10);
  EXPECT_NEAR(b.surface_area(), 4.0 * kPi, 1e-10);
  const auto g = make_boundary_grid(SmoothBody::ball(3, 1.0), Density::gaussian(3));
  EXPECT_NEAR(g.measure(), boost::math::gamma_p(1.5, 0.5), 1e-10);
  const auto e = make_boundary_grid(SmoothBody::ellipsoid(vec3(1, 2, 0.5)), Density::lebesgue(3));
  EXPECT_NEAR(e.measure(), 4.0 * kPi / 3.0, 1e-8);
}

TEST(BoundaryGrid, SmoothedBox) {
  const double a = 1.0, b = 0.6, e = 0.05;
  const auto g = make_boundary_grid(SmoothBody::smoothed_box(vec2(a, b), e), Density::lebesgue(2));
  EXPECT_NEAR(g.measure(), 4.0 * a * b + 4.0 * e * (a + b) + kPi * e * e, 1e-12);
  EXPECT_NEAR(g.surface_area(), 4.0 * (a + b) + 2.0 * kPi * e, 1e-12);
}

TEST(BoundaryGrid, TrigBody) {
  const auto g =
      make_boundary_grid(SmoothBody::trig([](double t) { return 1.0 + 0.1 * std::cos(2.0 * t); }), Density::lebesgue(2));
  // area = (1/2) int h^2 - h'^2
  EXPECT_NEAR(g.measure(), kPi * (1.0 + 0.005 - 0.02), 1e-12);
  EXPECT_NEAR(g.surface_area(), 2.0 * kPi, 1e-12);
  EXPECT_THROW(make_boundary_grid(SmoothBody::trig([](double t) { return 1.0 + 0.5 * std::cos(2.0 * t); }),
                                  Density::lebesgue(2)),
               DomainError);
}

TEST(BoundaryGrid, Errors) {
  EXPECT_THROW(make_boundary_grid(SmoothBody::disk(), Density::gaussian(3)), InputError);
  EXPECT_THROW(SmoothBody::ball(4, 1.0), InputError);
  EXPECT_THROW(SmoothBody::from_body(Body::cross_polytope(2, 1.0)), InputError);
  EXPECT_NO_THROW(SmoothBody::from_body(Body::box(vec2(1, 2))));
}

// Disk of radius 1, Lebesgue: Q(1) = 2pi(q - p), Q(cos 2k) = pi(2 - p - 4k^2).
TEST(LocalForm, DiskSpectrum) {
  const auto grid = make_boundary_grid(SmoothBody::disk(), Density::lebesgue(2));
  const Basis basis = default_basis(2, 6);
  for (auto [p, q] : {std::pair{1.0, 0.0}, {1.0, 1.0}, {0.5, 0.25}, {0.0, 0.0}}) {
    const auto fm = assemble_form(grid, p, (2.0 - q) / 2.0, basis);
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(fm.M, fm.G);
    std::vector<double> expect = {q - p};
    for (int k = 1; k <= 6; ++k) expect.insert(expect.end(), 2, 2.0 - p - 4.0 * k * k);
    std::sort(expect.begin(), expect.end());
    for (int i = 0; i < basis.size(); ++i) EXPECT_NEAR(es.eigenvalues()[i], expect[i], 1e-10);
  }
  EXPECT_NEAR(local_form_value(grid, 1.0, 0.0, TestFunction::constant(1.0)), -2.0 * kPi, 1e-10);
  EXPECT_NEAR(local_form_value(grid, 0.5, 0.0, TestFunction::cos_mode(2)), kPi * (1.5 - 4.0), 1e-10);
}

TEST(LocalForm, DiskZeroMode) {
  const auto grid = make_boundary_grid(SmoothBody::disk(), Density::lebesgue(2));
  const auto r10 = local_form_max(grid, 1.0, 0.0);
  EXPECT_LE(r10.max_eigenvalue, 1e-8 * r10.M.cwiseAbs().maxCoeff());
  const auto r11 = local_form_max(grid, 1.0, 1.0);
  EXPECT_NEAR(r11.max_eigenvalue, 0.0, 1e-10);
  EXPECT_TRUE(r11.holds);
  const Basis basis = default_basis(2);
  const Vec mode = mode_values(grid, basis, r11.argmax);
  const Vec h = support_mode(grid).g;
  const double s = mode.dot(h) / h.dot(h);
  EXPECT_LE((mode - s * h).norm(), 1e-6 * std::abs(s) * h.norm());
}

TEST(LocalForm, BallInThreeDimensions) {
  const auto grid = make_boundary_grid(SmoothBody::ball(3, 1.0), Density::lebesgue(3));
  const auto r = local_form_max(grid, 1.0, 1.0, default_basis(3, 4));
  EXPECT_NEAR(r.max_eigenvalue, 0.0, 1e-9);
  const auto r2 = local_form_max(grid, 1.0, 0.5, default_basis(3, 4));
  EXPECT_NEAR(r2.max_eigenvalue, -0.5, 1e-9);
}

TEST(LocalForm, SupportModeIsNullForBrunnMinkowski) {
  for (const Vec& a : {vec2(2, 1), vec2(1, 0.3)}) {
    const auto grid = make_boundary_grid(SmoothBody::ellipsoid(a), Density::lebesgue(2));
    const double scale = grid.measure();
    EXPECT_NEAR(local_form_value(grid, 1.0, 1.0, support_mode(grid)), 0.0, 1e-10 * scale);
    EXPECT_LE(local_form_max(grid, 1.0, 1.0).max_eigenvalue, 1e-8);
  }
}

TEST(LocalForm, MatrixMatchesDirectEvaluation) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  const auto grid = make_boundary_grid(SmoothBody::ellipsoid(vec2(1.3, 0.8)), Density::gaussian(2));
  const Basis basis = default_basis(2, 4);
  for (auto [p, q] : {std::pair{1.0, 0.0}, {0.7, 0.3}, {0.0, 0.0}}) {
    const auto fm = assemble_form(grid, p, (2.0 - q) / 2.0, basis);
    for (int t = 0; t < 5; ++t) {
      Vec c(basis.size());
      for (int i = 0; i < c.size(); ++i) c[i] = nd(rng);
      NodeField f{Vec::Zero(grid.size()), Mat::Zero(grid.size(), 2)};
      for (int i = 0; i < basis.size(); ++i) f = combine(f, c[i], fm.fields[i]);
      EXPECT_NEAR(c.dot(fm.M * c), local_form_value(grid, p, q, f), 1e-10 * (1.0 + std::abs(c.dot(fm.M * c))));
    }
  }
}

TEST(LocalForm, ImprovedFormConstantIsNull) {
  const auto grid = make_boundary_grid(SmoothBody::disk(1.3), Density::lebesgue(2));
  const auto ell = make_boundary_grid(SmoothBody::ellipsoid(vec2(2, 1)), Density::lebesgue(2));
  for (double p : {0.0, 0.3, 1.0}) {
    EXPECT_NEAR(improved_form_value(grid, p, TestFunction::constant(1.0)), 0.0, 1e-9);
    EXPECT_LT(improved_form_value(ell, p, TestFunction::constant(1.0)), 0.0);
  }
  const auto gg = make_boundary_grid(SmoothBody::disk(), Density::gaussian(2));
  EXPECT_THROW(improved_form_value(gg, 0.5, TestFunction::constant(1.0)), InputError);
}

TEST(LocalForm, NumericGradientMatchesAnalytic) {
  const auto grid = make_boundary_grid(SmoothBody::ellipsoid(vec2(1.4, 0.9)), Density::gaussian(2));
  const auto num = TestFunction::numeric([](const Vec& u) { return std::cos(4.0 * std::atan2(u[1], u[0])); });
  EXPECT_NEAR(local_form_value(grid, 0.5, 0.2, num), local_form_value(grid, 0.5, 0.2, TestFunction::cos_mode(4)),
              1e-6);
}

TEST(LocalForm, Errors) {
  const auto grid = make_boundary_grid(SmoothBody::disk(), Density::gaussian(2));
  EXPECT_THROW(local_form_max(grid, 0.5, 0.7), InputError);
  EXPECT_THROW(local_form_max(grid, 1.5, 0.0), InputError);
  EXPECT_THROW(local_form_value(grid, 1.0, 0.0, TestFunction::cos_mode(1)), InputError);
  Basis dup;
  dup.fns = {TestFunction::constant(1.0), TestFunction::constant(2.0)};
  EXPECT_THROW(local_form_max(grid, 1.0, 0.0, dup), DegenerateBasisError);
  EXPECT_THROW(default_basis(3, 3), InputError);
  EXPECT_THROW(default_basis(4), InputError);
}

TEST(Bochner, Identity) {
  const std::vector<SmoothBody> bodies = {SmoothBody::disk(), SmoothBody::ellipsoid(vec2(2, 1)),
                                          SmoothBody::smoothed_box(vec2(1.0, 0.5), 0.1)};
  for (const auto& k : bodies)
    for (const Density& mu : {Density::lebesgue(2), Density::gaussian(2), Density::power(2, 4.0)}) {
      const auto grid = make_boundary_grid(k, mu);
      for (const auto& u : {ScalarField::half_norm2(2), ScalarField::saddle(2), ScalarField::product(2)}) {
        const auto t = bochner_residual(u, grid);
        EXPECT_LE(std::abs(t.residual), 1e-6 * t.scale) << k.label << " " << mu.name() << " " << u.label;
        EXPECT_LE(std::abs(divergence_residual(u, grid)), 1e-8 * (1.0 + t.scale)) << k.label << " " << u.label;
      }
    }
  const auto g3 = make_boundary_grid(SmoothBody::ellipsoid(vec3(1, 1.5, 0.8)), Density::gaussian(3));
  const auto t = bochner_residual(ScalarField::saddle(3, 0, 2), g3);
  EXPECT_LE(std::abs(t.residual), 1e-6 * t.scale);
}

// For u = |x|^2/2 under Lebesgue on the disk: Lu = 2, ||hess||^2 = 2, u_n = 1, grad_dK u = 0.
TEST(Bochner, DiskTermsByHand) {
  const auto grid = make_boundary_grid(SmoothBody::disk(), Density::lebesgue(2));
  const auto t = bochner_residual(ScalarField::half_norm2(2), grid);
  EXPECT_NEAR(t.lu2, 4.0 * kPi, 1e-10);
  EXPECT_NEAR(t.hess2, 2.0 * kPi, 1e-10);
  EXPECT_NEAR(t.boundary, 2.0 * kPi, 1e-10);
}

TEST(RayDecreasing, SupportFunctionEqualityUnderLebesgue) {
  const auto grid = make_boundary_grid(SmoothBody::ellipsoid(vec2(1.7, 0.6)), Density::lebesgue(2));
  std::vector<double> hs;
  for (const auto& nd : grid.nodes()) hs.push_back(nd.h);
  // f(u) = h(u) reproduces the node values exactly
  const auto r = ray_decreasing_check(grid, [](const Vec& u) { return std::hypot(1.7 * u[0], 0.6 * u[1]); });
  EXPECT_NEAR(r.margin, 0.0, 1e-9 * r.rhs);
  EXPECT_TRUE(r.holds);
}

TEST(RayDecreasing, RandomEvenFunctions) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> c(-0.3, 0.3);
  for (const Density& mu : {Density::gaussian(2), Density::power(2, 4.0)}) {
    const auto grid = make_boundary_grid(SmoothBody::ellipsoid(vec2(1.2, 0.7)), mu);
    for (int t = 0; t < 20; ++t) {
      const double a = c(rng), b = c(rng);
      const auto r = ray_decreasing_check(grid, [&](const Vec& u) {
        const double th = std::atan2(u[1], u[0]);
        return 1.0 + a * std::cos(2.0 * th) + b * std::sin(4.0 * th);
      });
      EXPECT_TRUE(r.holds) << r.margin;
    }
  }
  const auto grid = make_boundary_grid(SmoothBody::disk(), Density::gaussian(2));
  EXPECT_THROW(ray_decreasing_check(grid, [](const Vec&) { return -1.0; }), InputError);
}

TEST(PointwiseMatrix, RandomDraws) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> pos(0.01, 10.0);
  std::uniform_int_distribution<int> dim(1, 5);
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
    A = 0.5 * (A + A.transpose()).eval();
    worst = std::min(worst, pointwise_matrix_margin(A, v, w, pos(rng), pos(rng)));
  }
  EXPECT_GE(worst, -1e-9);
}

// Equality: A = s I, v = -s a w / b gives zero margin.
TEST(PointwiseMatrix, EqualityCase) {
  const Mat A = 0.7 * Mat::Identity(3, 3);
  const Vec w = vec3(0.2, -1.0, 0.5);
  const double a = 2.0, b = 0.5;
  const Vec v = -0.7 * a / b * w;
  EXPECT_NEAR(pointwise_matrix_margin(A, v, w, a, b), 0.0, 1e-12);
  EXPECT_THROW(pointwise_matrix_margin(A, v, w, 0.0, b), InputError);
  EXPECT_THROW(pointwise_matrix_margin(A, vec2(1, 1), w, a, b), InputError);
}
