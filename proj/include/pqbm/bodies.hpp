#pragma once

#include "pqbm/core.hpp"
#include "pqbm/lp.hpp"
#include "pqbm/polygon.hpp"
#include "pqbm/sphere_grid.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pqbm {

// ---------------------------------------------------------------------------
// H-polytopes
// ---------------------------------------------------------------------------

// Polytope {x : <u_i, x> <= h_i}. Normals are stored as unit rows; a
// non-normalized row is rescaled together with its height.
class HPolytope {
 public:
  HPolytope(Mat normals, Vec heights) : normals_(std::move(normals)), heights_(std::move(heights)) {
    require(normals_.rows() == heights_.size(), "HPolytope: normals/heights size mismatch");
    require(normals_.rows() >= normals_.cols() + 1, "HPolytope: too few halfspaces");
    check_dim(static_cast<int>(normals_.cols()));
    for (Eigen::Index i = 0; i < normals_.rows(); ++i) {
      const double r = normals_.row(i).norm();
      require(r > 0.0, "HPolytope: zero normal");
      normals_.row(i) /= r;
      heights_[i] /= r;
    }
    if (dim() == 2 && heights_.minCoeff() > 0.0)
      polygon_ = std::make_shared<const geom::Polygon>(geom::polygon_from_halfplanes(normals_, heights_));
    if (dim() > 2 && heights_.minCoeff() > 0.0) check_bounded();
  }

  int dim() const { return static_cast<int>(normals_.cols()); }
  int size() const { return static_cast<int>(normals_.rows()); }
  const Mat& normals() const { return normals_; }
  const Vec& heights() const { return heights_; }
  Vec normal(int i) const { return normals_.row(i).transpose(); }

  bool contains(const Vec& x, double tol = 0.0) const {
    if (polygon_ && tol == 0.0) return polygon_->gauge(x) <= 1.0;
    return (normals_ * x - heights_).maxCoeff() <= tol;
  }

  // Minkowski gauge; requires the origin in the interior.
  double gauge(const Vec& x) const {
    if (!(heights_.minCoeff() > 0.0)) throw DomainError("HPolytope::gauge: origin not interior");
    if (polygon_) return polygon_->gauge(x);
    return std::max(0.0, (normals_ * x).cwiseQuotient(heights_).maxCoeff());
  }

  double support(const Vec& u) const {
    if (polygon_) return polygon_->support(u);
    const auto res = lp::support_lp(normals_, heights_, u);
    if (!res.bounded) throw DomainError("HPolytope: unbounded in the requested direction");
    return res.value;
  }

  bool symmetric(double tol = 1e-12) const {
    for (int i = 0; i < size(); ++i) {
      bool found = false;
      for (int j = 0; j < size() && !found; ++j)
        found = (normals_.row(i) + normals_.row(j)).norm() <= tol &&
                std::abs(heights_[i] - heights_[j]) <= tol * std::max(1.0, std::abs(heights_[i]));
      if (!found) return false;
    }
    return true;
  }

  bool has_polygon() const { return static_cast<bool>(polygon_); }
  const geom::Polygon& polygon() const {
    if (!polygon_) throw DomainError("HPolytope::polygon: planar polytope with positive heights required");
    return *polygon_;
  }

  // Vertices: exact polygon in the plane, brute-force enumeration over
  // n-subsets of constraints otherwise (small N only).
  std::vector<Vec> vertices(double tol = 1e-9) const {
    if (polygon_) return polygon_->vertices;
    const int n = dim();
    const int m = size();
    double combos = 1.0;
    for (int k = 0; k < n; ++k) combos = combos * (m - k) / (k + 1);
    if (combos > 2e6) throw InputError("HPolytope::vertices: too many constraints for enumeration");
    const double scale = std::max(1.0, heights_.cwiseAbs().maxCoeff());
    std::vector<Vec> out;
    std::vector<int> idx(n);
    for (int k = 0; k < n; ++k) idx[k] = k;
    Mat A(n, n);
    Vec b(n);
    while (true) {
      for (int k = 0; k < n; ++k) {
        A.row(k) = normals_.row(idx[k]);
        b[k] = heights_[idx[k]];
      }
      Eigen::FullPivLU<Mat> lu(A);
      if (lu.isInvertible() && std::abs(lu.determinant()) > 1e-12) {
        const Vec x = lu.solve(b);
        if (contains(x, tol * scale)) {
          bool dup = false;
          for (const Vec& v : out) dup |= (v - x).norm() <= 1e-8 * scale;
          if (!dup) out.push_back(x);
        }
      }
      int k = n - 1;
      while (k >= 0 && idx[k] == m - n + k) --k;
      if (k < 0) break;
      ++idx[k];
      for (int j = k + 1; j < n; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
  }

  // Drops halfspaces whose support value is not attained (redundant
  // constraints), by a direct support-value test per normal.
  HPolytope reduced(double tol = 1e-10) const {
    std::vector<int> keep;
    for (int i = 0; i < size(); ++i) {
      const double s = support(normal(i));
      if (s >= heights_[i] - tol * std::max(1.0, std::abs(heights_[i]))) keep.push_back(i);
    }
    Mat nn(keep.size(), dim());
    Vec hh(keep.size());
    for (std::size_t k = 0; k < keep.size(); ++k) {
      nn.row(k) = normals_.row(keep[k]);
      hh[k] = heights_[keep[k]];
    }
    return HPolytope(std::move(nn), std::move(hh));
  }

  double inradius() const { return std::max(0.0, heights_.minCoeff()); }

  double circumradius() const {
    if (polygon_) {
      double r = 0.0;
      for (const Vec& v : polygon_->vertices) r = std::max(r, v.norm());
      return r;
    }
    // Bounding-box bound; exact enumeration is too costly for grid polytopes.
    double s = 0.0;
    for (int d = 0; d < dim(); ++d) {
      Vec e = Vec::Zero(dim());
      e[d] = 1.0;
      const double hi = support(e);
      const double lo = support(-e);
      s += std::pow(std::max(std::abs(hi), std::abs(lo)), 2);
    }
    return std::sqrt(s);
  }

 private:
  void check_bounded() const {
    for (int d = 0; d < dim(); ++d)
      for (double sgn : {1.0, -1.0}) {
        Vec e = Vec::Zero(dim());
        e[d] = sgn;
        if (!lp::support_lp(normals_, heights_, e).bounded)
          throw DomainError("HPolytope: normals do not positively span R^n (unbounded)");
      }
  }

  Mat normals_;
  Vec heights_;
  std::shared_ptr<const geom::Polygon> polygon_;
};

// ---------------------------------------------------------------------------
// Bodies
// ---------------------------------------------------------------------------

struct BallShape {
  double radius;
};
struct BoxShape {
  Vec half_widths;
};
struct EllipsoidShape {
  Vec semi_axes;
};
// {x : ||x||_q <= scale}
struct LqBallShape {
  double q;
  double scale;
};
struct CrossPolytopeShape {
  double scale;
};
// Translated ball; the only non-symmetric family (counterexample mode).
struct ShiftedBallShape {
  double radius;
  Vec center;
};

using Shape = std::variant<BallShape, BoxShape, EllipsoidShape, LqBallShape, CrossPolytopeShape,
                           ShiftedBallShape, HPolytope>;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

class Body {
 public:
  static Body ball(int n, double r) {
    check_dim(n);
    require(r > 0.0, "ball: radius must be positive");
    return Body(n, BallShape{r});
  }
  static Body box(Vec a) {
    const int n = static_cast<int>(a.size());
    check_dim(n);
    require(a.minCoeff() > 0.0, "box: half-widths must be positive");
    return Body(n, BoxShape{std::move(a)});
  }
  static Body cube(int n, double a) { return box(Vec::Constant(n, a)); }
  static Body ellipsoid(Vec a) {
    const int n = static_cast<int>(a.size());
    check_dim(n);
    require(a.minCoeff() > 0.0, "ellipsoid: semi-axes must be positive");
    return Body(n, EllipsoidShape{std::move(a)});
  }
  static Body lq_ball(int n, double q, double scale) {
    check_dim(n);
    require(q >= 1.0, "lq_ball: q must be >= 1");
    require(scale > 0.0, "lq_ball: scale must be positive");
    return Body(n, LqBallShape{q, scale});
  }
  static Body cross_polytope(int n, double scale) {
    check_dim(n);
    require(scale > 0.0, "cross_polytope: scale must be positive");
    return Body(n, CrossPolytopeShape{scale});
  }
  static Body shifted_ball(double r, Vec c) {
    const int n = static_cast<int>(c.size());
    check_dim(n);
    require(r > 0.0, "shifted_ball: radius must be positive");
    return Body(n, ShiftedBallShape{r, std::move(c)});
  }
  static Body polytope(HPolytope p) {
    const int n = p.dim();
    if (!(p.heights().minCoeff() > 0.0))
      throw DomainError("polytope: the origin must be an interior point");
    return Body(n, std::move(p));
  }
  // Planar polytope from unit normals at the given angles.
  static Body polygon(const std::vector<double>& angles, const std::vector<double>& heights) {
    require(angles.size() == heights.size(), "polygon: size mismatch");
    Mat nn(angles.size(), 2);
    Vec hh(heights.size());
    for (std::size_t i = 0; i < angles.size(); ++i) {
      nn.row(i) << std::cos(angles[i]), std::sin(angles[i]);
      hh[i] = heights[i];
    }
    return polytope(HPolytope(std::move(nn), std::move(hh)));
  }

  int dim() const { return n_; }
  const Shape& shape() const { return shape_; }

  std::string family() const {
    return std::visit(overloaded{[](const BallShape&) { return std::string("ball"); },
                                 [](const BoxShape&) { return std::string("box"); },
                                 [](const EllipsoidShape&) { return std::string("ellipsoid"); },
                                 [](const LqBallShape&) { return std::string("lq_ball"); },
                                 [](const CrossPolytopeShape&) { return std::string("cross_polytope"); },
                                 [](const ShiftedBallShape&) { return std::string("shifted_ball"); },
                                 [](const HPolytope&) { return std::string("polytope"); }},
                      shape_);
  }

  // h_K(u); u need not be normalized (1-homogeneous extension).
  double support(const Vec& u) const {
    require(u.size() == n_, "support: dimension mismatch");
    return std::visit(
        overloaded{[&](const BallShape& s) { return s.radius * u.norm(); },
                   [&](const BoxShape& s) { return s.half_widths.dot(u.cwiseAbs()); },
                   [&](const EllipsoidShape& s) { return u.cwiseProduct(s.semi_axes).norm(); },
                   [&](const LqBallShape& s) { return s.scale * lp_norm(u, conjugate(s.q)); },
                   [&](const CrossPolytopeShape& s) { return s.scale * u.cwiseAbs().maxCoeff(); },
                   [&](const ShiftedBallShape& s) { return s.radius * u.norm() + s.center.dot(u); },
                   [&](const HPolytope& p) { return p.support(u); }},
        shape_);
  }
  double support(const Direction& u) const { return support(u.vec()); }

  // Minkowski gauge ||x||_K (origin must be interior).
  double gauge(const Vec& x) const {
    require(x.size() == n_, "gauge: dimension mismatch");
    return std::visit(
        overloaded{[&](const BallShape& s) { return x.norm() / s.radius; },
                   [&](const BoxShape& s) { return x.cwiseAbs().cwiseQuotient(s.half_widths).maxCoeff(); },
                   [&](const EllipsoidShape& s) { return x.cwiseQuotient(s.semi_axes).norm(); },
                   [&](const LqBallShape& s) { return lp_norm(x, s.q) / s.scale; },
                   [&](const CrossPolytopeShape& s) { return x.lpNorm<1>() / s.scale; },
                   [&](const ShiftedBallShape& s) -> double {
                     const double c2 = s.center.squaredNorm();
                     if (c2 >= s.radius * s.radius) throw DomainError("gauge: origin not interior");
                     const double xn = x.norm();
                     if (xn == 0.0) return 0.0;
                     return xn / radial_shifted(s, x / xn);
                   },
                   [&](const HPolytope& p) { return p.gauge(x); }},
        shape_);
  }

  bool contains(const Vec& x) const {
    return std::visit(overloaded{[&](const ShiftedBallShape& s) { return (x - s.center).norm() <= s.radius; },
                                 [&](const HPolytope& p) { return p.contains(x); },
                                 [&](const auto&) { return gauge(x) <= 1.0; }},
                      shape_);
  }

  // Radial function rho(u) = 1/||u||_K for unit u.
  double radial(const Vec& u) const {
    if (const auto* s = std::get_if<ShiftedBallShape>(&shape_)) {
      if (s->center.squaredNorm() >= s->radius * s->radius) throw DomainError("radial: origin not interior");
      return radial_shifted(*s, u / u.norm());
    }
    return u.norm() / gauge(u);
  }

  double inradius() const { return inradius_; }
  double circumradius() const { return circumradius_; }

  // Axis-aligned box [lo, hi] containing the body.
  Vec box_lo() const { return box_lo_; }
  Vec box_hi() const { return box_hi_; }

  bool symmetric() const {
    return std::visit(overloaded{[](const ShiftedBallShape& s) { return s.center.norm() == 0.0; },
                                 [](const HPolytope& p) { return p.symmetric(1e-9); },
                                 [](const auto&) { return true; }},
                      shape_);
  }

  // H-representation for polytopal families.
  std::optional<HPolytope> as_hpolytope() const {
    if (const auto* p = std::get_if<HPolytope>(&shape_)) return *p;
    if (const auto* b = std::get_if<BoxShape>(&shape_)) {
      Mat nn = Mat::Zero(2 * n_, n_);
      Vec hh(2 * n_);
      for (int d = 0; d < n_; ++d) {
        nn(2 * d, d) = 1.0;
        nn(2 * d + 1, d) = -1.0;
        hh[2 * d] = hh[2 * d + 1] = b->half_widths[d];
      }
      return HPolytope(std::move(nn), std::move(hh));
    }
    if (const auto* c = std::get_if<CrossPolytopeShape>(&shape_)) {
      const int m = 1 << n_;
      Mat nn(m, n_);
      Vec hh = Vec::Constant(m, c->scale);
      for (int k = 0; k < m; ++k)
        for (int d = 0; d < n_; ++d) nn(k, d) = (k >> d & 1) ? -1.0 : 1.0;
      return HPolytope(std::move(nn), std::move(hh));  // rows get normalized
    }
    return std::nullopt;
  }
  bool is_polytope() const { return as_hpolytope().has_value(); }

  // tK for t > 0.
  Body scaled(double t) const {
    require(t > 0.0, "scaled: factor must be positive");
    return std::visit(overloaded{[&](const BallShape& s) { return Body(n_, BallShape{s.radius * t}); },
                                 [&](const BoxShape& s) { return Body(n_, BoxShape{s.half_widths * t}); },
                                 [&](const EllipsoidShape& s) { return Body(n_, EllipsoidShape{s.semi_axes * t}); },
                                 [&](const LqBallShape& s) { return Body(n_, LqBallShape{s.q, s.scale * t}); },
                                 [&](const CrossPolytopeShape& s) { return Body(n_, CrossPolytopeShape{s.scale * t}); },
                                 [&](const ShiftedBallShape& s) {
                                   return Body(n_, ShiftedBallShape{s.radius * t, s.center * t});
                                 },
                                 [&](const HPolytope& p) { return Body(n_, HPolytope(p.normals(), p.heights() * t)); }},
                      shape_);
  }

  // Angles in [0, 2pi) where the planar radial function has kinks.
  std::vector<double> kink_angles() const {
    std::vector<double> out;
    if (n_ != 2) return out;
    auto add = [&](const Vec& v) {
      double a = std::atan2(v[1], v[0]);
      if (a < 0.0) a += 2.0 * std::numbers::pi;
      out.push_back(a);
    };
    if (const auto* p = std::get_if<HPolytope>(&shape_)) {
      for (const Vec& v : p->polygon().vertices) add(v);
    } else if (const auto* b = std::get_if<BoxShape>(&shape_)) {
      const double a0 = b->half_widths[0], a1 = b->half_widths[1];
      add(vec2(a0, a1));
      add(vec2(-a0, a1));
      add(vec2(-a0, -a1));
      add(vec2(a0, -a1));
    } else if (std::holds_alternative<CrossPolytopeShape>(shape_)) {
      for (double a : {0.0, 0.5, 1.0, 1.5}) out.push_back(a * std::numbers::pi);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  // Exact equality of representations (used to short-circuit K = L).
  bool same_as(const Body& o) const {
    if (n_ != o.n_ || shape_.index() != o.shape_.index()) return false;
    return std::visit(
        overloaded{[&](const BallShape& s) { return s.radius == std::get<BallShape>(o.shape_).radius; },
                   [&](const BoxShape& s) { return s.half_widths == std::get<BoxShape>(o.shape_).half_widths; },
                   [&](const EllipsoidShape& s) { return s.semi_axes == std::get<EllipsoidShape>(o.shape_).semi_axes; },
                   [&](const LqBallShape& s) {
                     const auto& t = std::get<LqBallShape>(o.shape_);
                     return s.q == t.q && s.scale == t.scale;
                   },
                   [&](const CrossPolytopeShape& s) { return s.scale == std::get<CrossPolytopeShape>(o.shape_).scale; },
                   [&](const ShiftedBallShape& s) {
                     const auto& t = std::get<ShiftedBallShape>(o.shape_);
                     return s.radius == t.radius && s.center == t.center;
                   },
                   [&](const HPolytope& p) {
                     const auto& q = std::get<HPolytope>(o.shape_);
                     return p.normals() == q.normals() && p.heights() == q.heights();
                   }},
        shape_);
  }

  // Returns t when o = tK within a relative tolerance (same family only).
  std::optional<double> dilation_factor_of(const Body& o, double tol = 1e-13) const {
    if (n_ != o.n_ || shape_.index() != o.shape_.index()) return std::nullopt;
    auto ratio_of = [&](const Vec& a, const Vec& b) -> std::optional<double> {
      if (a.size() != b.size()) return std::nullopt;
      const double t = b[0] / a[0];
      for (Eigen::Index i = 0; i < a.size(); ++i)
        if (std::abs(b[i] - t * a[i]) > tol * std::abs(b[i])) return std::nullopt;
      return t;
    };
    return std::visit(
        overloaded{
            [&](const BallShape& s) -> std::optional<double> { return std::get<BallShape>(o.shape_).radius / s.radius; },
            [&](const BoxShape& s) { return ratio_of(s.half_widths, std::get<BoxShape>(o.shape_).half_widths); },
            [&](const EllipsoidShape& s) { return ratio_of(s.semi_axes, std::get<EllipsoidShape>(o.shape_).semi_axes); },
            [&](const LqBallShape& s) -> std::optional<double> {
              const auto& t = std::get<LqBallShape>(o.shape_);
              if (t.q != s.q) return std::nullopt;
              return t.scale / s.scale;
            },
            [&](const CrossPolytopeShape& s) -> std::optional<double> {
              return std::get<CrossPolytopeShape>(o.shape_).scale / s.scale;
            },
            [&](const ShiftedBallShape&) -> std::optional<double> { return std::nullopt; },
            [&](const HPolytope& p) -> std::optional<double> {
              const auto& q = std::get<HPolytope>(o.shape_);
              if (p.normals() != q.normals()) return std::nullopt;
              return ratio_of(p.heights(), q.heights());
            }},
        shape_);
  }

 private:
  Body(int n, Shape s) : n_(n), shape_(std::move(s)) { cache_extents(); }

  static double conjugate(double q) { return q == 1.0 ? std::numeric_limits<double>::infinity() : q / (q - 1.0); }

  static double lp_norm(const Vec& x, double q) {
    if (std::isinf(q)) return x.cwiseAbs().maxCoeff();
    const double m = x.cwiseAbs().maxCoeff();
    if (m == 0.0) return 0.0;
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]) / m, q);
    return m * std::pow(s, 1.0 / q);
  }

  static double radial_shifted(const ShiftedBallShape& s, const Vec& u) {
    const double b = s.center.dot(u);
    const double disc = b * b - s.center.squaredNorm() + s.radius * s.radius;
    return b + std::sqrt(std::max(0.0, disc));
  }

  void cache_extents() {
    box_lo_.resize(n_);
    box_hi_.resize(n_);
    for (int d = 0; d < n_; ++d) {
      Vec e = Vec::Zero(n_);
      e[d] = 1.0;
      box_hi_[d] = support(e);
      box_lo_[d] = -support(-e);
    }
    std::visit(overloaded{[&](const BallShape& s) { inradius_ = circumradius_ = s.radius; },
                          [&](const BoxShape& s) {
                            inradius_ = s.half_widths.minCoeff();
                            circumradius_ = s.half_widths.norm();
                          },
                          [&](const EllipsoidShape& s) {
                            inradius_ = s.semi_axes.minCoeff();
                            circumradius_ = s.semi_axes.maxCoeff();
                          },
                          [&](const LqBallShape& s) {
                            const double f = std::pow(static_cast<double>(n_), 0.5 - 1.0 / s.q);
                            inradius_ = s.q >= 2.0 ? s.scale : s.scale * f;
                            circumradius_ = s.q >= 2.0 ? s.scale * f : s.scale;
                          },
                          [&](const CrossPolytopeShape& s) {
                            inradius_ = s.scale / std::sqrt(static_cast<double>(n_));
                            circumradius_ = s.scale;
                          },
                          [&](const ShiftedBallShape& s) {
                            inradius_ = std::max(0.0, s.radius - s.center.norm());
                            circumradius_ = s.radius + s.center.norm();
                          },
                          [&](const HPolytope& p) {
                            inradius_ = p.inradius();
                            circumradius_ = p.circumradius();
                          }},
               shape_);
  }

  int n_;
  Shape shape_;
  double inradius_ = 0.0;
  double circumradius_ = 0.0;
  Vec box_lo_, box_hi_;
};

inline std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string fmt_vec(const Vec& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_num(v[i]);
  return s + "]";
}

// Short human-readable description, e.g. "ball(r=1.3,n=2)".
inline std::string describe(const Body& k) {
  const std::string n = ",n=" + std::to_string(k.dim());
  return std::visit(
      overloaded{[&](const BallShape& s) { return "ball(r=" + fmt_num(s.radius) + n + ")"; },
                 [&](const BoxShape& s) { return "box(a=" + fmt_vec(s.half_widths) + ")"; },
                 [&](const EllipsoidShape& s) { return "ellipsoid(a=" + fmt_vec(s.semi_axes) + ")"; },
                 [&](const LqBallShape& s) { return "lq_ball(q=" + fmt_num(s.q) + ",s=" + fmt_num(s.scale) + n + ")"; },
                 [&](const CrossPolytopeShape& s) { return "cross_polytope(s=" + fmt_num(s.scale) + n + ")"; },
                 [&](const ShiftedBallShape& s) {
                   return "shifted_ball(r=" + fmt_num(s.radius) + ",c=" + fmt_vec(s.center) + ")";
                 },
                 [&](const HPolytope& p) { return "polytope(N=" + std::to_string(p.size()) + n + ")"; }},
      k.shape());
}

// Support-dominance inclusion test: K subset L iff h_K <= h_L on the
// evaluation grid (plus tolerance).
inline bool contains(const Body& outer, const Body& inner, double tol = 1e-10) {
  require(outer.dim() == inner.dim(), "contains: dimension mismatch");
  const Mat& g = default_grid(outer.dim());
  for (Eigen::Index j = 0; j < g.rows(); ++j) {
    const Vec u = g.row(j).transpose();
    if (inner.support(u) > outer.support(u) + tol) return false;
  }
  return true;
}

// min over the evaluation grid of h_K; exact for symmetric bodies whose
// minimum is attained on the grid, and cached for analytic families.
inline double inradius(const Body& k) { return k.inradius(); }

inline double grid_inradius(const Body& k) {
  const Mat& g = default_grid(k.dim());
  double r = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < g.rows(); ++j) r = std::min(r, k.support(Vec(g.row(j).transpose())));
  return r;
}

}  // namespace pqbm
