#pragma once

#include "pqbm/bodies.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>

namespace pqbm {

// Real function on the unit sphere. `constant` is set for constant functions
// so that downstream code can recognize them without sampling.
struct SphereFunction {
  std::function<double(const Vec&)> f;
  std::optional<double> constant;
  std::string label = "custom";

  double operator()(const Vec& u) const { return constant ? *constant : f(u); }

  static SphereFunction constant_fn(double c) {
    return {[c](const Vec&) { return c; }, c, "const(" + std::to_string(c) + ")"};
  }
  static SphereFunction of(std::function<double(const Vec&)> f, std::string label = "custom") {
    return {std::move(f), std::nullopt, std::move(label)};
  }
};

// p-mean of two reals with weight lambda on the first argument. p = 0 is the
// geometric mean; p = 1 also accepts signed values.
inline double p_mean(double a, double b, double lambda, double p) {
  if (lambda == 1.0) return a;
  if (lambda == 0.0) return b;
  if (p == 1.0) return lambda * a + (1.0 - lambda) * b;
  if (!(a > 0.0 && b > 0.0)) throw DomainError("p-mean with p < 1 needs positive values");
  if (p == 0.0) return std::exp(lambda * std::log(a) + (1.0 - lambda) * std::log(b));
  return std::pow(lambda * std::pow(a, p) + (1.0 - lambda) * std::pow(b, p), 1.0 / p);
}

class SupportFunction;
using SupportFunctionPtr = std::shared_ptr<const SupportFunction>;

class SupportFunction {
 public:
  struct OfBody {
    Body body;
  };
  // Values on a direction set; exact at the nodes and the support function of
  // the intersection of the node halfspaces elsewhere.
  struct Sampled {
    Mat dirs;
    Vec values;
    std::shared_ptr<const HPolytope> hull;
  };
  struct PMean {
    SupportFunctionPtr first;
    SupportFunctionPtr second;
    double lambda;  // weight on `first`
    double p;
  };
  // base + eps * w
  struct Perturbed {
    SupportFunctionPtr base;
    double eps;
    SphereFunction w;
    Mat extra_normals;  // rows added to the Wulff sampling set
  };
  struct Custom {
    int dim;
    SphereFunction f;
  };
  using Kind = std::variant<OfBody, Sampled, PMean, Perturbed, Custom>;

  explicit SupportFunction(Kind k) : kind_(std::move(k)) {}

  static SupportFunctionPtr of(const Body& k) { return std::make_shared<SupportFunction>(OfBody{k}); }
  static SupportFunctionPtr sampled(Mat dirs, Vec values) {
    require(dirs.rows() == values.size(), "sampled support: size mismatch");
    for (Eigen::Index i = 0; i < dirs.rows(); ++i)
      require(std::abs(dirs.row(i).norm() - 1.0) <= 1e-12, "sampled support: directions must be unit");
    auto hull = std::make_shared<const HPolytope>(dirs, values);
    return std::make_shared<SupportFunction>(Sampled{std::move(dirs), std::move(values), std::move(hull)});
  }
  static SupportFunctionPtr custom(int n, SphereFunction f) {
    check_dim(n);
    return std::make_shared<SupportFunction>(Custom{n, std::move(f)});
  }
  static SupportFunctionPtr perturbed(SupportFunctionPtr base, double eps, SphereFunction w, Mat extra_normals = {}) {
    return std::make_shared<SupportFunction>(Perturbed{std::move(base), eps, std::move(w), std::move(extra_normals)});
  }

  const Kind& kind() const { return kind_; }

  int dim() const {
    return std::visit(overloaded{[](const OfBody& k) { return k.body.dim(); },
                                 [](const Sampled& s) { return static_cast<int>(s.dirs.cols()); },
                                 [](const PMean& m) { return m.first->dim(); },
                                 [](const Perturbed& t) { return t.base->dim(); },
                                 [](const Custom& c) { return c.dim; }},
                      kind_);
  }

  // Value at a unit direction.
  double operator()(const Vec& u) const {
    return std::visit(overloaded{[&](const OfBody& k) { return k.body.support(u); },
                                 [&](const Sampled& s) {
                                   for (Eigen::Index i = 0; i < s.dirs.rows(); ++i)
                                     if ((s.dirs.row(i).transpose() - u).squaredNorm() < 1e-28) return s.values[i];
                                   return s.hull->support(u);
                                 },
                                 [&](const PMean& m) { return p_mean((*m.first)(u), (*m.second)(u), m.lambda, m.p); },
                                 [&](const Perturbed& t) { return (*t.base)(u) + t.eps * t.w(u); },
                                 [&](const Custom& c) { return c.f(u); }},
                      kind_);
  }
  double operator()(const Direction& u) const { return (*this)(u.vec()); }

  // Values on the rows of `dirs`.
  Vec on(const Mat& dirs) const {
    Vec v(dirs.rows());
    for (Eigen::Index j = 0; j < dirs.rows(); ++j) v[j] = (*this)(Vec(dirs.row(j).transpose()));
    return v;
  }

 private:
  Kind kind_;
};

// u -> (lambda h_K^p + (1-lambda) h_L^p)^{1/p}.
inline SupportFunctionPtr p_combine(SupportFunctionPtr k, SupportFunctionPtr l, double lambda, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("p_combine: p must lie in [0,1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InputError("p_combine: lambda must lie in [0,1]");
  require(k->dim() == l->dim(), "p_combine: dimension mismatch");
  if (p < 1.0) {
    for (const auto& f : {k, l}) {
      if (const auto* b = std::get_if<SupportFunction::OfBody>(&f->kind())) {
        if (!b->body.symmetric() && b->body.inradius() <= 0.0)
          throw DomainError("p_combine: nonpositive support function with p < 1");
      }
    }
  }
  return std::make_shared<SupportFunction>(SupportFunction::PMean{std::move(k), std::move(l), lambda, p});
}

inline SupportFunctionPtr p_combine(const Body& k, const Body& l, double lambda, double p) {
  return p_combine(SupportFunction::of(k), SupportFunction::of(l), lambda, p);
}

namespace detail {

inline void collect_normals(const SupportFunction& f, std::vector<Vec>& out) {
  std::visit(overloaded{[&](const SupportFunction::OfBody& k) {
                          if (auto hp = k.body.as_hpolytope())
                            for (int i = 0; i < hp->size(); ++i) out.push_back(hp->normal(i));
                        },
                        [&](const SupportFunction::Sampled& s) {
                          for (Eigen::Index i = 0; i < s.dirs.rows(); ++i) out.push_back(s.dirs.row(i).transpose());
                        },
                        [&](const SupportFunction::PMean& m) {
                          collect_normals(*m.first, out);
                          collect_normals(*m.second, out);
                        },
                        [&](const SupportFunction::Perturbed& t) {
                          collect_normals(*t.base, out);
                          for (Eigen::Index i = 0; i < t.extra_normals.rows(); ++i)
                            out.push_back(t.extra_normals.row(i).transpose());
                        },
                        [&](const SupportFunction::Custom&) {}},
             f.kind());
}

// Polytopal support functions whose own normals suffice for an exact planar
// Wulff shape (p-means of polygons are polygons on the union of normals).
inline bool planar_polytopal(const SupportFunction& f) {
  return std::visit(overloaded{[](const SupportFunction::OfBody& k) { return k.body.dim() == 2 && k.body.is_polytope(); },
                               [](const SupportFunction::Sampled& s) { return s.dirs.cols() == 2; },
                               [](const SupportFunction::PMean& m) {
                                 return planar_polytopal(*m.first) && planar_polytopal(*m.second);
                               },
                               [](const auto&) { return false; }},
                    f.kind());
}

inline std::optional<Body> closed_form_wulff(const SupportFunction& f);

inline std::optional<Body> closed_form_pmean(const SupportFunction::PMean& m) {
  if (m.lambda == 1.0) return closed_form_wulff(*m.first);
  if (m.lambda == 0.0) return closed_form_wulff(*m.second);
  auto a = closed_form_wulff(*m.first);
  auto b = closed_form_wulff(*m.second);
  if (!a || !b) return std::nullopt;
  if (a->same_as(*b)) return a;
  if (auto t = a->dilation_factor_of(*b)) return a->scaled(p_mean(1.0, *t, m.lambda, m.p));
  const auto* ba = std::get_if<BallShape>(&a->shape());
  const auto* bb = std::get_if<BallShape>(&b->shape());
  if (ba && bb) return Body::ball(a->dim(), p_mean(ba->radius, bb->radius, m.lambda, m.p));
  const auto* xa = std::get_if<BoxShape>(&a->shape());
  const auto* xb = std::get_if<BoxShape>(&b->shape());
  if (xa && xb) {
    Vec c(a->dim());
    for (int d = 0; d < a->dim(); ++d) c[d] = p_mean(xa->half_widths[d], xb->half_widths[d], m.lambda, m.p);
    return Body::box(std::move(c));
  }
  if (m.p == 1.0) {
    auto as_shifted = [](const Body& k) -> std::optional<ShiftedBallShape> {
      if (const auto* s = std::get_if<ShiftedBallShape>(&k.shape())) return *s;
      if (const auto* s = std::get_if<BallShape>(&k.shape())) return ShiftedBallShape{s->radius, Vec::Zero(k.dim())};
      return std::nullopt;
    };
    auto sa = as_shifted(*a);
    auto sb = as_shifted(*b);
    if (sa && sb)
      return Body::shifted_ball(m.lambda * sa->radius + (1.0 - m.lambda) * sb->radius,
                                m.lambda * sa->center + (1.0 - m.lambda) * sb->center);
  }
  return std::nullopt;
}

inline std::optional<Body> closed_form_wulff(const SupportFunction& f) {
  return std::visit(
      overloaded{[](const SupportFunction::OfBody& k) -> std::optional<Body> { return k.body; },
                 [](const SupportFunction::PMean& m) { return closed_form_pmean(m); },
                 [](const SupportFunction::Perturbed& t) -> std::optional<Body> {
                   if (!t.w.constant) return std::nullopt;
                   auto base = closed_form_wulff(*t.base);
                   if (!base) return std::nullopt;
                   if (const auto* b = std::get_if<BallShape>(&base->shape())) {
                     const double r = b->radius + t.eps * *t.w.constant;
                     if (!(r > 0.0)) throw DomainError("wulff: perturbed ball has nonpositive radius");
                     return Body::ball(base->dim(), r);
                   }
                   return std::nullopt;
                 },
                 [](const SupportFunction::Custom& c) -> std::optional<Body> {
                   if (c.f.constant && *c.f.constant > 0.0) return Body::ball(c.dim, *c.f.constant);
                   return std::nullopt;
                 },
                 [](const SupportFunction::Sampled&) -> std::optional<Body> { return std::nullopt; }},
      f.kind());
}

}  // namespace detail

// Wulff shape {x : <x,u> <= f(u) for all u}. Closed-form families are
// recognized; otherwise f is sampled on the evaluation grid together with any
// polytope normals carried by its inputs, and the result is an H-polytope.
inline Body wulff(const SupportFunction& f, const GridOptions* grid = nullptr) {
  if (auto b = detail::closed_form_wulff(f)) return *b;
  const int n = f.dim();
  std::vector<Vec> dirs;
  detail::collect_normals(f, dirs);
  const bool exact_planar = n == 2 && detail::planar_polytopal(f);
  if (!exact_planar) {
    const Mat g = grid ? make_direction_grid(n, *grid) : default_grid(n);
    for (Eigen::Index j = 0; j < g.rows(); ++j) dirs.push_back(g.row(j).transpose());
  }
  Mat nn(dirs.size(), n);
  Vec hh(dirs.size());
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    nn.row(j) = dirs[j].transpose();
    hh[j] = f(dirs[j]);
    if (!(hh[j] > 0.0)) throw DomainError("wulff: function must be positive");
  }
  return Body::polytope(HPolytope(std::move(nn), std::move(hh)));
}

inline Body wulff(const SupportFunctionPtr& f) { return wulff(*f); }

// lambda K +_p (1-lambda) L.
inline Body p_sum(const Body& k, const Body& l, double lambda, double p) {
  return wulff(p_combine(k, l, lambda, p));
}

}  // namespace pqbm
