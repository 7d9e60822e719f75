#pragma once

#include "pqbm/bodies.hpp"
#include "pqbm/density.hpp"
#include "pqbm/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace pqbm {

// Smooth (C^{2,+}) symmetric body described through its support function.
//   Ellipse/ellipsoid: h(u) = |A u| with A = diag(a), covers disks and balls.
//   SmoothedBox:       box(a) + eps B, planar only.
//   Trig:              planar h(theta) given as a function, differentiated
//                      spectrally from samples.
struct SmoothBody {
  enum class Kind { Ellipsoid, SmoothedBox, Trig };
  Kind kind = Kind::Ellipsoid;
  int n = 2;
  Vec a;             // semi-axes or box half-widths
  double eps = 0.0;  // smoothing radius
  std::function<double(double)> h_theta;
  std::string label;

  static SmoothBody disk(double r = 1.0) { return ellipsoid(vec2(r, r)); }
  static SmoothBody ball(int n, double r) {
    if (n != 2 && n != 3) throw InputError("smooth bodies are supported for n = 2, 3");
    return ellipsoid(Vec::Constant(n, r));
  }
  static SmoothBody ellipsoid(Vec a) {
    const int n = static_cast<int>(a.size());
    if (n != 2 && n != 3) throw InputError("smooth bodies are supported for n = 2, 3");
    require(a.minCoeff() > 0.0, "ellipsoid: semi-axes must be positive");
    SmoothBody s;
    s.kind = Kind::Ellipsoid;
    s.n = n;
    s.a = std::move(a);
    s.label = "ellipsoid";
    return s;
  }
  static SmoothBody smoothed_box(Vec a, double eps = 0.05) {
    require(a.size() == 2, "smoothed_box: planar boxes only");
    require(a.minCoeff() > 0.0 && eps > 0.0, "smoothed_box: parameters must be positive");
    SmoothBody s;
    s.kind = Kind::SmoothedBox;
    s.n = 2;
    s.a = std::move(a);
    s.eps = eps;
    s.label = "smoothed_box";
    return s;
  }
  static SmoothBody trig(std::function<double(double)> h, std::string label = "trig") {
    SmoothBody s;
    s.kind = Kind::Trig;
    s.n = 2;
    s.h_theta = std::move(h);
    s.label = std::move(label);
    return s;
  }
  // Ball and ellipsoid bodies map directly; planar boxes are smoothed by eps.
  static SmoothBody from_body(const Body& k, double eps = 0.05) {
    if (const auto* b = std::get_if<BallShape>(&k.shape())) return ball(k.dim(), b->radius);
    if (const auto* e = std::get_if<EllipsoidShape>(&k.shape())) return ellipsoid(e->semi_axes);
    if (const auto* x = std::get_if<BoxShape>(&k.shape()); x && k.dim() == 2) return smoothed_box(x->half_widths, eps);
    throw InputError("no smooth model for family " + k.family() + " in dimension " + std::to_string(k.dim()));
  }
};

// Boundary data at quadrature nodes. Per node:
//   u      outer normal
//   x      boundary point grad h(u)
//   h      <x, u>
//   II     curvature (Weingarten) map = (D^2 h)^{-1} on the tangent plane,
//          zero along flat pieces
//   ds     surface element (quadrature weight times det D^2 h)
//   w      ds * e^{-V(x)}
//   H      tr(II) - <grad V(x), u>
struct BoundaryNode {
  Vec u;
  Vec x;
  double h = 0.0;
  Mat II;
  double ds = 0.0;
  double w = 0.0;
  double H = 0.0;
};

class BoundaryGrid {
 public:
  BoundaryGrid(int n, std::vector<BoundaryNode> nodes, Density mu, std::string label)
      : n_(n), nodes_(std::move(nodes)), mu_(std::move(mu)), label_(std::move(label)) {
    for (const auto& nd : nodes_)
      if (!(nd.h > 0.0)) throw DomainError("boundary grid: <x,n_x> must be positive");
    measure_ = cone_integral([](const Vec&) { return 1.0; });
  }

  int dim() const { return n_; }
  const std::vector<BoundaryNode>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  const Density& density() const { return mu_; }
  const std::string& label() const { return label_; }

  // mu(K) from the cone decomposition over the boundary.
  double measure() const { return measure_; }

  // int_{dK} 1 dH^{n-1} (no density).
  double surface_area() const {
    double s = 0.0;
    for (const auto& nd : nodes_) s += nd.ds;
    return s;
  }
  double weighted_surface() const {
    double s = 0.0;
    for (const auto& nd : nodes_) s += nd.w;
    return s;
  }

  // int_K F dmu = int_{dK} <x,n> int_0^1 t^{n-1} F(tx) e^{-V(tx)} dt dH(x).
  template <class F>
  double cone_integral(F&& f, int order = 40) const {
    const quad::Rule& r = quad::gl(order);
    double total = 0.0;
    for (const auto& nd : nodes_) {
      double inner = 0.0;
      for (int i = 0; i < order; ++i) {
        const double t = 0.5 * (r.nodes[i] + 1.0);
        const Vec y = t * nd.x;
        inner += 0.5 * r.weights[i] * std::pow(t, n_ - 1) * f(y) * mu_.weight(y);
      }
      total += nd.ds * nd.h * inner;
    }
    return total;
  }

 private:
  int n_;
  std::vector<BoundaryNode> nodes_;
  Density mu_;
  std::string label_;
  double measure_ = 0.0;
};

namespace detail {

inline Mat tangent_basis(const Vec& u) {
  const int n = static_cast<int>(u.size());
  if (n == 2) {
    Mat t(2, 1);
    t << -u[1], u[0];
    return t;
  }
  // Orthonormal complement from the QR of [u | I].
  Mat m(n, n + 1);
  m.col(0) = u;
  m.rightCols(n) = Mat::Identity(n, n);
  Eigen::HouseholderQR<Mat> qr(m);
  const Mat q = qr.householderQ() * Mat::Identity(n, n);
  return q.rightCols(n - 1);
}

inline void finish_node(BoundaryNode& nd, const Density& mu) {
  nd.h = nd.x.dot(nd.u);
  nd.w = nd.ds * mu.weight(nd.x);
  nd.H = nd.II.trace() - mu.grad_V(nd.x).dot(nd.u);
}

// Node from the homogeneous extension of h: gradient g = x, Hessian D.
inline BoundaryNode node_from_hessian(const Vec& u, const Vec& grad, const Mat& hess, double quad_w,
                                      const Density& mu) {
  BoundaryNode nd;
  nd.u = u;
  nd.x = grad;
  const Mat T = tangent_basis(u);
  const Mat Dt = T.transpose() * hess * T;
  Eigen::SelfAdjointEigenSolver<Mat> es(Dt);
  if (!(es.eigenvalues().minCoeff() > 0.0)) throw DomainError("curvature matrix D^2 h is not positive definite");
  nd.II = T * Dt.inverse() * T.transpose();
  nd.ds = quad_w * Dt.determinant();
  finish_node(nd, mu);
  return nd;
}

// Spectral derivatives of samples f_j = f(2 pi j / M).
inline void trig_derivatives(const std::vector<double>& f, std::vector<double>& d1, std::vector<double>& d2) {
  const int M = static_cast<int>(f.size());
  const int K = (M - 1) / 2;
  std::vector<double> ak(K + 1), bk(K + 1);
  for (int k = 0; k <= K; ++k) {
    double sa = 0.0, sb = 0.0;
    for (int j = 0; j < M; ++j) {
      const double t = 2.0 * std::numbers::pi * k * j / M;
      sa += f[j] * std::cos(t);
      sb += f[j] * std::sin(t);
    }
    ak[k] = 2.0 * sa / M;
    bk[k] = 2.0 * sb / M;
  }
  d1.assign(M, 0.0);
  d2.assign(M, 0.0);
  for (int j = 0; j < M; ++j) {
    for (int k = 1; k <= K; ++k) {
      const double t = 2.0 * std::numbers::pi * k * j / M;
      const double c = std::cos(t), s = std::sin(t);
      d1[j] += k * (-ak[k] * s + bk[k] * c);
      d2[j] += -k * k * (ak[k] * c + bk[k] * s);
    }
  }
}

}  // namespace detail

struct BoundaryOptions {
  int circle_nodes = 720;  // n = 2 uniform angles
  int segment_nodes = 24;  // Gauss nodes per arc / flat piece (smoothed box)
  int lat_nodes = 48;      // n = 3 Gauss nodes in z
  int lon_nodes = 96;      // n = 3 uniform longitudes
};

inline BoundaryGrid make_boundary_grid(const SmoothBody& k, const Density& mu, const BoundaryOptions& opt = {}) {
  require(mu.dim() == k.n, "boundary grid: density dimension mismatch");
  std::vector<BoundaryNode> nodes;
  const double two_pi = 2.0 * std::numbers::pi;
  switch (k.kind) {
    case SmoothBody::Kind::Ellipsoid: {
      const Vec B = k.a.cwiseProduct(k.a);
      auto add = [&](const Vec& u, double qw) {
        const double h = u.cwiseProduct(k.a).norm();
        const Vec Bu = B.cwiseProduct(u);
        const Mat hess = Mat(B.asDiagonal()) / h - Bu * Bu.transpose() / (h * h * h);
        nodes.push_back(detail::node_from_hessian(u, Bu / h, hess, qw, mu));
      };
      if (k.n == 2) {
        const int M = opt.circle_nodes;
        for (int j = 0; j < M; ++j) {
          const double t = two_pi * j / M;
          add(vec2(std::cos(t), std::sin(t)), two_pi / M);
        }
      } else {
        const quad::Rule& rz = quad::gl(opt.lat_nodes);
        const int P = opt.lon_nodes;
        for (int i = 0; i < opt.lat_nodes; ++i) {
          const double z = rz.nodes[i];
          const double s = std::sqrt(1.0 - z * z);
          for (int j = 0; j < P; ++j) {
            const double phi = two_pi * (j + 0.5) / P;
            add(vec3(s * std::cos(phi), s * std::sin(phi), z), rz.weights[i] * two_pi / P);
          }
        }
      }
      break;
    }
    case SmoothBody::Kind::SmoothedBox: {
      const double a0 = k.a[0], a1 = k.a[1], e = k.eps;
      const quad::Rule& r = quad::gl(opt.segment_nodes);
      // Quarter arcs of radius eps around the corners.
      for (int q = 0; q < 4; ++q) {
        const double sx = (q == 0 || q == 3) ? 1.0 : -1.0;
        const double sy = (q < 2) ? 1.0 : -1.0;
        const double t0 = q * 0.5 * std::numbers::pi;
        for (int i = 0; i < opt.segment_nodes; ++i) {
          const double t = t0 + 0.25 * std::numbers::pi * (r.nodes[i] + 1.0);
          const Vec u = vec2(std::cos(t), std::sin(t));
          BoundaryNode nd;
          nd.u = u;
          nd.x = vec2(sx * a0, sy * a1) + e * u;
          const Mat T = detail::tangent_basis(u);
          nd.II = T * T.transpose() / e;
          nd.ds = 0.25 * std::numbers::pi * r.weights[i] * e;
          detail::finish_node(nd, mu);
          nodes.push_back(std::move(nd));
        }
      }
      // Flat pieces: atoms of the surface measure at the axis normals.
      for (int side = 0; side < 4; ++side) {
        const int axis = side % 2;
        const double sgn = side < 2 ? 1.0 : -1.0;
        const double half = k.a[1 - axis];
        for (int i = 0; i < opt.segment_nodes; ++i) {
          BoundaryNode nd;
          nd.u = Vec::Zero(2);
          nd.u[axis] = sgn;
          nd.x = Vec::Zero(2);
          nd.x[axis] = sgn * (k.a[axis] + e);
          nd.x[1 - axis] = half * r.nodes[i];
          nd.II = Mat::Zero(2, 2);
          nd.ds = half * r.weights[i];
          detail::finish_node(nd, mu);
          nodes.push_back(std::move(nd));
        }
      }
      break;
    }
    case SmoothBody::Kind::Trig: {
      const int M = opt.circle_nodes;
      std::vector<double> h(M), d1, d2;
      for (int j = 0; j < M; ++j) h[j] = k.h_theta(two_pi * j / M);
      detail::trig_derivatives(h, d1, d2);
      for (int j = 0; j < M; ++j) {
        const double t = two_pi * j / M;
        const Vec u = vec2(std::cos(t), std::sin(t));
        const Vec tu = vec2(-std::sin(t), std::cos(t));
        const double rc = h[j] + d2[j];
        if (!(rc > 0.0)) throw DomainError("trig support function: h + h'' must be positive");
        BoundaryNode nd;
        nd.u = u;
        nd.x = h[j] * u + d1[j] * tu;
        nd.II = tu * tu.transpose() / rc;
        nd.ds = rc * two_pi / M;
        detail::finish_node(nd, mu);
        nodes.push_back(std::move(nd));
      }
      break;
    }
  }
  return BoundaryGrid(k.n, std::move(nodes), mu, k.label);
}

// ---------------------------------------------------------------------------
// Test functions on the sphere
// ---------------------------------------------------------------------------

// Values and tangential gradients of g at the grid nodes.
struct NodeField {
  Vec g;
  Mat grad;  // rows: tangential gradients
};

struct TestFunction {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;  // ambient gradient of an extension; projected on use
  std::string label = "g";

  static TestFunction constant(double c) {
    return {[c](const Vec&) { return c; }, [](const Vec& u) { return Vec(Vec::Zero(u.size())); }, "const"};
  }
  // cos(2k theta) / sin(2k theta) on the circle.
  static TestFunction cos_mode(int m) {
    return {[m](const Vec& u) { return std::cos(m * std::atan2(u[1], u[0])); },
            [m](const Vec& u) {
              const double t = std::atan2(u[1], u[0]);
              return Vec(-m * std::sin(m * t) * vec2(-u[1], u[0]));
            },
            "cos" + std::to_string(m)};
  }
  static TestFunction sin_mode(int m) {
    return {[m](const Vec& u) { return std::sin(m * std::atan2(u[1], u[0])); },
            [m](const Vec& u) {
              const double t = std::atan2(u[1], u[0]);
              return Vec(m * std::cos(m * t) * vec2(-u[1], u[0]));
            },
            "sin" + std::to_string(m)};
  }
  // Value-only function; gradients by central differences along the tangent
  // plane.
  static TestFunction numeric(std::function<double(const Vec&)> f, std::string label = "g") {
    auto grad = [f](const Vec& u) {
      const Mat T = detail::tangent_basis(u);
      Vec g = Vec::Zero(u.size());
      const double step = 1e-5;
      for (Eigen::Index k = 0; k < T.cols(); ++k) {
        const Vec e = T.col(k);
        const Vec up = (u + step * e).normalized();
        const Vec um = (u - step * e).normalized();
        g += (f(up) - f(um)) / (2.0 * step) * e;
      }
      return g;
    };
    return {f, grad, std::move(label)};
  }
};

inline NodeField evaluate(const BoundaryGrid& grid, const TestFunction& g, bool check_even = true) {
  const int N = static_cast<int>(grid.size());
  NodeField out{Vec(N), Mat(N, grid.dim())};
  for (int j = 0; j < N; ++j) {
    const Vec& u = grid.nodes()[j].u;
    out.g[j] = g.value(u);
    if (check_even && std::abs(out.g[j] - g.value(-u)) > 1e-9 * std::max(1.0, std::abs(out.g[j])))
      throw InputError("test function must be even");
    const Vec gr = g.grad(u);
    out.grad.row(j) = (gr - u * u.dot(gr)).transpose();
  }
  return out;
}

// g = h restricted to the sphere (the dilation direction f = <x, n_x>);
// its tangential gradient is the tangential part of x.
inline NodeField support_mode(const BoundaryGrid& grid) {
  const int N = static_cast<int>(grid.size());
  NodeField out{Vec(N), Mat(N, grid.dim())};
  for (int j = 0; j < N; ++j) {
    const auto& nd = grid.nodes()[j];
    out.g[j] = nd.h;
    out.grad.row(j) = (nd.x - nd.u * nd.h).transpose();
  }
  return out;
}

inline NodeField combine(const NodeField& a, double s, const NodeField& b) {
  return {a.g + s * b.g, a.grad + s * b.grad};
}

// ---------------------------------------------------------------------------
// Quadratic forms
// ---------------------------------------------------------------------------

inline void check_pq(double p, double q) {
  if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0)) throw InputError("p and q must lie in [0,1]");
  if (q > p) throw InputError("q must not exceed p");
}

// Q(g) with rank-one coefficient c:
//   sum w [H g^2 - <II grad g, grad g> + (1-p) g^2/h] - (c / mu(K)) (sum w g)^2
inline double form_value(const BoundaryGrid& grid, double p, double coeff, const NodeField& g) {
  double quad = 0.0, lin = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto& nd = grid.nodes()[j];
    const Vec gr = g.grad.row(j).transpose();
    quad += nd.w * (nd.H * g.g[j] * g.g[j] - gr.dot(nd.II * gr) + (1.0 - p) * g.g[j] * g.g[j] / nd.h);
    lin += nd.w * g.g[j];
  }
  return quad - coeff / grid.measure() * lin * lin;
}

// Second-variation form of the (p,q)-inequality; <= 0 means satisfied.
inline double local_form_value(const BoundaryGrid& grid, double p, double q, const NodeField& g) {
  check_pq(p, q);
  const double n = grid.dim();
  return form_value(grid, p, (n - q) / n, g);
}

inline double local_form_value(const BoundaryGrid& grid, double p, double q, const TestFunction& g) {
  return local_form_value(grid, p, q, evaluate(grid, g));
}

// Lebesgue-only variant with rank-one coefficient (n - p)/n.
inline double improved_form_value(const BoundaryGrid& grid, double p, const NodeField& g) {
  if (!grid.density().is_lebesgue()) throw InputError("improved form is defined for Lebesgue measure only");
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("p must lie in [0,1]");
  const double n = grid.dim();
  return form_value(grid, p, (n - p) / n, g);
}

inline double improved_form_value(const BoundaryGrid& grid, double p, const TestFunction& g) {
  return improved_form_value(grid, p, evaluate(grid, g));
}

// Even basis on the sphere: n = 2 {1, cos 2k theta, sin 2k theta}, k <= kmax;
// n = 3 homogeneous monomials of even degree d restricted to the sphere,
// which span the even harmonics of degree <= d.
struct Basis {
  std::vector<TestFunction> fns;
  int size() const { return static_cast<int>(fns.size()); }
};

inline Basis default_basis(int n, int level = -1) {
  Basis b;
  if (n == 2) {
    const int kmax = level < 0 ? 16 : level;
    b.fns.push_back(TestFunction::constant(1.0));
    for (int k = 1; k <= kmax; ++k) {
      b.fns.push_back(TestFunction::cos_mode(2 * k));
      b.fns.push_back(TestFunction::sin_mode(2 * k));
    }
    return b;
  }
  if (n != 3) throw InputError("test-function bases exist for n = 2, 3");
  const int d = level < 0 ? 8 : level;
  require(d >= 0 && d % 2 == 0, "sphere basis degree must be even");
  for (int i = 0; i <= d; ++i)
    for (int j = 0; i + j <= d; ++j) {
      const int k = d - i - j;
      auto mono = [](double x, int e) { return e == 0 ? 1.0 : std::pow(x, e); };
      auto dmono = [](double x, int e) { return e == 0 ? 0.0 : e * (e == 1 ? 1.0 : std::pow(x, e - 1)); };
      TestFunction f;
      f.value = [=](const Vec& u) { return mono(u[0], i) * mono(u[1], j) * mono(u[2], k); };
      f.grad = [=](const Vec& u) {
        return Vec(vec3(dmono(u[0], i) * mono(u[1], j) * mono(u[2], k), mono(u[0], i) * dmono(u[1], j) * mono(u[2], k),
                        mono(u[0], i) * mono(u[1], j) * dmono(u[2], k)));
      };
      f.label = "x^" + std::to_string(i) + "y^" + std::to_string(j) + "z^" + std::to_string(k);
      b.fns.push_back(std::move(f));
    }
  return b;
}

struct FormMatrices {
  Mat M;  // Q(sum c_i g_i) = c^T M c
  Mat G;  // surface-measure Gram matrix
  std::vector<NodeField> fields;
};

inline FormMatrices assemble_form(const BoundaryGrid& grid, double p, double coeff, const Basis& basis) {
  const int m = basis.size();
  FormMatrices out;
  for (const auto& f : basis.fns) out.fields.push_back(evaluate(grid, f));
  out.M = Mat::Zero(m, m);
  out.G = Mat::Zero(m, m);
  Vec lin = Vec::Zero(m);
  Vec gv(m);
  Mat gg(grid.dim(), m);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto& nd = grid.nodes()[j];
    for (int i = 0; i < m; ++i) {
      gv[i] = out.fields[i].g[j];
      gg.col(i) = out.fields[i].grad.row(j).transpose();
    }
    const double diag = nd.H + (1.0 - p) / nd.h;
    out.M.noalias() += nd.w * (diag * gv * gv.transpose() - gg.transpose() * nd.II * gg);
    out.G.noalias() += nd.w * gv * gv.transpose();
    lin += nd.w * gv;
  }
  out.M -= coeff / grid.measure() * lin * lin.transpose();
  out.M = 0.5 * (out.M + out.M.transpose());
  out.G = 0.5 * (out.G + out.G.transpose());
  return out;
}

struct LocalFormResult {
  double max_eigenvalue = 0.0;
  Vec argmax;  // coefficients, G-normalized
  double tol = 0.0;
  bool holds = false;
  int basis_size = 0;
  Mat M, G;
};

inline LocalFormResult max_generalized_eigen(const Mat& M, const Mat& G) {
  Eigen::LLT<Mat> llt(G);
  if (llt.info() != Eigen::Success) throw DegenerateBasisError("Gram matrix is not positive definite");
  Eigen::SelfAdjointEigenSolver<Mat> gs(G);
  if (gs.eigenvalues().minCoeff() <= 1e-13 * gs.eigenvalues().maxCoeff())
    throw DegenerateBasisError("Gram matrix is numerically singular");
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(M, G);
  if (es.info() != Eigen::Success) throw NumericError("generalized eigen-solve failed");
  LocalFormResult r;
  const int m = static_cast<int>(M.rows());
  r.max_eigenvalue = es.eigenvalues()[m - 1];
  r.argmax = es.eigenvectors().col(m - 1);
  r.tol = 1e-8 * M.cwiseAbs().maxCoeff();
  r.holds = r.max_eigenvalue <= r.tol;
  r.basis_size = m;
  r.M = M;
  r.G = G;
  return r;
}

inline LocalFormResult local_form_max(const BoundaryGrid& grid, double p, double q, const Basis& basis) {
  check_pq(p, q);
  const double n = grid.dim();
  const auto fm = assemble_form(grid, p, (n - q) / n, basis);
  return max_generalized_eigen(fm.M, fm.G);
}

inline LocalFormResult local_form_max(const BoundaryGrid& grid, double p, double q) {
  return local_form_max(grid, p, q, default_basis(grid.dim()));
}

// Node values of sum_i c_i g_i.
inline Vec mode_values(const BoundaryGrid& grid, const Basis& basis, const Vec& c) {
  Vec v = Vec::Zero(grid.size());
  for (int i = 0; i < basis.size(); ++i) v += c[i] * evaluate(grid, basis.fns[i]).g;
  return v;
}

// ---------------------------------------------------------------------------
// Bochner / Reilly identity
// ---------------------------------------------------------------------------

struct ScalarField {
  std::function<double(const Vec&)> f;
  std::function<Vec(const Vec&)> grad;
  std::function<Mat(const Vec&)> hess;
  std::string label = "u";

  static ScalarField half_norm2(int n) {
    return {[](const Vec& x) { return 0.5 * x.squaredNorm(); }, [](const Vec& x) { return x; },
            [n](const Vec&) { return Mat(Mat::Identity(n, n)); }, "|x|^2/2"};
  }
  // x_i^2 - x_j^2
  static ScalarField saddle(int n, int i = 0, int j = 1) {
    return {[=](const Vec& x) { return x[i] * x[i] - x[j] * x[j]; },
            [=](const Vec& x) {
              Vec g = Vec::Zero(n);
              g[i] = 2.0 * x[i];
              g[j] = -2.0 * x[j];
              return g;
            },
            [=](const Vec&) {
              Mat h = Mat::Zero(n, n);
              h(i, i) = 2.0;
              h(j, j) = -2.0;
              return h;
            },
            "x1^2-x2^2"};
  }
  // x_i x_j
  static ScalarField product(int n, int i = 0, int j = 1) {
    return {[=](const Vec& x) { return x[i] * x[j]; },
            [=](const Vec& x) {
              Vec g = Vec::Zero(n);
              g[i] = x[j];
              g[j] = x[i];
              return g;
            },
            [=](const Vec&) {
              Mat h = Mat::Zero(n, n);
              h(i, j) = h(j, i) = 1.0;
              return h;
            },
            "x1*x2"};
  }
  static ScalarField constant(int n, double c) {
    return {[c](const Vec&) { return c; }, [n](const Vec&) { return Vec(Vec::Zero(n)); },
            [n](const Vec&) { return Mat(Mat::Zero(n, n)); }, "const"};
  }

  double L(const Vec& x, const Density& mu) const { return hess(x).trace() - mu.grad_V(x).dot(grad(x)); }
};

struct BochnerTerms {
  double lu2 = 0.0;       // int_K (Lu)^2 dmu
  double hess2 = 0.0;     // int_K ||hess u||^2 + <hess V grad u, grad u> dmu
  double boundary = 0.0;  // int_dK H u_n^2 - 2<grad_dK u, grad_dK u_n> + <II grad_dK u, grad_dK u> dmu_dK
  double residual = 0.0;
  double scale = 0.0;
};

inline BochnerTerms bochner_residual(const ScalarField& u, const BoundaryGrid& grid) {
  const Density& mu = grid.density();
  BochnerTerms t;
  t.lu2 = grid.cone_integral([&](const Vec& x) {
    const double l = u.L(x, mu);
    return l * l;
  });
  t.hess2 = grid.cone_integral([&](const Vec& x) {
    const Vec g = u.grad(x);
    return u.hess(x).squaredNorm() + g.dot(mu.hess_V(x) * g);
  });
  const int n = grid.dim();
  for (const auto& nd : grid.nodes()) {
    const Vec g = u.grad(nd.x);
    const Mat P = Mat::Identity(n, n) - nd.u * nd.u.transpose();
    const double un = g.dot(nd.u);
    const Vec gt = P * g;
    const Vec gun = P * u.hess(nd.x) * nd.u + nd.II * gt;
    t.boundary += nd.w * (nd.H * un * un - 2.0 * gt.dot(gun) + gt.dot(nd.II * gt));
  }
  t.residual = t.lu2 - t.hess2 - t.boundary;
  t.scale = std::abs(t.lu2) + std::abs(t.hess2) + std::abs(t.boundary);
  return t;
}

// int_K Lu dmu - int_dK <grad u, n> dmu_dK.
inline double divergence_residual(const ScalarField& u, const BoundaryGrid& grid) {
  const Density& mu = grid.density();
  const double interior = grid.cone_integral([&](const Vec& x) { return u.L(x, mu); });
  double flux = 0.0;
  for (const auto& nd : grid.nodes()) flux += nd.w * u.grad(nd.x).dot(nd.u);
  return interior - flux;
}

// ---------------------------------------------------------------------------
// Ray-decreasing inequality and the pointwise matrix inequality
// ---------------------------------------------------------------------------

struct RayReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool holds = false;
};

// mu(K) int f^2 / <x,n> dmu_dK >= (1/n) (int f dmu_dK)^2.
inline RayReport ray_decreasing_check(const BoundaryGrid& grid, const std::function<double(const Vec&)>& f,
                                      double tol = 1e-9) {
  double a = 0.0, b = 0.0;
  for (const auto& nd : grid.nodes()) {
    const double v = f(nd.u);
    if (v < 0.0) throw InputError("ray_decreasing_check: f must be nonnegative");
    a += nd.w * v * v / nd.h;
    b += nd.w * v;
  }
  RayReport r;
  r.lhs = grid.measure() * a;
  r.rhs = b * b / grid.dim();
  r.margin = r.lhs - r.rhs;
  r.holds = r.margin >= -tol * std::max(1.0, r.rhs);
  return r;
}

// a ||A||^2 + b |v|^2 - a b (tr A - <w, v>)^2 / (a |w|^2 + b n)
inline double pointwise_matrix_margin(const Mat& A, const Vec& v, const Vec& w, double a, double b) {
  require(A.rows() == A.cols() && A.rows() == v.size() && v.size() == w.size(), "matrix check: shape mismatch");
  require(a > 0.0 && b > 0.0, "matrix check: a and b must be positive");
  const double n = static_cast<double>(A.rows());
  const double l = A.trace() - w.dot(v);
  return a * A.squaredNorm() + b * v.squaredNorm() - a * b * l * l / (a * w.squaredNorm() + b * n);
}

}  // namespace pqbm
