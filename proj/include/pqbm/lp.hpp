#pragma once

#include "pqbm/core.hpp"

#include <limits>
#include <vector>

namespace pqbm::lp {

struct SupportLPResult {
  double value = 0.0;  // +inf when unbounded
  Vec argmax;          // maximizing point (empty when unbounded)
  bool bounded = true;
};

// max <u, x> subject to <a_j, x> <= b_j (rows a_j of A), solved through the
// dual  min b^T y  s.t. A^T y = u, y >= 0  with a two-phase revised simplex.
// The dual has only dim(x) equality rows, so each basis is a tiny dense
// matrix regardless of how many constraints the polytope carries.
inline SupportLPResult support_lp(const Mat& A, const Vec& b, const Vec& u) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  require(b.size() == m && u.size() == n, "support_lp: shape mismatch");
  const int total = m + n;  // m structural columns + n artificials
  constexpr double eps = 1e-11;

  auto column = [&](int j) -> Vec {
    if (j < m) return A.row(j).transpose();
    Vec e = Vec::Zero(n);
    e[j - m] = (u[j - m] >= 0.0) ? 1.0 : -1.0;
    return e;
  };

  std::vector<int> basis(n);
  for (int i = 0; i < n; ++i) basis[i] = m + i;
  Vec xb = u.cwiseAbs();

  auto run_phase = [&](const Vec& cost, bool allow_artificial) -> bool {
    int stall = 0;
    double last_obj = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 50 * (total + 10); ++iter) {
      Mat B(n, n);
      Vec cb(n);
      for (int i = 0; i < n; ++i) {
        B.col(i) = column(basis[i]);
        cb[i] = cost[basis[i]];
      }
      Eigen::PartialPivLU<Mat> lu(B);
      xb = lu.solve(u);
      for (int i = 0; i < n; ++i)
        if (xb[i] < 0.0) xb[i] = 0.0;
      const Vec duals = lu.transpose().solve(cb);
      const double obj = cb.dot(xb);
      stall = (obj < last_obj - 1e-14) ? 0 : stall + 1;
      last_obj = std::min(last_obj, obj);
      const bool bland = stall > 20;

      int enter = -1;
      double best = -eps;
      for (int j = 0; j < total; ++j) {
        if (!allow_artificial && j >= m) continue;
        bool in_basis = false;
        for (int k : basis) in_basis |= (k == j);
        if (in_basis) continue;
        const double rc = cost[j] - duals.dot(column(j));
        if (rc < best) {
          enter = j;
          best = rc;
          if (bland) break;
        }
      }
      if (enter < 0) return true;  // optimal
      const Vec d = lu.solve(column(enter));
      int leave = -1;
      double ratio = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        if (d[i] > eps) {
          const double r = xb[i] / d[i];
          if (r < ratio - 1e-15 || (std::abs(r - ratio) <= 1e-15 && leave >= 0 && basis[i] < basis[leave])) {
            ratio = r;
            leave = i;
          }
        }
      }
      if (leave < 0) return false;  // unbounded below
      basis[leave] = enter;
    }
    throw NumericError("support_lp: iteration limit reached");
  };

  Vec phase1 = Vec::Zero(total);
  phase1.tail(n).setOnes();
  run_phase(phase1, true);
  double infeas = 0.0;
  for (int i = 0; i < n; ++i)
    if (basis[i] >= m) infeas += xb[i];
  if (infeas > 1e-9 * std::max(1.0, u.lpNorm<1>())) {
    // The dual is infeasible: u is outside the cone of the normals.
    return {std::numeric_limits<double>::infinity(), Vec(), false};
  }
  // Pivot zero-level artificials out of the basis.
  for (int i = 0; i < n; ++i) {
    if (basis[i] < m) continue;
    Mat B(n, n);
    for (int k = 0; k < n; ++k) B.col(k) = column(basis[k]);
    Eigen::PartialPivLU<Mat> lu(B);
    for (int j = 0; j < m; ++j) {
      bool in_basis = false;
      for (int k : basis) in_basis |= (k == j);
      if (in_basis) continue;
      const Vec d = lu.solve(column(j));
      if (std::abs(d[i]) > 1e-9) {
        basis[i] = j;
        break;
      }
    }
  }
  Vec phase2 = Vec::Zero(total);
  phase2.head(m) = b;
  if (!run_phase(phase2, false))
    throw DomainError("support_lp: constraint system is infeasible");

  Mat B(n, n);
  Vec cb(n);
  for (int i = 0; i < n; ++i) {
    B.col(i) = column(basis[i]);
    cb[i] = phase2[basis[i]];
  }
  xb = B.partialPivLu().solve(u);
  SupportLPResult res;
  res.value = cb.dot(xb);
  res.argmax = B.transpose().partialPivLu().solve(cb);
  return res;
}

}  // namespace pqbm::lp
