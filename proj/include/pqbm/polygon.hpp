#pragma once

#include "pqbm/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace pqbm::geom {

// Planar polygon obtained from halfplanes <a_i, x> <= h_i with unit normals
// a_i and h_i > 0. Vertices are counterclockwise. Each input halfplane is
// mapped to the edge it supports; halfplanes that do not support an edge of
// positive length get an empty edge.
struct Polygon {
  std::vector<Vec> vertices;
  // edge_of[i] = index k such that the edge runs vertices[k] -> vertices[k+1],
  // or -1 when halfplane i supports no edge.
  std::vector<int> edge_of;
  // Input halfplane index owning each polygon edge (same order as vertices).
  std::vector<int> edge_owner;

  double area() const {
    double a = 0.0;
    const std::size_t m = vertices.size();
    for (std::size_t k = 0; k < m; ++k) {
      const Vec& p = vertices[k];
      const Vec& q = vertices[(k + 1) % m];
      a += p[0] * q[1] - p[1] * q[0];
    }
    return 0.5 * a;
  }

  double perimeter() const {
    double s = 0.0;
    const std::size_t m = vertices.size();
    for (std::size_t k = 0; k < m; ++k) s += (vertices[(k + 1) % m] - vertices[k]).norm();
    return s;
  }

  double edge_length(int halfplane) const {
    const int k = edge_of[halfplane];
    if (k < 0) return 0.0;
    const std::size_t m = vertices.size();
    return (vertices[(k + 1) % m] - vertices[k]).norm();
  }

  double support(const Vec& u) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const Vec& v : vertices) best = std::max(best, v.dot(u));
    return best;
  }

  // Edge (vertex index k, edge from k to k+1) whose angular sector, seen from
  // the origin, contains the direction of x.
  int sector(const Vec& x) const {
    const double a = std::atan2(x[1], x[0]);
    auto it = std::upper_bound(sector_start.begin(), sector_start.end(), a);
    if (it == sector_start.begin()) return sector_edge.back();
    return sector_edge[static_cast<std::size_t>(it - sector_start.begin()) - 1];
  }

  // Gauge of x: <a_k,x>/h_k for the edge in x's sector.
  double gauge(const Vec& x) const {
    if (x[0] == 0.0 && x[1] == 0.0) return 0.0;
    const int k = sector(x);
    const Vec& p = vertices[k];
    const Vec& q = vertices[(k + 1) % vertices.size()];
    // Edge line through p and q: normal (q-p)^perp, height = <normal, p>.
    const double nx = q[1] - p[1], ny = p[0] - q[0];
    return (nx * x[0] + ny * x[1]) / (nx * p[0] + ny * p[1]);
  }

  // Angles of the vertices sorted ascending, and the edge starting there.
  std::vector<double> sector_start;
  std::vector<int> sector_edge;

  void build_sectors() {
    const std::size_t m = vertices.size();
    std::vector<std::pair<double, int>> a(m);
    for (std::size_t k = 0; k < m; ++k) a[k] = {std::atan2(vertices[k][1], vertices[k][0]), static_cast<int>(k)};
    std::sort(a.begin(), a.end());
    sector_start.resize(m);
    sector_edge.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      sector_start[k] = a[k].first;
      sector_edge[k] = a[k].second;
    }
  }
};

// Intersection of halfplanes through the polar correspondence: the halfplane
// <a,x> <= h is the point a/h of the polar body, and the polygon's edges are
// the edges of the convex hull of those points.
inline Polygon polygon_from_halfplanes(const Mat& normals, const Vec& heights) {
  const int m = static_cast<int>(normals.rows());
  require(normals.cols() == 2, "polygon_from_halfplanes: planar input expected");
  require(heights.size() == m, "polygon_from_halfplanes: size mismatch");
  for (int i = 0; i < m; ++i)
    if (!(heights[i] > 0.0)) throw DomainError("polygon_from_halfplanes: heights must be positive");

  struct P {
    double x, y;
    int idx;
  };
  std::vector<P> pts(m);
  for (int i = 0; i < m; ++i) pts[i] = {normals(i, 0) / heights[i], normals(i, 1) / heights[i], i};
  std::sort(pts.begin(), pts.end(), [](const P& a, const P& b) {
    return a.x < b.x || (a.x == b.x && (a.y < b.y || (a.y == b.y && a.idx < b.idx)));
  });
  auto cross = [](const P& o, const P& a, const P& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  // Andrew's monotone chain; collinear points are dropped, so a halfplane
  // that only touches a vertex does not become an edge.
  std::vector<P> hull(2 * m);
  int k = 0;
  for (int i = 0; i < m; ++i) {
    while (k >= 2) {
      const double c = cross(hull[k - 2], hull[k - 1], pts[i]);
      const double scale = std::abs(hull[k - 1].x - hull[k - 2].x) + std::abs(hull[k - 1].y - hull[k - 2].y) +
                           std::abs(pts[i].x - hull[k - 1].x) + std::abs(pts[i].y - hull[k - 1].y);
      if (c <= 1e-14 * scale * scale) --k;
      else break;
    }
    hull[k++] = pts[i];
  }
  for (int i = m - 2, t = k + 1; i >= 0; --i) {
    while (k >= t) {
      const double c = cross(hull[k - 2], hull[k - 1], pts[i]);
      const double scale = std::abs(hull[k - 1].x - hull[k - 2].x) + std::abs(hull[k - 1].y - hull[k - 2].y) +
                           std::abs(pts[i].x - hull[k - 1].x) + std::abs(pts[i].y - hull[k - 1].y);
      if (c <= 1e-14 * scale * scale) --k;
      else break;
    }
    hull[k++] = pts[i];
  }
  hull.resize(std::max(0, k - 1));
  const int hn = static_cast<int>(hull.size());
  if (hn < 3) throw DomainError("polygon_from_halfplanes: halfplanes do not bound a polygon");
  // The origin must be strictly inside the polar hull for boundedness.
  for (int i = 0; i < hn; ++i) {
    const P& a = hull[i];
    const P& b = hull[(i + 1) % hn];
    if (a.x * b.y - a.y * b.x <= 0.0)
      throw DomainError("polygon_from_halfplanes: normals do not positively span the plane");
  }

  Polygon poly;
  poly.edge_of.assign(m, -1);
  // Hull vertex i (polar point) is an edge of the polygon; the polygon vertex
  // between hull points i and i+1 solves <a_i,x> = h_i, <a_{i+1},x> = h_{i+1}.
  for (int i = 0; i < hn; ++i) {
    const P& a = hull[i];
    const P& b = hull[(i + 1) % hn];
    const double det = a.x * b.y - a.y * b.x;
    poly.vertices.push_back(vec2((b.y - a.y) / det, (a.x - b.x) / det));
  }
  // Vertex i sits between edge(hull i) and edge(hull i+1); the edge owned by
  // hull point i+1 runs from vertex i to vertex i+1.
  poly.edge_owner.resize(hn);
  for (int i = 0; i < hn; ++i) {
    const int owner = hull[(i + 1) % hn].idx;
    poly.edge_owner[i] = owner;
    poly.edge_of[owner] = i;
  }
  poly.build_sectors();
  return poly;
}

}  // namespace pqbm::geom
