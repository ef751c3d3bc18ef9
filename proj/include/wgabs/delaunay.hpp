#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "wgabs/common.hpp"

namespace wgabs::delaunay {

namespace predicates {

using exact = boost::multiprecision::cpp_rational;

inline constexpr double eps = 1.1102230246251565e-16;
inline constexpr double ccw_bound = (3.0 + 16.0 * eps) * eps;
inline constexpr double icc_bound = (10.0 + 96.0 * eps) * eps;

inline int sign_of(const exact& v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

/// Sign of the signed area of (a, b, c): +1 counter-clockwise.
inline int orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double l = (a[0] - c[0]) * (b[1] - c[1]);
  const double r = (a[1] - c[1]) * (b[0] - c[0]);
  const double det = l - r;
  if (std::abs(det) > ccw_bound * (std::abs(l) + std::abs(r))) return det > 0 ? 1 : -1;
  exact ax(a[0]), ay(a[1]), bx(b[0]), by(b[1]), cx(c[0]), cy(c[1]);
  return sign_of((ax - cx) * (by - cy) - (ay - cy) * (bx - cx));
}

/// +1 if d lies strictly inside the circumcircle of counter-clockwise (a, b, c).
inline int incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double adx = a[0] - d[0], ady = a[1] - d[1];
  const double bdx = b[0] - d[0], bdy = b[1] - d[1];
  const double cdx = c[0] - d[0], cdy = c[1] - d[1];
  const double bc = bdx * cdy - cdx * bdy, ca = cdx * ady - adx * cdy, ab = adx * bdy - bdx * ady;
  const double al = adx * adx + ady * ady, bl = bdx * bdx + bdy * bdy, cl = cdx * cdx + cdy * cdy;
  const double det = al * bc + bl * ca + cl * ab;
  const double perm = (std::abs(bdx * cdy) + std::abs(cdx * bdy)) * al + (std::abs(cdx * ady) + std::abs(adx * cdy)) * bl +
                      (std::abs(adx * bdy) + std::abs(bdx * ady)) * cl;
  if (std::abs(det) > icc_bound * perm) return det > 0 ? 1 : -1;
  exact Ax = exact(a[0]) - exact(d[0]), Ay = exact(a[1]) - exact(d[1]);
  exact Bx = exact(b[0]) - exact(d[0]), By = exact(b[1]) - exact(d[1]);
  exact Cx = exact(c[0]) - exact(d[0]), Cy = exact(c[1]) - exact(d[1]);
  exact v = (Ax * Ax + Ay * Ay) * (Bx * Cy - Cx * By) + (Bx * Bx + By * By) * (Cx * Ay - Ax * Cy) +
            (Cx * Cx + Cy * Cy) * (Ax * By - Bx * Ay);
  return sign_of(v);
}

} // namespace predicates

inline std::uint64_t hilbert_index(std::uint32_t x, std::uint32_t y, int order) {
  const std::uint32_t n = 1u << order;
  std::uint64_t d = 0;
  for (std::uint32_t s = n / 2; s > 0; s /= 2) {
    const std::uint32_t rx = (x & s) ? 1 : 0;
    const std::uint32_t ry = (y & s) ? 1 : 0;
    d += static_cast<std::uint64_t>(s) * s * ((3 * rx) ^ ry);
    if (ry == 0) {
      if (rx == 1) {
        x = n - 1 - x;
        y = n - 1 - y;
      }
      std::swap(x, y);
    }
  }
  return d;
}

/// Delaunay triangulation of a point set (duplicates not allowed), counter-clockwise triangles.
inline std::vector<std::array<int, 3>> triangulate(const std::vector<Vec2>& points) {
  const int n = static_cast<int>(points.size());
  require(n >= 3, ErrorKind::mesh, "triangulation needs at least three points");
  Vec2 lo = points[0], hi = points[0];
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec2 c = 0.5 * (lo + hi);
  const double D = std::max(hi[0] - lo[0], hi[1] - lo[1]);
  const double M = 50.0;
  std::vector<Vec2> P = points;
  P.push_back(c + Vec2(-3 * M * D, -M * D));
  P.push_back(c + Vec2(3 * M * D, -M * D));
  P.push_back(c + Vec2(0.0, 3 * M * D));

  struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> nb; // nb[i] across edge (v[i], v[i+1])
    bool alive;
  };
  std::vector<Tri> T;
  T.reserve(2 * n + 16);
  T.push_back({{n, n + 1, n + 2}, {-1, -1, -1}, true});
  std::vector<int> free_slots;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  {
    const int bits = 16;
    const double scale = ((1u << bits) - 1) / std::max(D, 1e-300);
    std::vector<std::uint64_t> key(n);
    for (int i = 0; i < n; ++i) {
      auto qx = static_cast<std::uint32_t>((points[i][0] - lo[0]) * scale);
      auto qy = static_cast<std::uint32_t>((points[i][1] - lo[1]) * scale);
      key[i] = hilbert_index(qx, qy, bits);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key[a] < key[b]; });
  }

  auto in_circle = [&](int t, int p) {
    const auto& v = T[t].v;
    return predicates::incircle(P[v[0]], P[v[1]], P[v[2]], P[p]) > 0;
  };

  int last = 0;
  std::vector<int> cavity, stack;
  struct BEdge {
    int a, b, outside, outside_edge;
  };
  std::vector<BEdge> boundary;
  std::vector<int> mark(T.capacity(), 0);
  int stamp = 0;

  for (int p : order) {
    // visibility walk
    int t = last;
    for (int steps = 0;; ++steps) {
      require(steps < 4 * (n + 8), ErrorKind::mesh, "point location failed");
      const auto& v = T[t].v;
      int next = -1;
      for (int i = 0; i < 3; ++i) {
        if (predicates::orient(P[v[i]], P[v[(i + 1) % 3]], P[p]) < 0) {
          next = T[t].nb[i];
          break;
        }
      }
      if (next < 0) break;
      t = next;
    }
    // cavity
    ++stamp;
    if (mark.size() < T.size()) mark.resize(2 * T.size(), 0);
    cavity.clear();
    boundary.clear();
    stack.assign(1, t);
    mark[t] = stamp;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      cavity.push_back(u);
      for (int i = 0; i < 3; ++i) {
        int w = T[u].nb[i];
        if (w >= 0 && mark[w] == stamp) continue;
        if (w >= 0 && in_circle(w, p)) {
          mark[w] = stamp;
          stack.push_back(w);
        } else {
          int back = -1;
          if (w >= 0)
            for (int k = 0; k < 3; ++k)
              if (T[w].nb[k] == u) back = k;
          boundary.push_back({T[u].v[i], T[u].v[(i + 1) % 3], w, back});
        }
      }
    }
    for (int u : cavity) {
      T[u].alive = false;
      free_slots.push_back(u);
    }
    // fan of new triangles (a, b, p)
    std::vector<int> made(boundary.size());
    for (std::size_t k = 0; k < boundary.size(); ++k) {
      int id;
      Tri nt{{boundary[k].a, boundary[k].b, p}, {boundary[k].outside, -1, -1}, true};
      if (!free_slots.empty()) {
        id = free_slots.back();
        free_slots.pop_back();
        T[id] = nt;
      } else {
        id = static_cast<int>(T.size());
        T.push_back(nt);
      }
      made[k] = id;
      if (boundary[k].outside >= 0) T[boundary[k].outside].nb[boundary[k].outside_edge] = id;
    }
    // stitch: triangle (a,b,p) meets (b,c,p) across (b,p) and (z,a,p) across (p,a)
    for (std::size_t k = 0; k < boundary.size(); ++k) {
      for (std::size_t m = 0; m < boundary.size(); ++m) {
        if (boundary[m].a == boundary[k].b) {
          T[made[k]].nb[1] = made[m];
          T[made[m]].nb[2] = made[k];
        }
      }
    }
    last = made[0];
  }

  std::vector<std::array<int, 3>> out;
  out.reserve(2 * n);
  for (const auto& t : T)
    if (t.alive && t.v[0] < n && t.v[1] < n && t.v[2] < n) out.push_back(t.v);
  return out;
}

} // namespace wgabs::delaunay
