#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "wgabs/common.hpp"
#include "wgabs/delaunay.hpp"
#include "wgabs/geometry.hpp"

namespace wgabs {

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

/// Boundary or interface edge. Outer edges have the domain on their left; interface edges the inclusion.
struct BoundaryEdge {
  std::array<int, 2> v;
  BoundaryTag tag;
  int curve = -1; // index into Mesh::curves, -1 when unknown (meshes read from file)
};

struct MeshGrading {
  int skin_layers = 4;
  double min_h = 0.0; // 0 means target_h / 64
  bool layer_unresolved = false;
  double layer_h = 0.0; // edge bound applied within the skin band, 0 if never graded
  double skin_depth = 0.0;
};

struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Region> regions;
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<Curve> curves;
  double target_h = 0.0;
  MeshGrading grading;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }

  double signed_area(int t) const {
    const auto& v = triangles[t];
    return 0.5 * detail::cross(vertices[v[1]] - vertices[v[0]], vertices[v[2]] - vertices[v[0]]);
  }

  double longest_edge(int t) const {
    const auto& v = triangles[t];
    double L = 0.0;
    for (int i = 0; i < 3; ++i) L = std::max(L, (vertices[v[(i + 1) % 3]] - vertices[v[i]]).norm());
    return L;
  }

  double max_edge() const {
    double L = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) L = std::max(L, longest_edge(static_cast<int>(t)));
    return L;
  }

  double region_area(Region r) const {
    double a = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t)
      if (regions[t] == r) a += signed_area(static_cast<int>(t));
    return a;
  }

  std::set<BoundaryTag> tags() const {
    std::set<BoundaryTag> s;
    for (const auto& e : boundary_edges) s.insert(e.tag);
    return s;
  }

  std::vector<int> edges_with_tag(BoundaryTag tag) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < boundary_edges.size(); ++i)
      if (boundary_edges[i].tag == tag) out.push_back(static_cast<int>(i));
    return out;
  }

  /// Point halfway along the edge (a, b), on the curve when the edge discretises a curved interface.
  Vec2 edge_midpoint(const BoundaryEdge& e) const {
    Vec2 m = 0.5 * (vertices[e.v[0]] + vertices[e.v[1]]);
    if (e.curve >= 0 && curves[e.curve].curved()) return curves[e.curve].project(m);
    return m;
  }
};

/// Throws a mesh error unless the mesh is conforming, positively oriented and consistently tagged.
inline void check_mesh(const Mesh& m) {
  const auto err = ErrorKind::mesh;
  require(m.regions.size() == m.triangles.size(), err, "region list size mismatch");
  std::unordered_map<std::uint64_t, std::array<int, 2>> owners;
  owners.reserve(3 * m.triangles.size());
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    require(m.signed_area(static_cast<int>(t)) > 0.0, err, "triangle " + std::to_string(t) + " is not positively oriented");
    const auto& v = m.triangles[t];
    for (int i = 0; i < 3; ++i) {
      auto [it, fresh] = owners.try_emplace(edge_key(v[i], v[(i + 1) % 3]), std::array<int, 2>{int(t), -1});
      if (!fresh) {
        require(it->second[1] < 0, err, "edge shared by more than two triangles");
        it->second[1] = static_cast<int>(t);
      }
    }
  }
  std::unordered_set<std::uint64_t> tagged;
  for (const auto& e : m.boundary_edges) {
    auto it = owners.find(edge_key(e.v[0], e.v[1]));
    require(it != owners.end(), err, "boundary edge is not a triangle edge");
    require(tagged.insert(edge_key(e.v[0], e.v[1])).second, err, "boundary edge listed twice");
    if (e.tag == BoundaryTag::inclusion_interface) {
      require(it->second[1] >= 0, err, "interface edge must have two triangles");
      require(m.regions[it->second[0]] != m.regions[it->second[1]], err, "interface edge does not separate regions");
    } else {
      require(it->second[1] < 0, err, "boundary edge must belong to exactly one triangle");
    }
  }
  for (const auto& [k, o] : owners) {
    if (o[1] < 0) require(tagged.count(k), err, "untagged boundary edge (hanging node or hole)");
    else if (m.regions[o[0]] != m.regions[o[1]]) require(tagged.count(k), err, "region change across an untagged edge");
  }
}

namespace detail {

/// Longest-edge (Rivara) bisection with neighbour tracking and constraint-edge bookkeeping.
class Refiner {
public:
  explicit Refiner(Mesh& m) : m_(m) {
    const std::size_t nt = m.triangles.size();
    nb_.assign(nt, {-1, -1, -1});
    std::unordered_map<std::uint64_t, std::pair<int, int>> first;
    first.reserve(3 * nt);
    for (std::size_t t = 0; t < nt; ++t)
      for (int i = 0; i < 3; ++i) {
        auto key = edge_key(m.triangles[t][i], m.triangles[t][(i + 1) % 3]);
        auto it = first.find(key);
        if (it == first.end()) {
          first.emplace(key, std::make_pair(int(t), i));
        } else {
          nb_[t][i] = it->second.first;
          nb_[it->second.first][it->second.second] = static_cast<int>(t);
        }
      }
    for (const auto& e : m.boundary_edges) constraint_[edge_key(e.v[0], e.v[1])] = {e.tag, e.curve};
  }

  int longest(int t) const {
    const auto& v = m_.triangles[t];
    int best = 0;
    auto rank = [&](int i) {
      int a = v[i], b = v[(i + 1) % 3];
      return std::make_tuple((m_.vertices[a] - m_.vertices[b]).squaredNorm(), std::min(a, b), std::max(a, b));
    };
    for (int i = 1; i < 3; ++i)
      if (rank(i) > rank(best)) best = i;
    return best;
  }

  void bisect(int t) {
    int e = longest(t);
    const int a = m_.triangles[t][e], b = m_.triangles[t][(e + 1) % 3];
    for (;;) {
      int n = nb_[t][e];
      if (n < 0) break;
      int f = longest(n);
      const auto& nv = m_.triangles[n];
      if (edge_key(nv[f], nv[(f + 1) % 3]) == edge_key(a, b)) break;
      bisect(n);
    }
    split(t, e);
  }

  /// Bisects until pred(t) is false for every triangle; returns the number of bisections.
  template <class Pred> std::size_t refine(Pred&& pred) {
    std::size_t count = 0;
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t t = 0; t < m_.triangles.size(); ++t) {
        while (pred(static_cast<int>(t))) {
          bisect(static_cast<int>(t));
          ++count;
          changed = true;
        }
      }
    }
    return count;
  }

  void finish() {
    std::vector<BoundaryEdge> edges;
    edges.reserve(constraint_.size());
    for (std::size_t t = 0; t < m_.triangles.size(); ++t) {
      const auto& v = m_.triangles[t];
      for (int i = 0; i < 3; ++i) {
        auto it = constraint_.find(edge_key(v[i], v[(i + 1) % 3]));
        if (it == constraint_.end()) continue;
        const BoundaryTag tag = it->second.first;
        if (tag == BoundaryTag::inclusion_interface && m_.regions[t] != Region::inclusion) continue;
        edges.push_back({{v[i], v[(i + 1) % 3]}, tag, it->second.second});
      }
    }
    std::sort(edges.begin(), edges.end(), [](const BoundaryEdge& x, const BoundaryEdge& y) {
      return std::make_tuple(int(x.tag), x.v[0], x.v[1]) < std::make_tuple(int(y.tag), y.v[0], y.v[1]);
    });
    m_.boundary_edges = std::move(edges);
  }

private:
  int new_vertex(int a, int b) {
    Vec2 mid = 0.5 * (m_.vertices[a] + m_.vertices[b]);
    auto it = constraint_.find(edge_key(a, b));
    if (it != constraint_.end() && it->second.second >= 0 && m_.curves[it->second.second].curved())
      mid = m_.curves[it->second.second].project(mid);
    m_.vertices.push_back(mid);
    const int mv = static_cast<int>(m_.vertices.size()) - 1;
    if (it != constraint_.end()) {
      auto info = it->second;
      constraint_.erase(it);
      constraint_[edge_key(a, mv)] = info;
      constraint_[edge_key(mv, b)] = info;
    }
    return mv;
  }

  int add_triangle(std::array<int, 3> v, std::array<int, 3> nb, Region r) {
    m_.triangles.push_back(v);
    m_.regions.push_back(r);
    nb_.push_back(nb);
    return static_cast<int>(m_.triangles.size()) - 1;
  }

  void relink(int who, int old_nb, int new_nb) {
    if (who < 0) return;
    for (int k = 0; k < 3; ++k)
      if (nb_[who][k] == old_nb) nb_[who][k] = new_nb;
  }

  void split(int t, int e) {
    const auto tv = m_.triangles[t];
    const auto tn = nb_[t];
    const int a = tv[e], b = tv[(e + 1) % 3], c = tv[(e + 2) % 3];
    const int n = tn[e];
    const int m = new_vertex(a, b);

    int n2 = -1;
    std::array<int, 3> nv{}, nn{};
    int f = 0;
    if (n >= 0) {
      nv = m_.triangles[n];
      nn = nb_[n];
      for (f = 0; f < 3; ++f)
        if (nv[f] == b && nv[(f + 1) % 3] == a) break;
    }
    const int t2 = add_triangle({m, b, c}, {-1, tn[(e + 1) % 3], t}, m_.regions[t]);
    relink(tn[(e + 1) % 3], t, t2);
    m_.triangles[t] = {a, m, c};
    nb_[t] = {-1, t2, tn[(e + 2) % 3]};
    if (n >= 0) {
      const int d = nv[(f + 2) % 3];
      n2 = add_triangle({m, a, d}, {t, nn[(f + 1) % 3], n}, m_.regions[n]);
      relink(nn[(f + 1) % 3], n, n2);
      m_.triangles[n] = {b, m, d};
      nb_[n] = {t2, n2, nn[(f + 2) % 3]};
      nb_[t][0] = n2;
      nb_[t2][0] = n;
    }
  }

  Mesh& m_;
  std::vector<std::array<int, 3>> nb_;
  std::unordered_map<std::uint64_t, std::pair<BoundaryTag, int>> constraint_;
};

struct Subsegment {
  int a, b, curve;
};

} // namespace detail

struct MeshOptions {
  /// Interior lattice points closer than this fraction of h to any curve are dropped.
  double clearance = 0.55;
  /// Initial triangulation is bisected until every edge is at most refine_factor * target_h.
  double refine_factor = 1.0;
};

inline Mesh triangulate(const Geometry& g, double target_h, const MeshOptions& opt = {}) {
  const auto err = ErrorKind::mesh;
  require(target_h > 0.0 && std::isfinite(target_h), err, "target_h must be positive");
  require(g.narrowest_feature() >= 2.0 * target_h, err,
          "feature of width " + std::to_string(g.narrowest_feature()) + " is thinner than 2 * target_h");
  const double h = target_h;
  Mesh mesh;
  mesh.target_h = h;
  mesh.curves = g.all_curves();
  mesh.grading.min_h = h / 64.0;

  std::vector<Vec2> pts;
  std::map<std::pair<double, double>, int> index;
  auto add_point = [&](const Vec2& p) {
    auto [it, fresh] = index.try_emplace({p[0], p[1]}, static_cast<int>(pts.size()));
    if (fresh) pts.push_back(p);
    return it->second;
  };
  std::vector<detail::Subsegment> segs;
  std::vector<Vec2> interface_polygon;
  for (std::size_t ci = 0; ci < mesh.curves.size(); ++ci) {
    const Curve& c = mesh.curves[ci];
    std::vector<int> ids;
    if (c.curved()) {
      const int n = std::max(12, static_cast<int>(std::ceil(c.length_bound() / h)));
      for (int k = 0; k < n; ++k) ids.push_back(add_point(c.at(2.0 * pi * k / n)));
      ids.push_back(ids.front());
    } else {
      const int n = std::max(1, static_cast<int>(std::ceil(c.length_bound() / h - 1e-9)));
      for (int k = 0; k <= n; ++k) ids.push_back(add_point(k == n ? c.b : c.a + (double(k) / n) * (c.b - c.a)));
    }
    for (std::size_t k = 0; k + 1 < ids.size(); ++k) segs.push_back({ids[k], ids[k + 1], int(ci)});
    if (c.tag == BoundaryTag::inclusion_interface)
      for (std::size_t k = 0; k + 1 < ids.size(); ++k) interface_polygon.push_back(pts[ids[k]]);
  }
  const std::size_t n_boundary = pts.size();

  // hexagonal lattice of interior points
  Vec2 lo = g.outer[0], hi = g.outer[0];
  for (const auto& p : g.outer) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double dy = h * std::sqrt(3.0) / 2.0;
  const int rows = static_cast<int>(std::ceil((hi[1] - lo[1]) / dy));
  const int cols = static_cast<int>(std::ceil((hi[0] - lo[0]) / h)) + 1;
  for (int r = 1; r < rows; ++r) {
    const double y = lo[1] + r * dy;
    for (int c = 0; c <= cols; ++c) {
      Vec2 p(lo[0] + (c + 0.5 * (r % 2)) * h, y);
      if (!g.in_polygon(p)) continue;
      bool clear = true;
      for (const auto& cv : mesh.curves)
        if (cv.distance(p) < opt.clearance * h) {
          clear = false;
          break;
        }
      if (clear) add_point(p);
    }
  }

  std::vector<std::array<int, 3>> tris;
  for (int attempt = 0;; ++attempt) {
    require(attempt < 40, err, "constraint recovery did not converge");
    tris = delaunay::triangulate(pts);
    std::unordered_set<std::uint64_t> edges;
    edges.reserve(3 * tris.size());
    for (const auto& t : tris)
      for (int i = 0; i < 3; ++i) edges.insert(edge_key(t[i], t[(i + 1) % 3]));
    std::vector<detail::Subsegment> next;
    std::vector<std::pair<Vec2, double>> cleared;
    bool missing = false;
    for (const auto& s : segs) {
      if (edges.count(edge_key(s.a, s.b))) {
        next.push_back(s);
        continue;
      }
      missing = true;
      Vec2 mid = 0.5 * (pts[s.a] + pts[s.b]);
      if (mesh.curves[s.curve].curved()) mid = mesh.curves[s.curve].project(mid);
      const int m = add_point(mid);
      cleared.push_back({mid, 0.5 * (pts[s.a] - pts[s.b]).norm()});
      next.push_back({s.a, m, s.curve});
      next.push_back({m, s.b, s.curve});
    }
    if (!missing) break;
    segs = std::move(next);
    // drop lattice points encroaching on the split subsegments
    std::vector<Vec2> kept;
    std::vector<int> remap(pts.size(), -1);
    std::set<int> protected_ids;
    for (const auto& s : segs) {
      protected_ids.insert(s.a);
      protected_ids.insert(s.b);
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      bool drop = false;
      if (!protected_ids.count(int(i)) && i >= n_boundary)
        for (const auto& [c, r] : cleared)
          if ((pts[i] - c).norm() < 1.05 * r) drop = true;
      if (!drop) {
        remap[i] = static_cast<int>(kept.size());
        kept.push_back(pts[i]);
      }
    }
    pts = std::move(kept);
    index.clear();
    for (std::size_t i = 0; i < pts.size(); ++i) index[{pts[i][0], pts[i][1]}] = static_cast<int>(i);
    for (auto& s : segs) {
      s.a = remap[s.a];
      s.b = remap[s.b];
    }
  }

  // carve and classify
  const bool slab = g.has_inclusion() && std::holds_alternative<Slab>(g.inclusion());
  auto in_ring = [](const std::vector<Vec2>& poly, const Vec2& p) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
      if ((poly[i][1] > p[1]) != (poly[j][1] > p[1])) {
        double zc = poly[i][0] + (p[1] - poly[i][1]) * (poly[j][0] - poly[i][0]) / (poly[j][1] - poly[i][1]);
        if (p[0] < zc) inside = !inside;
      }
    }
    return inside;
  };
  std::vector<int> used(pts.size(), -1);
  for (const auto& t : tris) {
    const Vec2 c = (pts[t[0]] + pts[t[1]] + pts[t[2]]) / 3.0;
    if (!g.in_polygon(c)) continue;
    Region r = Region::exterior;
    if (g.has_inclusion()) {
      if (slab) {
        const auto& s = std::get<Slab>(g.inclusion());
        r = (c[0] > s.z1 && c[0] < s.z2) ? Region::inclusion : Region::exterior;
      } else {
        r = in_ring(interface_polygon, c) ? Region::inclusion : Region::exterior;
      }
    }
    std::array<int, 3> v;
    for (int i = 0; i < 3; ++i) {
      if (used[t[i]] < 0) {
        used[t[i]] = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(pts[t[i]]);
      }
      v[i] = used[t[i]];
    }
    mesh.triangles.push_back(v);
    mesh.regions.push_back(r);
  }
  for (const auto& s : segs) {
    require(used[s.a] >= 0 && used[s.b] >= 0, err, "constraint vertex lost while carving");
    mesh.boundary_edges.push_back({{used[s.a], used[s.b]}, mesh.curves[s.curve].tag, s.curve});
  }

  detail::Refiner ref(mesh);
  const double hmax = opt.refine_factor * h * (1.0 + 1e-12);
  ref.refine([&](int t) { return mesh.longest_edge(t) > hmax; });
  ref.finish();
  check_mesh(mesh);
  return mesh;
}

/// Distance from p to the inclusion interface curves of the mesh.
inline double interface_distance(const Mesh& m, const Vec2& p) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& c : m.curves)
    if (c.tag == BoundaryTag::inclusion_interface) d = std::min(d, c.distance(p));
  return d;
}

inline double skin_depth(double lambda, double b0, double eta) { return std::sqrt(2.0) / std::sqrt(lambda * b0 * eta); }

struct GradingOptions {
  int layers_per_skin = 4;
  /// Edge-size growth per unit distance beyond the skin band, inside and outside the inclusion.
  double growth_inside = 0.3;
  double growth_outside = 0.5;
};

/// Bisects elements near the inclusion interface so that inclusion edges within one skin depth of the
/// interface are at most skin_depth / layers_per_skin (floored at grading.min_h, which then sets
/// layer_unresolved). Outside the inclusion the size grows from the interface value.
inline Mesh grade_near_interface(const Mesh& in, double lambda, double eta, double b0, const GradingOptions& opt = {}) {
  require(eta > 0.0, ErrorKind::config, "grading needs eta > 0");
  require(opt.layers_per_skin > 0, ErrorKind::config, "layers_per_skin must be positive");
  Mesh m = in;
  const double d = skin_depth(lambda, b0, eta);
  double layer_h = d / opt.layers_per_skin;
  const double min_h = m.grading.min_h > 0.0 ? m.grading.min_h : m.target_h / 64.0;
  m.grading.skin_layers = opt.layers_per_skin;
  m.grading.skin_depth = d;
  bool has_interface = false;
  for (const auto& c : m.curves) has_interface |= c.tag == BoundaryTag::inclusion_interface;
  if (!has_interface || layer_h >= m.target_h) return m;
  if (layer_h < min_h) {
    layer_h = min_h;
    m.grading.layer_unresolved = true;
  }
  m.grading.layer_h = layer_h;

  std::vector<double> dist;
  auto vdist = [&](int v) {
    if (static_cast<std::size_t>(v) >= dist.size()) dist.resize(m.vertices.size(), -1.0);
    if (dist[v] < 0.0) dist[v] = interface_distance(m, m.vertices[v]);
    return dist[v];
  };
  detail::Refiner ref(m);
  ref.refine([&](int t) {
    const auto& v = m.triangles[t];
    const double L = m.longest_edge(t);
    if (L <= layer_h * (1.0 + 1e-12)) return false;
    const double dmin = std::min({vdist(v[0]), vdist(v[1]), vdist(v[2])});
    const double reach = std::max(0.0, dmin - L);
    double allowed;
    if (m.regions[t] == Region::inclusion)
      allowed = reach <= d ? layer_h : layer_h + opt.growth_inside * (reach - d);
    else
      allowed = layer_h + opt.growth_outside * reach;
    return L > allowed * (1.0 + 1e-12);
  });
  ref.finish();
  check_mesh(m);
  return m;
}

inline void write_mesh(std::ostream& os, const Mesh& m) {
  char buf[128];
  os << m.vertices.size() << ' ' << m.triangles.size() << ' ' << m.boundary_edges.size() << '\n';
  for (const auto& p : m.vertices) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", p[0], p[1]);
    os << buf;
  }
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& v = m.triangles[t];
    os << v[0] + 1 << ' ' << v[1] + 1 << ' ' << v[2] + 1 << ' ' << static_cast<int>(m.regions[t]) << '\n';
  }
  for (const auto& e : m.boundary_edges) os << e.v[0] + 1 << ' ' << e.v[1] + 1 << ' ' << static_cast<int>(e.tag) << '\n';
}

inline Mesh read_mesh(std::istream& is) {
  const auto err = ErrorKind::config;
  Mesh m;
  std::size_t nv = 0, nt = 0, ne = 0;
  require(static_cast<bool>(is >> nv >> nt >> ne), err, "mesh header must be 'nv nt nbe'");
  m.vertices.resize(nv);
  for (auto& p : m.vertices) {
    std::string a, b;
    require(static_cast<bool>(is >> a >> b), err, "truncated vertex list");
    p = Vec2(std::stod(a), std::stod(b));
  }
  m.triangles.resize(nt);
  m.regions.resize(nt);
  auto index = [&](long v) {
    require(v >= 1 && static_cast<std::size_t>(v) <= nv, err, "vertex index out of range");
    return static_cast<int>(v - 1);
  };
  for (std::size_t t = 0; t < nt; ++t) {
    long a, b, c;
    int r;
    require(static_cast<bool>(is >> a >> b >> c >> r), err, "truncated triangle list");
    require(r == 1 || r == 2, err, "unknown region tag");
    m.triangles[t] = {index(a), index(b), index(c)};
    m.regions[t] = static_cast<Region>(r);
  }
  m.boundary_edges.resize(ne);
  for (auto& e : m.boundary_edges) {
    long a, b;
    int tag;
    require(static_cast<bool>(is >> a >> b >> tag), err, "truncated boundary-edge list");
    require(tag >= 1 && tag <= 6, err, "unknown boundary tag");
    e = {{index(a), index(b)}, static_cast<BoundaryTag>(tag), -1};
  }
  double L = 0.0;
  for (std::size_t t = 0; t < nt; ++t) L = std::max(L, m.longest_edge(static_cast<int>(t)));
  m.target_h = L;
  return m;
}

inline void write_mesh_file(const std::string& path, const Mesh& m) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorKind::config, "cannot open " + path);
  write_mesh(os, m);
}

inline Mesh read_mesh_file(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorKind::config, "cannot open " + path);
  return read_mesh(is);
}

} // namespace wgabs
