#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <memory>
#include <ostream>
#include <set>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "wgabs/geometry.hpp"
#include "wgabs/mesh.hpp"
#include "wgabs/modes.hpp"
#include "wgabs/quadrature.hpp"
#include "wgabs/sparse_lu.hpp"

namespace wgabs {

namespace p2 {

/// Quadratic Lagrange basis on the reference triangle. Local order: vertices 0,1,2 then the
/// midpoints of edges (0,1), (1,2), (2,0).
struct Shape {
  std::array<double, 6> N;
  std::array<Vec2, 6> dN; // reference gradients
};

inline Shape shape(double xi, double eta) {
  const double l1 = 1.0 - xi - eta, l2 = xi, l3 = eta;
  const Vec2 d1(-1.0, -1.0), d2(1.0, 0.0), d3(0.0, 1.0);
  Shape s;
  s.N = {l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), l3 * (2 * l3 - 1), 4 * l1 * l2, 4 * l2 * l3, 4 * l3 * l1};
  s.dN = {(4 * l1 - 1) * d1, (4 * l2 - 1) * d2, (4 * l3 - 1) * d3, 4 * (l2 * d1 + l1 * d2), 4 * (l3 * d2 + l2 * d3),
          4 * (l1 * d3 + l3 * d1)};
  return s;
}

/// Quadratic basis on an edge parametrised by s in [0, 1]: start, midpoint, end.
inline std::array<double, 3> edge_shape(double s) {
  return {(1 - s) * (1 - 2 * s), 4 * s * (1 - s), s * (2 * s - 1)};
}

inline std::array<double, 3> edge_shape_ds(double s) { return {4 * s - 3, 4 - 8 * s, 4 * s - 1}; }

} // namespace p2

/// P2 degrees of freedom: vertices first, then one per edge in order of first appearance.
struct DofMap {
  int n_vertices = 0;
  int n_dofs = 0;
  std::vector<std::array<int, 6>> cell;
  std::vector<Vec2> points; // nodal positions; curved-edge midpoints lie on their curve
  std::vector<char> curved; // triangle has an edge on a curved interface
  std::unordered_map<std::uint64_t, int> edge_dof;

  int edge(int a, int b) const { return edge_dof.at(edge_key(a, b)); }

  std::array<int, 3> boundary_dofs(const BoundaryEdge& e) const { return {e.v[0], edge(e.v[0], e.v[1]), e.v[1]}; }

  std::array<Vec2, 6> nodes(int t) const {
    std::array<Vec2, 6> x;
    for (int i = 0; i < 6; ++i) x[i] = points[cell[t][i]];
    return x;
  }
};

inline DofMap build_dof_map(const Mesh& m) {
  DofMap d;
  d.n_vertices = static_cast<int>(m.num_vertices());
  d.points = m.vertices;
  std::unordered_map<std::uint64_t, int> curved_edge;
  for (std::size_t i = 0; i < m.boundary_edges.size(); ++i) {
    const auto& e = m.boundary_edges[i];
    if (e.curve >= 0 && m.curves[e.curve].curved()) curved_edge[edge_key(e.v[0], e.v[1])] = static_cast<int>(i);
  }
  d.cell.resize(m.num_triangles());
  d.curved.assign(m.num_triangles(), 0);
  d.edge_dof.reserve(3 * m.num_triangles() / 2 + 16);
  int next = d.n_vertices;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& v = m.triangles[t];
    for (int i = 0; i < 3; ++i) d.cell[t][i] = v[i];
    for (int i = 0; i < 3; ++i) {
      const int a = v[i], b = v[(i + 1) % 3];
      const auto key = edge_key(a, b);
      auto [it, fresh] = d.edge_dof.try_emplace(key, next);
      auto c = curved_edge.find(key);
      if (c != curved_edge.end()) d.curved[t] = 1;
      if (fresh) {
        ++next;
        d.points.push_back(c != curved_edge.end() ? m.edge_midpoint(m.boundary_edges[c->second])
                                                  : Vec2(0.5 * (m.vertices[a] + m.vertices[b])));
      }
      d.cell[t][3 + i] = it->second;
    }
  }
  d.n_dofs = next;
  return d;
}

/// Physical quantities at one quadrature point of a (possibly curved) P2 triangle.
struct QuadPoint {
  Vec2 x;
  double weight; // includes |det J|
  std::array<double, 6> N;
  std::array<Vec2, 6> grad;
};

template <class F>
void for_each_quadrature_point(const DofMap& d, int t, const std::vector<quadrature::TrianglePoint>& rule, F&& f) {
  const auto X = d.nodes(t);
  QuadPoint q;
  for (const auto& qp : rule) {
    const auto s = p2::shape(qp.xi, qp.eta);
    Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
    q.x.setZero();
    for (int i = 0; i < 6; ++i) {
      J += X[i] * s.dN[i].transpose();
      q.x += s.N[i] * X[i];
    }
    const double det = J.determinant();
    require(det > 0.0, ErrorKind::mesh, "inverted curved element " + std::to_string(t));
    const Eigen::Matrix2d JinvT = J.inverse().transpose();
    for (int i = 0; i < 6; ++i) q.grad[i] = JinvT * s.dN[i];
    q.N = s.N;
    q.weight = 0.5 * qp.weight * det;
    f(q);
  }
}

inline const std::vector<quadrature::TrianglePoint>& element_rule(const DofMap& d, int t, bool weighted) {
  return (d.curved[t] || weighted) ? quadrature::triangle_degree6() : quadrature::triangle_degree4();
}

struct BoundaryCondition {
  enum class Kind { neumann_all, dirichlet_on_inclusion, dirichlet_on };
  Kind kind = Kind::neumann_all;
  std::vector<BoundaryTag> tags; // Dirichlet tags (in addition to the interface for dirichlet_on_inclusion)
  std::function<cplx(const Vec2&)> value; // Dirichlet data, zero if empty

  static BoundaryCondition neumann_all() { return {}; }
  static BoundaryCondition dirichlet_on_inclusion() { return {Kind::dirichlet_on_inclusion, {}, {}}; }
  static BoundaryCondition dirichlet_on(BoundaryTag tag) { return {Kind::dirichlet_on, {tag}, {}}; }
};

struct AssemblyOptions {
  std::function<cplx(const Vec2&)> source; // f in -Delta u - lambda (1 + i eta b) u = f
  bool ports = true;
};

/// DtN data of one truncation line: trace(k, i) = integral of N_i phi_k along the line.
struct PortBlock {
  Port port;
  std::vector<int> dofs;
  Eigen::MatrixXd trace;
  std::vector<int> edges;
};

/// The eta-independent part of an assembled system.
struct SystemBlocks {
  std::shared_ptr<const Geometry> geometry;
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const DofMap> dofs;
  ModeBasis basis;
  BoundaryCondition bc;
  std::set<BoundaryTag> dirichlet_tags;
  bool inclusion_removed = false;
  std::function<cplx(const Vec2&)> source;

  CscPattern pattern;
  std::vector<double> K, M, Mb;
  std::vector<double> M_inclusion; // mass restricted to inclusion triangles
  std::vector<char> active;
  std::vector<PortBlock> ports;

  std::vector<char> constrained;
  CVector constrained_values;
  CVector source_load;
  std::vector<int> free_dofs;
  std::vector<int> dof_to_free;
  CscPattern reduced;
  std::vector<long> reduced_position; // entry of `pattern` behind each reduced entry

  double lambda() const { return basis.lambda; }
  int dimension() const { return static_cast<int>(free_dofs.size()); }
};

struct RhsColumn {
  int port = -1; // -1: no incident wave (source-only problem)
  int mode = -1;
};

struct AssembledSystem {
  std::shared_ptr<const SystemBlocks> blocks;
  double eta = 0.0;
  std::vector<cplx> A; // full matrix on blocks->pattern
  std::vector<RhsColumn> columns;
  std::vector<cplx> A_reduced;
  CMatrix F_reduced;

  int dimension() const { return blocks->dimension(); }
  double lambda() const { return blocks->lambda(); }
};

/// Incident wave arriving through port p: (2 alpha_j)^{-1/2} e^{-i alpha_j d z} phi_j(y).
inline cplx incident_wave(const ModeBasis& b, const Port& p, int j, const Vec2& x) {
  const double a = b.wavenumber(j);
  return std::exp(-I * a * double(p.direction) * x[0]) * b.phi(j, x[1]) / std::sqrt(2.0 * a);
}

namespace detail {

inline CscPattern build_pattern(const DofMap& d, const std::vector<char>& active,
                                const std::vector<std::vector<int>>& cliques) {
  const int n = d.n_dofs;
  std::vector<int> start(n + 1, 0);
  for (std::size_t t = 0; t < d.cell.size(); ++t)
    if (active[t])
      for (int a : d.cell[t]) ++start[a + 1];
  for (int i = 0; i < n; ++i) start[i + 1] += start[i];
  std::vector<int> tri(start[n]);
  {
    std::vector<int> fill(start.begin(), start.end() - 1);
    for (std::size_t t = 0; t < d.cell.size(); ++t)
      if (active[t])
        for (int a : d.cell[t]) tri[fill[a]++] = static_cast<int>(t);
  }
  std::vector<std::vector<int>> member(n);
  for (std::size_t c = 0; c < cliques.size(); ++c)
    for (int a : cliques[c]) member[a].push_back(static_cast<int>(c));

  CscPattern p;
  p.n = n;
  p.colptr.assign(n + 1, 0);
  p.rowidx.reserve(static_cast<std::size_t>(start[n]) * 3);
  std::vector<int> rows;
  for (int j = 0; j < n; ++j) {
    rows.clear();
    rows.push_back(j);
    for (int k = start[j]; k < start[j + 1]; ++k)
      for (int a : d.cell[tri[k]]) rows.push_back(a);
    for (int c : member[j]) rows.insert(rows.end(), cliques[c].begin(), cliques[c].end());
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    p.rowidx.insert(p.rowidx.end(), rows.begin(), rows.end());
    p.colptr[j + 1] = static_cast<int>(p.rowidx.size());
  }
  return p;
}

inline PortBlock build_port(const Mesh& m, const DofMap& d, const ModeBasis& basis, const Port& port) {
  PortBlock pb;
  pb.port = port;
  std::unordered_map<int, int> local;
  auto edges = m.edges_with_tag(port.tag);
  for (int e : edges)
    for (int a : d.boundary_dofs(m.boundary_edges[e]))
      if (local.emplace(a, static_cast<int>(pb.dofs.size())).second) pb.dofs.push_back(a);
  pb.edges = edges;
  pb.trace = Eigen::MatrixXd::Zero(basis.n_terms, pb.dofs.size());
  const auto g = quadrature::gauss_legendre(16);
  for (int e : edges) {
    const auto& be = m.boundary_edges[e];
    const auto dofs = d.boundary_dofs(be);
    const Vec2 xa = m.vertices[be.v[0]], xb = m.vertices[be.v[1]];
    const double len = (xb - xa).norm();
    for (std::size_t q = 0; q < g.nodes.size(); ++q) {
      const double s = g.nodes[q];
      const auto N = p2::edge_shape(s);
      const double y = xa[1] + s * (xb[1] - xa[1]);
      for (int k = 0; k < basis.n_terms; ++k) {
        const double w = g.weights[q] * len * basis.phi(k, y);
        for (int i = 0; i < 3; ++i) pb.trace(k, local[dofs[i]]) += w * N[i];
      }
    }
  }
  return pb;
}

inline CVector load_vector(const SystemBlocks& s, const RhsColumn& col) {
  CVector F = s.source_load;
  if (col.port >= 0) {
    const auto& pb = s.ports[col.port];
    const double a = s.basis.wavenumber(col.mode);
    const cplx g = -2.0 * I * a * std::exp(-I * a * double(pb.port.direction) * pb.port.z) / std::sqrt(2.0 * a);
    for (std::size_t i = 0; i < pb.dofs.size(); ++i) F[pb.dofs[i]] += g * pb.trace(col.mode, i);
  }
  return F;
}

/// Full-system product A u for the given eta.
inline CVector apply_full(const SystemBlocks& s, double eta, const CVector& u) {
  const double lam = s.lambda();
  const auto& p = s.pattern;
  CVector y = CVector::Zero(p.n);
  for (int c = 0; c < p.n; ++c) {
    const cplx uc = u[c];
    if (uc == cplx(0.0)) continue;
    for (int k = p.colptr[c]; k < p.colptr[c + 1]; ++k)
      y[p.rowidx[k]] += (s.K[k] - lam * s.M[k] - I * lam * eta * s.Mb[k]) * uc;
  }
  for (const auto& pb : s.ports) {
    CVector tu = CVector::Zero(s.basis.n_terms);
    for (std::size_t i = 0; i < pb.dofs.size(); ++i) tu += pb.trace.col(i) * u[pb.dofs[i]];
    for (int k = 0; k < s.basis.n_terms; ++k) tu[k] *= s.basis.dtn_symbol(k);
    for (std::size_t i = 0; i < pb.dofs.size(); ++i) y[pb.dofs[i]] -= pb.trace.col(i).dot(tu);
  }
  return y;
}

} // namespace detail

/// Assembles the eta-independent blocks K, M, M_b and the DtN traces.
inline std::shared_ptr<const SystemBlocks> assemble_blocks(std::shared_ptr<const Geometry> geometry,
                                                           std::shared_ptr<const Mesh> mesh, const ModeBasis& basis,
                                                           const BoundaryCondition& bc,
                                                           const AssemblyOptions& opt = {}) {
  const auto& g = *geometry;
  const auto& m = *mesh;
  if (g.spec.lambda)
    require(std::abs(*g.spec.lambda - basis.lambda) <= 1e-12 * basis.lambda, ErrorKind::config,
            "mode basis and geometry use different lambda");
  auto s = std::make_shared<SystemBlocks>();
  s->geometry = geometry;
  s->mesh = mesh;
  s->basis = basis;
  s->bc = bc;
  s->source = opt.source;
  const auto tags = m.tags();
  for (auto t : bc.tags) {
    require(tags.count(t), ErrorKind::config, std::string("mesh has no boundary tagged ") + tag_name(t));
    s->dirichlet_tags.insert(t);
  }
  if (bc.kind == BoundaryCondition::Kind::dirichlet_on_inclusion) {
    require(tags.count(BoundaryTag::inclusion_interface), ErrorKind::config,
            "dirichlet_on_inclusion needs an inclusion interface");
    s->inclusion_removed = true;
    s->dirichlet_tags.insert(BoundaryTag::inclusion_interface);
  }

  auto dofs = std::make_shared<DofMap>(build_dof_map(m));
  s->dofs = dofs;
  const auto& d = *dofs;
  const int n = d.n_dofs;

  s->active.assign(m.num_triangles(), 1);
  if (s->inclusion_removed)
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
      if (m.regions[t] == Region::inclusion) s->active[t] = 0;

  std::vector<std::vector<int>> cliques;
  if (opt.ports)
    for (const auto& port : g.ports) {
      if (s->dirichlet_tags.count(port.tag) || !tags.count(port.tag)) continue;
      s->ports.push_back(detail::build_port(m, d, basis, port));
      cliques.push_back(s->ports.back().dofs);
    }

  s->pattern = detail::build_pattern(d, s->active, cliques);
  const auto& P = s->pattern;
  s->K.assign(P.nnz(), 0.0);
  s->M.assign(P.nnz(), 0.0);
  s->Mb.assign(P.nnz(), 0.0);
  s->M_inclusion.assign(P.nnz(), 0.0);
  s->source_load = CVector::Zero(n);

  Eigen::Matrix<double, 6, 6> Ke, Me, Be;
  for (std::size_t tt = 0; tt < m.num_triangles(); ++tt) {
    const int t = static_cast<int>(tt);
    if (!s->active[t]) continue;
    const bool weighted = m.regions[t] == Region::inclusion;
    Ke.setZero();
    Me.setZero();
    Be.setZero();
    std::array<cplx, 6> fe{};
    for_each_quadrature_point(d, t, element_rule(d, t, weighted), [&](const QuadPoint& q) {
      const double b = weighted ? g.dissipation_in_inclusion(q.x) : 0.0;
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
          Ke(i, j) += q.weight * q.grad[i].dot(q.grad[j]);
          const double nn = q.weight * q.N[i] * q.N[j];
          Me(i, j) += nn;
          Be(i, j) += b * nn;
        }
      if (opt.source) {
        const cplx f = opt.source(q.x);
        for (int i = 0; i < 6; ++i) fe[i] += q.weight * f * q.N[i];
      }
    });
    const auto& c = d.cell[t];
    for (int j = 0; j < 6; ++j) {
      s->source_load[c[j]] += fe[j];
      for (int i = 0; i < 6; ++i) {
        const long k = P.find(c[i], c[j]);
        s->K[k] += Ke(i, j);
        s->M[k] += Me(i, j);
        if (weighted) {
          s->Mb[k] += Be(i, j);
          s->M_inclusion[k] += Me(i, j);
        }
      }
    }
  }

  // constraints
  s->constrained.assign(n, 0);
  s->constrained_values = CVector::Zero(n);
  if (s->inclusion_removed)
    for (std::size_t t = 0; t < m.num_triangles(); ++t)
      if (!s->active[t])
        for (int a : d.cell[t]) s->constrained[a] = 1;
  for (const auto& e : m.boundary_edges)
    if (s->dirichlet_tags.count(e.tag))
      for (int a : d.boundary_dofs(e)) {
        s->constrained[a] = 1;
        if (bc.value) s->constrained_values[a] = bc.value(d.points[a]);
      }
  s->dof_to_free.assign(n, -1);
  for (int a = 0; a < n; ++a)
    if (!s->constrained[a]) {
      s->dof_to_free[a] = static_cast<int>(s->free_dofs.size());
      s->free_dofs.push_back(a);
    }

  auto& R = s->reduced;
  R.n = s->dimension();
  R.colptr.assign(R.n + 1, 0);
  for (int c = 0; c < R.n; ++c) {
    const int col = s->free_dofs[c];
    for (int k = P.colptr[col]; k < P.colptr[col + 1]; ++k) {
      const int r = s->dof_to_free[P.rowidx[k]];
      if (r < 0) continue;
      R.rowidx.push_back(r);
      s->reduced_position.push_back(k);
    }
    R.colptr[c + 1] = static_cast<int>(R.rowidx.size());
  }
  return s;
}

/// Forms A = K - lambda M - i lambda eta M_b - D and the incident loads for one eta.
inline AssembledSystem assemble_for_eta(std::shared_ptr<const SystemBlocks> blocks, double eta) {
  require(eta >= 0.0 && std::isfinite(eta), ErrorKind::config, "eta must be non-negative");
  const auto& s = *blocks;
  AssembledSystem sys;
  sys.blocks = blocks;
  sys.eta = eta;
  const double lam = s.lambda();
  const auto& P = s.pattern;
  sys.A.resize(P.nnz());
  for (std::size_t k = 0; k < P.nnz(); ++k) sys.A[k] = s.K[k] - lam * s.M[k] - I * (lam * eta) * s.Mb[k];
  for (const auto& pb : s.ports) {
    const int np = static_cast<int>(pb.dofs.size());
    for (int j = 0; j < np; ++j)
      for (int i = 0; i < np; ++i) {
        cplx dij = 0.0;
        for (int k = 0; k < s.basis.n_terms; ++k) dij += s.basis.dtn_symbol(k) * pb.trace(k, i) * pb.trace(k, j);
        sys.A[P.find(pb.dofs[i], pb.dofs[j])] -= dij;
      }
  }
  sys.A_reduced.resize(s.reduced_position.size());
  for (std::size_t k = 0; k < s.reduced_position.size(); ++k) sys.A_reduced[k] = sys.A[s.reduced_position[k]];

  for (std::size_t p = 0; p < s.ports.size(); ++p)
    for (int j = 0; j < s.basis.propagating; ++j) sys.columns.push_back({static_cast<int>(p), j});
  if (sys.columns.empty()) sys.columns.push_back({});

  const CVector lift = csc_multiply(P, sys.A, s.constrained_values);
  sys.F_reduced.resize(s.dimension(), sys.columns.size());
  for (std::size_t c = 0; c < sys.columns.size(); ++c) {
    const CVector F = detail::load_vector(s, sys.columns[c]);
    for (int i = 0; i < s.dimension(); ++i) sys.F_reduced(i, c) = F[s.free_dofs[i]] - lift[s.free_dofs[i]];
  }
  return sys;
}

inline AssembledSystem assemble(std::shared_ptr<const Geometry> geometry, std::shared_ptr<const Mesh> mesh,
                                const ModeBasis& basis, double eta, const BoundaryCondition& bc,
                                const AssemblyOptions& opt = {}) {
  return assemble_for_eta(assemble_blocks(std::move(geometry), std::move(mesh), basis, bc, opt), eta);
}

/// Solution for one right-hand side, stored on the full P2 dof set.
struct Field {
  std::shared_ptr<const SystemBlocks> blocks;
  CVector values;
  double eta = 0.0;
  RhsColumn incident;
  double residual = 0.0;

  const Mesh& mesh() const { return *blocks->mesh; }
  const DofMap& dofs() const { return *blocks->dofs; }
  const ModeBasis& basis() const { return blocks->basis; }
  double lambda() const { return blocks->lambda(); }
};

struct SolveReport {
  double rcond = 0.0;
  double max_residual = 0.0;
};

/// Factorises A once and solves every right-hand side; each residual is checked against 1e-10.
inline std::vector<Field> solve(const AssembledSystem& sys, SolveReport* report = nullptr) {
  const auto& s = *sys.blocks;
  ComplexLU lu;
  lu.factor(s.reduced, sys.A_reduced);
  std::vector<Field> out;
  double worst = 0.0;
  for (std::size_t c = 0; c < sys.columns.size(); ++c) {
    const CVector b = sys.F_reduced.col(c);
    CVector x = lu.solve(b);
    const double bn = std::max(b.norm(), 1e-300);
    double res = (csc_multiply(s.reduced, sys.A_reduced, x) - b).norm() / bn;
    for (int it = 0; it < 3 && res > 1e-12; ++it) {
      x -= lu.solve(csc_multiply(s.reduced, sys.A_reduced, x) - b);
      res = (csc_multiply(s.reduced, sys.A_reduced, x) - b).norm() / bn;
    }
    if (b.norm() == 0.0) res = 0.0;
    require(res <= 1e-10, ErrorKind::solver,
            "solver residual " + std::to_string(res) + " exceeds 1e-10 (rcond " + std::to_string(lu.rcond()) + ")");
    Field f;
    f.blocks = sys.blocks;
    f.eta = sys.eta;
    f.incident = sys.columns[c];
    f.residual = res;
    f.values = s.constrained_values;
    for (int i = 0; i < s.dimension(); ++i) f.values[s.free_dofs[i]] = x[i];
    worst = std::max(worst, res);
    out.push_back(std::move(f));
  }
  if (report) {
    report->rcond = lu.rcond();
    report->max_residual = worst;
  }
  return out;
}

/// Sum over stored entries of vals(i, j) u_i v_j, i.e. u^T B v for a symmetric block.
inline cplx block_product(const SystemBlocks& s, const std::vector<double>& vals, const CVector& u, const CVector& v) {
  const auto& P = s.pattern;
  cplx acc = 0.0;
  for (int c = 0; c < P.n; ++c) {
    cplx col = 0.0;
    for (int k = P.colptr[c]; k < P.colptr[c + 1]; ++k)
      if (vals[k] != 0.0) col += vals[k] * u[P.rowidx[k]];
    acc += col * v[c];
  }
  return acc;
}

/// Dense DtN block of one port on its own dofs (for inspection).
inline Eigen::MatrixXcd dtn_block(const SystemBlocks& s, int port) {
  const auto& pb = s.ports.at(port);
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(pb.dofs.size(), pb.dofs.size());
  for (int k = 0; k < s.basis.n_terms; ++k)
    D += s.basis.dtn_symbol(k) * (pb.trace.row(k).transpose() * pb.trace.row(k)).cast<cplx>();
  return D;
}

/// Field value and gradient at the quadrature points of triangle t.
template <class F>
void for_each_field_point(const Field& u, int t, const std::vector<quadrature::TrianglePoint>& rule, F&& f) {
  const auto& c = u.dofs().cell[t];
  for_each_quadrature_point(u.dofs(), t, rule, [&](const QuadPoint& q) {
    cplx v = 0.0;
    Eigen::Vector2cd gr = Eigen::Vector2cd::Zero();
    for (int i = 0; i < 6; ++i) {
      v += q.N[i] * u.values[c[i]];
      gr += q.grad[i].cast<cplx>() * u.values[c[i]];
    }
    f(q, v, gr);
  });
}

/// Modal coefficients (u, phi_k) of the field trace on a port.
inline CVector port_coefficients(const Field& u, int port) {
  const auto& pb = u.blocks->ports.at(port);
  CVector a = CVector::Zero(pb.trace.rows());
  for (std::size_t i = 0; i < pb.dofs.size(); ++i) a += pb.trace.col(i) * u.values[pb.dofs[i]];
  return a;
}

/// Normal-flux density sampled at Gauss points of the edges of one Dirichlet boundary.
struct FluxSamples {
  BoundaryTag tag{};
  std::vector<int> edge;
  std::vector<Vec2> points;
  std::vector<Vec2> normals; // outward from the computational domain
  std::vector<double> weights;
  std::vector<cplx> values;

  std::size_t size() const { return points.size(); }
};

/// Variational flux recovery: the discrete residual at constrained boundary dofs equals the
/// boundary integral of the flux against the test function, which is then L2-projected onto
/// the P2 trace space of the tagged boundary.
inline FluxSamples boundary_flux(const Field& u, BoundaryTag tag, int points_per_edge = 6) {
  const auto& s = *u.blocks;
  require(s.dirichlet_tags.count(tag), ErrorKind::config,
          std::string("boundary ") + tag_name(tag) + " is not Dirichlet-constrained");
  const auto& m = *s.mesh;
  const auto& d = *s.dofs;
  const CVector r = detail::apply_full(s, u.eta, u.values) - detail::load_vector(s, u.incident);

  const auto edges = m.edges_with_tag(tag);
  std::unordered_map<int, int> local;
  std::vector<int> gdofs;
  for (int e : edges)
    for (int a : d.boundary_dofs(m.boundary_edges[e]))
      if (local.emplace(a, static_cast<int>(gdofs.size())).second) gdofs.push_back(a);
  const int nb = static_cast<int>(gdofs.size());

  const auto gl = quadrature::gauss_legendre(8);
  std::vector<Eigen::Triplet<double>> trip;
  for (int e : edges) {
    const auto dofs = d.boundary_dofs(m.boundary_edges[e]);
    const std::array<Vec2, 3> X{d.points[dofs[0]], d.points[dofs[1]], d.points[dofs[2]]};
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const auto N = p2::edge_shape(gl.nodes[q]);
      const auto dN = p2::edge_shape_ds(gl.nodes[q]);
      const double ds = (dN[0] * X[0] + dN[1] * X[1] + dN[2] * X[2]).norm();
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          trip.emplace_back(local[dofs[i]], local[dofs[j]], gl.weights[q] * ds * N[i] * N[j]);
    }
  }
  Eigen::SparseMatrix<double> Mg(nb, nb);
  Mg.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(Mg);
  require(chol.info() == Eigen::Success, ErrorKind::solver, "boundary mass matrix factorisation failed");
  Eigen::VectorXd rr(nb), ri(nb);
  for (int i = 0; i < nb; ++i) {
    rr[i] = r[gdofs[i]].real();
    ri[i] = r[gdofs[i]].imag();
  }
  const Eigen::VectorXd qr = chol.solve(rr), qi = chol.solve(ri);

  FluxSamples out;
  out.tag = tag;
  const auto gp = quadrature::gauss_legendre(points_per_edge);
  for (int e : edges) {
    const auto& be = m.boundary_edges[e];
    const auto dofs = d.boundary_dofs(be);
    const std::array<Vec2, 3> X{d.points[dofs[0]], d.points[dofs[1]], d.points[dofs[2]]};
    // outer edges keep the domain on their left, interface edges keep the inclusion on their left
    const bool domain_left = !(be.tag == BoundaryTag::inclusion_interface);
    for (std::size_t q = 0; q < gp.nodes.size(); ++q) {
      const auto N = p2::edge_shape(gp.nodes[q]);
      const auto dN = p2::edge_shape_ds(gp.nodes[q]);
      const Vec2 x = N[0] * X[0] + N[1] * X[1] + N[2] * X[2];
      const Vec2 tvec = dN[0] * X[0] + dN[1] * X[1] + dN[2] * X[2];
      const double ds = tvec.norm();
      const Vec2 right(tvec[1] / ds, -tvec[0] / ds);
      cplx val = 0.0;
      for (int i = 0; i < 3; ++i) {
        const int l = local[dofs[i]];
        val += N[i] * cplx(qr[l], qi[l]);
      }
      out.edge.push_back(e);
      out.points.push_back(x);
      out.normals.push_back(domain_left ? right : Vec2(-right));
      out.weights.push_back(gp.weights[q] * ds);
      out.values.push_back(val);
    }
  }
  return out;
}

// Field dump: the mesh dump followed by the dof count and one "re im" line per dof.

inline void write_field(std::ostream& os, const Mesh& m, const CVector& values) {
  write_mesh(os, m);
  char buf[96];
  os << values.size() << '\n';
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", values[i].real(), values[i].imag());
    os << buf;
  }
}

inline void write_field(std::ostream& os, const Field& u) { write_field(os, u.mesh(), u.values); }

struct FieldDump {
  Mesh mesh;
  CVector values;
};

inline FieldDump read_field(std::istream& is) {
  FieldDump f;
  f.mesh = read_mesh(is);
  long n = -1;
  is >> n;
  const long expected = build_dof_map(f.mesh).n_dofs;
  require(is && n == expected, ErrorKind::config, "field dump: dof count does not match the mesh");
  f.values.resize(n);
  for (long i = 0; i < n; ++i) {
    double re, im;
    is >> re >> im;
    require(static_cast<bool>(is), ErrorKind::config, "field dump: truncated values");
    f.values[i] = cplx(re, im);
  }
  return f;
}

} // namespace wgabs
