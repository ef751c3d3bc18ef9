#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "wgabs/scattering.hpp"

namespace wgabs {

/// Least-squares slope and intercept of log(y) against log(x).
struct LogFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LogFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::validation, "loglog_fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0 && y[i] > 0, ErrorKind::validation, "loglog_fit needs positive data");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  LogFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

/// n points spaced evenly in log between a and b.
inline std::vector<double> logspace(double a, double b, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(std::exp(std::log(a) + (std::log(b) - std::log(a)) * i / std::max(1, n - 1)));
  return out;
}

struct SmallEtaModel {
  double lambda = 0.0;
  CMatrix S0;
  CMatrix B0;

  CMatrix predict(double eta) const { return S0 - lambda * eta * B0 * S0; }
};

inline SmallEtaModel small_eta_model(const ScatteringResult& at_zero) {
  require(at_zero.eta == 0.0, ErrorKind::config, "small_eta_model needs the eta = 0 result");
  return {at_zero.lambda, at_zero.S, at_zero.B};
}

inline SmallEtaModel small_eta_model(std::shared_ptr<const Geometry> g, double lambda, const MeshControls& c = {}) {
  return small_eta_model(scattering_matrix(std::move(g), 0.0, lambda, c, false));
}

/// Boundary-layer profile E(t, s) for a local dissipation value b(s).
inline cplx boundary_layer_profile(double t, double lambda, double b) {
  const double root = std::sqrt(lambda * b);
  return -(1.0 + I) / std::sqrt(2.0 * lambda * b) * std::exp((-1.0 + I) / std::sqrt(2.0) * root * t);
}

struct LargeEtaModel {
  double lambda = 0.0;
  CMatrix S_inf;
  CMatrix E;
  std::vector<Field> fields;       // Dirichlet-obstacle solutions u_j^inf
  std::vector<FluxSamples> fluxes; // d_n u_j^inf on the interface, n pointing into the inclusion

  static cplx prefactor(double lambda) { return (-1.0 + I) / std::sqrt(2.0 * lambda); }

  /// First-order coefficient S' of the eta^{-1/2} term.
  CMatrix first_order() const { return prefactor(lambda) * E * S_inf; }

  CMatrix predict(double eta) const { return S_inf + first_order() / std::sqrt(eta); }
};

/// Hermitian E_{jk} = int b^{-1/2} d_n u_j conj(d_n u_k) ds from recovered fluxes.
inline CMatrix flux_matrix(const Geometry& g, const std::vector<FluxSamples>& q) {
  const int n = static_cast<int>(q.size());
  CMatrix E = CMatrix::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (std::size_t i = 0; i < q[j].size(); ++i) {
        const double w = q[j].weights[i] / std::sqrt(g.dissipation_in_inclusion(q[j].points[i]));
        E(j, k) += w * q[j].values[i] * std::conj(q[k].values[i]);
      }
  return 0.5 * (E + E.adjoint());
}

/// Builds the large-eta model on a prepared mesh (the obstacle interior is removed).
inline LargeEtaModel large_eta_model(std::shared_ptr<const Geometry> g, std::shared_ptr<const Mesh> mesh, double lambda,
                                     int n_terms = 15) {
  require(g->smooth_inclusion(), ErrorKind::config,
          "the large-eta model needs a smooth (disk or ellipse) inclusion boundary");
  auto blocks = assemble_blocks(g, std::move(mesh), compute_mode_basis(lambda, n_terms),
                                BoundaryCondition::dirichlet_on_inclusion());
  auto r = scattering_from_blocks(blocks, 0.0, true);
  LargeEtaModel m;
  m.lambda = lambda;
  m.S_inf = r.S;
  for (const auto& f : r.fields) m.fluxes.push_back(boundary_flux(f, BoundaryTag::inclusion_interface));
  m.E = flux_matrix(*g, m.fluxes);
  m.fields = std::move(r.fields);
  return m;
}

inline LargeEtaModel large_eta_model(std::shared_ptr<const Geometry> g, double lambda, const MeshControls& c = {}) {
  require(g->smooth_inclusion(), ErrorKind::config,
          "the large-eta model needs a smooth (disk or ellipse) inclusion boundary");
  auto mesh = std::make_shared<const Mesh>(build_mesh(*g, lambda, 0.0, c));
  return large_eta_model(std::move(g), std::move(mesh), lambda, c.n_terms);
}

/// i S' conj(S_inf)^T + ((1 + i) / sqrt(2 lambda)) E, which vanishes when S_inf is unitary.
inline double prefactor_identity_defect(const LargeEtaModel& m) {
  const CMatrix lhs = I * m.first_order() * m.S_inf.adjoint();
  const CMatrix rhs = -(1.0 + I) / std::sqrt(2.0 * m.lambda) * m.E;
  return (lhs - rhs).norm();
}

/// Interpolates a flux sample set along a star-shaped interface by polar angle about `center`.
class FluxInterpolant {
public:
  FluxInterpolant(const FluxSamples& q, const Vec2& center) : center_(center) {
    std::vector<std::size_t> order(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) order[i] = i;
    auto ang = [&](std::size_t i) { return angle(q.points[i]); };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ang(a) < ang(b); });
    for (auto i : order) {
      theta_.push_back(ang(i));
      value_.push_back(q.values[i]);
    }
  }

  double angle(const Vec2& p) const { return std::atan2(p[1] - center_[1], p[0] - center_[0]); }

  cplx operator()(const Vec2& foot) const {
    const double t = angle(foot);
    const std::size_t n = theta_.size();
    auto it = std::upper_bound(theta_.begin(), theta_.end(), t);
    std::size_t hi = static_cast<std::size_t>(it - theta_.begin()) % n;
    std::size_t lo = (hi + n - 1) % n;
    double t0 = theta_[lo], t1 = theta_[hi];
    if (t1 <= t0) t1 += 2 * pi;
    double tt = t < t0 ? t + 2 * pi : t;
    const double w = (t1 > t0) ? (tt - t0) / (t1 - t0) : 0.0;
    return (1.0 - w) * value_[lo] + w * value_[hi];
  }

private:
  Vec2 center_;
  std::vector<double> theta_;
  std::vector<cplx> value_;
};

/// Smooth cutoff equal to 1 up to d0 and 0 beyond 2 d0.
inline double collar_cutoff(double n, double d0) {
  if (n <= d0) return 1.0;
  if (n >= 2 * d0) return 0.0;
  const double x = (n - d0) / d0;
  return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
}

/// Inradius of a smooth inclusion; the collar cutoff starts at half of it.
inline double inclusion_inradius(const Geometry& g) {
  if (const auto* d = std::get_if<Disk>(&g.inclusion())) return d->radius;
  const auto& e = std::get<Ellipse>(g.inclusion());
  return std::min(e.semi_z, e.semi_y);
}

/// Layer reconstruction inside the inclusion: eta^{-1/2} chi(n) E(sqrt(eta) n, s) d_n u_j^inf(s).
class InteriorReconstruction {
public:
  InteriorReconstruction(const LargeEtaModel& model, const Geometry& g, int j, double eta)
      : g_(g), lambda_(model.lambda), eta_(eta), d0_(0.5 * inclusion_inradius(g)),
        flux_(model.fluxes.at(j), g.inclusion_center()) {
    require(g.smooth_inclusion(), ErrorKind::config, "reconstruction needs a smooth inclusion");
    require(eta > 0.0, ErrorKind::config, "reconstruction needs eta > 0");
  }

  /// Depth below the interface and the nearest interface point.
  std::pair<double, Vec2> collar(const Vec2& x) const {
    const double n = g_.inclusion_depth(x);
    Vec2 foot = x;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : g_.interface_curves) {
      const Vec2 p = c.project(x);
      if ((p - x).norm() < best) {
        best = (p - x).norm();
        foot = p;
      }
    }
    return {n, foot};
  }

  cplx operator()(const Vec2& x) const {
    const auto [n, foot] = collar(x);
    if (n < 0.0 || n >= 2 * d0_) return 0.0;
    const double b = g_.dissipation_in_inclusion(foot);
    return collar_cutoff(n, d0_) * boundary_layer_profile(std::sqrt(eta_) * n, lambda_, b) * flux_(foot) /
           std::sqrt(eta_);
  }

  double collar_width() const { return d0_; }

private:
  const Geometry& g_;
  double lambda_, eta_, d0_;
  FluxInterpolant flux_;
};

/// Nodal values of the reconstruction on the dofs of a mesh (zero outside the inclusion).
inline CVector reconstruct_interior(const LargeEtaModel& model, const Geometry& g, int j, double eta,
                                    const DofMap& dofs) {
  InteriorReconstruction rec(model, g, j, eta);
  CVector v(dofs.n_dofs);
  for (int i = 0; i < dofs.n_dofs; ++i) v[i] = rec(dofs.points[i]);
  return v;
}

/// Relative L2(inclusion) distance between a computed field and the reconstruction.
inline double reconstruction_error(const LargeEtaModel& model, const Geometry& g, const Field& u) {
  InteriorReconstruction rec(model, g, u.incident.mode, u.eta);
  double num = 0.0, den = 0.0;
  const auto& m = u.mesh();
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    if (m.regions[t] != Region::inclusion) continue;
    for_each_field_point(u, static_cast<int>(t), quadrature::triangle_degree6(),
                         [&](const QuadPoint& q, cplx v, const Eigen::Vector2cd&) {
                           num += q.weight * std::norm(v - rec(q.x));
                           den += q.weight * std::norm(v);
                         });
  }
  return std::sqrt(num / den);
}

struct SmallEtaRow {
  double eta;
  double defect;
};

struct SmallEtaStudy {
  SmallEtaModel model;
  std::vector<SmallEtaRow> rows;
  LogFit fit;
};

/// ||S^eta - (S0 - lambda eta B0 S0)|| for each eta, all on the mesh used for S0.
inline SmallEtaStudy small_eta_study(std::shared_ptr<const Geometry> g, double lambda, const std::vector<double>& etas,
                                     MeshControls c = {}, int workers = 1) {
  c.grade = false;
  auto blocks = prepare_blocks(g, lambda, 0.0, c);
  SmallEtaStudy st;
  st.model = small_eta_model(scattering_from_blocks(blocks, 0.0, false));
  st.rows.resize(etas.size());
  parallel_for(static_cast<int>(etas.size()), workers, [&](int i) {
    auto r = scattering_from_blocks(blocks, etas[i], false);
    st.rows[i] = {etas[i], (r.S - st.model.predict(etas[i])).norm()};
  });
  std::vector<double> x, y;
  for (const auto& r : st.rows) {
    x.push_back(r.eta);
    y.push_back(r.defect);
  }
  st.fit = loglog_fit(x, y);
  return st;
}

struct LargeEtaRow {
  double eta = 0.0;
  double defect0 = 0.0;     // ||S^eta - S_inf||
  double defect1 = 0.0;     // ||S^eta - S_inf - eta^{-1/2} S'||
  double interior_l2 = 0.0; // ||u_0^eta||_{L2(O)}
  double identity_defect = 0.0;
  std::size_t triangles = 0;
  bool layer_unresolved = false;
  double seconds = 0.0;
};

struct LargeEtaStudy {
  std::vector<LargeEtaRow> rows;
  LogFit first_order;
  LogFit two_term;
  LogFit interior;
};

/// For each eta: one layer-graded mesh, the dissipative solve and the obstacle solve on that mesh.
inline LargeEtaStudy large_eta_study(std::shared_ptr<const Geometry> g, double lambda, const std::vector<double>& etas,
                                     const MeshControls& c = {}, int workers = 1) {
  require(g->smooth_inclusion(), ErrorKind::config,
          "the large-eta model needs a smooth (disk or ellipse) inclusion boundary");
  LargeEtaStudy st;
  st.rows.resize(etas.size());
  parallel_for(static_cast<int>(etas.size()), workers, [&](int i) {
    const auto t0 = std::chrono::steady_clock::now();
    const double eta = etas[i];
    auto mesh = std::make_shared<const Mesh>(build_mesh(*g, lambda, eta, c));
    LargeEtaRow row;
    row.eta = eta;
    row.triangles = mesh->num_triangles();
    row.layer_unresolved = mesh->grading.layer_unresolved;
    {
      auto blocks = assemble_blocks(g, mesh, compute_mode_basis(lambda, c.n_terms), BoundaryCondition::neumann_all());
      auto r = scattering_from_blocks(blocks, eta, false);
      auto model = large_eta_model(g, mesh, lambda, c.n_terms);
      row.defect0 = (r.S - model.S_inf).norm();
      row.defect1 = (r.S - model.predict(eta)).norm();
      row.interior_l2 = r.inclusion_l2.at(0);
      row.identity_defect = prefactor_identity_defect(model);
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    st.rows[i] = row;
  });
  std::vector<double> x, d0, d1, l2;
  for (const auto& r : st.rows) {
    x.push_back(r.eta);
    d0.push_back(r.defect0);
    d1.push_back(r.defect1);
    l2.push_back(r.interior_l2);
  }
  if (x.size() >= 2) {
    st.first_order = loglog_fit(x, d0);
    st.two_term = loglog_fit(x, d1);
    st.interior = loglog_fit(x, l2);
  }
  return st;
}

/// ||u_j^eta||_{L2(O)} for each eta with a slope fit.
struct DecayTable {
  std::vector<double> eta;
  std::vector<double> norm;
  LogFit fit;
};

inline DecayTable interior_decay_norm(std::shared_ptr<const Geometry> g, double lambda, const std::vector<double>& etas,
                                      const MeshControls& c = {}, int j = 0, int workers = 1) {
  DecayTable t;
  t.eta = etas;
  t.norm.resize(etas.size());
  parallel_for(static_cast<int>(etas.size()), workers, [&](int i) {
    auto r = scattering_matrix(g, etas[i], lambda, c, false);
    t.norm[i] = r.inclusion_l2.at(j);
  });
  std::vector<double> x, y;
  for (std::size_t i = 0; i < etas.size(); ++i)
    if (etas[i] > 0.0) {
      x.push_back(etas[i]);
      y.push_back(t.norm[i]);
    }
  if (x.size() >= 2) t.fit = loglog_fit(x, y);
  return t;
}

} // namespace wgabs
