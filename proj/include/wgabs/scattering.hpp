#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <vector>

#include <Eigen/Eigenvalues>

#include "wgabs/fem.hpp"
#include "wgabs/parallel.hpp"

namespace wgabs {

/// Discretisation controls shared by every driver.
struct MeshControls {
  double h = 0.02;
  bool grade = true; // refine towards the interface when the skin depth is below h
  GradingOptions grading{};
  double min_h = 0.0; // 0 keeps the mesher default h / 64
  MeshOptions mesher{};
  int n_terms = 15;
};

inline bool grading_applies(const Geometry& g, double lambda, double eta, const MeshControls& c) {
  if (!c.grade || eta <= 0.0 || !g.has_inclusion()) return false;
  return skin_depth(lambda, g.spec.dissipation.b0, eta) / c.grading.layers_per_skin < c.h;
}

inline Mesh build_mesh(const Geometry& g, double lambda, double eta, const MeshControls& c) {
  Mesh m = triangulate(g, c.h, c.mesher);
  if (c.min_h > 0.0) m.grading.min_h = c.min_h;
  if (grading_applies(g, lambda, eta, c)) m = grade_near_interface(m, lambda, eta, g.spec.dissipation.b0, c.grading);
  return m;
}

struct ScatteringResult {
  double eta = 0.0;
  double lambda = 0.0;
  int propagating = 0; // J
  int ports = 1;
  CMatrix S; // row p*J + j: incident mode j through port p; column q*J + k: outgoing mode k through port q
  CMatrix B;
  std::vector<Field> fields;
  double energy_residual = 0.0;
  double symmetry_defect = 0.0;
  std::vector<double> inclusion_l2;
  double rcond = 0.0;
  double solver_residual = 0.0;
  std::size_t triangles = 0;
  int dofs = 0;
  bool layer_unresolved = false;
};

inline void require_port_outside_features(const Geometry& g, const Port& p) {
  auto ex = g.feature_extent();
  if (!ex) return;
  const bool ok = p.direction > 0 ? p.z > (*ex)[1] : p.z < (*ex)[0];
  require(ok, ErrorKind::config, "truncation line at z = " + std::to_string(p.z) + " lies inside the feature region");
}

/// Outgoing amplitudes (s_{j,k})_k on one port, from the modal trace of the field.
inline CVector extract_row(const Field& u, int port = 0) {
  const auto& s = *u.blocks;
  const auto& pb = s.ports.at(port);
  if (s.geometry) require_port_outside_features(*s.geometry, pb.port);
  const auto& b = s.basis;
  const CVector a = port_coefficients(u, port);
  const double d = pb.port.direction;
  CVector row(b.propagating);
  for (int k = 0; k < b.propagating; ++k) {
    const double al = b.wavenumber(k);
    const cplx phase = std::exp(-I * al * d * pb.port.z);
    cplx c = a[k];
    if (u.incident.port == port && u.incident.mode == k) c -= phase / std::sqrt(2.0 * al);
    row[k] = std::sqrt(2.0 * al) * phase * c;
  }
  return row;
}

inline double energy_residual(const CMatrix& S, const CMatrix& B, double lambda, double eta) {
  const CMatrix D = S * S.adjoint() + 2.0 * lambda * eta * B - CMatrix::Identity(S.rows(), S.cols());
  return D.norm();
}

inline double energy_residual(const ScatteringResult& r) { return energy_residual(r.S, r.B, r.lambda, r.eta); }

inline double symmetry_defect(const CMatrix& S) { return (S - S.transpose()).cwiseAbs().maxCoeff(); }

inline CVector eigenvalues(const CMatrix& S) { return Eigen::ComplexEigenSolver<CMatrix>(S, false).eigenvalues(); }

/// B_{rc} = int b u_r conj(u_c), with the quadrature of M_b and exact Hermitian symmetrisation.
inline CMatrix absorption_matrix(const std::vector<Field>& u) {
  const int n = static_cast<int>(u.size());
  CMatrix B(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) B(r, c) = block_product(*u[r].blocks, u[r].blocks->Mb, u[r].values, u[c].values.conjugate());
  return 0.5 * (B + B.adjoint());
}

inline double inclusion_l2(const Field& u) {
  return std::sqrt(std::max(0.0, block_product(*u.blocks, u.blocks->M_inclusion, u.values, u.values.conjugate()).real()));
}

/// All solves for one eta on prepared blocks; fields are dropped unless keep_fields.
inline ScatteringResult scattering_from_blocks(std::shared_ptr<const SystemBlocks> blocks, double eta,
                                               bool keep_fields = true) {
  const auto& s = *blocks;
  require(!s.ports.empty(), ErrorKind::config, "geometry has no truncation line");
  SolveReport rep;
  auto sys = assemble_for_eta(blocks, eta);
  auto fields = solve(sys, &rep);
  ScatteringResult r;
  r.eta = eta;
  r.lambda = s.lambda();
  r.propagating = s.basis.propagating;
  r.ports = static_cast<int>(s.ports.size());
  const int J = r.propagating, n = J * r.ports;
  r.S.resize(n, n);
  for (const auto& f : fields) {
    const int row = f.incident.port * J + f.incident.mode;
    for (int q = 0; q < r.ports; ++q) r.S.block(row, q * J, 1, J) = extract_row(f, q).transpose();
  }
  r.B = absorption_matrix(fields);
  r.energy_residual = energy_residual(r);
  r.symmetry_defect = symmetry_defect(r.S);
  for (const auto& f : fields) r.inclusion_l2.push_back(inclusion_l2(f));
  r.rcond = rep.rcond;
  r.solver_residual = rep.max_residual;
  r.triangles = s.mesh->num_triangles();
  r.dofs = s.dimension();
  r.layer_unresolved = s.mesh->grading.layer_unresolved;
  if (keep_fields) r.fields = std::move(fields);
  return r;
}

inline std::shared_ptr<const SystemBlocks> prepare_blocks(std::shared_ptr<const Geometry> g, double lambda, double eta,
                                                          const MeshControls& c,
                                                          const BoundaryCondition& bc = BoundaryCondition::neumann_all()) {
  auto basis = compute_mode_basis(lambda, c.n_terms);
  auto mesh = std::make_shared<const Mesh>(build_mesh(*g, lambda, eta, c));
  return assemble_blocks(std::move(g), std::move(mesh), basis, bc);
}

inline ScatteringResult scattering_matrix(std::shared_ptr<const Geometry> g, double eta, double lambda,
                                          const MeshControls& c = {}, bool keep_fields = true) {
  return scattering_from_blocks(prepare_blocks(std::move(g), lambda, eta, c), eta, keep_fields);
}

inline ScatteringResult scattering_matrix(const Geometry& g, double eta, double lambda, const MeshControls& c = {},
                                          bool keep_fields = true) {
  return scattering_matrix(std::make_shared<const Geometry>(g), eta, lambda, c, keep_fields);
}

struct DerivativeCheck {
  cplx fd;
  cplx formula;
  double rel_err = 0.0;
};

/// Central difference of S in eta against -lambda int b (u^eta)^2 on one mesh (monomode only).
inline DerivativeCheck d_eta_check(std::shared_ptr<const Geometry> g, double lambda, double eta, double delta,
                                   const MeshControls& c = {}) {
  require(propagating_count(lambda) == 1, ErrorKind::config, "d_eta_check needs a monomode lambda");
  require(eta > delta && delta > 0.0, ErrorKind::config, "d_eta_check needs eta > delta > 0");
  auto blocks = prepare_blocks(std::move(g), lambda, eta, c);
  const auto plus = scattering_from_blocks(blocks, eta + delta, false);
  const auto minus = scattering_from_blocks(blocks, eta - delta, false);
  const auto mid = scattering_from_blocks(blocks, eta, true);
  DerivativeCheck out;
  out.fd = (plus.S(0, 0) - minus.S(0, 0)) / (2.0 * delta);
  const auto& u = mid.fields[0];
  out.formula = -lambda * block_product(*blocks, blocks->Mb, u.values, u.values);
  const double scale = std::abs(out.formula);
  out.rel_err = scale > 0.0 ? std::abs(out.fd - out.formula) / scale : std::abs(out.fd);
  return out;
}

/// Independent scattering computations over a list of eta. Meshes that grading leaves unchanged
/// share one set of assembled blocks.
inline std::vector<ScatteringResult> eta_sweep(std::shared_ptr<const Geometry> g, double lambda,
                                               const std::vector<double>& etas, const MeshControls& c = {},
                                               int workers = 1) {
  auto basis = compute_mode_basis(lambda, c.n_terms);
  std::shared_ptr<const SystemBlocks> shared;
  std::vector<std::shared_ptr<const SystemBlocks>> blocks(etas.size());
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (grading_applies(*g, lambda, etas[i], c)) continue;
    if (!shared) {
      auto base = std::make_shared<const Mesh>(build_mesh(*g, lambda, 0.0, c));
      shared = assemble_blocks(g, base, basis, BoundaryCondition::neumann_all());
    }
    blocks[i] = shared;
  }
  std::vector<ScatteringResult> out(etas.size());
  parallel_for(static_cast<int>(etas.size()), workers, [&](int i) {
    auto b = blocks[i] ? blocks[i] : prepare_blocks(g, lambda, etas[i], c);
    out[i] = scattering_from_blocks(b, etas[i], false);
  });
  return out;
}

} // namespace wgabs
