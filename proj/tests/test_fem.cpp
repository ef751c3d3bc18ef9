#include <gtest/gtest.h>

#include <sstream>

#include "wgabs/fem.hpp"
#include "wgabs/oracle1d.hpp"

using namespace wgabs;

namespace {

const double lambda08 = std::pow(0.8 * pi, 2);

std::shared_ptr<const Geometry> strip(double zT, std::optional<InclusionShape> inc = {}, double lambda = lambda08) {
  GeometrySpec s;
  s.truncation_z = zT;
  s.inclusion = inc;
  s.lambda = lambda;
  return std::make_shared<const Geometry>(build_waveguide(s));
}

std::shared_ptr<const Mesh> mesh_of(const Geometry& g, double h) {
  return std::make_shared<const Mesh>(triangulate(g, h));
}

double l2_error(const Field& u, const std::function<cplx(const Vec2&)>& exact) {
  double e2 = 0.0;
  for (std::size_t t = 0; t < u.mesh().num_triangles(); ++t) {
    if (!u.blocks->active[t]) continue;
    for_each_field_point(u, int(t), quadrature::triangle_degree6(),
                         [&](const QuadPoint& q, cplx v, const Eigen::Vector2cd&) { e2 += q.weight * std::norm(v - exact(q.x)); });
  }
  return std::sqrt(e2);
}

} // namespace

TEST(Fem, P2BasisIsPartitionOfUnityWithNodalProperty) {
  const std::array<std::array<double, 2>, 6> nodes{{{0, 0}, {1, 0}, {0, 1}, {0.5, 0}, {0.5, 0.5}, {0, 0.5}}};
  for (int a = 0; a < 6; ++a) {
    auto s = p2::shape(nodes[a][0], nodes[a][1]);
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(s.N[i], a == i ? 1.0 : 0.0, 1e-15);
  }
  auto s = p2::shape(0.2, 0.3);
  double sum = 0.0;
  Vec2 g = Vec2::Zero();
  for (int i = 0; i < 6; ++i) {
    sum += s.N[i];
    g += s.dN[i];
  }
  EXPECT_NEAR(sum, 1.0, 1e-15);
  EXPECT_NEAR(g.norm(), 0.0, 1e-14);
}

TEST(Fem, DimensionCountsVerticesAndEdges) {
  auto g = strip(2.0);
  auto m = mesh_of(*g, 0.2);
  auto sys = assemble(g, m, compute_mode_basis(lambda08), 0.0, BoundaryCondition::neumann_all());
  std::set<std::uint64_t> edges;
  for (const auto& t : m->triangles)
    for (int i = 0; i < 3; ++i) edges.insert(edge_key(t[i], t[(i + 1) % 3]));
  EXPECT_EQ(sys.dimension(), int(m->num_vertices() + edges.size()));
}

TEST(Fem, StandingWaveBehindNeumannWall) {
  auto g = strip(3.0);
  auto m = mesh_of(*g, 0.02);
  auto basis = compute_mode_basis(lambda08);
  auto sys = assemble(g, m, basis, 0.0, BoundaryCondition::neumann_all());
  ASSERT_EQ(sys.columns.size(), 1u);
  auto u = solve(sys);
  ASSERT_EQ(u.size(), 1u);
  EXPECT_LE(u[0].residual, 1e-10);
  const double k = std::sqrt(lambda08);
  double err = 0.0;
  const auto& d = u[0].dofs();
  for (int i = 0; i < d.n_dofs; ++i) {
    const cplx exact = 2.0 * std::cos(k * d.points[i][0]) / std::sqrt(2.0 * k);
    err = std::max(err, std::abs(u[0].values[i] - exact));
  }
  EXPECT_LE(err, 1e-4);
}

TEST(Fem, SlabMatchesTransferMatrixProfile) {
  oracle1d::SlabSpec spec;
  spec.eta = 5.0;
  spec.truncation_z = 4.0;
  auto g = strip(4.0, Slab{1.0, 2.0});
  auto m = mesh_of(*g, 0.05);
  auto u = solve(assemble(g, m, compute_mode_basis(lambda08), 5.0, BoundaryCondition::neumann_all()));
  const auto sol = oracle1d::solve_slab(spec);
  const double k = std::sqrt(lambda08);
  double err = 0.0;
  const auto& d = u[0].dofs();
  for (int i = 0; i < d.n_dofs; ++i)
    err = std::max(err, std::abs(u[0].values[i] * std::sqrt(2.0 * k) - oracle1d::slab_field(sol, d.points[i][0])));
  EXPECT_LE(err, 1e-3);
}

TEST(Fem, BlockSupports) {
  auto g = strip(3.0, Disk{Vec2(1.5, 0.5), 0.3});
  auto m = mesh_of(*g, 0.1);
  auto sys = assemble(g, m, compute_mode_basis(lambda08), 10.0, BoundaryCondition::neumann_all());
  const auto& s = *sys.blocks;
  std::vector<char> in_inclusion(s.dofs->n_dofs, 0), on_port(s.dofs->n_dofs, 0);
  for (std::size_t t = 0; t < m->num_triangles(); ++t)
    if (m->regions[t] == Region::inclusion)
      for (int a : s.dofs->cell[t]) in_inclusion[a] = 1;
  ASSERT_EQ(s.ports.size(), 1u);
  for (int a : s.ports[0].dofs) on_port[a] = 1;
  int mb_entries = 0;
  for (int c = 0; c < s.pattern.n; ++c)
    for (int k = s.pattern.colptr[c]; k < s.pattern.colptr[c + 1]; ++k) {
      const int r = s.pattern.rowidx[k];
      if (s.Mb[k] != 0.0) {
        ++mb_entries;
        EXPECT_TRUE(in_inclusion[r] && in_inclusion[c]);
      }
      const cplx direct = s.K[k] - s.lambda() * s.M[k] - I * s.lambda() * 10.0 * s.Mb[k];
      if (!(on_port[r] && on_port[c])) {
        EXPECT_EQ(sys.A[k], direct);
      }
    }
  EXPECT_GT(mb_entries, 0);

  auto g0 = strip(3.0);
  auto sys0 = assemble(g0, mesh_of(*g0, 0.1), compute_mode_basis(lambda08), 0.0, BoundaryCondition::neumann_all());
  for (double v : sys0.blocks->Mb) EXPECT_EQ(v, 0.0);
  const auto& s0 = *sys0.blocks;
  std::vector<char> port0(s0.dofs->n_dofs, 0);
  for (int a : s0.ports[0].dofs) port0[a] = 1;
  for (int c = 0; c < s0.pattern.n; ++c)
    for (int k = s0.pattern.colptr[c]; k < s0.pattern.colptr[c + 1]; ++k)
      if (!(port0[c] && port0[s0.pattern.rowidx[k]])) {
        EXPECT_EQ(sys0.A[k].imag(), 0.0);
      }
}

TEST(Fem, MatrixIsComplexSymmetric) {
  auto g = strip(3.0, Disk{Vec2(1.5, 0.5), 0.3}, std::pow(1.5 * pi, 2));
  auto sys = assemble(g, mesh_of(*g, 0.1), compute_mode_basis(std::pow(1.5 * pi, 2)), 3.0,
                      BoundaryCondition::neumann_all());
  const auto& P = sys.blocks->pattern;
  double worst = 0.0, scale = 0.0;
  for (int c = 0; c < P.n; ++c)
    for (int k = P.colptr[c]; k < P.colptr[c + 1]; ++k) {
      const long t = P.find(c, P.rowidx[k]);
      ASSERT_GE(t, 0);
      worst = std::max(worst, std::abs(sys.A[k] - sys.A[t]));
      scale = std::max(scale, std::abs(sys.A[k]));
    }
  EXPECT_LE(worst, 1e-14 * scale);
  EXPECT_EQ(sys.columns.size(), 2u);
}

TEST(Fem, DirichletOnInclusionRemovesInterior) {
  auto g = strip(3.0, Disk{Vec2(1.5, 0.5), 0.3});
  auto m = mesh_of(*g, 0.1);
  auto sys = assemble(g, m, compute_mode_basis(lambda08), 0.0, BoundaryCondition::dirichlet_on_inclusion());
  const auto& s = *sys.blocks;
  int removed = 0;
  for (int a = 0; a < s.dofs->n_dofs; ++a) {
    if (g->inclusion_depth(s.dofs->points[a]) > 1e-9) {
      EXPECT_LT(s.dof_to_free[a], 0);
    }
    removed += s.constrained[a];
  }
  EXPECT_EQ(sys.dimension(), s.dofs->n_dofs - removed);
  for (double v : s.Mb) EXPECT_EQ(v, 0.0);
  auto u = solve(sys);
  for (int a = 0; a < s.dofs->n_dofs; ++a)
    if (s.constrained[a]) {
      EXPECT_EQ(u[0].values[a], cplx(0.0));
    }
}

TEST(Fem, MissingTagIsRejected) {
  auto g = strip(3.0);
  auto m = mesh_of(*g, 0.2);
  EXPECT_THROW(assemble(g, m, compute_mode_basis(lambda08), 0.0, BoundaryCondition::dirichlet_on_inclusion()), Error);
  EXPECT_THROW(assemble(g, m, compute_mode_basis(lambda08), 0.0, BoundaryCondition::dirichlet_on(BoundaryTag::ligament)),
               Error);
  auto other = std::make_shared<const Geometry>(build_waveguide([] {
    GeometrySpec s;
    s.truncation_z = 3.0;
    s.lambda = 2.0;
    return s;
  }()));
  EXPECT_THROW(assemble(other, m, compute_mode_basis(lambda08), 0.0, BoundaryCondition::neumann_all()), Error);
}

namespace {

// Manufactured problem with Dirichlet data on every boundary except the Neumann walls; no ports.
Field manufactured(std::shared_ptr<const Geometry> g, double h, std::vector<BoundaryTag> tags,
                   const std::function<cplx(const Vec2&)>& u, const std::function<cplx(const Vec2&)>& f,
                   bool remove_inclusion) {
  BoundaryCondition bc = remove_inclusion ? BoundaryCondition::dirichlet_on_inclusion() : BoundaryCondition{};
  if (!remove_inclusion) bc.kind = BoundaryCondition::Kind::dirichlet_on;
  bc.tags = std::move(tags);
  bc.value = u;
  AssemblyOptions opt;
  opt.ports = false;
  opt.source = f;
  return solve(assemble(g, mesh_of(*g, h), compute_mode_basis(lambda08), 0.0, bc, opt))[0];
}

std::shared_ptr<const Geometry> open_strip(double zT) {
  GeometrySpec s;
  s.truncation_z = zT;
  s.left_end = EndKind::symmetry;
  s.lambda = lambda08;
  return std::make_shared<const Geometry>(build_waveguide(s));
}

} // namespace

TEST(Fem, FluxRecoveryExactForLinearField) {
  // walls are Neumann and the field is y-independent, so the walls carry no flux
  const cplx a(0.3, -1.0), b(2.0, 0.5);
  auto u = [&](const Vec2& x) { return a + b * x[0]; };
  auto f = [&](const Vec2& x) { return -lambda08 * u(x); };
  auto sol = manufactured(open_strip(2.0), 0.1, {BoundaryTag::symmetry_line, BoundaryTag::truncation}, u, f, false);
  for (auto [tag, sign] : {std::pair{BoundaryTag::truncation, 1.0}, std::pair{BoundaryTag::symmetry_line, -1.0}}) {
    auto q = boundary_flux(sol, tag);
    ASSERT_GT(q.size(), 0u);
    double worst = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      EXPECT_NEAR(q.normals[i][0], sign, 1e-15);
      worst = std::max(worst, std::abs(q.values[i] - sign * b));
    }
    EXPECT_LE(worst, 1e-10) << tag_name(tag);
  }
}

TEST(Fem, FluxRecoveryExactForQuadraticField) {
  const cplx a(1.0, 0.2), b(-0.4, 1.0), c(0.7, -0.3);
  auto u = [&](const Vec2& x) { return a + b * x[0] + c * x[0] * x[0]; };
  auto f = [&](const Vec2& x) { return -2.0 * c - lambda08 * u(x); };
  auto sol = manufactured(open_strip(2.0), 0.1, {BoundaryTag::symmetry_line, BoundaryTag::truncation}, u, f, false);
  auto q = boundary_flux(sol, BoundaryTag::truncation);
  double worst = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) worst = std::max(worst, std::abs(q.values[i] - (b + 4.0 * c)));
  EXPECT_LE(worst, 1e-10);
}

TEST(Fem, FluxRecoveryExactOnSquareObstacle) {
  // |x - c|^2 has the same constant flux on every side of a square centred at c
  const Vec2 c(1.5, 0.5);
  const double a = 0.25;
  auto u = [&](const Vec2& x) { return cplx((x - c).squaredNorm(), -2.0 * (x - c).squaredNorm()); };
  auto f = [&](const Vec2& x) { return cplx(-4.0, 8.0) - lambda08 * u(x); };
  auto sol = manufactured(strip(3.0, RectangleInclusion{c - Vec2(a, a), 2 * a, 2 * a}), 0.1,
                          {BoundaryTag::wall, BoundaryTag::truncation}, u, f, true);
  auto q = boundary_flux(sol, BoundaryTag::inclusion_interface);
  double worst = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) worst = std::max(worst, std::abs(q.values[i] - cplx(-2 * a, 4 * a)));
  EXPECT_LE(worst, 1e-10);
}

TEST(Fem, FluxRecoveryOnCurvedObstacleConverges) {
  const Vec2 c(1.5, 0.5);
  const Eigen::Vector2cd grad(cplx(2.0, 0.0), cplx(-3.0, 0.5));
  auto u = [&](const Vec2& x) { return cplx(1.0, 0.0) + grad[0] * x[0] + grad[1] * x[1]; };
  auto f = [&](const Vec2& x) { return -lambda08 * u(x); };
  std::vector<double> err;
  for (double h : {0.1, 0.05, 0.025}) {
    auto sol = manufactured(strip(3.0, Disk{c, 0.3}), h, {BoundaryTag::wall, BoundaryTag::truncation}, u, f, true);
    auto q = boundary_flux(sol, BoundaryTag::inclusion_interface);
    double e2 = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      EXPECT_LT(q.normals[i].dot(q.points[i] - c), 0.0);
      const cplx exact = grad[0] * q.normals[i][0] + grad[1] * q.normals[i][1];
      e2 += q.weights[i] * std::norm(q.values[i] - exact);
    }
    err.push_back(std::sqrt(e2));
  }
  for (int i = 0; i + 1 < 3; ++i) EXPECT_GT(std::log2(err[i] / err[i + 1]), 2.0);
}

TEST(Fem, ManufacturedL2ErrorIsThirdOrder) {
  auto exact = [](const Vec2& x) { return cplx(std::cos(1.3 * x[0]) * std::cos(2.0 * x[1]), std::sin(0.7 * x[0] + x[1])); };
  auto f = [&](const Vec2& x) {
    const cplx lap(-(1.69 + 4.0) * std::cos(1.3 * x[0]) * std::cos(2.0 * x[1]), -(0.49 + 1.0) * std::sin(0.7 * x[0] + x[1]));
    return -lap - lambda08 * exact(x);
  };
  auto g = strip(2.0);
  BoundaryCondition bc;
  bc.kind = BoundaryCondition::Kind::dirichlet_on;
  bc.tags = {BoundaryTag::wall, BoundaryTag::truncation};
  bc.value = exact;
  AssemblyOptions opt;
  opt.ports = false;
  opt.source = f;
  std::vector<double> hs{0.2, 0.1, 0.05}, err;
  for (double h : hs) {
    auto u = solve(assemble(g, mesh_of(*g, h), compute_mode_basis(lambda08), 0.0, bc, opt));
    err.push_back(l2_error(u[0], exact));
  }
  for (int i = 0; i + 1 < 3; ++i) {
    const double slope = std::log(err[i] / err[i + 1]) / std::log(hs[i] / hs[i + 1]);
    EXPECT_NEAR(slope, 3.0, 0.3) << "h " << hs[i];
  }
}

TEST(Fem, ManufacturedSolutionWithDissipation) {
  // u = e^{i z} cos(pi y) inside and out, with the absorption term moved to the source
  auto g = strip(3.0, Disk{Vec2(1.5, 0.5), 0.3});
  const double eta = 4.0;
  auto exact = [](const Vec2& x) { return std::exp(I * x[0]) * std::cos(pi * x[1]); };
  auto f = [&](const Vec2& x) {
    const double b = g->dissipation(x);
    return (1.0 + pi * pi) * exact(x) - lambda08 * (1.0 + I * eta * b) * exact(x);
  };
  BoundaryCondition bc;
  bc.kind = BoundaryCondition::Kind::dirichlet_on;
  bc.tags = {BoundaryTag::wall, BoundaryTag::truncation};
  bc.value = exact;
  AssemblyOptions opt;
  opt.ports = false;
  opt.source = f;
  std::vector<double> err;
  for (double h : {0.1, 0.05}) {
    auto u = solve(assemble(g, mesh_of(*g, h), compute_mode_basis(lambda08), eta, bc, opt));
    err.push_back(l2_error(u[0], exact));
  }
  // the source jumps across the curved interface, which limits the rate
  EXPECT_LT(err[1], err[0] / 4.0);
  EXPECT_LT(err[1], 1e-3);
}

TEST(Fem, FieldDumpRoundTripIsExact) {
  auto g = strip(3.0, Disk{Vec2(1.5, 0.5), 0.3});
  auto u = solve(assemble(g, mesh_of(*g, 0.1), compute_mode_basis(lambda08), 10.0, BoundaryCondition::neumann_all()));
  std::stringstream ss;
  write_field(ss, u[0]);
  auto r = read_field(ss);
  ASSERT_EQ(r.values.size(), u[0].values.size());
  for (Eigen::Index i = 0; i < r.values.size(); ++i) EXPECT_EQ(r.values[i], u[0].values[i]);
  std::stringstream again;
  write_field(again, r.mesh, r.values);
  std::stringstream first;
  write_field(first, u[0]);
  EXPECT_EQ(first.str(), again.str());
}

TEST(Fem, FluxRequiresDirichletTag) {
  auto g = strip(3.0, Disk{Vec2(1.5, 0.5), 0.3});
  auto u = solve(assemble(g, mesh_of(*g, 0.1), compute_mode_basis(lambda08), 1.0, BoundaryCondition::neumann_all()));
  EXPECT_THROW(boundary_flux(u[0], BoundaryTag::inclusion_interface), Error);
}
