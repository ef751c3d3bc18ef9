#include <gtest/gtest.h>

#include "wgabs/asymptotics.hpp"

using namespace wgabs;

namespace {

const double lambda08 = std::pow(0.8 * pi, 2);

std::shared_ptr<const Geometry> guide(std::optional<InclusionShape> inc, double b0 = 1.0, double zT = 3.0) {
  GeometrySpec s;
  s.truncation_z = zT;
  s.inclusion = inc;
  s.lambda = lambda08;
  s.dissipation.b0 = b0;
  return std::make_shared<const Geometry>(build_waveguide(s));
}

std::shared_ptr<const Geometry> disk_guide(double b0 = 1.0) { return guide(Disk{Vec2(1.5, 0.5), 0.3}, b0); }

MeshControls controls(double h) {
  MeshControls c;
  c.h = h;
  return c;
}

} // namespace

TEST(LogFit, RecoversPowerLaw) {
  auto x = logspace(1e-3, 1e-1, 5);
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * std::pow(v, 2.0));
  auto f = loglog_fit(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-12);
  EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-10);
  EXPECT_NEAR(x.front(), 1e-3, 1e-15);
  EXPECT_NEAR(x.back(), 1e-1, 1e-15);
  EXPECT_THROW(loglog_fit({1.0}, {1.0}), Error);
  EXPECT_THROW(loglog_fit({1.0, 2.0}, {0.0, 1.0}), Error);
}

TEST(BoundaryLayer, ProfileNormalisationAndDecay) {
  const double b = 1.7;
  const double dt = 1e-6;
  const cplx slope = (boundary_layer_profile(dt, lambda08, b) - boundary_layer_profile(-dt, lambda08, b)) / (2 * dt);
  EXPECT_NEAR(std::abs(slope - 1.0), 0.0, 1e-8);
  double prev = std::abs(boundary_layer_profile(0.0, lambda08, b));
  for (int i = 1; i <= 50; ++i) {
    const double a = std::abs(boundary_layer_profile(0.1 * i, lambda08, b));
    EXPECT_LT(a, prev);
    prev = a;
  }
  // three skin depths below the interface
  const double eta = 1e4;
  const double n = 3.0 * skin_depth(lambda08, b, eta);
  const double ratio =
      std::abs(boundary_layer_profile(std::sqrt(eta) * n, lambda08, b)) / std::abs(boundary_layer_profile(0, lambda08, b));
  EXPECT_LE(ratio, std::exp(-3.0) * (1 + 1e-12));
}

TEST(BoundaryLayer, CutoffIsSmoothStep) {
  EXPECT_EQ(collar_cutoff(0.0, 0.15), 1.0);
  EXPECT_EQ(collar_cutoff(0.15, 0.15), 1.0);
  EXPECT_EQ(collar_cutoff(0.3, 0.15), 0.0);
  EXPECT_NEAR(collar_cutoff(0.225, 0.15), 0.5, 1e-14);
  double prev = 1.0;
  for (int i = 0; i <= 100; ++i) {
    const double v = collar_cutoff(0.15 + 0.0015 * i, 0.15);
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST(SmallEta, PredictorStructure) {
  auto m = small_eta_model(disk_guide(), lambda08, controls(0.05));
  EXPECT_EQ((m.predict(0.0) - m.S0).norm(), 0.0);
  const double a = (m.predict(1e-2) - m.S0).norm(), b = (m.predict(2e-2) - m.S0).norm();
  EXPECT_NEAR(a, lambda08 * 1e-2 * (m.B0 * m.S0).norm(), 1e-14);
  EXPECT_NEAR(b / a, 2.0, 1e-12);
  EXPECT_LE(std::abs(std::abs(m.S0(0, 0)) - 1.0), 1e-4);
  EXPECT_GT(m.B0(0, 0).real(), 0.0);
}

TEST(SmallEta, QuadraticRemainder) {
  auto st = small_eta_study(disk_guide(), lambda08, logspace(1e-3, 1e-1, 5), controls(0.05));
  ASSERT_EQ(st.rows.size(), 5u);
  EXPECT_NEAR(st.fit.slope, 2.0, 0.3);
}

TEST(LargeEta, RejectsRectangle) {
  auto g = guide(RectangleInclusion{});
  EXPECT_THROW(large_eta_model(g, lambda08, controls(0.05)), Error);
}

TEST(LargeEta, ModelInvariants) {
  auto m = large_eta_model(disk_guide(), lambda08, controls(0.02));
  ASSERT_EQ(m.S_inf.rows(), 1);
  EXPECT_LE(std::abs(std::norm(m.S_inf(0, 0)) - 1.0), 1e-4);
  EXPECT_EQ((m.E - m.E.adjoint()).norm(), 0.0);
  EXPECT_GT(m.E(0, 0).real(), 0.0);
  EXPECT_LE(prefactor_identity_defect(m), 1e-10);
  EXPECT_EQ((m.predict(1e300) - m.S_inf).norm() < 1e-100, true);
}

TEST(LargeEta, SlabFluxMatrixMatchesClosedForm) {
  // Dirichlet face at z2: u = w^- + s w^+ with s = -exp(-2ik z2), so |u'(z2)|^2 = 2k
  const double b0 = 4.0;
  auto g = guide(Slab{1.0, 2.0}, b0, 4.0);
  auto mesh = std::make_shared<const Mesh>(triangulate(*g, 0.05));
  auto blocks = assemble_blocks(g, mesh, compute_mode_basis(lambda08), BoundaryCondition::dirichlet_on_inclusion());
  auto r = scattering_from_blocks(blocks, 0.0, true);
  auto q = boundary_flux(r.fields[0], BoundaryTag::inclusion_interface);
  const CMatrix E = flux_matrix(*g, {q});
  const double k = std::sqrt(lambda08);
  EXPECT_NEAR(E(0, 0).real(), 2.0 * k / std::sqrt(b0), 1e-4 * k);
  EXPECT_NEAR(std::abs(r.S(0, 0) + std::exp(-2.0 * I * k * 2.0)), 0.0, 1e-5);
}

TEST(LargeEta, ReconstructionTraceAndSupport) {
  auto g = disk_guide();
  auto m = large_eta_model(g, lambda08, controls(0.05));
  const double eta = 1e4;
  InteriorReconstruction rec(m, *g, 0, eta);
  EXPECT_DOUBLE_EQ(rec.collar_width(), 0.15);
  FluxInterpolant flux(m.fluxes[0], g->inclusion_center());
  for (double a : {0.0, 1.0, 2.5, -2.0}) {
    const Vec2 foot = Vec2(1.5, 0.5) + 0.3 * Vec2(std::cos(a), std::sin(a));
    const Vec2 inside = Vec2(1.5, 0.5) + (0.3 - 1e-12) * Vec2(std::cos(a), std::sin(a));
    const cplx expect = boundary_layer_profile(0.0, lambda08, 1.0) * flux(foot) / std::sqrt(eta);
    EXPECT_NEAR(std::abs(rec(inside) - expect), 0.0, 1e-9 * std::abs(expect));
  }
  EXPECT_EQ(rec(Vec2(1.5, 0.5)), cplx(0.0));
  EXPECT_EQ(rec(Vec2(0.5, 0.5)), cplx(0.0));
  EXPECT_THROW(InteriorReconstruction(m, *g, 0, 0.0), Error);
}

TEST(LargeEta, ReconstructionMatchesLayerResolvedSolve) {
  auto g = disk_guide();
  const double eta = 1e3;
  auto c = controls(0.02);
  auto mesh = std::make_shared<const Mesh>(build_mesh(*g, lambda08, eta, c));
  ASSERT_FALSE(mesh->grading.layer_unresolved);
  auto blocks = assemble_blocks(g, mesh, compute_mode_basis(lambda08), BoundaryCondition::neumann_all());
  auto r = scattering_from_blocks(blocks, eta, true);
  auto m = large_eta_model(g, mesh, lambda08);
  EXPECT_LE(reconstruction_error(m, *g, r.fields[0]), 0.3);
}

TEST(LargeEta, InteriorNormDecaysAndDropsWithStrongerAbsorption) {
  auto c = controls(0.05);
  auto t = interior_decay_norm(disk_guide(), lambda08, {0.0, 1e4}, c);
  EXPECT_GT(t.norm[0], 0.0);
  EXPECT_LT(t.norm[1], t.norm[0]);
  auto t2 = interior_decay_norm(disk_guide(2.0), lambda08, {1e4}, c);
  EXPECT_LT(t2.norm[0], t.norm[1]);
}
