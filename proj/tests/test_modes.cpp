#include <gtest/gtest.h>

#include "wgabs/modes.hpp"

using namespace wgabs;

TEST(Modes, MonomodeAtPointEightPi) {
  auto b = compute_mode_basis(std::pow(0.8 * pi, 2));
  EXPECT_EQ(b.propagating, 1);
  EXPECT_NEAR(b.wavenumber(0), 0.8 * pi, 1e-14);
  EXPECT_EQ(b.n_terms, 15);
}

TEST(Modes, FiveModesAtFourPointEightPi) {
  auto b = compute_mode_basis(std::pow(4.8 * pi, 2));
  EXPECT_EQ(b.propagating, 5);
}

TEST(Modes, ThresholdIsRejected) {
  EXPECT_THROW(compute_mode_basis(pi * pi), Error);
  EXPECT_THROW(compute_mode_basis(std::pow(3.0 * pi, 2)), Error);
  EXPECT_THROW(compute_mode_basis(std::pow(0.8 * pi, 2), 1), Error);
  EXPECT_THROW(compute_mode_basis(-1.0), Error);
}

TEST(Modes, WavenumbersDecreaseAndDecayRatesIncrease) {
  auto b = compute_mode_basis(std::pow(4.8 * pi, 2), 20);
  for (int j = 1; j < b.propagating; ++j) EXPECT_LT(b.wavenumber(j), b.wavenumber(j - 1));
  for (int j = b.propagating + 1; j < b.n_terms; ++j) EXPECT_GT(b.decay_rates[j], b.decay_rates[j - 1]);
}

TEST(Modes, EvaluateWaveClosedForms) {
  const double lambda = std::pow(0.8 * pi, 2);
  auto b = compute_mode_basis(lambda);
  const double a = 0.8 * pi;
  EXPECT_NEAR(std::abs(evaluate_wave(b, 0, Sign::plus, Vec2(0.0, 0.7)) - 1.0 / std::sqrt(2 * a)), 0.0, 1e-15);
  cplx expected = std::exp(-I * 1.6 * pi) / std::sqrt(2 * a);
  EXPECT_NEAR(std::abs(evaluate_wave(b, 0, Sign::minus, Vec2(2.0, 0.3)) - expected), 0.0, 1e-14);

  auto b5 = compute_mode_basis(std::pow(4.8 * pi, 2));
  EXPECT_NEAR(std::abs(evaluate_wave(b5, 1, Sign::plus, Vec2(0.37, 0.5))), 0.0, 1e-15);
  EXPECT_THROW(evaluate_wave(b5, 5, Sign::plus, Vec2(0.0, 0.5)), Error);
}

TEST(Modes, EigenfunctionsAreOrthonormal) {
  auto b = compute_mode_basis(std::pow(4.8 * pi, 2));
  auto rule = quadrature::gauss_legendre(64);
  for (int j = 0; j < b.n_terms; ++j)
    for (int k = 0; k < b.n_terms; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        s += rule.weights[i] * b.phi(j, rule.nodes[i]) * b.phi(k, rule.nodes[i]);
      EXPECT_NEAR(s, j == k ? 1.0 : 0.0, 1e-13) << j << "," << k;
    }
}

TEST(Modes, ModalPairingIdentities) {
  auto b = compute_mode_basis(std::pow(0.8 * pi, 2));
  auto p = wave_trace(b, 0, Sign::plus, 1.3);
  auto m = wave_trace(b, 0, Sign::minus, 1.3);
  EXPECT_NEAR(std::abs(symplectic_pairing(p, p, b) - I), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(symplectic_pairing(p, m, b)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(symplectic_pairing(m, m, b) + I), 0.0, 1e-14);

  auto other = compute_mode_basis(std::pow(0.7 * pi, 2));
  EXPECT_THROW(symplectic_pairing(p, m, other), Error);
}

TEST(Modes, QuadraturePairingMatchesKroneckerForFiveModes) {
  auto b = compute_mode_basis(std::pow(4.8 * pi, 2));
  const double z = 0.83;
  // highest propagating mode oscillates 4 times across the section: 8 panels x 32 points
  for (int j = 0; j < b.propagating; ++j)
    for (int k = 0; k < b.propagating; ++k)
      for (Sign sj : {Sign::plus, Sign::minus})
        for (Sign sk : {Sign::plus, Sign::minus}) {
          auto fj = [&](double y) { return wave_and_dz(b, j, sj, Vec2(z, y)); };
          auto fk = [&](double y) { return wave_and_dz(b, k, sk, Vec2(z, y)); };
          cplx q = symplectic_pairing_quadrature(fj, fk, 8, 32);
          cplx expected = (j == k && sj == sk) ? sign_value(sj) * I : cplx(0.0);
          EXPECT_NEAR(std::abs(q - expected), 0.0, 1e-10);
        }
}

TEST(Modes, PairingIsIndependentOfCrossSection) {
  auto b = compute_mode_basis(std::pow(1.6 * pi, 2));
  // v = w_0^- + 0.3 w_1^+ + evanescent part; the evanescent part does not pair with itself
  auto field = [&](double z) {
    CrossSectionTrace t;
    t.lambda = b.lambda;
    t.value = wave_trace(b, 0, Sign::minus, z).value + 0.3 * wave_trace(b, 1, Sign::plus, z).value;
    t.dz = wave_trace(b, 0, Sign::minus, z).dz + 0.3 * wave_trace(b, 1, Sign::plus, z).dz;
    t.value[3] += std::exp(-b.decay_rates[3] * z);
    t.dz[3] += -b.decay_rates[3] * std::exp(-b.decay_rates[3] * z);
    return t;
  };
  cplx q0 = symplectic_pairing(field(0.2), field(0.2), b);
  for (double z : {0.5, 1.0, 3.0}) EXPECT_NEAR(std::abs(symplectic_pairing(field(z), field(z), b) - q0), 0.0, 1e-12);
}
