#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "wgabs/common.hpp"
#include "wgabs/quadrature.hpp"

namespace wgabs {

/// Transverse Neumann eigenpairs of the unit interval and the waveguide modes built on them.
///
/// lambda_j = (j pi)^2, phi_0 = 1, phi_j(y) = sqrt(2) cos(j pi y). Modes with j < propagating
/// carry energy (alpha_j = sqrt(lambda - lambda_j)); the rest decay at rate sqrt(lambda_j - lambda).
struct ModeBasis {
  double lambda = 0.0;
  int n_terms = 15;
  int propagating = 0; // J
  std::vector<double> eigenvalues;
  std::vector<double> wavenumbers;  // size J
  std::vector<double> decay_rates;  // size n_terms, zero for propagating modes

  double eigenvalue(int j) const { return eigenvalues.at(j); }
  double wavenumber(int j) const { return wavenumbers.at(j); }

  double phi(int j, double y) const { return j == 0 ? 1.0 : std::sqrt(2.0) * std::cos(j * pi * y); }

  double dphi(int j, double y) const {
    return j == 0 ? 0.0 : -std::sqrt(2.0) * j * pi * std::sin(j * pi * y);
  }

  /// Symbol of the outgoing Dirichlet-to-Neumann map on mode j: d_n u = mu_j u.
  cplx dtn_symbol(int j) const {
    return j < propagating ? I * wavenumbers[j] : cplx(-decay_rates[j], 0.0);
  }

  bool same_as(const ModeBasis& other) const {
    return lambda == other.lambda && n_terms == other.n_terms;
  }
};

inline int propagating_count(double lambda) {
  int J = 0;
  while ((J * pi) * (J * pi) < lambda) ++J;
  return J;
}

inline ModeBasis compute_mode_basis(double lambda, int n_terms = 15) {
  require(lambda > 0.0 && std::isfinite(lambda), ErrorKind::config, "lambda must be positive");
  const int J = propagating_count(lambda);
  for (int j = 0; j <= J; ++j) {
    double th = (j * pi) * (j * pi);
    require(std::abs(lambda - th) > 1e-12 * std::max(1.0, th), ErrorKind::config,
            "lambda lies on the threshold (j pi)^2 with j = " + std::to_string(j));
  }
  require(n_terms > J, ErrorKind::config,
          "n_terms (" + std::to_string(n_terms) + ") must exceed the propagating count " +
              std::to_string(J));
  ModeBasis b;
  b.lambda = lambda;
  b.n_terms = n_terms;
  b.propagating = J;
  b.eigenvalues.resize(n_terms);
  b.decay_rates.assign(n_terms, 0.0);
  for (int j = 0; j < n_terms; ++j) {
    b.eigenvalues[j] = (j * pi) * (j * pi);
    if (j < J)
      b.wavenumbers.push_back(std::sqrt(lambda - b.eigenvalues[j]));
    else
      b.decay_rates[j] = std::sqrt(b.eigenvalues[j] - lambda);
  }
  return b;
}

enum class Sign { plus = 1, minus = -1 };

inline double sign_value(Sign s) { return s == Sign::plus ? 1.0 : -1.0; }

/// Value and z-derivative of w_j^{+-}(y, z) = (2 alpha_j)^{-1/2} e^{+-i alpha_j z} phi_j(y).
inline std::pair<cplx, cplx> wave_and_dz(const ModeBasis& basis, int j, Sign sign, const Vec2& p) {
  require(j >= 0 && j < basis.propagating, ErrorKind::config,
          "mode index " + std::to_string(j) + " is not propagating");
  const double a = basis.wavenumbers[j];
  const double s = sign_value(sign);
  const cplx v = std::exp(s * I * a * z_of(p)) * basis.phi(j, y_of(p)) / std::sqrt(2.0 * a);
  return {v, s * I * a * v};
}

inline cplx evaluate_wave(const ModeBasis& basis, int j, Sign sign, const Vec2& p) {
  return wave_and_dz(basis, j, sign, p).first;
}

/// Modal coefficients of a field on a cross-section: value_k = (v, phi_k), dz_k = (d_z v, phi_k).
struct CrossSectionTrace {
  double lambda = 0.0;
  CVector value;
  CVector dz;
};

inline CrossSectionTrace wave_trace(const ModeBasis& basis, int j, Sign sign, double z) {
  CrossSectionTrace t;
  t.lambda = basis.lambda;
  t.value = CVector::Zero(basis.n_terms);
  t.dz = CVector::Zero(basis.n_terms);
  require(j >= 0 && j < basis.propagating, ErrorKind::config,
          "mode index " + std::to_string(j) + " is not propagating");
  const double a = basis.wavenumbers[j];
  const double s = sign_value(sign);
  t.value[j] = std::exp(s * I * a * z) / std::sqrt(2.0 * a);
  t.dz[j] = s * I * a * t.value[j];
  return t;
}

/// q(v, v') = int_0^1 conj(v') d_z v - v conj(d_z v') dy, evaluated from modal coefficients.
inline cplx symplectic_pairing(const CrossSectionTrace& v, const CrossSectionTrace& w,
                               const ModeBasis& basis) {
  require(v.lambda == basis.lambda && w.lambda == basis.lambda, ErrorKind::config,
          "symplectic_pairing: traces belong to a different spectral parameter");
  require(v.value.size() == basis.n_terms && w.value.size() == basis.n_terms &&
              v.dz.size() == basis.n_terms && w.dz.size() == basis.n_terms,
          ErrorKind::config, "symplectic_pairing: trace length does not match the basis");
  cplx q = 0.0;
  for (int k = 0; k < basis.n_terms; ++k)
    q += std::conj(w.value[k]) * v.dz[k] - v.value[k] * std::conj(w.dz[k]);
  return q;
}

/// Same pairing, integrated by composite Gauss-Legendre quadrature on the cross-section.
/// Each callable returns (value, d_z value) at height y.
using CrossSectionSampler = std::function<std::pair<cplx, cplx>(double y)>;

inline cplx symplectic_pairing_quadrature(const CrossSectionSampler& v, const CrossSectionSampler& w,
                                          int panels, int points_per_panel) {
  const auto rule = quadrature::gauss_legendre(points_per_panel);
  cplx q = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double y0 = double(p) / panels, hy = 1.0 / panels;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double y = y0 + hy * rule.nodes[i];
      auto [a, da] = v(y);
      auto [b, db] = w(y);
      q += hy * rule.weights[i] * (std::conj(b) * da - a * std::conj(db));
    }
  }
  return q;
}

} // namespace wgabs
