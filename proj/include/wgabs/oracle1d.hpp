#pragma once

#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "wgabs/common.hpp"

namespace wgabs::oracle1d {

/// Full-width slab (z1, z2) of constant dissipation b0 in a straight guide closed by a
/// Neumann wall at z = 0. Monomode only: the field is y-independent.
struct SlabSpec {
  double z1 = 1.0;
  double z2 = 2.0;
  double b0 = 1.0;
  double lambda = 0.64 * pi * pi;
  double eta = 0.0;
  double truncation_z = 6.0;
};

inline void validate(const SlabSpec& s) {
  require(s.z1 > 0.0 && s.z1 < s.z2 && s.z2 < s.truncation_z, ErrorKind::config,
          "slab: need 0 < z1 < z2 < truncation_z");
  require(s.lambda > 0.0 && s.lambda < pi * pi, ErrorKind::config, "slab: lambda must lie in (0, pi^2)");
  require(s.b0 > 0.0 && s.eta >= 0.0, ErrorKind::config, "slab: need b0 > 0 and eta >= 0");
}

/// u = A cos(k z)                                  on (0, z1)
/// u = C e^{i q (z - z1)} + D e^{-i q (z - z2)}    on (z1, z2), q = sqrt(lambda (1 + i eta b0)), Im q >= 0
/// u = e^{-i k z} + R e^{i k z}                    on (z2, inf)
struct SlabSolution {
  SlabSpec spec;
  double k = 0.0;
  cplx q;
  cplx A, C, D, R;
};

inline SlabSolution solve_slab(const SlabSpec& spec) {
  validate(spec);
  SlabSolution s;
  s.spec = spec;
  s.k = std::sqrt(spec.lambda);
  s.q = std::sqrt(cplx(spec.lambda, spec.lambda * spec.eta * spec.b0)); // principal branch
  const double k = s.k, z1 = spec.z1, z2 = spec.z2;
  const cplx q = s.q;
  const cplx e = std::exp(I * q * (z2 - z1)); // |e| <= 1

  // unknowns (A, C, D, R); continuity of u and u' at z1 and z2
  Eigen::Matrix4cd M;
  Eigen::Vector4cd rhs;
  M << std::cos(k * z1), -1.0, -e, 0.0,                 //
      -k * std::sin(k * z1), -I * q, I * q * e, 0.0,     //
      0.0, e, 1.0, -std::exp(I * k * z2),                //
      0.0, I * q * e, -I * q, -I * k * std::exp(I * k * z2);
  rhs << 0.0, 0.0, std::exp(-I * k * z2), -I * k * std::exp(-I * k * z2);
  Eigen::Vector4cd x = M.fullPivLu().solve(rhs);
  s.A = x[0];
  s.C = x[1];
  s.D = x[2];
  s.R = x[3];
  return s;
}

inline cplx slab_reflection(const SlabSpec& spec) { return solve_slab(spec).R; }

/// Field value and z-derivative at z.
inline std::array<cplx, 2> slab_field_and_derivative(const SlabSolution& s, double z) {
  require(z >= 0.0 && z <= s.spec.truncation_z, ErrorKind::config, "slab_field: z out of range");
  const double k = s.k, z1 = s.spec.z1, z2 = s.spec.z2;
  if (z < z1) return {s.A * std::cos(k * z), -s.A * k * std::sin(k * z)};
  if (z <= z2) {
    const cplx a = s.C * std::exp(I * s.q * (z - z1));
    const cplx b = s.D * std::exp(-I * s.q * (z - z2));
    return {a + b, I * s.q * (a - b)};
  }
  const cplx in = std::exp(-I * k * z), out = s.R * std::exp(I * k * z);
  return {in + out, I * k * (out - in)};
}

inline cplx slab_field(const SlabSolution& s, double z) { return slab_field_and_derivative(s, z)[0]; }

inline cplx slab_field(const SlabSpec& spec, double z) { return slab_field(solve_slab(spec), z); }

/// Closed form of int_{z1}^{z2} |u|^2 dz.
inline double slab_l2_squared(const SlabSolution& s) {
  const double L = s.spec.z2 - s.spec.z1;
  const cplx q = s.q;
  const double g = 2.0 * q.imag(); // decay of |e^{iqz}|^2
  auto decaying = [&](double gamma) { // int_0^L e^{-gamma t} dt
    return gamma * L < 1e-12 ? L : (1.0 - std::exp(-gamma * L)) / gamma;
  };
  const double cc = std::norm(s.C) * decaying(g);
  const double dd = std::norm(s.D) * decaying(g);
  // cross term: 2 Re( C conj(D) int e^{iq(z-z1)} conj(e^{-iq(z-z2)}) dz )
  //   e^{iq(z-z1)} e^{i conj(q)(z-z2)} = e^{i q t} e^{i conj(q)(t-L)}, t = z - z1
  const cplx phase = std::exp(-I * std::conj(q) * L);
  const double two_re_q = 2.0 * q.real();
  cplx integral;
  if (std::abs(two_re_q) * L < 1e-12)
    integral = L;
  else
    integral = (std::exp(I * two_re_q * L) - 1.0) / (I * two_re_q);
  const double cd = 2.0 * std::real(s.C * std::conj(s.D) * phase * integral);
  return cc + dd + cd;
}

} // namespace wgabs::oracle1d
