#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "wgabs/common.hpp"

namespace wgabs::quadrature {

struct Rule1D {
  std::vector<double> nodes;   // on [0, 1]
  std::vector<double> weights; // sum to 1
};

// Gauss-Legendre rule with n points mapped to [0, 1].
inline Rule1D gauss_legendre(int n) {
  require(n >= 1, ErrorKind::config, "gauss_legendre: n must be positive");
  Rule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

struct TrianglePoint {
  double xi;  // reference coordinates: vertex 0 at (0,0), 1 at (1,0), 2 at (0,1)
  double eta;
  double weight; // weights sum to 1 (multiply by reference area 1/2 and |J|)
};

namespace detail {
template <std::size_t N>
std::vector<TrianglePoint> expand(const std::array<std::array<double, 4>, N>& orbits) {
  // each orbit: {weight, l0, l1, l2}; permutations are generated from distinct barycentrics
  std::vector<TrianglePoint> pts;
  for (const auto& o : orbits) {
    double w = o[0], a = o[1], b = o[2], c = o[3];
    if (b == c && a != b) {
      pts.push_back({b, c, w});
      pts.push_back({a, c, w});
      pts.push_back({b, a, w});
    } else {
      const double l[3] = {a, b, c};
      const int perm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
      for (const auto& p : perm) pts.push_back({l[p[1]], l[p[2]], w});
    }
  }
  return pts;
}
} // namespace detail

// Dunavant rules, exact for polynomials of degree 4 (6 points) and 6 (12 points).
inline const std::vector<TrianglePoint>& triangle_degree4() {
  static const auto rule = detail::expand<2>({{
      {0.223381589678011, 0.108103018168070, 0.445948490915965, 0.445948490915965},
      {0.109951743655322, 0.816847572980459, 0.091576213509771, 0.091576213509771},
  }});
  return rule;
}

inline const std::vector<TrianglePoint>& triangle_degree6() {
  static const auto rule = detail::expand<3>({{
      {0.116786275726379, 0.501426509658179, 0.249286745170910, 0.249286745170910},
      {0.050844906370207, 0.873821971016996, 0.063089014491502, 0.063089014491502},
      {0.082851075618374, 0.053145049844817, 0.310352451033784, 0.636502499121399},
  }});
  return rule;
}

} // namespace wgabs::quadrature
