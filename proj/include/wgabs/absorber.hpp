#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "wgabs/scattering.hpp"

namespace wgabs {

/// Golden-section minimisation of f on [a, b] down to an interval of width tol.
template <class F>
double golden_section(F&& f, double a, double b, double tol) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

inline void require_monomode(double lambda) {
  require(propagating_count(lambda) == 1, ErrorKind::config, "the absorber workflow is monomode only (0 < lambda < pi^2)");
}

struct EtaScan {
  std::vector<double> eta;
  std::vector<double> abs_s;
  double eta_star = 0.0;
  double min_abs = 0.0;
  bool interior = false; // false when the grid minimum sits at an endpoint
};

/// |S^eta| over a log grid, refined by golden section in log(eta) around the grid minimiser.
inline EtaScan eta_minimum_scan(std::shared_ptr<const Geometry> g, double lambda, const std::vector<double>& grid,
                                const MeshControls& c = {}, int workers = 1) {
  require_monomode(lambda);
  require(grid.size() >= 3, ErrorKind::config, "eta scan needs at least three grid points");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(grid[i] > 0.0, ErrorKind::config, "eta grid must be positive");
    if (i > 0) require(grid[i] > grid[i - 1], ErrorKind::config, "eta grid must be increasing");
  }
  EtaScan out;
  out.eta = grid;
  for (const auto& r : eta_sweep(g, lambda, grid, c, workers)) out.abs_s.push_back(std::abs(r.S(0, 0)));
  const auto i = static_cast<std::size_t>(std::min_element(out.abs_s.begin(), out.abs_s.end()) - out.abs_s.begin());
  out.eta_star = grid[i];
  out.min_abs = out.abs_s[i];
  out.interior = i > 0 && i + 1 < grid.size();
  if (!out.interior) return out;
  auto f = [&](double le) { return std::abs(scattering_matrix(g, std::exp(le), lambda, c, false).S(0, 0)); };
  const double le = golden_section(f, std::log(grid[i - 1]), std::log(grid[i + 1]), 1e-3);
  const double v = f(le);
  if (v < out.min_abs) {
    out.eta_star = std::exp(le);
    out.min_abs = v;
  }
  return out;
}

/// sigma with 2 sqrt(lambda) sigma + beta = arccos(-alpha) mod 2 pi, reduced to [0, pi/sqrt(lambda)) and offset by k.
inline double sigma_for_target(cplx s_eta, double lambda, int k = 0) {
  const double alpha = std::abs(s_eta);
  require(alpha < 1.0, ErrorKind::config, "sigma_for_target needs |S| < 1");
  require(k >= 0, ErrorKind::config, "k offset must be nonnegative");
  double beta = std::arg(s_eta);
  if (beta < 0.0) beta += 2 * pi;
  const double period = pi / std::sqrt(lambda);
  double sigma = (std::acos(-alpha) - beta) / (2.0 * std::sqrt(lambda));
  sigma -= std::floor(sigma / period) * period;
  if (sigma >= period) sigma -= period;
  return sigma + k * period;
}

/// e^{-sqrt(lambda_1 - lambda) gap}: size of the slowest evanescent tail across a gap.
inline double separation_bound(double lambda, double gap) {
  const int J = propagating_count(lambda);
  if (gap <= 0.0) return 1.0;
  return std::exp(-std::sqrt(std::pow(J * pi, 2) - lambda) * gap);
}

struct HalfGuideCoefficients {
  double L = 0.0;
  cplx r;          // Neumann on the symmetry line
  cplx R;          // Dirichlet on the symmetry line
  cplx reflection; // (r + R) / 2
  cplx transmission; // (r - R) / 2
  std::vector<Field> fields; // u then U
};

inline HalfGuideCoefficients half_guide_coefficients(double L, double lambda, const MeshControls& c = {},
                                                     bool keep_fields = false) {
  require_monomode(lambda);
  HalfGuideCoefficients h;
  h.L = L;
  for (auto kind : {DomainKind::half_guide_neumann, DomainKind::half_guide_mixed}) {
    auto g = std::make_shared<const Geometry>(build_half_guide(L, lambda, kind));
    auto bc = kind == DomainKind::half_guide_mixed ? BoundaryCondition::dirichlet_on(BoundaryTag::symmetry_line)
                                                  : BoundaryCondition::neumann_all();
    auto r = scattering_from_blocks(prepare_blocks(g, lambda, 0.0, c, bc), 0.0, keep_fields);
    (kind == DomainKind::half_guide_neumann ? h.r : h.R) = r.S(0, 0);
    if (keep_fields) h.fields.push_back(std::move(r.fields.at(0)));
  }
  h.reflection = 0.5 * (h.r + h.R);
  h.transmission = 0.5 * (h.r - h.R);
  return h;
}

struct BranchGuideCoefficients {
  cplx reflection;   // incident from the left, reflected to the left
  cplx transmission; // incident from the left, transmitted to the right
  double energy_residual = 0.0;
};

/// Two-port solve on the full branch guide centered at z = sigma.
inline BranchGuideCoefficients branch_guide_coefficients(double L, double lambda, double sigma,
                                                         const MeshControls& c = {},
                                                         const BranchGuideOptions& opt = {}) {
  require_monomode(lambda);
  auto g = std::make_shared<const Geometry>(build_branch_guide(L, lambda, sigma, opt));
  auto r = scattering_matrix(g, 0.0, lambda, c, false);
  int left = -1, right = -1;
  for (int p = 0; p < static_cast<int>(g->ports.size()); ++p) (g->ports[p].direction < 0 ? left : right) = p;
  require(left >= 0 && right >= 0, ErrorKind::config, "branch guide needs two ports");
  return {r.S(left, left), r.S(left, right), r.energy_residual};
}

struct LSample {
  double L;
  cplx R;
};

struct AbsorberDesign {
  GeometrySpec base; // the dissipative guide without the branch
  double eta = 0.0;
  double lambda = 0.0;
  cplx s_eta;
  double alpha = 0.0;
  double beta = 0.0;
  int k_offset = 0;
  double sigma = 0.0;
  int kappa = 0;
  AbsorberBranchOptions branch{};
  double separation = 1.0;
  std::vector<LSample> samples;
  double best_L = std::numeric_limits<double>::quiet_NaN();
  double best_abs = std::numeric_limits<double>::quiet_NaN();
  double dip_width = std::numeric_limits<double>::quiet_NaN(); // L-width of the dip at |R| = 0.5

  double branch_center() const { return absorber_branch_center(lambda, sigma, kappa); }
  double branch_width() const { return branch.ligament ? branch.ligament_width : quarter_wavelength(lambda); }

  /// z-distance from the end of the base features to the foot of the branch.
  double gap() const {
    const auto ex = Geometry::feature_extent_of(base, {});
    const double end = ex ? std::max((*ex)[1], base.z_min) : base.z_min;
    return branch_center() - 0.5 * branch_width() - end;
  }
};

inline double separation_check(const AbsorberDesign& d) { return separation_bound(d.lambda, d.gap()); }

inline bool separation_warning(const AbsorberDesign& d) { return separation_check(d) > 1e-3; }

/// Smallest kappa whose separation bound falls below 1e-3.
inline int default_kappa(AbsorberDesign d) {
  for (d.kappa = 0; d.kappa < 1000; ++d.kappa)
    if (separation_check(d) < 1e-3) return d.kappa;
  throw Error(ErrorKind::config, "no kappa separates the branch from the base features");
}

/// Computes S^eta on the base guide, then sigma and (unless given) kappa.
inline AbsorberDesign design_absorber(const GeometrySpec& base, double eta, const MeshControls& c = {}, int k_offset = 0,
                                      std::optional<int> kappa = {}, const AbsorberBranchOptions& branch = {}) {
  require(base.lambda.has_value(), ErrorKind::config, "absorber design needs lambda");
  require(eta > 0.0, ErrorKind::config, "absorber design needs eta > 0");
  require(base.branches.empty() && !base.ligament, ErrorKind::config, "the base guide must not carry a branch");
  AbsorberDesign d;
  d.base = base;
  d.eta = eta;
  d.lambda = *base.lambda;
  require_monomode(d.lambda);
  d.branch = branch;
  auto g = std::make_shared<const Geometry>(build_waveguide(base));
  d.s_eta = scattering_matrix(g, eta, d.lambda, c, false).S(0, 0);
  d.alpha = std::abs(d.s_eta);
  d.beta = std::arg(d.s_eta);
  if (d.beta < 0.0) d.beta += 2 * pi;
  d.k_offset = k_offset;
  d.sigma = sigma_for_target(d.s_eta, d.lambda, k_offset);
  d.kappa = kappa ? *kappa : default_kappa(d);
  d.separation = separation_check(d);
  return d;
}

/// The guide with the branch appended; the truncation line is placed behind the branch.
inline Geometry absorber_geometry(const AbsorberDesign& d, double L) {
  GeometrySpec s = d.base;
  s.truncation_z.reset();
  return build_absorber_domain(s, d.sigma, d.kappa, L, d.branch);
}

inline cplx absorber_reflection(const AbsorberDesign& d, double L, const MeshControls& c = {}) {
  auto g = std::make_shared<const Geometry>(absorber_geometry(d, L));
  return scattering_matrix(g, d.eta, d.lambda, c, false).S(0, 0);
}

/// 60 points per period pi/sqrt(lambda) across two periods, starting at L_min.
inline std::vector<double> default_L_grid(double lambda, double L_min = 1.05, int per_period = 60, int periods = 2) {
  const double period = pi / std::sqrt(lambda);
  std::vector<double> out;
  for (int i = 0; i <= per_period * periods; ++i) out.push_back(L_min + period * i / per_period);
  return out;
}

/// Ligament lengths within 10% of the resonance pi (m + 1/2) / sqrt(lambda).
inline std::vector<double> ligament_L_grid(double lambda, int m = 0, int points = 60) {
  const double c = pi * (m + 0.5) / std::sqrt(lambda);
  std::vector<double> out;
  for (int i = 0; i < points; ++i) out.push_back(c * (0.9 + 0.2 * i / std::max(1, points - 1)));
  return out;
}

/// Width in L of the region around index i where |R| stays below level, from linear interpolation of the samples.
inline double dip_width(const std::vector<LSample>& s, std::size_t i, double level) {
  auto a = [&](std::size_t k) { return std::abs(s[k].R); };
  if (a(i) >= level) return 0.0;
  std::size_t lo = i, hi = i;
  while (lo > 0 && a(lo - 1) < level) --lo;
  while (hi + 1 < s.size() && a(hi + 1) < level) ++hi;
  if (lo == 0 || hi + 1 == s.size()) return std::numeric_limits<double>::infinity();
  auto cross = [&](std::size_t p, std::size_t q) {
    return s[p].L + (level - a(p)) * (s[q].L - s[p].L) / (a(q) - a(p));
  };
  return cross(hi, hi + 1) - cross(lo - 1, lo);
}

/// R^kappa(L) over the grid, then golden-section refinement of the best sample down to dL = 1e-4.
inline AbsorberDesign l_sweep(AbsorberDesign d, const std::vector<double>& L_grid, const MeshControls& c = {},
                              int workers = 1) {
  require(!L_grid.empty(), ErrorKind::config, "empty L grid");
  d.samples.assign(L_grid.size(), {});
  parallel_for(static_cast<int>(L_grid.size()), workers,
               [&](int i) { d.samples[i] = {L_grid[i], absorber_reflection(d, L_grid[i], c)}; });
  std::size_t best = 0;
  for (std::size_t i = 1; i < d.samples.size(); ++i)
    if (std::abs(d.samples[i].R) < std::abs(d.samples[best].R)) best = i;
  d.best_L = d.samples[best].L;
  d.best_abs = std::abs(d.samples[best].R);
  if (d.samples.size() >= 3) {
    const double a = d.samples[best > 0 ? best - 1 : best].L;
    const double b = d.samples[best + 1 < d.samples.size() ? best + 1 : best].L;
    if (b > a) {
      auto f = [&](double L) { return std::abs(absorber_reflection(d, L, c)); };
      const double L = golden_section(f, a, b, 1e-4);
      const double v = f(L);
      if (v < d.best_abs) {
        d.best_L = L;
        d.best_abs = v;
      }
    }
    d.dip_width = dip_width(d.samples, best, 0.5);
  }
  return d;
}

} // namespace wgabs
