#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "wgabs/common.hpp"
#include "wgabs/modes.hpp"

namespace wgabs {

enum class BoundaryTag : int {
  wall = 1,
  truncation = 2,
  inclusion_interface = 3,
  symmetry_line = 4,
  ligament = 5,
  truncation_left = 6,
};

enum class Region : int { exterior = 1, inclusion = 2 };

enum class DomainKind { full_guide, half_guide_neumann, half_guide_mixed };

/// What closes the strip at its left or right end.
enum class EndKind { wall, port, symmetry };

inline const char* tag_name(BoundaryTag t) {
  switch (t) {
  case BoundaryTag::wall: return "wall";
  case BoundaryTag::truncation: return "truncation";
  case BoundaryTag::inclusion_interface: return "inclusion_interface";
  case BoundaryTag::symmetry_line: return "symmetry_line";
  case BoundaryTag::ligament: return "ligament";
  case BoundaryTag::truncation_left: return "truncation_left";
  }
  return "?";
}

struct Disk {
  Vec2 center{1.5, 0.5};
  double radius = 0.3;
};

struct Ellipse {
  Vec2 center{1.5, 0.5};
  double semi_z = 0.3;
  double semi_y = 0.2;
};

/// Axis-aligned rectangle; corner is the (min z, min y) vertex.
struct RectangleInclusion {
  Vec2 corner{1.2, 0.3};
  double width = 0.6;
  double height = 0.4;
};

/// Full cross-section slab z1 < z < z2, touching both walls.
struct Slab {
  double z1 = 1.0;
  double z2 = 2.0;
};

using InclusionShape = std::variant<Disk, Ellipse, RectangleInclusion, Slab>;

/// b(x) = b0 + radial * |x - c|^2 on the inclusion (c its center), zero outside.
struct DissipationProfile {
  double b0 = 1.0;
  double radial = 0.0;
};

/// Rectangle [attach_z0, attach_z0 + width] x [1, 1 + depth] glued to the top wall.
struct Branch {
  double attach_z0 = 0.0;
  std::optional<double> width;
  double depth = 0.5;
  bool quarter_wavelength = false;
};

struct Ligament {
  double attach_z0 = 0.0;
  double width = 0.05;
  double length = 0.6;
};

struct GeometrySpec {
  double strip_height = 1.0;
  double z_min = 0.0;
  std::optional<double> truncation_z;
  EndKind left_end = EndKind::wall;
  EndKind right_end = EndKind::port;
  DomainKind kind = DomainKind::full_guide;
  /// Interior vertices of the resonator polyline from (z_min, 0) to (z_min, 1), all with z < z_min.
  std::vector<Vec2> resonator;
  std::optional<InclusionShape> inclusion;
  DissipationProfile dissipation;
  std::vector<Branch> branches;
  std::optional<Ligament> ligament;
  /// Needed for default window length and quarter-wavelength widths.
  std::optional<double> lambda;
};

/// Piece of boundary or interface: a straight segment or a full ellipse (circle when rz == ry).
struct Curve {
  enum class Kind { segment, ellipse };
  Kind kind = Kind::segment;
  BoundaryTag tag = BoundaryTag::wall;
  Vec2 a{0, 0}, b{0, 0};
  Vec2 center{0, 0};
  double rz = 0.0, ry = 0.0;

  bool curved() const { return kind == Kind::ellipse; }

  double length_bound() const {
    return kind == Kind::segment ? (b - a).norm() : 2.0 * pi * std::max(rz, ry);
  }

  Vec2 at(double t) const {
    if (kind == Kind::segment) return a + t * (b - a);
    return center + Vec2(rz * std::cos(t), ry * std::sin(t));
  }

  Vec2 project(const Vec2& p) const;

  double distance(const Vec2& p) const { return (project(p) - p).norm(); }
};

namespace detail {

inline double cross(const Vec2& u, const Vec2& v) { return u[0] * v[1] - u[1] * v[0]; }

inline Vec2 project_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  Vec2 d = b - a;
  double L2 = d.squaredNorm();
  if (L2 == 0.0) return a;
  double t = std::clamp((p - a).dot(d) / L2, 0.0, 1.0);
  return a + t * d;
}

/// Nearest point on the ellipse (z/a)^2 + (y/b)^2 = 1 to q, returned as the parametric angle in [0, 2 pi).
inline double ellipse_nearest_angle(double a, double b, const Vec2& q) {
  const double sx = q[0] < 0 ? -1.0 : 1.0;
  const double sy = q[1] < 0 ? -1.0 : 1.0;
  const double x = std::abs(q[0]), y = std::abs(q[1]);
  double theta;
  if (a == b) {
    theta = (x == 0.0 && y == 0.0) ? 0.0 : std::atan2(y, x);
  } else if (y == 0.0 && a > b && a * x < a * a - b * b) {
    theta = std::acos(a * x / (a * a - b * b));
  } else if (x == 0.0 && b > a && b * y < b * b - a * a) {
    theta = std::asin(b * y / (b * b - a * a));
  } else {
    // root of dD/dt for D(t) = |(a cos t, b sin t) - (x, y)|^2 on [0, pi/2], bracketed Newton
    auto g = [&](double t) {
      return (b * b - a * a) * std::cos(t) * std::sin(t) + a * x * std::sin(t) - b * y * std::cos(t);
    };
    double lo = 0.0, hi = pi / 2;
    theta = std::atan2(a * y, b * x);
    for (int it = 0; it < 200; ++it) {
      double gt = g(theta);
      if (gt < 0) lo = theta;
      else hi = theta;
      double dg = (b * b - a * a) * std::cos(2 * theta) + a * x * std::cos(theta) + b * y * std::sin(theta);
      double next = dg > 0.0 ? theta - gt / dg : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      const bool done = std::abs(next - theta) < 1e-15 || hi - lo < 1e-15;
      theta = next;
      if (done) break;
    }
  }
  double t = std::atan2(sy * std::sin(theta), sx * std::cos(theta));
  return t < 0 ? t + 2 * pi : t;
}

inline bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  auto o = [](const Vec2& a, const Vec2& b, const Vec2& c) {
    double v = cross(b - a, c - a);
    return v > 0 ? 1 : (v < 0 ? -1 : 0);
  };
  int o1 = o(p1, p2, q1), o2 = o(p1, p2, q2), o3 = o(q1, q2, p1), o4 = o(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  auto on = [](const Vec2& a, const Vec2& b, const Vec2& c) {
    return std::min(a[0], b[0]) <= c[0] && c[0] <= std::max(a[0], b[0]) && std::min(a[1], b[1]) <= c[1] &&
           c[1] <= std::max(a[1], b[1]);
  };
  return (o1 == 0 && on(p1, p2, q1)) || (o2 == 0 && on(p1, p2, q2)) || (o3 == 0 && on(q1, q2, p1)) ||
         (o4 == 0 && on(q1, q2, p2));
}

} // namespace detail

inline Vec2 Curve::project(const Vec2& p) const {
  if (kind == Kind::segment) return detail::project_segment(a, b, p);
  double t = detail::ellipse_nearest_angle(rz, ry, p - center);
  return at(t);
}

struct Port {
  BoundaryTag tag;
  double z;
  int direction; // +1: outgoing waves travel towards +z
};

/// Validated geometry: a simple outer polygon with tagged edges plus an optional inclusion.
class Geometry {
public:
  GeometrySpec spec;
  std::vector<Vec2> outer;             // counter-clockwise
  std::vector<BoundaryTag> outer_tags; // edge i joins outer[i] and outer[i+1]
  std::vector<Curve> interface_curves;
  std::vector<Branch> branches;        // widths resolved
  std::vector<Port> ports;
  double z_max = 0.0;

  bool has_inclusion() const { return spec.inclusion.has_value(); }
  const InclusionShape& inclusion() const { return *spec.inclusion; }

  bool smooth_inclusion() const {
    return has_inclusion() && (std::holds_alternative<Disk>(inclusion()) || std::holds_alternative<Ellipse>(inclusion()));
  }

  std::vector<Curve> boundary_curves() const {
    std::vector<Curve> out;
    for (std::size_t i = 0; i < outer.size(); ++i) {
      Curve c;
      c.tag = outer_tags[i];
      c.a = outer[i];
      c.b = outer[(i + 1) % outer.size()];
      out.push_back(c);
    }
    return out;
  }

  std::vector<Curve> all_curves() const {
    auto out = boundary_curves();
    out.insert(out.end(), interface_curves.begin(), interface_curves.end());
    return out;
  }

  bool in_polygon(const Vec2& p) const {
    bool inside = false;
    const std::size_t n = outer.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Vec2& a = outer[i];
      const Vec2& b = outer[j];
      if ((a[1] > p[1]) != (b[1] > p[1])) {
        double zc = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
        if (p[0] < zc) inside = !inside;
      }
    }
    return inside;
  }

  double distance_to_outer(const Vec2& p) const {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < outer.size(); ++i)
      d = std::min(d, (detail::project_segment(outer[i], outer[(i + 1) % outer.size()], p) - p).norm());
    return d;
  }

  Vec2 inclusion_center() const {
    return std::visit(
        [](const auto& s) -> Vec2 {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Disk> || std::is_same_v<T, Ellipse>) return s.center;
          else if constexpr (std::is_same_v<T, RectangleInclusion>)
            return s.corner + Vec2(0.5 * s.width, 0.5 * s.height);
          else return Vec2(0.5 * (s.z1 + s.z2), 0.5);
        },
        inclusion());
  }

  /// Signed distance to the inclusion boundary, positive inside the inclusion.
  double inclusion_depth(const Vec2& p) const {
    if (!has_inclusion()) return -std::numeric_limits<double>::infinity();
    return std::visit(
        [&](const auto& s) -> double {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Disk>) {
            return s.radius - (p - s.center).norm();
          } else if constexpr (std::is_same_v<T, Ellipse>) {
            Vec2 q = p - s.center;
            double t = detail::ellipse_nearest_angle(s.semi_z, s.semi_y, q);
            Vec2 foot(s.semi_z * std::cos(t), s.semi_y * std::sin(t));
            double d = (q - foot).norm();
            double f = (q[0] / s.semi_z) * (q[0] / s.semi_z) + (q[1] / s.semi_y) * (q[1] / s.semi_y);
            return f <= 1.0 ? d : -d;
          } else if constexpr (std::is_same_v<T, RectangleInclusion>) {
            double dz = std::max(s.corner[0] - p[0], p[0] - s.corner[0] - s.width);
            double dy = std::max(s.corner[1] - p[1], p[1] - s.corner[1] - s.height);
            if (dz <= 0 && dy <= 0) return -std::max(dz, dy);
            return -std::hypot(std::max(dz, 0.0), std::max(dy, 0.0));
          } else {
            return std::min(p[0] - s.z1, s.z2 - p[0]);
          }
        },
        inclusion());
  }

  Region region_at(const Vec2& p) const {
    return inclusion_depth(p) > 0.0 ? Region::inclusion : Region::exterior;
  }

  double dissipation(const Vec2& p) const {
    if (region_at(p) != Region::inclusion) return 0.0;
    return dissipation_in_inclusion(p);
  }

  /// Profile value without the region test (used at quadrature points of inclusion triangles).
  double dissipation_in_inclusion(const Vec2& p) const {
    const auto& d = spec.dissipation;
    if (d.radial == 0.0) return d.b0;
    return d.b0 + d.radial * (p - inclusion_center()).squaredNorm();
  }

  double outer_area() const {
    double a = 0.0;
    for (std::size_t i = 0; i < outer.size(); ++i) a += detail::cross(outer[i], outer[(i + 1) % outer.size()]);
    return 0.5 * a;
  }

  double inclusion_area() const {
    if (!has_inclusion()) return 0.0;
    return std::visit(
        [](const auto& s) -> double {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Disk>) return pi * s.radius * s.radius;
          else if constexpr (std::is_same_v<T, Ellipse>) return pi * s.semi_z * s.semi_y;
          else if constexpr (std::is_same_v<T, RectangleInclusion>) return s.width * s.height;
          else return s.z2 - s.z1;
        },
        inclusion());
  }

  int region_count() const { return has_inclusion() ? 2 : 1; }

  std::set<BoundaryTag> boundary_tags() const {
    std::set<BoundaryTag> t(outer_tags.begin(), outer_tags.end());
    if (!interface_curves.empty()) t.insert(BoundaryTag::inclusion_interface);
    return t;
  }

  /// Smallest width among branches and ligament; infinity if none.
  double narrowest_feature() const {
    double w = std::numeric_limits<double>::infinity();
    for (const auto& b : branches) w = std::min(w, *b.width);
    if (spec.ligament) w = std::min(w, spec.ligament->width);
    return w;
  }

  std::optional<Port> port(BoundaryTag tag) const {
    for (const auto& p : ports)
      if (p.tag == tag) return p;
    return std::nullopt;
  }

  /// z-interval covered by inclusion, branches, ligament and resonator; empty if none.
  std::optional<std::array<double, 2>> feature_extent() const { return feature_extent_of(spec, branches); }

  static std::optional<std::array<double, 2>> feature_extent_of(const GeometrySpec& s,
                                                                const std::vector<Branch>& br) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    auto add = [&](double a, double b) {
      lo = std::min(lo, a);
      hi = std::max(hi, b);
    };
    if (s.inclusion) {
      std::visit(
          [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, Disk>) add(x.center[0] - x.radius, x.center[0] + x.radius);
            else if constexpr (std::is_same_v<T, Ellipse>) add(x.center[0] - x.semi_z, x.center[0] + x.semi_z);
            else if constexpr (std::is_same_v<T, RectangleInclusion>) add(x.corner[0], x.corner[0] + x.width);
            else add(x.z1, x.z2);
          },
          *s.inclusion);
    }
    for (const auto& b : br) add(b.attach_z0, b.attach_z0 + b.width.value_or(0.0));
    if (s.ligament) add(s.ligament->attach_z0, s.ligament->attach_z0 + s.ligament->width);
    for (const auto& p : s.resonator) add(p[0], s.z_min);
    if (!std::isfinite(lo)) return std::nullopt;
    return std::array<double, 2>{lo, hi};
  }
};

/// 8 / sqrt(lambda_J - lambda): the distance over which the slowest evanescent mode decays by e^-8.
inline double evanescent_margin(double lambda) {
  const int J = propagating_count(lambda);
  return 8.0 / std::sqrt(std::pow(J * pi, 2) - lambda);
}

inline double quarter_wavelength(double lambda) { return pi / std::sqrt(lambda); }

inline Geometry build_waveguide(const GeometrySpec& spec_in) {
  const auto cfg = ErrorKind::config;
  GeometrySpec spec = spec_in;
  require(spec.strip_height == 1.0, cfg, "only unit strip height is supported");
  if (spec.kind != DomainKind::full_guide) spec.left_end = EndKind::symmetry;
  require(spec.right_end != EndKind::symmetry, cfg, "the symmetry line must be the left end");
  if (spec.lambda) require(*spec.lambda > 0.0, cfg, "lambda must be positive");

  Geometry g;
  const bool half = spec.kind != DomainKind::full_guide;
  for (auto b : spec.branches) {
    if (b.quarter_wavelength) {
      require(spec.lambda.has_value(), cfg, "quarter-wavelength branch needs lambda");
      b.width = half ? 0.5 * quarter_wavelength(*spec.lambda) : quarter_wavelength(*spec.lambda);
    }
    require(b.width.has_value() && *b.width > 0.0, cfg, "branch width must be positive");
    require(b.depth > 0.0, cfg, "branch depth must be positive");
    g.branches.push_back(b);
  }
  if (spec.ligament) {
    require(spec.ligament->width > 0.0 && spec.ligament->length > 0.0, cfg, "ligament width and length must be positive");
  }

  auto extent = Geometry::feature_extent_of(spec, g.branches);
  if (!spec.truncation_z) {
    require(spec.lambda.has_value(), cfg, "truncation_z unset and no lambda to derive the default window");
    double hi = extent ? std::max((*extent)[1], spec.z_min) : spec.z_min;
    spec.truncation_z = hi + evanescent_margin(*spec.lambda);
  }
  const double z0 = spec.z_min, zT = *spec.truncation_z;
  require(zT > z0, cfg, "truncation_z must exceed z_min");
  g.z_max = zT;
  if (spec.left_end == EndKind::port) {
    require(spec.resonator.empty(), cfg, "a resonator cannot close a port end");
    if (extent) require((*extent)[0] > z0, cfg, "features reach the left truncation line");
  }

  // top-wall attachments sorted by z; each is (a, b, depth, tag)
  struct Attach {
    double a, b, depth;
    BoundaryTag tag;
  };
  std::vector<Attach> at;
  for (const auto& b : g.branches) at.push_back({b.attach_z0, b.attach_z0 + *b.width, b.depth, BoundaryTag::wall});
  if (spec.ligament)
    at.push_back({spec.ligament->attach_z0, spec.ligament->attach_z0 + spec.ligament->width, spec.ligament->length,
                  BoundaryTag::ligament});
  std::sort(at.begin(), at.end(), [](const Attach& x, const Attach& y) { return x.a < y.a; });
  for (std::size_t i = 0; i < at.size(); ++i) {
    const bool touches_left = at[i].a == z0 && spec.left_end == EndKind::symmetry;
    require(at[i].a > z0 || touches_left, cfg, "branch exits the computational window on the left");
    require(at[i].b < zT, cfg, "branch exits the truncated computational window");
    if (i > 0) require(at[i].a > at[i - 1].b, cfg, "overlapping branches");
  }

  std::optional<Slab> slab;
  if (spec.inclusion) {
    const auto& inc = *spec.inclusion;
    if (auto s = std::get_if<Slab>(&inc)) {
      require(s->z1 > z0 && s->z2 > s->z1 && s->z2 < zT, cfg, "slab must satisfy z_min < z1 < z2 < truncation_z");
      require(spec.resonator.empty() && at.empty(), cfg, "slab inclusion is only supported in a straight strip");
      slab = *s;
    } else if (auto d = std::get_if<Disk>(&inc)) {
      require(d->radius > 0.0, cfg, "disk radius must be positive");
    } else if (auto e = std::get_if<Ellipse>(&inc)) {
      require(e->semi_z > 0.0 && e->semi_y > 0.0, cfg, "ellipse semi-axes must be positive");
    } else if (auto r = std::get_if<RectangleInclusion>(&inc)) {
      require(r->width > 0.0 && r->height > 0.0, cfg, "rectangle width and height must be positive");
    }
    GeometrySpec only;
    only.inclusion = inc;
    auto ex = Geometry::feature_extent_of(only, {});
    for (const auto& a : at)
      require((*ex)[1] < a.a || (*ex)[0] > a.b, cfg, "branch overlaps inclusion");
  }

  // outer polygon, counter-clockwise from (z0, 0)
  auto& P = g.outer;
  auto& T = g.outer_tags;
  auto push = [&](Vec2 p, BoundaryTag tag_of_next_edge) {
    P.push_back(p);
    T.push_back(tag_of_next_edge);
  };
  auto end_tag = [](EndKind k, bool right) {
    switch (k) {
    case EndKind::port: return right ? BoundaryTag::truncation : BoundaryTag::truncation_left;
    case EndKind::symmetry: return BoundaryTag::symmetry_line;
    default: return BoundaryTag::wall;
    }
  };
  push(Vec2(z0, 0.0), BoundaryTag::wall);
  if (slab) {
    push(Vec2(slab->z1, 0.0), BoundaryTag::wall);
    push(Vec2(slab->z2, 0.0), BoundaryTag::wall);
  }
  push(Vec2(zT, 0.0), end_tag(spec.right_end, true));
  push(Vec2(zT, 1.0), BoundaryTag::wall);
  if (slab) {
    push(Vec2(slab->z2, 1.0), BoundaryTag::wall);
    push(Vec2(slab->z1, 1.0), BoundaryTag::wall);
  }
  bool left_closed = false;
  for (auto it = at.rbegin(); it != at.rend(); ++it) {
    const double top = 1.0 + it->depth;
    push(Vec2(it->b, 1.0), it->tag);
    push(Vec2(it->b, top), it->tag);
    if (it->a == z0) {
      require(spec.resonator.empty(), cfg, "branch cannot touch a resonator end");
      push(Vec2(z0, top), end_tag(spec.left_end, false));
      left_closed = true;
    } else {
      push(Vec2(it->a, top), it->tag);
      push(Vec2(it->a, 1.0), BoundaryTag::wall);
    }
  }
  if (!left_closed) {
    if (spec.resonator.empty()) {
      push(Vec2(z0, 1.0), end_tag(spec.left_end, false));
    } else {
      require(spec.left_end == EndKind::wall, cfg, "a resonator replaces a wall end");
      push(Vec2(z0, 1.0), BoundaryTag::wall);
      for (auto it = spec.resonator.rbegin(); it != spec.resonator.rend(); ++it) {
        require((*it)[0] < z0, cfg, "resonator vertices must lie strictly left of z_min");
        push(*it, BoundaryTag::wall);
      }
    }
  }

  // simple-polygon check
  const std::size_t n = P.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i + 1 || (i == 0 && j == n - 1)) continue;
      require(!detail::segments_intersect(P[i], P[(i + 1) % n], P[j], P[(j + 1) % n]), cfg,
              "outer boundary self-intersects");
    }
  require(g.outer_area() > 0.0, cfg, "outer boundary must be counter-clockwise with positive area");
  g.spec = spec;

  if (spec.inclusion) {
    const auto& inc = *spec.inclusion;
    if (slab) {
      Curve c1, c2;
      c1.tag = c2.tag = BoundaryTag::inclusion_interface;
      c1.a = Vec2(slab->z1, 0.0);
      c1.b = Vec2(slab->z1, 1.0);
      c2.a = Vec2(slab->z2, 0.0);
      c2.b = Vec2(slab->z2, 1.0);
      g.interface_curves = {c1, c2};
    } else {
      std::vector<Vec2> samples;
      if (auto d = std::get_if<Disk>(&inc)) {
        Curve c;
        c.kind = Curve::Kind::ellipse;
        c.tag = BoundaryTag::inclusion_interface;
        c.center = d->center;
        c.rz = c.ry = d->radius;
        g.interface_curves = {c};
      } else if (auto e = std::get_if<Ellipse>(&inc)) {
        Curve c;
        c.kind = Curve::Kind::ellipse;
        c.tag = BoundaryTag::inclusion_interface;
        c.center = e->center;
        c.rz = e->semi_z;
        c.ry = e->semi_y;
        g.interface_curves = {c};
      } else if (auto r = std::get_if<RectangleInclusion>(&inc)) {
        std::array<Vec2, 4> q{r->corner, r->corner + Vec2(r->width, 0.0), r->corner + Vec2(r->width, r->height),
                              r->corner + Vec2(0.0, r->height)};
        for (int i = 0; i < 4; ++i) {
          Curve c;
          c.tag = BoundaryTag::inclusion_interface;
          c.a = q[i];
          c.b = q[(i + 1) % 4];
          g.interface_curves.push_back(c);
        }
      }
      for (const auto& c : g.interface_curves) {
        const int m = 720;
        for (int k = 0; k < m; ++k) {
          Vec2 p = c.curved() ? c.at(2.0 * pi * k / m) : c.at(double(k) / m);
          require(g.in_polygon(p) && g.distance_to_outer(p) > 1e-12, cfg,
                  "inclusion closure must lie strictly inside the domain");
        }
      }
    }
    require(spec.dissipation.b0 > 0.0 && spec.dissipation.radial >= 0.0, cfg,
            "dissipation profile must be positive on the inclusion");
  }

  if (spec.right_end == EndKind::port) g.ports.push_back({BoundaryTag::truncation, zT, +1});
  if (spec.left_end == EndKind::port) g.ports.push_back({BoundaryTag::truncation_left, z0, -1});
  return g;
}

struct AbsorberBranchOptions {
  bool ligament = false;
  double ligament_width = 0.05;
};

/// Center of the appended branch for shift sigma and separation index kappa.
inline double absorber_branch_center(double lambda, double sigma, int kappa) {
  return 2.0 * kappa * pi / std::sqrt(lambda) + sigma;
}

/// Adds the branch of width pi/sqrt(lambda) and depth L-1 (or a ligament of length L) to spec.
inline Geometry build_absorber_domain(const GeometrySpec& spec, double sigma, int kappa, double L,
                                      const AbsorberBranchOptions& opt = {}) {
  const auto cfg = ErrorKind::config;
  require(spec.lambda.has_value(), cfg, "absorber domain needs lambda");
  require(kappa >= 0, cfg, "kappa must be nonnegative");
  const double lambda = *spec.lambda;
  const double ell = quarter_wavelength(lambda);
  const double c = absorber_branch_center(lambda, sigma, kappa);
  GeometrySpec s = spec;
  if (opt.ligament) {
    require(L > 0.0, cfg, "ligament length must be positive");
    s.ligament = Ligament{c - 0.5 * opt.ligament_width, opt.ligament_width, L};
  } else {
    require(L > 1.0, cfg, "branch height L must exceed 1");
    Branch b;
    b.attach_z0 = c - 0.5 * ell;
    b.width = ell;
    b.depth = L - 1.0;
    s.branches.push_back(b);
  }
  const double lo = opt.ligament ? c - 0.5 * opt.ligament_width : c - 0.5 * ell;
  require(lo > spec.z_min, cfg, "branch exits the truncated computational window");
  if (s.truncation_z) require(c + (c - lo) < *s.truncation_z, cfg, "branch exits the truncated computational window");
  return build_waveguide(s);
}

struct HalfGuideOptions {
  std::optional<double> truncation_z;
};

/// Half of the branch guide in mirrored coordinates: symmetry line at z=0, branch on [0, l/2], port at z_T.
inline Geometry build_half_guide(double L, double lambda, DomainKind kind, const HalfGuideOptions& opt = {}) {
  require(L > 1.0, ErrorKind::config, "half guide needs L > 1");
  require(kind != DomainKind::full_guide, ErrorKind::config, "half guide kind must be neumann or mixed");
  GeometrySpec s;
  s.kind = kind;
  s.lambda = lambda;
  s.truncation_z = opt.truncation_z;
  Branch b;
  b.attach_z0 = 0.0;
  b.quarter_wavelength = true;
  b.depth = L - 1.0;
  s.branches.push_back(b);
  return build_waveguide(s);
}

struct BranchGuideOptions {
  std::optional<double> half_window;
  bool ligament = false;
  double ligament_width = 0.05;
};

/// The two-port guide with a branch of width l centered at z = sigma (sigma = 0 is the symmetric guide).
inline Geometry build_branch_guide(double L, double lambda, double sigma, const BranchGuideOptions& opt = {}) {
  require(L > 1.0 || opt.ligament, ErrorKind::config, "branch guide needs L > 1");
  const double ell = quarter_wavelength(lambda);
  const double W = opt.half_window.value_or(0.5 * ell + std::abs(sigma) + evanescent_margin(lambda));
  GeometrySpec s;
  s.lambda = lambda;
  s.left_end = EndKind::port;
  s.right_end = EndKind::port;
  s.z_min = -W;
  s.truncation_z = W;
  if (opt.ligament) {
    s.ligament = Ligament{sigma - 0.5 * opt.ligament_width, opt.ligament_width, L};
  } else {
    Branch b;
    b.attach_z0 = sigma - 0.5 * ell;
    b.width = ell;
    b.depth = L - 1.0;
    s.branches.push_back(b);
  }
  return build_waveguide(s);
}

} // namespace wgabs
