#pragma once

#include <fstream>
#include <set>
#include <string>

#include "json.hpp"

#include "wgabs/scattering.hpp"

namespace wgabs {

using json = nlohmann::json;

/// Geometry plus discretisation controls, as read from a config file.
struct RunSetup {
  GeometrySpec geometry;
  MeshControls mesh;
};

namespace config_detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  require(j.is_object(), ErrorKind::config, where + " must be an object");
  for (const auto& [k, v] : j.items())
    require(allowed.count(k) > 0, ErrorKind::config, "unknown key '" + k + "' in " + where);
}

inline double number(const json& j, const std::string& key, const std::string& where) {
  require(j.contains(key), ErrorKind::config, "missing '" + key + "' in " + where);
  require(j.at(key).is_number(), ErrorKind::config, "'" + key + "' in " + where + " must be a number");
  return j.at(key).get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback, const std::string& where) {
  return j.contains(key) ? number(j, key, where) : fallback;
}

inline Vec2 point(const json& j, const std::string& where) {
  require(j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number(), ErrorKind::config,
          where + " must be a [z, y] pair");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

inline json point_json(const Vec2& p) { return json::array({p[0], p[1]}); }

inline EndKind end_kind(const std::string& s) {
  if (s == "wall") return EndKind::wall;
  if (s == "port") return EndKind::port;
  if (s == "symmetry") return EndKind::symmetry;
  fail(ErrorKind::config, "end kind must be wall, port or symmetry (got '" + s + "')");
}

inline std::string end_name(EndKind k) {
  switch (k) {
  case EndKind::wall: return "wall";
  case EndKind::port: return "port";
  case EndKind::symmetry: return "symmetry";
  }
  return "wall";
}

inline DomainKind domain_kind(const std::string& s) {
  if (s == "full_guide") return DomainKind::full_guide;
  if (s == "half_guide_neumann") return DomainKind::half_guide_neumann;
  if (s == "half_guide_mixed") return DomainKind::half_guide_mixed;
  fail(ErrorKind::config, "kind must be full_guide, half_guide_neumann or half_guide_mixed (got '" + s + "')");
}

inline std::string domain_name(DomainKind k) {
  switch (k) {
  case DomainKind::full_guide: return "full_guide";
  case DomainKind::half_guide_neumann: return "half_guide_neumann";
  case DomainKind::half_guide_mixed: return "half_guide_mixed";
  }
  return "full_guide";
}

inline InclusionShape inclusion(const json& j) {
  const std::string w = "inclusion";
  require(j.is_object() && j.contains("shape") && j["shape"].is_string(), ErrorKind::config,
          "inclusion needs a 'shape' string");
  const auto shape = j["shape"].get<std::string>();
  if (shape == "disk") {
    check_keys(j, {"shape", "center", "radius"}, w);
    Disk d;
    if (j.contains("center")) d.center = point(j["center"], "inclusion.center");
    d.radius = number_or(j, "radius", d.radius, w);
    require(d.radius > 0, ErrorKind::config, "disk radius must be positive");
    return d;
  }
  if (shape == "ellipse") {
    check_keys(j, {"shape", "center", "semi_z", "semi_y"}, w);
    Ellipse e;
    if (j.contains("center")) e.center = point(j["center"], "inclusion.center");
    e.semi_z = number_or(j, "semi_z", e.semi_z, w);
    e.semi_y = number_or(j, "semi_y", e.semi_y, w);
    require(e.semi_z > 0 && e.semi_y > 0, ErrorKind::config, "ellipse semi-axes must be positive");
    return e;
  }
  if (shape == "rectangle") {
    check_keys(j, {"shape", "corner", "width", "height"}, w);
    RectangleInclusion r;
    if (j.contains("corner")) r.corner = point(j["corner"], "inclusion.corner");
    r.width = number_or(j, "width", r.width, w);
    r.height = number_or(j, "height", r.height, w);
    require(r.width > 0 && r.height > 0, ErrorKind::config, "rectangle sides must be positive");
    return r;
  }
  if (shape == "slab") {
    check_keys(j, {"shape", "z1", "z2"}, w);
    Slab s;
    s.z1 = number_or(j, "z1", s.z1, w);
    s.z2 = number_or(j, "z2", s.z2, w);
    require(s.z2 > s.z1, ErrorKind::config, "slab needs z1 < z2");
    return s;
  }
  fail(ErrorKind::config, "inclusion shape must be disk, ellipse, rectangle or slab (got '" + shape + "')");
}

inline json inclusion_json(const InclusionShape& s) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Disk>)
          return {{"shape", "disk"}, {"center", point_json(x.center)}, {"radius", x.radius}};
        else if constexpr (std::is_same_v<T, Ellipse>)
          return {{"shape", "ellipse"}, {"center", point_json(x.center)}, {"semi_z", x.semi_z}, {"semi_y", x.semi_y}};
        else if constexpr (std::is_same_v<T, RectangleInclusion>)
          return {{"shape", "rectangle"}, {"corner", point_json(x.corner)}, {"width", x.width}, {"height", x.height}};
        else
          return {{"shape", "slab"}, {"z1", x.z1}, {"z2", x.z2}};
      },
      s);
}

} // namespace config_detail

inline GeometrySpec geometry_from_json(const json& j) {
  using namespace config_detail;
  const std::string w = "geometry config";
  check_keys(j, {"lambda", "lambda_over_pi", "strip_height", "z_min", "truncation_z", "left_end", "right_end", "kind",
                 "resonator", "inclusion", "dissipation", "branches", "ligament", "mesh"},
             w);
  GeometrySpec s;
  require(!(j.contains("lambda") && j.contains("lambda_over_pi")), ErrorKind::config,
          "give either lambda or lambda_over_pi, not both");
  if (j.contains("lambda")) s.lambda = number(j, "lambda", w);
  if (j.contains("lambda_over_pi")) s.lambda = std::pow(number(j, "lambda_over_pi", w) * pi, 2);
  s.strip_height = number_or(j, "strip_height", 1.0, w);
  s.z_min = number_or(j, "z_min", 0.0, w);
  if (j.contains("truncation_z")) s.truncation_z = number(j, "truncation_z", w);
  if (j.contains("left_end")) s.left_end = end_kind(j["left_end"].get<std::string>());
  if (j.contains("right_end")) s.right_end = end_kind(j["right_end"].get<std::string>());
  if (j.contains("kind")) s.kind = domain_kind(j["kind"].get<std::string>());
  if (j.contains("resonator")) {
    require(j["resonator"].is_array(), ErrorKind::config, "resonator must be an array of [z, y] points");
    for (const auto& p : j["resonator"]) s.resonator.push_back(point(p, "resonator vertex"));
  }
  if (j.contains("inclusion") && !j["inclusion"].is_null()) s.inclusion = inclusion(j["inclusion"]);
  if (j.contains("dissipation")) {
    const auto& d = j["dissipation"];
    check_keys(d, {"b0", "radial"}, "dissipation");
    s.dissipation.b0 = number_or(d, "b0", 1.0, "dissipation");
    s.dissipation.radial = number_or(d, "radial", 0.0, "dissipation");
    require(s.dissipation.b0 > 0, ErrorKind::config, "dissipation.b0 must be positive");
  }
  if (j.contains("branches")) {
    require(j["branches"].is_array(), ErrorKind::config, "branches must be an array");
    for (const auto& b : j["branches"]) {
      check_keys(b, {"attach_z0", "width", "depth", "quarter_wavelength"}, "branch");
      Branch br;
      br.attach_z0 = number(b, "attach_z0", "branch");
      if (b.contains("width")) br.width = number(b, "width", "branch");
      br.depth = number(b, "depth", "branch");
      if (b.contains("quarter_wavelength")) br.quarter_wavelength = b["quarter_wavelength"].get<bool>();
      s.branches.push_back(br);
    }
  }
  if (j.contains("ligament")) {
    const auto& l = j["ligament"];
    check_keys(l, {"attach_z0", "width", "length"}, "ligament");
    s.ligament = Ligament{number(l, "attach_z0", "ligament"), number_or(l, "width", 0.05, "ligament"),
                          number(l, "length", "ligament")};
  }
  return s;
}

inline json geometry_to_json(const GeometrySpec& s) {
  using namespace config_detail;
  json j;
  if (s.lambda) j["lambda"] = *s.lambda;
  j["strip_height"] = s.strip_height;
  j["z_min"] = s.z_min;
  if (s.truncation_z) j["truncation_z"] = *s.truncation_z;
  j["left_end"] = end_name(s.left_end);
  j["right_end"] = end_name(s.right_end);
  j["kind"] = domain_name(s.kind);
  if (!s.resonator.empty()) {
    j["resonator"] = json::array();
    for (const auto& p : s.resonator) j["resonator"].push_back(point_json(p));
  }
  if (s.inclusion) j["inclusion"] = inclusion_json(*s.inclusion);
  j["dissipation"] = {{"b0", s.dissipation.b0}, {"radial", s.dissipation.radial}};
  if (!s.branches.empty()) {
    j["branches"] = json::array();
    for (const auto& b : s.branches) {
      json x = {{"attach_z0", b.attach_z0}, {"depth", b.depth}, {"quarter_wavelength", b.quarter_wavelength}};
      if (b.width) x["width"] = *b.width;
      j["branches"].push_back(x);
    }
  }
  if (s.ligament) j["ligament"] = {{"attach_z0", s.ligament->attach_z0}, {"width", s.ligament->width}, {"length", s.ligament->length}};
  return j;
}

inline MeshControls mesh_controls_from_json(const json& j, MeshControls c = {}) {
  using namespace config_detail;
  const std::string w = "mesh";
  check_keys(j, {"h", "grade", "layers_per_skin", "growth_inside", "growth_outside", "min_h", "dtn_terms"}, w);
  c.h = number_or(j, "h", c.h, w);
  if (j.contains("grade")) c.grade = j["grade"].get<bool>();
  c.grading.layers_per_skin = static_cast<int>(number_or(j, "layers_per_skin", c.grading.layers_per_skin, w));
  c.grading.growth_inside = number_or(j, "growth_inside", c.grading.growth_inside, w);
  c.grading.growth_outside = number_or(j, "growth_outside", c.grading.growth_outside, w);
  c.min_h = number_or(j, "min_h", c.min_h, w);
  c.n_terms = static_cast<int>(number_or(j, "dtn_terms", c.n_terms, w));
  require(c.h > 0, ErrorKind::config, "mesh.h must be positive");
  require(c.grading.layers_per_skin >= 1, ErrorKind::config, "mesh.layers_per_skin must be at least 1");
  require(c.n_terms >= 1, ErrorKind::config, "mesh.dtn_terms must be at least 1");
  return c;
}

inline json mesh_controls_to_json(const MeshControls& c) {
  return {{"h", c.h},
          {"grade", c.grade},
          {"layers_per_skin", c.grading.layers_per_skin},
          {"growth_inside", c.grading.growth_inside},
          {"growth_outside", c.grading.growth_outside},
          {"min_h", c.min_h},
          {"dtn_terms", c.n_terms}};
}

inline RunSetup setup_from_json(const json& j) {
  RunSetup r;
  r.geometry = geometry_from_json(j);
  if (j.contains("mesh")) r.mesh = mesh_controls_from_json(j["mesh"]);
  return r;
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text, nullptr, true, true);
  } catch (const json::exception& e) {
    fail(ErrorKind::config, origin + ": " + e.what());
  }
}

inline RunSetup load_setup(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorKind::config, "cannot open config file " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  try {
    return setup_from_json(parse_json_text(text, path));
  } catch (const json::exception& e) {
    fail(ErrorKind::config, path + ": " + e.what());
  }
}

} // namespace wgabs
