#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "wgabs/absorber.hpp"
#include "wgabs/asymptotics.hpp"
#include "wgabs/config.hpp"

namespace wgabs {

/// Config echo and tool version written at the top of every output.
struct Provenance {
  std::string command;
  json config;

  json to_json() const { return {{"tool", "wgabs"}, {"version", version}, {"command", command}, {"config", config}}; }

  void write_comment(std::ostream& os) const {
    os << "# tool: wgabs " << version << "\n";
    os << "# command: " << command << "\n";
    os << "# config: " << config.dump() << "\n";
  }
};

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(const std::vector<std::string>& cols) { line(cols); }

  void row(const std::vector<double>& vals) {
    std::vector<std::string> s;
    for (double v : vals) s.push_back(fmt(v));
    line(s);
  }

private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << cells[i];
    os_ << "\n";
  }
  std::ostream& os_;
};

inline json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json matrix_json(const CMatrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(complex_json(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

inline CMatrix matrix_from_json(const json& j) {
  const int n = static_cast<int>(j.size());
  const int m = n ? static_cast<int>(j[0].size()) : 0;
  CMatrix out(n, m);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < m; ++c) out(r, c) = cplx(j[r][c][0].get<double>(), j[r][c][1].get<double>());
  return out;
}

inline std::vector<std::string> sweep_columns(int n) {
  std::vector<std::string> cols{"eta", "lambda"};
  for (const char* part : {"re", "im"})
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) cols.push_back(std::string(part) + "_s_" + std::to_string(j) + "_" + std::to_string(k));
  cols.push_back("energy_residual");
  cols.push_back("symmetry_defect");
  for (int j = 0; j < n; ++j) cols.push_back("l2_inclusion_" + std::to_string(j));
  return cols;
}

inline std::vector<double> sweep_row(const ScatteringResult& r) {
  std::vector<double> v{r.eta, r.lambda};
  const int n = static_cast<int>(r.S.rows());
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) v.push_back(r.S(j, k).real());
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) v.push_back(r.S(j, k).imag());
  v.push_back(r.energy_residual);
  v.push_back(r.symmetry_defect);
  for (double x : r.inclusion_l2) v.push_back(x);
  return v;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<ScatteringResult>& rs, const Provenance* p = nullptr) {
  if (p) p->write_comment(os);
  CsvWriter w(os);
  if (rs.empty()) return;
  w.header(sweep_columns(static_cast<int>(rs.front().S.rows())));
  for (const auto& r : rs) w.row(sweep_row(r));
}

inline json result_json(const ScatteringResult& r) {
  return {{"eta", r.eta},
          {"lambda", r.lambda},
          {"propagating", r.propagating},
          {"ports", r.ports},
          {"S", matrix_json(r.S)},
          {"B", matrix_json(r.B)},
          {"energy_residual", r.energy_residual},
          {"symmetry_defect", r.symmetry_defect},
          {"inclusion_l2", r.inclusion_l2},
          {"rcond", r.rcond},
          {"solver_residual", r.solver_residual},
          {"triangles", r.triangles},
          {"dofs", r.dofs},
          {"layer_unresolved", r.layer_unresolved}};
}

inline json small_model_json(const SmallEtaModel& m) {
  return {{"lambda", m.lambda}, {"S0", matrix_json(m.S0)}, {"B0", matrix_json(m.B0)}};
}

inline json large_model_json(const LargeEtaModel& m) {
  return {{"lambda", m.lambda},
          {"S_inf", matrix_json(m.S_inf)},
          {"E", matrix_json(m.E)},
          {"S_prime", matrix_json(m.first_order())},
          {"prefactor_identity_defect", prefactor_identity_defect(m)}};
}

inline void write_rate_csv(std::ostream& os, const LargeEtaStudy& st, const Provenance* p = nullptr) {
  if (p) p->write_comment(os);
  CsvWriter w(os);
  w.header({"eta", "defect0", "defect1", "interior_l2"});
  for (const auto& r : st.rows) w.row({r.eta, r.defect0, r.defect1, r.interior_l2});
}

inline void write_small_rate_csv(std::ostream& os, const SmallEtaStudy& st, const Provenance* p = nullptr) {
  if (p) p->write_comment(os);
  CsvWriter w(os);
  w.header({"eta", "defect"});
  for (const auto& r : st.rows) w.row({r.eta, r.defect});
}

inline json design_json(const AbsorberDesign& d) {
  json samples = json::array();
  for (const auto& s : d.samples) samples.push_back({{"L", s.L}, {"R", complex_json(s.R)}});
  auto num = [](double v) -> json { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"base", geometry_to_json(d.base)},
          {"eta", d.eta},
          {"lambda", d.lambda},
          {"S_eta", complex_json(d.s_eta)},
          {"alpha", d.alpha},
          {"beta", d.beta},
          {"k_offset", d.k_offset},
          {"sigma", d.sigma},
          {"kappa", d.kappa},
          {"ligament", d.branch.ligament},
          {"branch_center", d.branch_center()},
          {"separation_bound", d.separation},
          {"separation_warning", d.separation > 1e-3},
          {"best_L", num(d.best_L)},
          {"best_abs_R", num(d.best_abs)},
          {"dip_width", num(d.dip_width)},
          {"samples", samples}};
}

inline void write_design_csv(std::ostream& os, const AbsorberDesign& d, const Provenance* p = nullptr) {
  if (p) p->write_comment(os);
  CsvWriter w(os);
  w.header({"L", "re_R", "im_R", "neg_log_abs_R"});
  for (const auto& s : d.samples) w.row({s.L, s.R.real(), s.R.imag(), -std::log(std::abs(s.R))});
}

} // namespace wgabs
