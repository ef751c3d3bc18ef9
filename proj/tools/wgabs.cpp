#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"

#include "wgabs/io.hpp"
#include "wgabs/oracle1d.hpp"

using namespace wgabs;

namespace {

struct Common {
  std::string config;
  std::optional<double> lambda;
  std::optional<double> lambda_over_pi;
  std::optional<double> h;
  std::optional<int> dtn_terms;
  bool no_grade = false;
  int workers = 1;
  std::string out;
};

void add_common(CLI::App* app, Common& c, bool geometry = true) {
  if (geometry) {
    app->add_option("--config", c.config, "geometry config file (JSON)")->check(CLI::ExistingFile);
    app->add_option("--mesh-h", c.h, "target mesh size")->check(CLI::PositiveNumber);
    app->add_option("--dtn-terms", c.dtn_terms, "number of DtN terms")->check(CLI::PositiveNumber);
    app->add_flag("--no-grade", c.no_grade, "disable interface grading");
    app->add_option("--workers", c.workers, "parallel workers")->check(CLI::PositiveNumber);
  }
  auto* l = app->add_option("--lambda", c.lambda, "spectral parameter lambda");
  app->add_option("--lambda-over-pi", c.lambda_over_pi, "lambda = (x pi)^2")->excludes(l);
  app->add_option("--out", c.out, "output path (stdout when omitted)");
}

double resolve_lambda(const Common& c, const std::optional<double>& from_config) {
  if (c.lambda) return *c.lambda;
  if (c.lambda_over_pi) return std::pow(*c.lambda_over_pi * pi, 2);
  require(from_config.has_value(), ErrorKind::config, "lambda not given (use --lambda, --lambda-over-pi or the config)");
  return *from_config;
}

struct Loaded {
  RunSetup setup;
  double lambda = 0.0;
  json echo;
  std::shared_ptr<const Geometry> geometry;
};

Loaded load(const Common& c) {
  Loaded l;
  if (!c.config.empty()) l.setup = load_setup(c.config);
  l.lambda = resolve_lambda(c, l.setup.geometry.lambda);
  l.setup.geometry.lambda = l.lambda;
  if (c.h) l.setup.mesh.h = *c.h;
  if (c.dtn_terms) l.setup.mesh.n_terms = *c.dtn_terms;
  if (c.no_grade) l.setup.mesh.grade = false;
  l.echo = geometry_to_json(l.setup.geometry);
  l.echo["mesh"] = mesh_controls_to_json(l.setup.mesh);
  l.geometry = std::make_shared<const Geometry>(build_waveguide(l.setup.geometry));
  return l;
}

class Output {
public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      require(static_cast<bool>(file_), ErrorKind::config, "cannot open output " + path);
    }
  }
  std::ostream& os() { return file_.is_open() ? file_ : std::cout; }

private:
  std::ofstream file_;
};

std::vector<double> eta_grid(const std::vector<double>& list, double lo, double hi, int n) {
  std::vector<double> g = list.empty() ? logspace(lo, hi, n) : list;
  for (std::size_t i = 0; i < g.size(); ++i) {
    require(g[i] >= 0.0, ErrorKind::config, "eta values must be nonnegative");
    if (i) require(g[i] > g[i - 1], ErrorKind::config, "eta values must be strictly increasing");
  }
  return g;
}

std::string command_line(int argc, char** argv) {
  std::ostringstream s;
  for (int i = 0; i < argc; ++i) s << (i ? " " : "") << argv[i];
  return s.str();
}

void check_energy(const ScatteringResult& r, double tol) {
  require(r.energy_residual <= tol, ErrorKind::validation,
          "energy residual " + fmt(r.energy_residual) + " exceeds " + fmt(tol) + " at eta = " + fmt(r.eta));
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Waveguide scattering with a dissipative inclusion: solver, asymptotics and absorber design"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("wgabs ") + version);
  const std::string cmdline = command_line(argc, argv);

  Common modes_c;
  auto* modes = app.add_subcommand("modes", "transverse eigenpairs and wavenumbers");
  add_common(modes, modes_c, false);
  int modes_terms = 15;
  modes->add_option("--dtn-terms", modes_terms, "number of modes")->check(CLI::PositiveNumber);

  Common solve_c;
  double solve_eta = 0.0, energy_tol = 1e-3;
  std::string field_prefix;
  auto* solve_cmd = app.add_subcommand("solve", "scattering solve with mesh and field dumps");
  add_common(solve_cmd, solve_c);
  solve_cmd->add_option("--eta", solve_eta, "dissipation parameter")->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--field-prefix", field_prefix, "write <prefix>.mesh and <prefix>_<j>.field");
  solve_cmd->add_option("--energy-tol", energy_tol, "energy-identity tolerance (exit 4 beyond)");

  Common sm_c;
  double sm_eta = 0.0;
  auto* smatrix = app.add_subcommand("smatrix", "scattering matrix as JSON");
  add_common(smatrix, sm_c);
  smatrix->add_option("--eta", sm_eta, "dissipation parameter")->check(CLI::NonNegativeNumber);
  smatrix->add_option("--energy-tol", energy_tol, "energy-identity tolerance (exit 4 beyond)");

  Common sw_c;
  std::vector<double> sw_list;
  double sw_lo = 1e-2, sw_hi = 1e2;
  int sw_n = 9;
  auto* sweep = app.add_subcommand("sweep", "scattering matrices over an eta grid as CSV");
  add_common(sweep, sw_c);
  sweep->add_option("--etas", sw_list, "explicit eta list (increasing)");
  sweep->add_option("--eta-min", sw_lo)->check(CLI::PositiveNumber);
  sweep->add_option("--eta-max", sw_hi)->check(CLI::PositiveNumber);
  sweep->add_option("--eta-points", sw_n)->check(CLI::PositiveNumber);
  sweep->add_option("--energy-tol", energy_tol, "energy-identity tolerance (exit 4 beyond)");

  Common as_c;
  double as_lo = 1e-3, as_hi = 1e-1;
  int as_n = 5;
  std::string as_json;
  auto* asym_small = app.add_subcommand("asym-small", "small-eta model and rate table");
  add_common(asym_small, as_c);
  asym_small->add_option("--eta-min", as_lo)->check(CLI::PositiveNumber);
  asym_small->add_option("--eta-max", as_hi)->check(CLI::PositiveNumber);
  asym_small->add_option("--eta-points", as_n)->check(CLI::Range(2, 1000));
  asym_small->add_option("--json", as_json, "model dump and slope");

  Common al_c;
  double al_lo = 1e3, al_hi = 1e6;
  int al_n = 5;
  std::string al_json;
  auto* asym_large = app.add_subcommand("asym-large", "large-eta model and rate table");
  add_common(asym_large, al_c);
  asym_large->add_option("--eta-min", al_lo)->check(CLI::PositiveNumber);
  asym_large->add_option("--eta-max", al_hi)->check(CLI::PositiveNumber);
  asym_large->add_option("--eta-points", al_n)->check(CLI::Range(2, 1000));
  asym_large->add_option("--json", al_json, "model dump (reference mesh) and slopes");

  Common or_c;
  oracle1d::SlabSpec slab;
  int or_samples = 61;
  auto* oracle = app.add_subcommand("oracle", "closed-form one-dimensional oracles");
  oracle->require_subcommand(1);
  auto* oracle_slab = oracle->add_subcommand("slab", "full-width slab reflection and field");
  add_common(oracle_slab, or_c, false);
  oracle_slab->add_option("--eta", slab.eta)->check(CLI::NonNegativeNumber);
  oracle_slab->add_option("--z1", slab.z1);
  oracle_slab->add_option("--z2", slab.z2);
  oracle_slab->add_option("--b0", slab.b0)->check(CLI::PositiveNumber);
  oracle_slab->add_option("--truncation-z", slab.truncation_z);
  oracle_slab->add_option("--samples", or_samples)->check(CLI::Range(2, 1000000));

  Common hg_c;
  std::vector<double> hg_L{1.5, 2.3, 3.7};
  bool hg_full = false;
  auto* halfguide = app.add_subcommand("halfguide", "half-guide coefficients r, R and the branch-guide reconstruction");
  add_common(halfguide, hg_c);
  halfguide->add_option("--L", hg_L, "branch heights (L > 1)");
  halfguide->add_flag("--check-full", hg_full, "also solve the full two-port guide");

  Common ab_c;
  double ab_eta = 10.0;
  std::optional<int> ab_kappa;
  int ab_k = 0, ab_points = 121, ab_lig_m = 0;
  std::optional<double> ab_Lmin, ab_Lmax;
  bool ab_ligament = false;
  double ab_lig_width = 0.05;
  std::string ab_csv;
  auto* absorber = app.add_subcommand("absorber", "perfect-absorber synthesis");
  absorber->require_subcommand(1);
  auto* design = absorber->add_subcommand("design", "sigma, kappa and the L sweep");
  add_common(design, ab_c);
  design->add_option("--eta", ab_eta)->check(CLI::PositiveNumber);
  design->add_option("--kappa", ab_kappa)->check(CLI::NonNegativeNumber);
  design->add_option("--k-offset", ab_k)->check(CLI::NonNegativeNumber);
  design->add_option("--L-min", ab_Lmin);
  design->add_option("--L-max", ab_Lmax);
  design->add_option("--L-points", ab_points)->check(CLI::Range(1, 100000));
  design->add_flag("--ligament", ab_ligament, "thin ligament instead of the quarter-wavelength branch");
  design->add_option("--ligament-width", ab_lig_width)->check(CLI::PositiveNumber);
  design->add_option("--ligament-mode", ab_lig_m, "resonance index m of the ligament grid")->check(CLI::NonNegativeNumber);
  design->add_option("--csv", ab_csv, "CSV of (L, re R, im R, -ln|R|)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::config);
  }

  try {
    if (*modes) {
      const double lambda = resolve_lambda(modes_c, {});
      auto b = compute_mode_basis(lambda, modes_terms);
      Output o(modes_c.out);
      Provenance p{cmdline, {{"lambda", lambda}, {"dtn_terms", modes_terms}}};
      p.write_comment(o.os());
      o.os() << "# J = " << b.propagating << "\n";
      CsvWriter w(o.os());
      w.header({"j", "lambda_j", "alpha_j", "decay_rate", "propagating"});
      for (int j = 0; j < b.n_terms; ++j) {
        const bool prop = j < b.propagating;
        w.row({double(j), b.eigenvalue(j), prop ? b.wavenumber(j) : 0.0, b.decay_rates[j], prop ? 1.0 : 0.0});
      }
    } else if (*solve_cmd) {
      auto l = load(solve_c);
      auto r = scattering_matrix(l.geometry, solve_eta, l.lambda, l.setup.mesh, true);
      Output o(solve_c.out);
      json j = result_json(r);
      j["provenance"] = Provenance{cmdline, l.echo}.to_json();
      o.os() << j.dump(2) << "\n";
      if (!field_prefix.empty()) {
        write_mesh_file(field_prefix + ".mesh", r.fields.at(0).mesh());
        for (std::size_t k = 0; k < r.fields.size(); ++k) {
          std::ofstream f(field_prefix + "_" + std::to_string(k) + ".field");
          require(static_cast<bool>(f), ErrorKind::config, "cannot write field dump");
          write_field(f, r.fields[k]);
        }
      }
      check_energy(r, energy_tol);
    } else if (*smatrix) {
      auto l = load(sm_c);
      auto r = scattering_matrix(l.geometry, sm_eta, l.lambda, l.setup.mesh, false);
      Output o(sm_c.out);
      json j = result_json(r);
      j["provenance"] = Provenance{cmdline, l.echo}.to_json();
      o.os() << j.dump(2) << "\n";
      check_energy(r, energy_tol);
    } else if (*sweep) {
      auto l = load(sw_c);
      auto grid = eta_grid(sw_list, sw_lo, sw_hi, sw_n);
      auto rs = eta_sweep(l.geometry, l.lambda, grid, l.setup.mesh, sw_c.workers);
      Output o(sw_c.out);
      Provenance p{cmdline, l.echo};
      write_sweep_csv(o.os(), rs, &p);
      for (const auto& r : rs) check_energy(r, energy_tol);
    } else if (*asym_small) {
      auto l = load(as_c);
      auto st = small_eta_study(l.geometry, l.lambda, eta_grid({}, as_lo, as_hi, as_n), l.setup.mesh, as_c.workers);
      Output o(as_c.out);
      Provenance p{cmdline, l.echo};
      write_small_rate_csv(o.os(), st, &p);
      if (!as_json.empty()) {
        std::ofstream f(as_json);
        json j = small_model_json(st.model);
        j["slope"] = st.fit.slope;
        j["provenance"] = p.to_json();
        f << j.dump(2) << "\n";
      }
    } else if (*asym_large) {
      auto l = load(al_c);
      auto st = large_eta_study(l.geometry, l.lambda, eta_grid({}, al_lo, al_hi, al_n), l.setup.mesh, al_c.workers);
      Output o(al_c.out);
      Provenance p{cmdline, l.echo};
      write_rate_csv(o.os(), st, &p);
      double identity = 0.0;
      for (const auto& r : st.rows) identity = std::max(identity, r.identity_defect);
      if (!al_json.empty()) {
        std::ofstream f(al_json);
        json j = large_model_json(large_eta_model(l.geometry, l.lambda, l.setup.mesh));
        j["slope_first_order"] = st.first_order.slope;
        j["slope_two_term"] = st.two_term.slope;
        j["slope_interior"] = st.interior.slope;
        j["provenance"] = p.to_json();
        f << j.dump(2) << "\n";
      }
      require(identity <= 1e-10, ErrorKind::validation, "prefactor identity defect " + fmt(identity) + " exceeds 1e-10");
    } else if (*oracle_slab) {
      slab.lambda = resolve_lambda(or_c, slab.lambda);
      auto sol = oracle1d::solve_slab(slab);
      Output o(or_c.out);
      Provenance p{cmdline,
                   {{"lambda", slab.lambda}, {"eta", slab.eta}, {"z1", slab.z1}, {"z2", slab.z2}, {"b0", slab.b0},
                    {"truncation_z", slab.truncation_z}}};
      p.write_comment(o.os());
      o.os() << "# R: " << fmt(sol.R.real()) << "," << fmt(sol.R.imag()) << "\n";
      CsvWriter w(o.os());
      w.header({"z", "re_u", "im_u"});
      for (int i = 0; i < or_samples; ++i) {
        const double z = slab.truncation_z * i / (or_samples - 1);
        const cplx u = oracle1d::slab_field(sol, z);
        w.row({z, u.real(), u.imag()});
      }
    } else if (*halfguide) {
      Common c = hg_c;
      const double lambda = resolve_lambda(c, {});
      MeshControls mc;
      if (c.h) mc.h = *c.h;
      if (c.dtn_terms) mc.n_terms = *c.dtn_terms;
      Output o(c.out);
      Provenance p{cmdline, {{"lambda", lambda}, {"L", hg_L}, {"mesh", mesh_controls_to_json(mc)}}};
      p.write_comment(o.os());
      CsvWriter w(o.os());
      std::vector<std::string> cols{"L", "re_r", "im_r", "re_R", "im_R", "re_refl", "im_refl", "re_trans", "im_trans"};
      if (hg_full)
        for (const char* s : {"re_refl_full", "im_refl_full", "re_trans_full", "im_trans_full"}) cols.push_back(s);
      w.header(cols);
      double worst = 0.0;
      for (double L : hg_L) {
        auto h = half_guide_coefficients(L, lambda, mc);
        worst = std::max({worst, std::abs(std::abs(h.r) - 1.0), std::abs(std::abs(h.R) - 1.0)});
        std::vector<double> row{L, h.r.real(), h.r.imag(), h.R.real(), h.R.imag(), h.reflection.real(),
                                h.reflection.imag(), h.transmission.real(), h.transmission.imag()};
        if (hg_full) {
          auto f = branch_guide_coefficients(L, lambda, 0.0, mc);
          for (double v : {f.reflection.real(), f.reflection.imag(), f.transmission.real(), f.transmission.imag()})
            row.push_back(v);
        }
        w.row(row);
      }
      require(worst <= 1e-3, ErrorKind::validation, "half-guide coefficients off the unit circle by " + fmt(worst));
    } else if (*design) {
      auto l = load(ab_c);
      AbsorberBranchOptions opt;
      opt.ligament = ab_ligament;
      opt.ligament_width = ab_lig_width;
      GeometrySpec base = l.setup.geometry;
      auto d = design_absorber(base, ab_eta, l.setup.mesh, ab_k, ab_kappa, opt);
      std::vector<double> grid;
      if (ab_Lmin || ab_Lmax) {
        const double lo = ab_Lmin.value_or(ab_ligament ? 0.1 : 1.05);
        const double hi = ab_Lmax.value_or(lo + 2 * pi / std::sqrt(l.lambda));
        require(hi > lo, ErrorKind::config, "--L-max must exceed --L-min");
        for (int i = 0; i < ab_points; ++i) grid.push_back(lo + (hi - lo) * i / std::max(1, ab_points - 1));
      } else {
        grid = ab_ligament ? ligament_L_grid(l.lambda, ab_lig_m, ab_points) : default_L_grid(l.lambda);
      }
      d = l_sweep(d, grid, l.setup.mesh, ab_c.workers);
      Provenance p{cmdline, l.echo};
      Output o(ab_c.out);
      json j = design_json(d);
      j["provenance"] = p.to_json();
      o.os() << j.dump(2) << "\n";
      if (!ab_csv.empty()) {
        std::ofstream f(ab_csv);
        require(static_cast<bool>(f), ErrorKind::config, "cannot write " + ab_csv);
        write_design_csv(f, d, &p);
      }
      if (separation_warning(d))
        std::cerr << "warning: separation bound " << fmt(d.separation) << " exceeds 1e-3; increase --kappa\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::solver);
  }
  return 0;
}
