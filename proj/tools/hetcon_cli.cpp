// hetcon: run directory front end for the connection solvers.
//
//   hetcon connect        --config C --out DIR [--seed N] [--threads N] [--verbose]
//   hetcon double         --config C --out DIR --mode sym|asym [...]
//   hetcon counterexample --config C --out DIR [...]
//   hetcon verify DIR
//
// Exit codes: 0 ok, 1 run failed, 2 solver stall, 3 config error,
// 4 corrupted artifact or manifest, 5 audit over tolerance.

#include <boost/version.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hetcon/hetcon.hpp"

namespace fs = std::filesystem;
using namespace hetcon;

namespace {

enum Exit : int { kOk = 0, kFailed = 1, kStall = 2, kConfig = 3, kArtifact = 4, kAudit = 5 };

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 1;
  int threads = 1;
  bool verbose = false;
  std::string mode = "sym";
};

bool g_verbose = false;

void log(const std::string& msg) {
  if (g_verbose) std::cerr << "[hetcon] " << msg << '\n';
}

// JSON has no infinity.
json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

json vec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  config::check_schema(cfg);
  return cfg;
}

/// Run directory with a manifest that lists every artifact with its CRC-32.
class Run {
 public:
  Run(const Common& c, const std::string& command, const json& cfg) : dir_(c.out) {
    if (c.out.empty()) throw ConfigError("missing required flag '--out'");
    fs::create_directories(dir_);
    m_["schema_version"] = kSchemaVersion;
    m_["command"] = command;
    m_["tool"] = {{"name", "hetcon"}, {"version", HETCON_VERSION}};
    m_["libraries"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                     std::to_string(EIGEN_MINOR_VERSION)},
                       {"boost", BOOST_LIB_VERSION}};
    m_["seed"] = c.seed;
    m_["threads"] = c.threads;
    m_["config"] = cfg;
    m_["warnings"] = json::array();
    m_["files"] = json::object();
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  json& operator[](const char* key) { return m_[key]; }

  void warn(const std::string& w) {
    log("warning: " + w);
    m_["warnings"].push_back(w);
  }

  void csv(const std::string& name, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
    write_csv(path(name), header, rows);
    add(name);
  }

  template <class Writer>
  void text(const std::string& name, Writer&& w) {
    {
      std::ofstream out(path(name), std::ios::binary);
      if (!out) throw Error("cannot write " + path(name));
      w(out);
    }
    add(name);
  }

  int finish(const std::string& status, int code) {
    m_["status"] = status;
    m_["exit_code"] = code;
    std::ofstream out(path("manifest.json"), std::ios::binary);
    out << m_.dump(2) << '\n';
    log("wrote " + path("manifest.json") + " (" + status + ")");
    return code;
  }

 private:
  void add(const std::string& name) {
    m_["files"][name] = {{"crc32", file_crc32(path(name))}, {"bytes", fs::file_size(path(name))}};
    log("wrote " + path(name));
  }

  fs::path dir_;
  json m_;
};

// ---------------------------------------------------------------- connect

struct ConnectTolerances {
  double equipartition = 1e-3;
  double action_gap = 1e-3;
  double sti_relative = 1e-3;
  double stall_gradient = 1e-4;
};

ConnectTolerances connect_tolerances(const json& cfg) {
  ConnectTolerances t;
  const json j = cfg.value("tolerances", json::object());
  t.equipartition = config::get_or(j, "equipartition", t.equipartition, "tolerances.");
  t.action_gap = config::get_or(j, "action_gap", t.action_gap, "tolerances.");
  t.sti_relative = config::get_or(j, "sti_relative", t.sti_relative, "tolerances.");
  t.stall_gradient = config::get_or(j, "stall_gradient", t.stall_gradient, "tolerances.");
  return t;
}

std::vector<std::string> curve_header(Index dim) {
  std::vector<std::string> h{"t"};
  for (Index i = 0; i < dim; ++i) h.push_back("x" + std::to_string(i));
  return h;
}

int cmd_connect(const Common& c) {
  const json cfg = load_config(c.config);
  const Potential p = config::potential(cfg);
  const auto wells = config::points(config::require(cfg, "wells", ""), "wells");
  if (wells.size() != 2) throw ConfigError("field 'wells' must hold exactly two points");
  for (const auto& a : wells) {
    if (a.size() != p.dim) throw ConfigError("field 'wells' has points of the wrong dimension");
    if (std::abs(p.eval(a)) > 1e-8) throw ConfigError("field 'wells' holds a point where W does not vanish");
  }
  const GeodesicOptions go = config::geodesic(cfg);
  const EquipartitionOptions eo = config::equipartition(cfg);
  const ConnectTolerances tol = connect_tolerances(cfg);

  Run run(c, "connect", cfg);
  run["tolerances"] = {{"equipartition", tol.equipartition},
                       {"action_gap", tol.action_gap},
                       {"sti_relative", tol.sti_relative},
                       {"stall_gradient", tol.stall_gradient},
                       {"solver_tol", go.tol},
                       {"k_floor", go.k_floor},
                       {"floor_fraction", eo.floor_fraction},
                       {"well_check", 1e-8}};
  run["constants"] = {{"nodes", go.nodes},         {"max_iter", go.max_iter},
                      {"memory", go.memory},       {"max_rounds", go.max_rounds},
                      {"coarse_nodes", go.coarse_nodes}, {"rule", go.rule == Quadrature::simpson ? "simpson" : "midpoint"},
                      {"t_max", num(eo.t_max)},    {"t_required", eo.t_required},
                      {"output_nodes", eo.output_nodes}, {"lambda", p.lambda}};

  const WeightedSpace ws = make_weight(p);
  if (p.wells.size() > 2) {
    log("strict triangle inequality audit");
    const auto sti = check_sti(ws, wells[0], wells[1], go, tol.sti_relative);
    json entries = json::array();
    for (const auto& e : sti.entries) {
      entries.push_back({{"well", point_json(e.well)}, {"d_left", e.d_left}, {"d_right", e.d_right},
                         {"d_direct", e.d_direct}, {"margin", e.margin}, {"pass", e.pass}});
      if (!e.pass) {
        std::ostringstream w;
        w << "STI fails at well " << point_json(e.well).dump() << ": margin " << e.margin << " <= " << sti.tolerance
          << "; the geodesic can pass through this well";
        run.warn(w.str());
      }
    }
    run["sti"] = {{"pass", sti.pass}, {"vacuous", sti.vacuous}, {"tolerance", sti.tolerance}, {"entries", entries},
                  {"note", sti.note}};
  }

  log("minimizing K-length");
  const auto g = minimize_k_length(ws, wells[0], wells[1], go);
  run["results"] = {{"k_length", g.value},
                    {"geodesic_status", to_string(g.status)},
                    {"iterations", g.iterations},
                    {"gradient_norm", g.gradient_norm}};
  // Loss of progress at rounding level is fine; a large residual gradient is not.
  if (g.status != SolverStatus::converged) {
    run.warn(std::string("geodesic solver ") + to_string(g.status) + " at gradient " + std::to_string(g.gradient_norm));
    if (g.status == SolverStatus::iteration_cap || g.gradient_norm > tol.stall_gradient)
      return run.finish("stalled", kStall);
  }

  std::optional<ConnectionResult> solved;
  try {
    solved = reparam_equipartition(g.curve, ws, eo);
  } catch (const InvalidArgument& e) {
    run.warn(std::string("no connection: ") + e.what());
    return run.finish("failed", kFailed);
  }
  const ConnectionResult& conn = *solved;
  const auto rep = verify_connection(conn, p);

  // Cumulative action in the last column; the final row carries the total.
  std::vector<std::vector<double>> rows, eq_rows;
  const auto& cv = conn.curve;
  double acc = 0.0;
  for (std::size_t i = 0; i < cv.size(); ++i) {
    if (i > 0) {
      const double dt = cv.time(i) - cv.time(i - 1);
      const Point d = cv.node(i) - cv.node(i - 1);
      const Point mid = 0.5 * (cv.node(i) + cv.node(i - 1));
      acc += 0.5 * d.squaredNorm() / dt + dt * p.eval(mid);
      eq_rows.push_back({0.5 * (cv.time(i) + cv.time(i - 1)), std::abs(0.5 * d.squaredNorm() / (dt * dt) - p.eval(mid))});
    }
    std::vector<double> r{cv.time(i)};
    for (Index k = 0; k < p.dim; ++k) r.push_back(cv.node(i)[k]);
    r.push_back(acc);
    rows.push_back(std::move(r));
  }
  auto header = curve_header(p.dim);
  header.push_back("action");
  run.csv("curve.csv", header, rows);
  std::vector<std::vector<double>> comp_rows;
  for (auto r : rows) {
    r.pop_back();
    comp_rows.push_back(std::move(r));
  }
  run.csv("plot_components.csv", curve_header(p.dim), comp_rows);
  run.csv("plot_equipartition.csv", {"t", "defect"}, eq_rows);

  log("regularity audits");
  const auto sd = second_difference_bound(cv, p.lambda);
  const auto ub = uniform_bounds_audit(cv, p);
  const double T = std::min(conn.window, 30.0);
  const auto z = GridFunction::sample(Grid::window(T, 1001), [&](double s) { return cv.evaluate(s); }, cv.front(), cv.back());
  const auto sp = spectral_audit(z, p, 20, c.seed);

  auto& res = run["results"];
  res["action"] = conn.action;
  res["geodesic_value"] = conn.geodesic_value;
  res["young_slack"] = conn.young_slack;
  res["window"] = conn.window;
  res["equipartition_defect"] = rep.equipartition_defect;
  res["action_gap"] = rep.action_gap;
  res["approach_minus"] = rep.approach_minus;
  res["approach_plus"] = rep.approach_plus;
  res["el_residual"] = rep.el_residual;
  res["clamped_minus"] = conn.clamped_minus;
  res["clamped_plus"] = conn.clamped_plus;
  run["audits"] = {
      {"second_difference", {{"lhs", sd.lhs}, {"kinetic", sd.kinetic}, {"C", sd.C}, {"fitted_C", sd.fitted_C}, {"pass", sd.pass}}},
      {"uniform_bounds",
       {{"max_speed", ub.max_speed}, {"max_W", ub.max_W}, {"max_defect", ub.max_defect}, {"flagged", ub.flagged()}}},
      {"spectral",
       {{"kernel_residual", sp.kernel_residual}, {"kernel_residual_relative", sp.kernel_residual_relative},
        {"c0_est", sp.c0_est}, {"trials", sp.trials}, {"window", T}}}};

  bool ok = true;
  if (rep.equipartition_defect > tol.equipartition) {
    run.warn("equipartition defect " + std::to_string(rep.equipartition_defect) + " exceeds tolerance");
    ok = false;
  }
  if (std::abs(rep.action_gap) > tol.action_gap) {
    run.warn("action differs from the K-length by " + std::to_string(rep.action_gap));
    ok = false;
  }
  if (!sd.pass) run.warn("second-difference bound fails");
  if (ub.flagged()) run.warn("uniform bounds audit flagged spikes or edge growth");
  std::cout << "action " << conn.action << "  k_length " << g.value << "  defect " << rep.equipartition_defect << '\n';
  return run.finish(ok ? "ok" : "ok_with_warnings", kOk);
}

// ----------------------------------------------------------------- double

SymmetryMode parse_symmetry(const std::string& s) {
  if (s == "none") return SymmetryMode::none;
  if (s == "odd") return SymmetryMode::odd_first_component;
  throw ConfigError("field 'double.symmetry' must be 'none' or 'odd'");
}

QuotientMode parse_quotient(const std::string& s) {
  if (s == "none") return QuotientMode::none;
  if (s == "translations") return QuotientMode::translations;
  throw ConfigError("field 'double.quotient' must be 'none' or 'translations'");
}

struct DoubleSetup {
  EffectivePotentialSpace space;
  FieldDensity density;
  DoubleConnectionOptions opts;
  double residual_tolerance = 5e-2;
  json constants;
};

DoubleSetup double_setup(const json& cfg, const std::string& mode) {
  const json& d = config::require(cfg, "double", "");
  const std::string P = "double.";
  const auto space = config::get_or<std::string>(d, "space", "", P);
  auto sym = parse_symmetry(config::get_or<std::string>(d, "symmetry", "none", P));
  auto quo = parse_quotient(config::get_or<std::string>(d, "quotient", "none", P));
  if (mode == "asym") {
    if (quo != QuotientMode::translations)
      throw ConfigError("mode asym needs field 'double.quotient' set to 'translations'");
    sym = SymmetryMode::none;
  } else {
    quo = QuotientMode::none;
  }

  DoubleConnectionOptions o;
  o.path_nodes = config::get_or(d, "path_nodes", o.path_nodes, P);
  o.x2_nodes = config::get_or(d, "x2_nodes", o.x2_nodes, P);
  o.outer_iterations = config::get_or(d, "outer_iterations", o.outer_iterations, P);
  o.t_max = config::get_or(d, "t_max", o.t_max, P);
  o.residual_margin = config::get_or(d, "residual_margin", o.residual_margin, P);
  o.geodesic = config::geodesic(d);
  const json f = d.value("funnel", json::object());
  o.funnel.enabled = config::get_or(f, "enabled", o.funnel.enabled, "double.funnel.");
  o.funnel.p0 = config::get_or(f, "p0", o.funnel.p0, "double.funnel.");
  o.funnel.c = config::get_or(f, "c", o.funnel.c, "double.funnel.");
  o.funnel.eps0 = config::get_or(f, "eps0", o.funnel.eps0, "double.funnel.");
  o.funnel.scan_start = config::get_or(f, "scan_start", o.funnel.scan_start, "double.funnel.");
  const auto M = config::get_or<Index>(d, "points", 0, P);
  if (M < 3) throw ConfigError("field 'double.points' must be at least 3");

  json constants = {{"space", space},
                    {"points", M},
                    {"symmetry", to_string(sym)},
                    {"quotient", to_string(quo)},
                    {"path_nodes", o.path_nodes},
                    {"x2_nodes", o.x2_nodes},
                    {"outer_iterations", o.outer_iterations},
                    {"t_max", num(o.t_max)},
                    {"residual_margin", o.residual_margin},
                    {"funnel", {{"enabled", o.funnel.enabled}, {"p0", o.funnel.p0}, {"c", o.funnel.c},
                                {"eps0", o.funnel.eps0}, {"scan_start", o.funnel.scan_start}}},
                    {"newton", {{"max_iter", o.newton.max_iter}, {"grad_tol", o.newton.grad_tol}}}};

  if (space == "sin_example") {
    if (sym != SymmetryMode::none) throw ConfigError("field 'double.symmetry' must be 'none' for the sin example");
    if (quo != QuotientMode::none) throw ConfigError("field 'double.quotient' must be 'none' for the sin example");
    return DoubleSetup{sin_example_space(M), FieldDensity::sin_example(), o,
                       config::get_or(d, "residual_tolerance", 5e-2, P), constants};
  }
  if (space == "line") {
    const Potential p = config::potential(cfg);
    const auto wells = config::points(config::require(cfg, "wells", ""), "wells");
    if (wells.size() != 2) throw ConfigError("field 'wells' must hold exactly two points");
    const double S = config::get_or(d, "window", 0.0, P);
    if (!(S > 0.0)) throw ConfigError("field 'double.window' must be positive");
    const double line_t_max = config::get_or(d, "line_t_max", S, P);
    const int line_nodes = config::get_or(d, "line_nodes", 201, P);
    const json seeds = config::require(d, "seeds", P);
    const auto via_m = config::points(config::require(config::require(seeds, "minus", "double.seeds."), "via", "double.seeds.minus."),
                                      "double.seeds.minus.via");
    const auto via_p = config::points(config::require(config::require(seeds, "plus", "double.seeds."), "via", "double.seeds.plus."),
                                      "double.seeds.plus.via");
    const Grid grid = Grid::window(S, M);
    const auto zm = line_connection(p, wells[0], wells[1], via_m, grid, line_t_max, line_nodes);
    const auto zp = line_connection(p, wells[0], wells[1], via_p, grid, line_t_max, line_nodes);
    const FieldDensity F = FieldDensity::from_potential(p);
    const FieldEnergy e(grid, F, wells[0], wells[1]);
    constants["window"] = S;
    constants["line_t_max"] = line_t_max;
    constants["line_nodes"] = line_nodes;
    try {
      return DoubleSetup{make_effective_space(e, zm.flat(), zp.flat(), sym, quo), F, o,
                         config::get_or(d, "residual_tolerance", 5e-2, P), constants};
    } catch (const InvalidArgument& ex) {
      throw ConfigError(ex.what());
    }
  }
  throw ConfigError("field 'double.space' must be 'sin_example' or 'line'");
}

/// Max-norm five-point residual of Δu - ∇F over interior nodes, `margin`
/// nodes away from every edge. `u[k][j]` is the value at column k, x1 node j.
double five_point_residual(const std::vector<std::vector<Point>>& u, const std::vector<double>& x1, double dx2,
                           const FieldDensity& F, int margin) {
  const auto P = static_cast<std::ptrdiff_t>(u.size());
  const auto M = static_cast<std::ptrdiff_t>(x1.size());
  const double h = x1[1] - x1[0];
  const int m = std::max(1, margin);
  double worst = 0.0;
  for (std::ptrdiff_t k = m; k < P - m; ++k)
    for (std::ptrdiff_t j = m; j < M - m; ++j) {
      const Point& c = u[k][j];
      const Point lap = (u[k][j + 1] - 2.0 * c + u[k][j - 1]) / (h * h) + (u[k + 1][j] - 2.0 * c + u[k - 1][j]) / (dx2 * dx2);
      worst = std::max(worst, (lap - F.gradient(x1[j], c)).lpNorm<Eigen::Infinity>());
    }
  return worst;
}

int cmd_double(const Common& c) {
  if (c.mode != "sym" && c.mode != "asym") throw ConfigError("flag '--mode' must be sym or asym");
  const json cfg = load_config(c.config);
  const DoubleSetup setup = double_setup(cfg, c.mode);
  const auto& sp = setup.space;

  Run run(c, "double", cfg);
  run["mode"] = c.mode;
  run["constants"] = setup.constants;
  run["tolerances"] = {{"residual", setup.residual_tolerance},
                       {"newton_grad_tol", setup.opts.newton.grad_tol},
                       {"geodesic_tol", setup.opts.geodesic.tol},
                       {"k_floor", setup.opts.geodesic.k_floor},
                       {"gauge_acceptance", 1e-10},
                       {"coincident_wells", 1e-8}};

  log(std::string("solving ") + (c.mode == "sym" ? "symmetric" : "translation-quotient") + " double connection");
  const auto r = c.mode == "sym" ? solve_symmetric(sp, setup.opts) : solve_asymmetric(sp, setup.opts);
  const auto rep = assemble_and_verify(r, sp, setup.opts.residual_margin);
  const Index M = sp.grid().points, n = sp.components();

  std::vector<std::string> uh{"x2", "x1"};
  for (Index q = 0; q < n; ++q) uh.push_back("u" + std::to_string(q));
  std::vector<std::vector<double>> urows;
  for (std::size_t k = 0; k < r.columns.size(); ++k)
    for (Index j = 0; j < M; ++j) {
      std::vector<double> row{r.x2[k], sp.grid().s(j)};
      const Point v = r.columns[k].node(j);
      for (Index q = 0; q < n; ++q) row.push_back(v[q]);
      urows.push_back(std::move(row));
    }
  run.csv("u.csv", uh, urows);

  std::vector<std::vector<double>> brows;
  for (std::size_t k = 0; k < rep.decay_minus.size(); ++k)
    brows.push_back({static_cast<double>(k), r.x2[k], rep.decay_minus[k], r.x2[r.x2.size() - 1 - k], rep.decay_plus[k]});
  run.csv("boundary.csv", {"k", "x2_minus", "l2_to_z_minus", "x2_plus", "l2_to_z_plus"}, brows);

  run.csv("residual.csv",
          {"margin", "residual_max", "residual_l2", "x1_edge_minus", "x1_edge_plus", "x2_end_l2_minus", "x2_end_l2_plus",
           "equipartition_defect", "energy", "energy_direct"},
          {{static_cast<double>(setup.opts.residual_margin), rep.residual_max, rep.residual_l2, rep.x1_edge_minus,
            rep.x1_edge_plus, rep.x2_end_l2_minus, rep.x2_end_l2_plus, rep.equipartition_defect, r.energy,
            r.energy_direct}});

  std::vector<std::vector<double>> trows;
  for (std::size_t i = 0; i < r.outer_trace.size(); ++i) trows.push_back({static_cast<double>(i), r.outer_trace[i]});
  run.csv("path_trace.csv", {"round", "k_length"}, trows);

  run.text("z_minus.csv", [&](std::ostream& o) { sp.z_minus.write_csv(o); });
  run.text("z_plus.csv", [&](std::ostream& o) { sp.z_plus.write_csv(o); });

  if (c.mode == "asym") {
    std::vector<std::vector<double>> mrows;
    for (std::size_t k = 0; k < r.m_track.size(); ++k)
      mrows.push_back({r.x2[k], r.m_track[k], static_cast<double>(r.m_which[k])});
    run.csv("m_track.csv", {"x2", "m", "which"}, mrows);
  }

  run["results"] = {{"energy", r.energy},
                    {"energy_direct", r.energy_direct},
                    {"energy_gap", rep.energy_gap},
                    {"geodesic_value", r.geodesic_value},
                    {"path_equipartition_defect", r.path_equipartition_defect},
                    {"window", r.window},
                    {"c_minus", r.c_minus},
                    {"c_plus", r.c_plus},
                    {"m_total_variation", r.m_total_variation},
                    {"funnel_rounds_applied", r.funnel_rounds_applied},
                    {"gauge_rounds_applied", r.gauge_rounds_applied},
                    {"path_status", to_string(r.path_status)},
                    {"polish_status", to_string(r.polish_status)},
                    {"polish_iterations", r.polish_iterations},
                    {"polish_gradient", r.polish_gradient},
                    {"reference_energy", sp.reference},
                    {"well_gap", sp.well_gap},
                    {"notes", r.notes}};
  run["residual_summary"] = {{"residual_max", rep.residual_max},
                             {"residual_l2", rep.residual_l2},
                             {"x1_edge_minus", rep.x1_edge_minus},
                             {"x1_edge_plus", rep.x1_edge_plus},
                             {"x2_end_l2_minus", rep.x2_end_l2_minus},
                             {"x2_end_l2_plus", rep.x2_end_l2_plus},
                             {"x2_end_sup_minus", rep.x2_end_sup_minus},
                             {"x2_end_sup_plus", rep.x2_end_sup_plus},
                             {"equipartition_defect", rep.equipartition_defect},
                             {"oddness_error", rep.oddness_error},
                             {"pass", rep.residual_max < setup.residual_tolerance}};
  std::cout << "energy " << r.energy << "  residual " << rep.residual_max << "  c- " << r.c_minus << "  c+ " << r.c_plus
            << '\n';

  if (r.path_status != SolverStatus::converged) run.warn(std::string("path solver ") + to_string(r.path_status));
  if (setup.opts.polish_2d && r.polish_status != SolverStatus::converged) {
    run.warn(std::string("2D polish ") + to_string(r.polish_status));
    return run.finish("stalled", kStall);
  }
  if (rep.residual_max >= setup.residual_tolerance) run.warn("residual over tolerance");
  return run.finish(rep.residual_max < setup.residual_tolerance ? "ok" : "ok_with_warnings", kOk);
}

// --------------------------------------------------------- counterexample

CounterexampleWeight counterexample_weight(const json& ce) {
  const json g = ce.value("g", json::object());
  const auto type = config::get_or<std::string>(g, "type", "inverse_square", "counterexample.g.");
  if (type == "inverse_square") return CounterexampleWeight::default_weight();
  if (type == "power") {
    const double e = config::get_or(g, "exponent", 0.0, "counterexample.g.");
    try {
      return CounterexampleWeight::power(e);
    } catch (const InvalidArgument& ex) {
      throw ConfigError(std::string("field 'counterexample.g': ") + ex.what());
    }
  }
  throw ConfigError("field 'counterexample.g.type' must be 'inverse_square' or 'power'");
}

int cmd_counterexample(const Common& c) {
  const json cfg = load_config(c.config);
  const json ce = cfg.value("counterexample", json::object());
  const CounterexampleWeight w = counterexample_weight(ce);
  const int n_max = config::get_or(ce, "n_max", 12, "counterexample.");
  const double base = config::get_or(ce, "base", 2.0, "counterexample.");
  if (n_max < 1) throw ConfigError("field 'counterexample.n_max' must be positive");
  if (!(base > 1.0)) throw ConfigError("field 'counterexample.base' must exceed 1");
  NonexistenceOptions no;
  no.radii = config::get_or(ce, "radii", no.radii, "counterexample.");
  no.nodes = config::get_or(ce, "nodes", no.nodes, "counterexample.");
  no.max_iter = config::get_or(ce, "max_iter", no.max_iter, "counterexample.");
  no.penalty = config::get_or(ce, "penalty", no.penalty, "counterexample.");
  for (double R : no.radii)
    if (!(R > 1.0)) throw ConfigError("field 'counterexample.radii' must hold radii above 1");

  Run run(c, "counterexample", cfg);
  run["constants"] = {{"g", w.name()},       {"G_inf", w.G_inf()},   {"n_max", n_max},           {"base", base},
                      {"radii", no.radii},   {"nodes", no.nodes},    {"max_iter", no.max_iter},  {"penalty", no.penalty},
                      {"rule", "simpson"}};
  run["tolerances"] = {{"tail_quadrature", 1e-6}, {"dominance", 1e-6}, {"final_candidate", 1e-2}};

  std::vector<CandidateLength> cands;
  for (int n = 1; n <= n_max; ++n) cands.push_back(candidate_length(n, w, base));
  run.text("candidates.csv", [&](std::ostream& o) { write_candidate_plot(o, cands); });

  log("box-confined geodesics");
  const auto rep = nonexistence_report(w, no);
  run.text("boxes.csv", [&](std::ostream& o) { write_box_plot(o, rep); });
  std::vector<std::vector<double>> crow;
  for (const auto& b : rep.runs)
    for (const auto& p : b.curve) crow.push_back({b.R, p[0], p[1]});
  run.csv("box_curves.csv", {"R", "x", "y"}, crow);

  bool decreasing = true;
  for (std::size_t i = 1; i < cands.size(); ++i) decreasing = decreasing && cands[i].total < cands[i - 1].total;
  const double infimum = 2.0 * w.G_inf();
  json boxes = json::array();
  for (const auto& b : rep.runs)
    boxes.push_back({{"R", b.R}, {"best", b.best}, {"bound_R", b.bound_R}, {"crossing", b.crossing},
                     {"bound_crossing", b.bound_crossing}, {"crossings", b.crossings}, {"status", to_string(b.status)}});
  run["results"] = {{"G_inf", w.G_inf()},
                    {"infimum", infimum},
                    {"final_candidate", cands.back().total},
                    {"final_gap", cands.back().total - infimum},
                    {"candidates_decreasing", decreasing},
                    {"monotone", rep.monotone},
                    {"strict_gap", rep.strict_gap},
                    {"dominance", rep.dominance},
                    {"boxes", boxes},
                    {"conclusion", rep.conclusion}};
  if (!decreasing) run.warn("candidate lengths are not strictly decreasing");
  if (!rep.strict_gap || !rep.dominance) run.warn(rep.conclusion);
  std::cout << "G(inf) " << w.G_inf() << "  final candidate " << cands.back().total << "  " << rep.conclusion << '\n';
  return run.finish("ok", kOk);
}

// ----------------------------------------------------------------- verify

double json_number(const json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string() && j.get<std::string>() == "inf") return kInfinity;
  throw ArtifactError("manifest field '" + what + "' is not a number");
}

void expect_header(const CsvTable& t, const std::vector<std::string>& header, const std::string& name) {
  if (t.header != header) throw ArtifactError(name + ": unexpected header");
}

int verify_connect(const fs::path& dir, const json& m) {
  const json& cfg = m.at("config");
  const Potential p = config::potential(cfg);
  const auto t = read_csv((dir / "curve.csv").string());
  auto header = curve_header(p.dim);
  header.push_back("action");
  expect_header(t, header, "curve.csv");
  if (t.rows.size() < 3) throw ArtifactError("curve.csv: too few rows");
  std::vector<double> times;
  std::vector<Point> nodes;
  for (const auto& r : t.rows) {
    times.push_back(r[0]);
    Point x(p.dim);
    for (Index k = 0; k < p.dim; ++k) x[k] = r[1 + k];
    nodes.push_back(x);
  }
  SampledCurve cv = [&] {
    try {
      return SampledCurve(times, nodes);
    } catch (const InvalidArgument& e) {
      throw ArtifactError(std::string("curve.csv: ") + e.what());
    }
  }();
  double defect = 0.0;
  for (std::size_t i = 0; i + 1 < cv.size(); ++i) {
    const double dt = cv.time(i + 1) - cv.time(i);
    const Point d = cv.node(i + 1) - cv.node(i);
    defect = std::max(defect, std::abs(0.5 * d.squaredNorm() / (dt * dt) - p.eval(0.5 * (cv.node(i) + cv.node(i + 1)))));
  }
  const double action = action_EW(cv, p);
  const auto sd = second_difference_bound(cv, p.lambda);
  const auto ub = uniform_bounds_audit(cv, p);
  std::cout << "action " << action << "  equipartition defect " << defect << "  second-difference "
            << (sd.pass ? "pass" : "FAIL") << " (C " << sd.fitted_C << ")  uniform bounds "
            << (ub.flagged() ? "flagged" : "ok") << '\n';
  if (std::abs(action - t.rows.back().back()) > 1e-9 * std::max(1.0, action))
    throw ArtifactError("curve.csv: action column disagrees with the curve");
  const double tol = json_number(m.at("tolerances").at("equipartition"), "tolerances.equipartition");
  if (defect > tol) {
    std::cerr << "equipartition defect " << defect << " exceeds tolerance " << tol << '\n';
    return kAudit;
  }
  if (!sd.pass || ub.flagged()) {
    std::cerr << "regularity audit failed\n";
    return kAudit;
  }
  return kOk;
}

int verify_double(const fs::path& dir, const json& m) {
  const json& cfg = m.at("config");
  const auto& k = m.at("constants");
  const std::string space = k.at("space").get<std::string>();
  const FieldDensity F = space == "sin_example" ? FieldDensity::sin_example() : FieldDensity::from_potential(config::potential(cfg));
  const auto t = read_csv((dir / "u.csv").string());
  std::vector<std::string> uh{"x2", "x1"};
  for (Index q = 0; q < F.components; ++q) uh.push_back("u" + std::to_string(q));
  expect_header(t, uh, "u.csv");
  const auto M = k.at("points").get<std::size_t>();
  if (t.rows.empty() || t.rows.size() % M != 0) throw ArtifactError("u.csv: row count is not a multiple of the grid size");
  const std::size_t P = t.rows.size() / M;
  std::vector<double> x1(M), x2(P);
  std::vector<std::vector<Point>> u(P, std::vector<Point>(M));
  for (std::size_t kk = 0; kk < P; ++kk)
    for (std::size_t j = 0; j < M; ++j) {
      const auto& r = t.rows[kk * M + j];
      x2[kk] = r[0];
      x1[j] = r[1];
      u[kk][j] = Eigen::Map<const Point>(r.data() + 2, F.components);
    }
  if (P < 3 || M < 3) throw ArtifactError("u.csv: grid too small");
  const int margin = k.at("residual_margin").get<int>();
  const double res = five_point_residual(u, x1, x2[1] - x2[0], F, margin);
  const double recorded = m.at("residual_summary").at("residual_max").get<double>();
  std::cout << "residual " << res << " (recorded " << recorded << ")\n";
  if (std::abs(res - recorded) > 1e-6 * std::max(1.0, recorded)) throw ArtifactError("u.csv: residual disagrees with the manifest");
  const auto b = read_csv((dir / "boundary.csv").string());
  expect_header(b, {"k", "x2_minus", "l2_to_z_minus", "x2_plus", "l2_to_z_plus"}, "boundary.csv");
  const double tol = json_number(m.at("tolerances").at("residual"), "tolerances.residual");
  if (res >= tol) {
    std::cerr << "residual " << res << " exceeds tolerance " << tol << '\n';
    return kAudit;
  }
  return kOk;
}

int verify_counterexample(const fs::path& dir, const json& m) {
  const auto c = read_csv((dir / "candidates.csv").string());
  expect_header(c, {"n", "x_n", "length", "top", "vertical", "bottom"}, "candidates.csv");
  const auto b = read_csv((dir / "boxes.csv").string());
  expect_header(b, {"R", "best", "bound_R", "crossing", "bound_crossing", "infimum"}, "boxes.csv");
  bool ok = true;
  for (std::size_t i = 1; i < c.rows.size(); ++i)
    if (!(c.rows[i][2] < c.rows[i - 1][2])) {
      std::cerr << "candidate " << c.rows[i][0] << " does not decrease\n";
      ok = false;
    }
  const double dominance = json_number(m.at("tolerances").at("dominance"), "tolerances.dominance");
  for (const auto& r : b.rows) {
    if (!(r[1] - r[5] >= r[2] - r[5] - dominance) || !(r[2] > r[5])) {
      std::cerr << "box R=" << r[0] << ": length " << r[1] << " below bound " << r[2] << '\n';
      ok = false;
    }
  }
  std::cout << c.rows.size() << " candidates, " << b.rows.size() << " boxes checked\n";
  return ok ? kOk : kAudit;
}

int cmd_verify(const std::string& run_dir) {
  const fs::path dir(run_dir);
  json m;
  {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw ArtifactError("no manifest.json in " + run_dir);
    try {
      m = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ArtifactError(std::string("manifest.json is not valid JSON: ") + e.what());
    }
  }
  try {
    if (m.at("schema_version").get<int>() != kSchemaVersion) throw ArtifactError("manifest schema_version mismatch");
    for (const auto& [name, info] : m.at("files").items()) {
      const auto path = (dir / name).string();
      if (!fs::exists(path)) throw ArtifactError("missing artifact " + name);
      const auto crc = file_crc32(path);
      if (crc != info.at("crc32").get<std::string>())
        throw ArtifactError("checksum mismatch for " + name + " (" + crc + " != " + info.at("crc32").get<std::string>() + ")");
    }
    const auto status = m.at("status").get<std::string>();
    if (status == "stalled" || status == "failed") {
      std::cerr << "run " << status << "; nothing to audit\n";
      return m.at("exit_code").get<int>();
    }
    const auto cmd = m.at("command").get<std::string>();
    if (cmd == "connect") return verify_connect(dir, m);
    if (cmd == "double") return verify_double(dir, m);
    if (cmd == "counterexample") return verify_counterexample(dir, m);
    throw ArtifactError("manifest has unknown command '" + cmd + "'");
  } catch (const json::exception& e) {
    throw ArtifactError(std::string("manifest schema: ") + e.what());
  } catch (const ConfigError& e) {
    throw ArtifactError(std::string("manifest config: ") + e.what());
  }
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "run configuration (JSON)")->required();
  sub->add_option("--out", c.out, "run directory")->required();
  sub->add_option("--seed", c.seed, "seed for randomized audits");
  sub->add_option("--threads", c.threads, "recorded in the manifest; runs are single-threaded");
  sub->add_flag("--verbose", c.verbose, "progress on stderr");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hetcon: minimal-action heteroclinic connections"};
  app.require_subcommand(1);
  Common c;
  std::string run_dir;
  auto* connect = app.add_subcommand("connect", "1D connection between two wells");
  add_common(connect, c);
  auto* dbl = app.add_subcommand("double", "double connection in function space");
  add_common(dbl, c);
  dbl->add_option("--mode", c.mode, "sym or asym")->check(CLI::IsMember({"sym", "asym"}));
  auto* ce = app.add_subcommand("counterexample", "weighted plane without a minimizing geodesic");
  add_common(ce, c);
  auto* verify = app.add_subcommand("verify", "checksums and audits of a run directory");
  verify->add_option("run_dir", run_dir, "run directory")->required();
  verify->add_flag("--verbose", c.verbose, "progress on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  g_verbose = c.verbose;

  try {
    if (*connect) return cmd_connect(c);
    if (*dbl) return cmd_double(c);
    if (*ce) return cmd_counterexample(c);
    return cmd_verify(run_dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ArtifactError& e) {
    std::cerr << "artifact error: " << e.what() << '\n';
    return kArtifact;
  } catch (const ConvergenceError& e) {
    std::cerr << "solver stalled: " << e.what() << '\n';
    return kStall;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailed;
  }
}
