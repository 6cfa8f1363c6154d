#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "agwp/config.hpp"
#include "agwp/io.hpp"
#include "agwp/packet.hpp"
#include "agwp/propagator.hpp"
#include "agwp/reference.hpp"
#include "agwp/version.hpp"

namespace agwp {

struct RunOverrides {
  std::optional<std::string> output_directory;
  int jobs = default_jobs();
  std::uint64_t seed = 0;
};

struct CheckResult {
  std::string name;
  bool passed = true;
  double value = 0.0;
  double threshold = 0.0;
  std::string comparison;  // "<=", ">", "non-increasing", ...
};

struct RunResult {
  int exit_code = 0;
  std::filesystem::path output_directory;
  std::vector<std::string> files;
  std::vector<CheckResult> checks;
  std::vector<std::string> warnings;
};

// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 a
// configured acceptance check failed.
inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;
inline constexpr int exit_numerical = 3;
inline constexpr int exit_check_failed = 4;

namespace detail {

inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline double loglog_slope(const std::vector<double>& x,
                           const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = static_cast<int>(x.size());
  for (int i = 0; i < n; ++i) {
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct ScenarioContext {
  const ScenarioConfig& cfg;
  const RunOverrides& over;
  std::filesystem::path dir;
  std::shared_ptr<Hamiltonian> model;
  FlowOptions flow;
  RunResult result;

  std::filesystem::path file(const std::string& name) {
    result.files.push_back(name);
    return dir / name;
  }
  void check(const std::string& name, bool passed, double value,
             double threshold, const std::string& cmp) {
    result.checks.push_back({name, passed, value, threshold, cmp});
  }
  void warn(std::string msg) { result.warnings.push_back(std::move(msg)); }
};

inline GridFunction initial_grid_state(const ScenarioConfig& cfg, double hbar,
                                       const Box& box, int n) {
  if (!cfg.superposition.empty()) {
    GridFunction psi(box, n);
    for (const auto& term : cfg.superposition) {
      GridFunction g = coherent_state(box, n, term.q, term.p, hbar);
      psi.values() += term.coeff * g.values();
    }
    psi.normalize();
    return psi;
  }
  return coherent_state(box, n, cfg.initial_q, cfg.initial_p, hbar);
}

/// Auto-sized configuration box: covers every declared center with a
/// coherent-width margin, plus the phase-space ball drift when frame
/// packets are transported over a nonzero time span.
inline Box state_box(const ScenarioConfig& cfg, double hbar, double margin,
                     double drift_span = 0.0) {
  if (cfg.grid_box) return *cfg.grid_box;
  std::vector<Vec> centers;
  if (cfg.initial_q.size() > 0) centers.push_back(cfg.initial_q);
  for (const auto& term : cfg.superposition) centers.push_back(term.q);
  if (centers.empty()) throw ConfigError("no initial center for grid sizing");
  Vec lo = centers.front(), hi = centers.front();
  for (const Vec& c : centers) {
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }
  double pad = margin * std::sqrt(hbar / 2.0);
  if (drift_span > 0.0) pad += cfg.quad_rho * (1.0 + drift_span);
  return Box{(lo.array() - pad).matrix(), (hi.array() + pad).matrix()};
}

// ---------------------------------------------------------------- scenarios

inline void run_propagate_packet(ScenarioContext& sc) {
  const ScenarioConfig& cfg = sc.cfg;
  PhasePoint x0{cfg.initial_q, cfg.initial_p};
  Trajectory tr = integrate_characteristics(*sc.model, x0, cfg.t0, cfg.T,
                                            cfg.output_times, sc.flow);
  write_trajectory_csv(tr, sc.file("trajectory.csv"));

  Json obs = Json::array();
  for (std::size_t hi = 0; hi < cfg.hbar_list.size(); ++hi) {
    double hbar = cfg.hbar_list[hi];
    AnisotropicPacket pk =
        AnisotropicPacket::from_state(tr.back(), x0, hbar, sc.flow);
    pk.validate();
    Box box = cfg.grid_box ? *cfg.grid_box : auto_domain(pk);
    GridFunction g = packet_eval(box, cfg.grid_n, pk);
    std::string name = cfg.hbar_list.size() == 1
                           ? std::string("packet.csv")
                           : "packet_h" + std::to_string(hi) + ".csv";
    write_grid_csv(g, sc.file(name));
    double norm_dev = std::abs(g.norm() - 1.0);
    sc.check("packet_grid_norm_hbar_" + format_number(hbar), norm_dev <= 1e-6,
             norm_dev, 1e-6, "<=");

    for (const CharacteristicState& s : tr.states()) {
      AnisotropicPacket pkt = AnisotropicPacket::from_state(s, x0, hbar, sc.flow);
      Observables ob = observables(pkt);
      Json j;
      j["t"] = s.t;
      j["hbar"] = hbar;
      for (int k = 0; k < pkt.dim(); ++k) {
        j["mean_q"].push_back(ob.mean_q[k]);
        j["mean_p"].push_back(ob.mean_p[k]);
        j["var_q"].push_back(ob.cov_q(k, k));
        j["var_p"].push_back(ob.cov_p(k, k));
        j["uncertainty_product"].push_back(ob.uncertainty_product[k]);
      }
      obs.push_back(std::move(j));
    }
  }
  std::ofstream(sc.file("observables.json")) << obs.dump(2) << '\n';
}

inline void run_propagate_state(ScenarioContext& sc) {
  const ScenarioConfig& cfg = sc.cfg;
  double hbar = cfg.hbar_list.front();
  double t_final = cfg.output_times.back();
  Box box = state_box(cfg, hbar, 14.0, t_final - cfg.t0);
  GridFunction psi0 = initial_grid_state(cfg, hbar, box, cfg.grid_n);

  PhaseSpaceQuadrature quad =
      build_quadrature(sc.model->dim(), cfg.quad_rho, cfg.quad_width, hbar,
                       cfg.spacing_factors.front(), cfg.node_cap);
  Json qinfo;
  qinfo["nodes"] = quad.nodes.size();
  qinfo["points_per_axis"] = quad.points_per_axis;
  qinfo["spacing"] = quad.h_q;

  PropagatorContext ctx(*sc.model, std::move(quad), cfg.t0, t_final, sc.flow);
  std::vector<std::string> warnings;
  GridFunction psi = propagate_state(ctx, psi0, hbar, sc.over.jobs, &warnings);
  for (auto& w : warnings) sc.warn(std::move(w));

  write_grid_csv(psi0, sc.file("state_initial.csv"));
  write_grid_csv(psi, sc.file("state_final.csv"));
  qinfo["final_norm"] = psi.norm();
  std::ofstream(sc.file("quadrature.json")) << qinfo.dump(2) << '\n';
}

inline void run_residual_sweep(ScenarioContext& sc) {
  const ScenarioConfig& cfg = sc.cfg;
  PhasePoint x0{cfg.initial_q, cfg.initial_p};
  double t_final = cfg.output_times.back();
  Trajectory tr =
      integrate_characteristics(*sc.model, x0, cfg.t0, t_final - cfg.t0,
                                std::vector<double>{t_final}, sc.flow);

  CsvWriter csv(sc.file("residual_sweep.csv"));
  csv.header({"hbar", "residual", "residual_over_hbar_3_2"});
  std::vector<double> res;
  for (double hbar : cfg.hbar_list) {
    double r = residual_norm(*sc.model, tr.back(), hbar, cfg.grid_n, sc.flow);
    res.push_back(r);
    csv.row({hbar, r, r / std::pow(hbar, 1.5)});
  }
  double slope = detail::loglog_slope(cfg.hbar_list, res);
  bool ok = slope >= 1.35 && slope <= 1.65;
  sc.check("residual_loglog_slope", ok, slope, 1.5, "in [1.35, 1.65]");
}

inline void run_invariants(ScenarioContext& sc) {
  const ScenarioConfig& cfg = sc.cfg;
  PhasePoint x0{cfg.initial_q, cfg.initial_p};
  Trajectory tr = integrate_characteristics(*sc.model, x0, cfg.t0, cfg.T,
                                            cfg.output_times, sc.flow);
  Json per_time = Json::array();
  double max_rel = 0.0, min_siegel = 1e300, max_det = 0.0;
  for (const CharacteristicState& s : tr.states()) {
    RelationReport rep = relation_residuals(s.A, s.B);
    Json j = relation_report_json(rep);
    j["t"] = s.t;
    per_time.push_back(std::move(j));
    max_rel = std::max(max_rel, rep.max_relative_residual());
    if (rep.z_defined) {
      min_siegel = std::min(min_siegel, rep.siegel_pos);
      max_det = std::max(max_det, rep.det_identity);
    }
  }
  Json out;
  out["per_time"] = std::move(per_time);
  out["max_relative_residual"] = max_rel;
  out["min_siegel_eigenvalue"] = min_siegel;
  out["max_det_identity_residual"] = max_det;
  std::ofstream(sc.file("invariants.json")) << out.dump(2) << '\n';

  sc.check("relation_max_relative_residual", max_rel <= cfg.invariant_threshold,
           max_rel, cfg.invariant_threshold, "<=");
  sc.check("siegel_min_eigenvalue", min_siegel > 0.0, min_siegel, 0.0, ">");
  sc.check("det_identity_residual", max_det <= 1e-10, max_det, 1e-10, "<=");
}

inline void run_frame_check(ScenarioContext& sc) {
  const ScenarioConfig& cfg = sc.cfg;
  double hbar = cfg.hbar_list.front();
  Box box = state_box(cfg, hbar, 14.0);
  GridFunction psi0 = initial_grid_state(cfg, hbar, box, cfg.grid_n);

  CsvWriter csv(sc.file("frame_check.csv"));
  csv.header({"spacing_factor", "nodes", "l2_error"});
  std::vector<double> errors;
  for (double c : cfg.spacing_factors) {
    PhaseSpaceQuadrature quad = build_quadrature(
        sc.model->dim(), cfg.quad_rho, cfg.quad_width, hbar, c, cfg.node_cap);
    PropagatorContext ctx(*sc.model, std::move(quad), cfg.t0, cfg.t0, sc.flow);
    GridFunction rec = propagate_state(ctx, psi0, hbar, sc.over.jobs);
    double err = l2_distance(rec, psi0);
    errors.push_back(err);
    csv.row({c, static_cast<double>(ctx.node_count()), err});
  }
  for (std::size_t i = 0; i < cfg.spacing_factors.size(); ++i) {
    if (std::abs(cfg.spacing_factors[i] - 0.5) < 1e-12)
      sc.check("frame_error_at_c_0.5", errors[i] <= 1e-3, errors[i], 1e-3,
               "<=");
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < errors.size(); ++i)
    decreasing &= errors[i] < errors[i - 1];
  if (errors.size() > 1)
    sc.check("frame_error_strictly_decreasing", decreasing,
             static_cast<double>(errors.size()), 0.0, "strict decrease");
}

inline ShootingOptions shooting_options(const ScenarioConfig& cfg,
                                        const RunOverrides& over,
                                        const FlowOptions& flow) {
  ShootingOptions so;
  so.search_box = *cfg.vv_search_box;
  so.n_starts = cfg.vv_n_starts;
  so.tol = cfg.vv_tol;
  so.seed = over.seed;
  so.flow = flow;
  so.cutoff = std::pair{cfg.quad_rho, cfg.quad_width};
  so.maslov.method = cfg.maslov_method == "eigenphase"
                         ? MaslovMethod::eigenphase
                         : MaslovMethod::crossing_count;
  so.jobs = over.jobs;
  return so;
}

inline void run_vanvleck(ScenarioContext& sc) {
  const ScenarioConfig& cfg = sc.cfg;
  double t_final = cfg.output_times.back();
  ShootingOptions so = shooting_options(cfg, sc.over, sc.flow);
  std::vector<VanVleckBranch> branches;
  try {
    branches =
        find_branches(*sc.model, cfg.vv_y, cfg.vv_x, cfg.t0, t_final, so);
  } catch (const NoBranchFoundError& e) {
    sc.warn(std::string("no branch found: ") + e.what());
  }
  write_branch_csv(branches, sc.model->dim(), sc.file("branches.csv"));

  Json j;
  j["branch_count"] = branches.size();
  j["search_box_note"] =
      "branch completeness is relative to the configured search box";
  for (double hbar : cfg.hbar_list) {
    Complex k = vanvleck_kernel(branches, sc.model->dim(), hbar);
    j["kernel"].push_back(
        {{"hbar", hbar}, {"re", k.real()}, {"im", k.imag()}});
  }
  std::ofstream(sc.file("vanvleck.json")) << j.dump(2) << '\n';
}

inline void run_kernel_compare(ScenarioContext& sc) {
  const ScenarioConfig& cfg = sc.cfg;
  double t_final = cfg.output_times.back();
  const int d = sc.model->dim();
  ShootingOptions so = shooting_options(cfg, sc.over, sc.flow);

  // Branches are hbar-independent: one shooting pass per (x, y) pair.
  struct Pair {
    Vec x, y;
    std::vector<VanVleckBranch> branches;
    bool plateau = true;
  };
  std::vector<Pair> pairs;
  for (double px : cfg.panel_x)
    for (double py : cfg.panel_y) {
      Pair pr;
      pr.x = Vec::Constant(d, px);
      pr.y = Vec::Constant(d, py);
      pr.branches =
          find_branches(*sc.model, pr.y, pr.x, cfg.t0, t_final, so);
      for (const VanVleckBranch& br : pr.branches)
        if (br.cutoff_value < 1.0 - 1e-12) pr.plateau = false;
      if (!pr.plateau)
        sc.warn("panel pair excluded: branch outside the cutoff plateau at x=" +
                format_number(px) + " y=" + format_number(py));
      pairs.push_back(std::move(pr));
    }

  CsvWriter csv(sc.file("kernel_compare.csv"));
  csv.header({"hbar", "max_relative_deviation"});
  CsvWriter slices(sc.file("kernel_slices.csv"));
  slices.header({"hbar", "x", "y", "re_quadrature", "im_quadrature",
                 "re_vanvleck", "im_vanvleck", "relative_deviation"});
  std::vector<double> devs;
  std::vector<double> hbars = cfg.hbar_list;
  std::sort(hbars.begin(), hbars.end(), std::greater<>());
  for (double hbar : hbars) {
    PhaseSpaceQuadrature quad =
        build_quadrature(d, cfg.quad_rho, cfg.quad_width, hbar,
                         cfg.spacing_factors.front(), cfg.node_cap);
    PropagatorContext ctx(*sc.model, std::move(quad), cfg.t0, t_final, sc.flow);
    double max_dev = 0.0;
    bool any = false;
    for (const Pair& pr : pairs) {
      if (!pr.plateau) continue;
      Complex kq = kernel_quadrature(ctx, pr.x, pr.y, hbar, sc.over.jobs);
      Complex kv = vanvleck_kernel(pr.branches, d, hbar);
      if (std::abs(kv) == 0.0) continue;
      double dev = std::abs(kq - kv) / std::abs(kv);
      slices.row({hbar, pr.x[0], pr.y[0], kq.real(), kq.imag(), kv.real(),
                  kv.imag(), dev});
      max_dev = std::max(max_dev, dev);
      any = true;
    }
    if (!any)
      throw Error("kernel-compare: no usable panel pair inside the plateau");
    devs.push_back(max_dev);
    csv.row({hbar, max_dev});
  }
  bool monotone = true;
  for (std::size_t i = 1; i < devs.size(); ++i)
    monotone &= devs[i] <= devs[i - 1] + 1e-12;
  sc.check("kernel_deviation_non_increasing", monotone,
           devs.empty() ? 0.0 : devs.back(), 0.0, "non-increasing in hbar");
}

}  // namespace detail

/// Executes one scenario, writing all artifacts plus a run manifest into
/// the output directory. Returns the exit code and file inventory.
inline RunResult run_scenario(const ScenarioConfig& cfg,
                              const RunOverrides& over = {}) {
  detail::ScenarioContext sc{cfg, over, {}, nullptr, {}, {}};
  sc.dir = over.output_directory ? *over.output_directory
                                 : cfg.output_directory;
  std::filesystem::create_directories(sc.dir);
  sc.model = make_model(cfg.model_name, cfg.model_params);
  sc.flow.tolerance = cfg.flow_tolerance;
  sc.flow.condition_cap = cfg.condition_cap;

  try {
    if (cfg.scenario == "propagate-packet")
      detail::run_propagate_packet(sc);
    else if (cfg.scenario == "propagate-state")
      detail::run_propagate_state(sc);
    else if (cfg.scenario == "residual-sweep")
      detail::run_residual_sweep(sc);
    else if (cfg.scenario == "invariants")
      detail::run_invariants(sc);
    else if (cfg.scenario == "frame-check")
      detail::run_frame_check(sc);
    else if (cfg.scenario == "vanvleck")
      detail::run_vanvleck(sc);
    else if (cfg.scenario == "kernel-compare")
      detail::run_kernel_compare(sc);
    else
      throw ConfigError("unknown scenario: " + cfg.scenario);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    sc.warn(std::string("numerical failure: ") + e.what());
    sc.result.exit_code = exit_numerical;
  }

  if (sc.result.exit_code == 0)
    for (const CheckResult& c : sc.result.checks)
      if (!c.passed) sc.result.exit_code = exit_check_failed;

  // Manifest: config echo + hash, versions, tolerances, file inventory.
  Json manifest;
  manifest["tool"] = "agwp";
  manifest["version"] = version_string;
  manifest["scenario"] = cfg.scenario;
  manifest["config"] = cfg.raw;
  manifest["config_hash"] = detail::fnv1a_hex(cfg.raw.dump());
  manifest["seed"] = over.seed;
  manifest["jobs"] = over.jobs;
  manifest["exit_code"] = sc.result.exit_code;
  manifest["tolerances"] = {
      {"flow_tolerance", cfg.flow_tolerance},
      {"condition_cap", cfg.condition_cap},
      {"invariant_threshold", cfg.invariant_threshold},
      {"vanvleck_tol", cfg.vv_tol},
      {"node_cap", cfg.node_cap}};
  manifest["outputs"] = sc.result.files;
  manifest["warnings"] = sc.result.warnings;
  manifest["checks"] = Json::array();
  for (const CheckResult& c : sc.result.checks)
    manifest["checks"].push_back({{"name", c.name},
                                  {"passed", c.passed},
                                  {"value", c.value},
                                  {"threshold", c.threshold},
                                  {"comparison", c.comparison}});
  std::ofstream(sc.dir / "manifest.json") << manifest.dump(2) << '\n';

  sc.result.output_directory = sc.dir;
  return sc.result;
}

}  // namespace agwp
