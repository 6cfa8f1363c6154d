#pragma once

#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agwp/model.hpp"
#include "agwp/types.hpp"
#include "agwp/vanvleck.hpp"

namespace agwp {

using Json = nlohmann::json;

struct ConfigIssue {
  std::string path;  // JSON-pointer-style path of the offending key
  std::string message;
};

/// One validated run description. Sections that a scenario does not use
/// may stay empty.
struct ScenarioConfig {
  std::string scenario;
  std::string model_name;
  Json model_params = Json::object();
  std::vector<double> hbar_list;  // singletons allowed everywhere

  Vec initial_q, initial_p;
  struct SuperpositionTerm {
    Vec q, p;
    Complex coeff{1.0, 0.0};
  };
  std::vector<SuperpositionTerm> superposition;

  double t0 = 0.0;
  double T = 1.0;
  std::vector<double> output_times;  // explicit, or derived from `outputs`

  double flow_tolerance = 1e-10;
  double condition_cap = 1e8;
  double invariant_threshold = 1e-8;

  double quad_rho = 6.0;
  double quad_width = 1.0;
  std::vector<double> spacing_factors = {0.5};
  double node_cap = 1e7;

  Vec vv_y, vv_x;
  std::optional<Box> vv_search_box;
  int vv_n_starts = 32;
  double vv_tol = 1e-10;
  std::string maslov_method = "crossing";
  std::vector<double> panel_x, panel_y;

  std::optional<Box> grid_box;  // absent -> auto-sized
  int grid_n = 1024;

  double split_step_dt = 1e-4;

  std::string output_directory = "out";

  Json raw = Json::object();  // parsed document, echoed into the manifest
};

inline const std::vector<std::string>& known_scenarios() {
  static const std::vector<std::string> names = {
      "propagate-packet", "propagate-state", "residual-sweep", "invariants",
      "frame-check",      "vanvleck",        "kernel-compare"};
  return names;
}

/// Builds a model from the registry: name plus flat parameter table.
inline std::shared_ptr<Hamiltonian> make_model(const std::string& name,
                                               const Json& params) {
  auto num = [&](const char* key, double fallback) {
    return params.contains(key) ? params.at(key).get<double>() : fallback;
  };
  int dim = static_cast<int>(num("dim", 1));
  if (dim < 1) throw ConfigError("model dim must be >= 1");
  if (name == "free_particle" || name == "free")
    return std::make_shared<FreeParticle>(dim, num("mass", 1.0));
  if (name == "harmonic_oscillator" || name == "harmonic") {
    if (params.contains("omega2_matrix")) {
      const Json& m = params.at("omega2_matrix");
      if (!m.is_array() || static_cast<int>(m.size()) != dim * dim)
        throw ConfigError("omega2_matrix must be a flat row-major d*d array");
      Mat w(dim, dim);
      for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) w(r, c) = m.at(r * dim + c).get<double>();
      return std::make_shared<HarmonicOscillator>(w, num("mass", 1.0));
    }
    return std::make_shared<HarmonicOscillator>(dim, num("omega2", 1.0),
                                                num("mass", 1.0));
  }
  if (name == "quartic_anharmonic" || name == "quartic")
    return std::make_shared<QuarticAnharmonic>(dim, num("omega2", 1.0),
                                               num("lambda", 0.1));
  if (name == "driven_oscillator" || name == "driven")
    return std::make_shared<DrivenOscillator>(dim, num("omega2", 1.0),
                                              num("f0", 0.5), num("nu", 1.0));
  throw ConfigError("unknown model name: " + name);
}

namespace detail {

inline bool read_vec(const Json& j, Vec& out) {
  if (!j.is_array() || j.empty()) return false;
  out.resize(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j.at(i).is_number()) return false;
    out[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
  }
  return true;
}

}  // namespace detail

/// Parses and validates a configuration document. All violations are
/// collected; nothing is computed.
inline std::vector<ConfigIssue> validate_config(const Json& doc,
                                                ScenarioConfig* out = nullptr) {
  std::vector<ConfigIssue> issues;
  ScenarioConfig cfg;
  cfg.raw = doc;
  auto complain = [&](const std::string& path, const std::string& msg) {
    issues.push_back({path, msg});
  };

  if (!doc.is_object()) {
    complain("", "config must be a JSON object");
    return issues;
  }

  // scenario
  if (!doc.contains("scenario") || !doc.at("scenario").is_string()) {
    complain("/scenario", "required string");
  } else {
    cfg.scenario = doc.at("scenario").get<std::string>();
    bool known = false;
    for (const auto& s : known_scenarios()) known |= (s == cfg.scenario);
    if (!known) complain("/scenario", "unknown scenario: " + cfg.scenario);
  }

  // model
  if (!doc.contains("model") || !doc.at("model").is_object()) {
    complain("/model", "required object");
  } else {
    const Json& m = doc.at("model");
    if (!m.contains("name") || !m.at("name").is_string())
      complain("/model/name", "required string");
    else
      cfg.model_name = m.at("name").get<std::string>();
    if (m.contains("params")) {
      if (!m.at("params").is_object())
        complain("/model/params", "must be an object");
      else
        cfg.model_params = m.at("params");
    }
    if (!cfg.model_name.empty()) {
      try {
        make_model(cfg.model_name, cfg.model_params);
      } catch (const std::exception& e) {
        complain("/model", e.what());
      }
    }
  }

  // hbar: number or array of numbers
  if (doc.contains("hbar")) {
    const Json& h = doc.at("hbar");
    if (h.is_number()) {
      cfg.hbar_list = {h.get<double>()};
    } else if (h.is_array() && !h.empty()) {
      for (const auto& v : h) {
        if (!v.is_number()) {
          complain("/hbar", "entries must be numbers");
          break;
        }
        cfg.hbar_list.push_back(v.get<double>());
      }
    } else {
      complain("/hbar", "must be a positive number or non-empty array");
    }
    for (double v : cfg.hbar_list)
      if (!(v > 0.0)) complain("/hbar", "hbar values must be > 0");
  } else {
    cfg.hbar_list = {1.0};
  }

  // initial state
  if (doc.contains("initial")) {
    const Json& ini = doc.at("initial");
    if (ini.is_object() && ini.contains("superposition")) {
      const Json& terms = ini.at("superposition");
      if (!terms.is_array() || terms.empty()) {
        complain("/initial/superposition", "must be a non-empty array");
      } else {
        for (std::size_t i = 0; i < terms.size(); ++i) {
          ScenarioConfig::SuperpositionTerm term;
          const Json& t = terms.at(i);
          std::string base = "/initial/superposition/" + std::to_string(i);
          if (!t.contains("q") || !detail::read_vec(t.at("q"), term.q))
            complain(base + "/q", "required numeric array");
          if (!t.contains("p") || !detail::read_vec(t.at("p"), term.p))
            complain(base + "/p", "required numeric array");
          term.coeff = Complex{t.value("coeff_re", 1.0), t.value("coeff_im", 0.0)};
          if (term.q.size() != term.p.size())
            complain(base, "q and p must have equal length");
          cfg.superposition.push_back(std::move(term));
        }
      }
    } else if (ini.is_object()) {
      if (!ini.contains("q") || !detail::read_vec(ini.at("q"), cfg.initial_q))
        complain("/initial/q", "required numeric array");
      if (!ini.contains("p") || !detail::read_vec(ini.at("p"), cfg.initial_p))
        complain("/initial/p", "required numeric array");
      if (cfg.initial_q.size() > 0 &&
          cfg.initial_q.size() != cfg.initial_p.size())
        complain("/initial", "q and p must have equal length");
    } else {
      complain("/initial", "must be an object");
    }
  }

  // time
  if (doc.contains("time")) {
    const Json& tm = doc.at("time");
    if (!tm.is_object()) {
      complain("/time", "must be an object");
    } else {
      cfg.t0 = tm.value("t0", 0.0);
      cfg.T = tm.value("T", 1.0);
      if (!(cfg.T >= 0.0)) complain("/time/T", "must be >= 0");
      if (tm.contains("output_times")) {
        const Json& ot = tm.at("output_times");
        if (!ot.is_array() || ot.empty())
          complain("/time/output_times", "must be a non-empty array");
        else
          for (const auto& v : ot) cfg.output_times.push_back(v.get<double>());
        for (std::size_t i = 1; i < cfg.output_times.size(); ++i)
          if (!(cfg.output_times[i] > cfg.output_times[i - 1]))
            complain("/time/output_times", "must be strictly increasing");
        if (!cfg.output_times.empty() &&
            (cfg.output_times.front() < cfg.t0 ||
             cfg.output_times.back() > cfg.t0 + cfg.T + 1e-12))
          complain("/time/output_times", "must lie within [t0, t0 + T]");
      } else {
        int outputs = tm.value("outputs", 8);
        if (outputs < 1) {
          complain("/time/outputs", "must be >= 1");
        } else {
          for (int k = 1; k <= outputs; ++k)
            cfg.output_times.push_back(cfg.t0 + cfg.T * k / outputs);
        }
      }
    }
  } else {
    cfg.output_times = {cfg.t0 + cfg.T};
  }

  // flow
  if (doc.contains("flow")) {
    const Json& fl = doc.at("flow");
    cfg.flow_tolerance = fl.value("tolerance", 1e-10);
    cfg.condition_cap = fl.value("condition_cap", 1e8);
    cfg.invariant_threshold = fl.value("invariant_threshold", 1e-8);
    if (cfg.flow_tolerance < 1e-13 || cfg.flow_tolerance > 1e-6)
      complain("/flow/tolerance", "must lie in [1e-13, 1e-6]");
    if (!(cfg.condition_cap > 1.0))
      complain("/flow/condition_cap", "must be > 1");
  }

  // quadrature
  if (doc.contains("quadrature")) {
    const Json& q = doc.at("quadrature");
    cfg.quad_rho = q.value("rho", 6.0);
    cfg.quad_width = q.value("width", 1.0);
    cfg.node_cap = q.value("node_cap", 1e7);
    if (q.contains("spacing_factor"))
      cfg.spacing_factors = {q.at("spacing_factor").get<double>()};
    if (q.contains("spacing_factors")) {
      cfg.spacing_factors.clear();
      for (const auto& v : q.at("spacing_factors"))
        cfg.spacing_factors.push_back(v.get<double>());
    }
    if (!(cfg.quad_width > 0.0) || !(cfg.quad_width < cfg.quad_rho))
      complain("/quadrature/width", "need 0 < width < rho");
    for (double c : cfg.spacing_factors)
      if (!(c > 0.0)) complain("/quadrature/spacing_factor", "must be > 0");
  }

  // vanvleck
  if (doc.contains("vanvleck")) {
    const Json& v = doc.at("vanvleck");
    if (v.contains("y") && !detail::read_vec(v.at("y"), cfg.vv_y))
      complain("/vanvleck/y", "numeric array expected");
    if (v.contains("x") && !detail::read_vec(v.at("x"), cfg.vv_x))
      complain("/vanvleck/x", "numeric array expected");
    cfg.vv_n_starts = v.value("n_starts", 32);
    cfg.vv_tol = v.value("tol", 1e-10);
    cfg.maslov_method = v.value("maslov_method", std::string("crossing"));
    if (cfg.maslov_method != "crossing" && cfg.maslov_method != "eigenphase")
      complain("/vanvleck/maslov_method", "must be crossing or eigenphase");
    if (cfg.vv_n_starts < 1) complain("/vanvleck/n_starts", "must be >= 1");
    if (!(cfg.vv_tol > 0.0)) complain("/vanvleck/tol", "must be > 0");
    if (v.contains("search_box")) {
      Vec lo, hi;
      bool ok = v.at("search_box").is_object() &&
                v.at("search_box").contains("lo") &&
                v.at("search_box").contains("hi") &&
                detail::read_vec(v.at("search_box").at("lo"), lo) &&
                detail::read_vec(v.at("search_box").at("hi"), hi) &&
                lo.size() == hi.size();
      if (ok)
        for (Eigen::Index j = 0; j < lo.size(); ++j) ok &= lo[j] < hi[j];
      if (!ok)
        complain("/vanvleck/search_box", "needs numeric lo < hi arrays");
      else
        cfg.vv_search_box = Box{lo, hi};
    }
    if (v.contains("panel_x"))
      for (const auto& e : v.at("panel_x")) cfg.panel_x.push_back(e.get<double>());
    if (v.contains("panel_y"))
      for (const auto& e : v.at("panel_y")) cfg.panel_y.push_back(e.get<double>());
  }

  // grid
  if (doc.contains("grid")) {
    const Json& g = doc.at("grid");
    cfg.grid_n = g.value("n", 1024);
    if (cfg.grid_n < 2 || (cfg.grid_n & (cfg.grid_n - 1)) != 0)
      complain("/grid/n", "must be a power of two >= 2");
    if (g.contains("box")) {
      Vec lo, hi;
      bool ok = g.at("box").is_object() && g.at("box").contains("lo") &&
                g.at("box").contains("hi") &&
                detail::read_vec(g.at("box").at("lo"), lo) &&
                detail::read_vec(g.at("box").at("hi"), hi) &&
                lo.size() == hi.size();
      if (ok)
        for (Eigen::Index j = 0; j < lo.size(); ++j) ok &= lo[j] < hi[j];
      if (!ok)
        complain("/grid/box", "needs numeric lo < hi arrays");
      else
        cfg.grid_box = Box{lo, hi};
    }
    cfg.split_step_dt = g.value("dt", 1e-4);
    if (!(cfg.split_step_dt > 0.0)) complain("/grid/dt", "must be > 0");
  }

  // output
  if (doc.contains("output")) {
    const Json& o = doc.at("output");
    if (o.is_object())
      cfg.output_directory = o.value("directory", std::string("out"));
    else
      complain("/output", "must be an object");
  }

  // scenario-specific requirements
  auto require_initial = [&] {
    if (cfg.initial_q.size() == 0 && cfg.superposition.empty())
      complain("/initial", "scenario requires an initial state");
  };
  if (cfg.scenario == "propagate-packet" || cfg.scenario == "residual-sweep" ||
      cfg.scenario == "invariants") {
    if (cfg.initial_q.size() == 0)
      complain("/initial", "scenario requires q and p");
  } else if (cfg.scenario == "propagate-state") {
    require_initial();
  } else if (cfg.scenario == "vanvleck" || cfg.scenario == "kernel-compare") {
    if (cfg.vv_y.size() == 0) complain("/vanvleck/y", "required");
    if (cfg.vv_x.size() == 0) complain("/vanvleck/x", "required");
    if (!cfg.vv_search_box) complain("/vanvleck/search_box", "required");
  }
  if (cfg.scenario == "residual-sweep" && cfg.hbar_list.size() < 2)
    complain("/hbar", "residual-sweep needs a list of at least two hbar values");
  if (cfg.scenario == "kernel-compare") {
    if (cfg.hbar_list.size() < 2)
      complain("/hbar", "kernel-compare needs a list of at least two hbar values");
    if (cfg.panel_x.empty()) complain("/vanvleck/panel_x", "required");
    if (cfg.panel_y.empty()) complain("/vanvleck/panel_y", "required");
  }

  if (out && issues.empty()) *out = std::move(cfg);
  return issues;
}

/// Parse-or-throw wrapper used by the CLI run path.
inline ScenarioConfig parse_config(const Json& doc) {
  ScenarioConfig cfg;
  std::vector<ConfigIssue> issues = validate_config(doc, &cfg);
  if (!issues.empty()) {
    std::string msg = "invalid config:";
    for (const auto& issue : issues)
      msg += "\n  " + issue.path + ": " + issue.message;
    throw ConfigError(msg);
  }
  return cfg;
}

}  // namespace agwp
