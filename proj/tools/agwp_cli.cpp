// Config-driven batch front end: `agwp run <config.json>` executes one
// scenario and emits data files plus a run manifest; `agwp validate`
// checks a config without computing anything.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "agwp/agwp.hpp"

namespace {

agwp::Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw agwp::ConfigError("cannot open config file: " + path);
  agwp::Json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw agwp::ConfigError(std::string("config is not valid JSON: ") +
                            e.what());
  }
  return doc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"agwp: anisotropic Gaussian wave packet toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  int jobs = agwp::default_jobs();
  std::uint64_t seed = 0;

  CLI::App* run = app.add_subcommand("run", "execute a scenario config");
  run->add_option("config", config_path, "JSON config file")->required();
  run->add_option("--output-dir", output_dir, "override the output directory");
  run->add_option("--jobs", jobs, "max worker threads");
  run->add_option("--seed", seed, "seed for multistart shooting");

  CLI::App* validate =
      app.add_subcommand("validate", "validate a scenario config");
  std::string validate_path;
  validate->add_option("config", validate_path, "JSON config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      agwp::Json doc = load_json(validate_path);
      std::vector<agwp::ConfigIssue> issues = agwp::validate_config(doc);
      if (issues.empty()) {
        std::puts("config ok");
        return agwp::exit_ok;
      }
      for (const agwp::ConfigIssue& issue : issues)
        std::fprintf(stderr, "error at %s: %s\n", issue.path.c_str(),
                     issue.message.c_str());
      return agwp::exit_config;
    }

    agwp::Json doc = load_json(config_path);
    agwp::ScenarioConfig cfg;
    std::vector<agwp::ConfigIssue> issues = agwp::validate_config(doc, &cfg);
    if (!issues.empty()) {
      for (const agwp::ConfigIssue& issue : issues)
        std::fprintf(stderr, "error at %s: %s\n", issue.path.c_str(),
                     issue.message.c_str());
      return agwp::exit_config;
    }

    agwp::RunOverrides over;
    if (!output_dir.empty()) over.output_directory = output_dir;
    over.jobs = jobs;
    over.seed = seed;

    agwp::RunResult result = agwp::run_scenario(cfg, over);
    for (const std::string& w : result.warnings)
      std::fprintf(stderr, "warning: %s\n", w.c_str());
    for (const agwp::CheckResult& c : result.checks)
      std::printf("%s %s (value %.6g, threshold %s %.6g)\n",
                  c.passed ? "PASS" : "FAIL", c.name.c_str(), c.value,
                  c.comparison.c_str(), c.threshold);
    std::printf("outputs in %s\n", result.output_directory.string().c_str());
    return result.exit_code;
  } catch (const agwp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return agwp::exit_config;
  } catch (const agwp::Error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return agwp::exit_numerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
