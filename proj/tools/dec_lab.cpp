#include "declab/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

// Exit status: 0 all checks pass, 1 a check failed or the run hit a numerical or output failure,
// 2 usage or configuration error (nothing is written).
int main(int argc, char** argv) {
  using namespace declab;
  CLI::App app{"dec_lab: verification pipelines for initial data sets and the dominant energy condition"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path, out_dir, format = "json", dataset;
  std::vector<std::string> sets;
  int n = 0;
  long long seed = -1;
  bool no_timing = false;

  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name, "run " + name);
    sub->add_option("--config", config_path, "config file (key = value with [section] headers)");
    sub->add_option("--out", out_dir, "output directory (default: out)");
    sub->add_option("--set", sets, "override a config key, key=value (repeatable)");
    sub->add_option("--format", format, "report format")->check(CLI::IsMember({"json", "csv", "both"}));
    sub->add_option("--n", n, "spatial dimension");
    sub->add_option("--dataset", dataset, "dataset name");
    sub->add_option("--seed", seed, "random seed");
    sub->add_flag("--no-timing", no_timing, "record zero runtimes for byte-identical reports");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  RunReport report;
  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
    const std::string command = app.get_subcommands().front()->get_name();
    if (!cfg.command.empty() && cfg.command != command)
      throw ConfigError("config file is for '" + cfg.command + "', not '" + command + "'");
    cfg.command = command;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
      cfg.values[s.substr(0, eq)] = s.substr(eq + 1);
    }
    if (n > 0) cfg.values["n"] = std::to_string(n);
    if (!dataset.empty()) cfg.values["dataset"] = dataset;
    if (seed >= 0) cfg.values["seed"] = std::to_string(seed);
    if (no_timing) cfg.values["timing"] = "false";
    report = run_command(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "dec_lab: " << e.what() << "\n" << app.get_subcommands().front()->help();
    return 2;
  }

  try {
    emit_report(report, cfg.out_dir, format);
  } catch (const std::exception& e) {
    std::cerr << "dec_lab: " << e.what() << "\n";
    return 1;
  }
  for (const auto& c : report.checks)
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " measured=" << c.measured << " tol=" << c.tolerance << "\n";
  if (!report.error.empty()) std::cerr << "dec_lab: " << report.error << "\n";
  return report.all_pass() ? 0 : 1;
}
