#pragma once

#include "declab/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace declab {

constexpr const char* kVersion = "1.0.0";
constexpr const char* kReportSchema = "dec-lab-report/1";

// Invalid configuration or usage; maps to exit status 2.
struct ConfigError : Error {
  using Error::Error;
};

// Flat key → value map. Section headers [name] prefix the keys that follow as "name.key".
struct RunConfig {
  std::string command;
  std::string out_dir = "out";
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  std::string get(const std::string& key, const std::string& def) const;
  double get(const std::string& key, double def) const;
  int get(const std::string& key, int def) const;
  bool get(const std::string& key, bool def) const;
  std::vector<double> get_list(const std::string& key, const std::vector<double>& def) const;
};

// Parses "key = value" lines with optional [section] headers; '#' and ';' start comments.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

enum class Relation { at_most, at_least };

struct CheckRecord {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  Relation relation = Relation::at_most;
  double runtime_seconds = 0.0;
};

struct RunReport {
  std::string version = kVersion;
  std::string command;
  std::map<std::string, std::string> config;
  std::vector<CheckRecord> checks;
  std::map<std::string, double> metrics;               // reported values without a pass/fail rule
  std::map<std::string, std::vector<double>> series;  // e.g. singularValues
  std::map<std::string, std::string> files;            // output files by role, relative to the output directory
  std::string error;                                   // numerical failure message, empty on success
  bool all_pass() const;
  bool operator==(const RunReport& o) const;
};

// Adds a check; pass iff measured is finite and on the right side of the tolerance.
CheckRecord& add_check(RunReport& r, const std::string& name, double measured, double tolerance,
                       Relation rel = Relation::at_most, double seconds = 0.0);

std::string to_json(const RunReport& r);
RunReport report_from_json(const std::string& text);
std::string to_csv(const RunReport& r);
// format: json, csv or both. Writes report.json / report.csv under dir.
void emit_report(const RunReport& r, const std::string& dir, const std::string& format);

// Runs one of gen-ppwave, check-constraints, adm, deform, kernel, spacetime and writes its field files under
// cfg.out_dir. All keys are validated before anything is computed or written; bad input throws ConfigError.
// Numerical failures are caught and reported as a failing check. The key "timing = false" zeroes the runtimes so
// that reports are byte-identical across runs.
RunReport run_command(const RunConfig& cfg);
// Keys accepted by a command (without the shared keys seed and timing).
std::vector<std::string> command_keys(const std::string& command);
std::vector<std::string> command_names();

}  // namespace declab
