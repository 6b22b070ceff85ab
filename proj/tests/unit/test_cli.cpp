#include "declab/cli.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

using namespace declab;

namespace {

RunConfig flat_config(const std::string& out) {
  RunConfig c;
  c.command = "check-constraints";
  c.out_dir = out;
  c.values = {{"dataset", "flat"}, {"n", "3"}, {"grid.h", "0.2"}, {"grid.half_points", "4"}, {"timing", "false"}};
  return c;
}

std::size_t count_lines(const std::string& s) {
  std::istringstream in(s);
  std::string line;
  std::size_t k = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++k;
  return k;
}

}  // namespace

TEST_CASE("config sections, comments and typed lookups") {
  const auto c = parse_config(
      "# run\ncommand = adm\nout = results\nn = 5 ; trailing\n[grid]\nh = 0.05\ncenter = 0.1, 0.2 0.3\n[pp]\namplitude=2\n"
      "flag = yes\n");
  CHECK(c.command == "adm");
  CHECK(c.out_dir == "results");
  CHECK(c.get("n", 0) == 5);
  CHECK(c.get("grid.h", 1.0) == doctest::Approx(0.05));
  CHECK(c.get_list("grid.center", {}) == std::vector<double>{0.1, 0.2, 0.3});
  CHECK(c.get("pp.amplitude", 0.0) == 2.0);
  CHECK(c.get("pp.flag", false));
  CHECK(c.get("missing", 7) == 7);
}

TEST_CASE("malformed config is rejected") {
  CHECK_THROWS_AS(parse_config("n 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("n = 4\nn = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid\nh = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("= 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("two words = 3\n"), ConfigError);
  const auto c = parse_config("n = four\nh = 0.1x\nk = 2.5\nb = maybe\n");
  CHECK_THROWS_AS(c.get("n", 0), ConfigError);
  CHECK_THROWS_AS(c.get("h", 0.0), ConfigError);
  CHECK_THROWS_AS(c.get("k", 0), ConfigError);
  CHECK_THROWS_AS(c.get("b", true), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), ConfigError);
}

TEST_CASE("report JSON round trip keeps NaN and series") {
  RunReport r;
  r.command = "adm";
  r.config = {{"n", "4"}};
  add_check(r, "ok", 1e-9, 1e-6);
  add_check(r, "lower", 5.0, 3.0, Relation::at_least, 0.25);
  add_check(r, "nan", std::numeric_limits<double>::quiet_NaN(), 1.0);
  r.metrics["pMin"] = -0.125;
  r.series["singularValues"] = {1e-12, 0.5, 2.0};
  r.files["g"] = "fields/g.json";
  CHECK(r.checks[0].pass);
  CHECK(r.checks[1].pass);
  CHECK_FALSE(r.checks[2].pass);
  CHECK_FALSE(r.all_pass());
  const auto back = report_from_json(to_json(r));
  CHECK(back == r);
  CHECK(std::isnan(back.checks[2].measured));
  CHECK(to_json(back) == to_json(r));
}

TEST_CASE("CSV has one row per check") {
  RunReport r;
  r.command = "kernel";
  for (int i = 0; i < 4; ++i) add_check(r, "c" + std::to_string(i), i, 10.0);
  const auto csv = to_csv(r);
  CHECK(count_lines(csv) == r.checks.size() + 1);
  CHECK(csv.rfind("name,status,measured,tolerance,relation,runtime_seconds", 0) == 0);
}

TEST_CASE("empty report is valid and carries the version") {
  RunReport r;
  r.command = "adm";
  CHECK(r.all_pass());
  const auto j = to_json(r);
  CHECK(j.find(kReportSchema) != std::string::npos);
  CHECK(j.find(kVersion) != std::string::npos);
  CHECK(report_from_json(j) == r);
  CHECK(count_lines(to_csv(r)) == 1);
}

TEST_CASE("flat check-constraints passes and is deterministic without timing") {
  const auto dir = (std::filesystem::temp_directory_path() / "declab_unit_cli").string();
  const auto a = run_command(flat_config(dir));
  CHECK(a.error.empty());
  CHECK(!a.checks.empty());
  CHECK(a.all_pass());
  const auto b = run_command(flat_config(dir));
  CHECK(to_json(a) == to_json(b));
  emit_report(a, dir, "both");
  CHECK(std::filesystem::exists(std::filesystem::path(dir) / "report.json"));
  CHECK(std::filesystem::exists(std::filesystem::path(dir) / "report.csv"));
  CHECK_THROWS_AS(emit_report(a, dir, "xml"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("bad commands and keys are configuration errors") {
  const auto dir = (std::filesystem::temp_directory_path() / "declab_unit_cli_bad").string();
  auto c = flat_config(dir);
  c.values["bogus"] = "1";
  CHECK_THROWS_AS(run_command(c), ConfigError);
  c = flat_config(dir);
  c.values["dataset"] = "minkowski";
  CHECK_THROWS_AS(run_command(c), ConfigError);
  c = flat_config(dir);
  c.values["grid.h"] = "-0.1";
  CHECK_THROWS_AS(run_command(c), ConfigError);
  c = flat_config(dir);
  c.values["grid.center"] = "0, 0";
  CHECK_THROWS_AS(run_command(c), ConfigError);
  c = flat_config(dir);
  c.command = "evolve";
  CHECK_THROWS_AS(run_command(c), ConfigError);
  CHECK_FALSE(std::filesystem::exists(dir));
  for (const auto& name : command_names()) CHECK_FALSE(command_keys(name).empty());
}
