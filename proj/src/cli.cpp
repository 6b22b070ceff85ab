#include "declab/cli.hpp"

#include "declab/adm.hpp"
#include "declab/constraints.hpp"
#include "declab/deformation.hpp"
#include "declab/kernel_probe.hpp"
#include "declab/ppwave.hpp"
#include "declab/spacetime.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace declab {

namespace fs = std::filesystem;

// ---- config ----

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " is not a number: '" + text + "'");
  }
  if (trim(text.substr(used)) != "" || !std::isfinite(v)) throw ConfigError("config: " + key + " is not a number: '" + text + "'");
  return v;
}

}  // namespace

std::string RunConfig::get(const std::string& key, const std::string& def) const {
  auto it = values.find(key);
  return it == values.end() ? def : it->second;
}

double RunConfig::get(const std::string& key, double def) const {
  auto it = values.find(key);
  return it == values.end() ? def : parse_number(key, it->second);
}

int RunConfig::get(const std::string& key, int def) const {
  auto it = values.find(key);
  if (it == values.end()) return def;
  const double v = parse_number(key, it->second);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError("config: " + key + " must be an integer");
  return static_cast<int>(v);
}

bool RunConfig::get(const std::string& key, bool def) const {
  auto it = values.find(key);
  if (it == values.end()) return def;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config: " + key + " is not a boolean: '" + it->second + "'");
}

std::vector<double> RunConfig::get_list(const std::string& key, const std::vector<double>& def) const {
  auto it = values.find(key);
  if (it == values.end()) return def;
  std::string s = it->second;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_number(key, tok));
  if (out.empty()) throw ConfigError("config: " + key + " is an empty list");
  return out;
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto c = line.find_first_of("#;");
    if (c != std::string::npos) line = line.substr(0, c);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (key.find_first_of(" \t") != std::string::npos) throw ConfigError(where + ": key contains whitespace");
    if (!section.empty()) key = section + "." + key;
    if (key == "command") {
      cfg.command = value;
    } else if (key == "out") {
      cfg.out_dir = value;
    } else {
      if (cfg.values.count(key)) throw ConfigError(where + ": duplicate key " + key);
      cfg.values[key] = value;
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---- report ----

bool RunReport::all_pass() const {
  if (!error.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.pass; });
}

namespace {

bool same_double(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

}  // namespace

bool RunReport::operator==(const RunReport& o) const {
  if (version != o.version || command != o.command || config != o.config || files != o.files || error != o.error)
    return false;
  if (checks.size() != o.checks.size() || metrics.size() != o.metrics.size() || series.size() != o.series.size())
    return false;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const auto &a = checks[i], &b = o.checks[i];
    if (a.name != b.name || a.pass != b.pass || a.relation != b.relation || !same_double(a.measured, b.measured) ||
        !same_double(a.tolerance, b.tolerance) || !same_double(a.runtime_seconds, b.runtime_seconds))
      return false;
  }
  for (const auto& [k, v] : metrics) {
    auto it = o.metrics.find(k);
    if (it == o.metrics.end() || !same_double(v, it->second)) return false;
  }
  for (const auto& [k, v] : series) {
    auto it = o.series.find(k);
    if (it == o.series.end() || it->second.size() != v.size()) return false;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (!same_double(v[i], it->second[i])) return false;
  }
  return true;
}

CheckRecord& add_check(RunReport& r, const std::string& name, double measured, double tolerance, Relation rel,
                       double seconds) {
  CheckRecord c;
  c.name = name;
  c.measured = measured;
  c.tolerance = tolerance;
  c.relation = rel;
  c.runtime_seconds = seconds;
  c.pass = std::isfinite(measured) && (rel == Relation::at_most ? measured <= tolerance : measured >= tolerance);
  r.checks.push_back(c);
  return r.checks.back();
}

namespace {

const char* relation_name(Relation r) { return r == Relation::at_most ? "at_most" : "at_least"; }

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;  // NaN and infinities have no JSON form
}

double from_number(const nlohmann::json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string to_json(const RunReport& r) {
  nlohmann::json j;
  j["schema"] = kReportSchema;
  j["version"] = r.version;
  j["command"] = r.command;
  j["config"] = r.config;
  j["allPass"] = r.all_pass();
  j["error"] = r.error;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : r.checks) {
    j["checks"].push_back({{"name", c.name},
                           {"status", c.pass ? "pass" : "fail"},
                           {"measured", number(c.measured)},
                           {"tolerance", number(c.tolerance)},
                           {"relation", relation_name(c.relation)},
                           {"runtimeSeconds", c.runtime_seconds}});
  }
  j["metrics"] = nlohmann::json::object();
  for (const auto& [k, v] : r.metrics) j["metrics"][k] = number(v);
  j["series"] = nlohmann::json::object();
  for (const auto& [k, v] : r.series) {
    auto arr = nlohmann::json::array();
    for (double x : v) arr.push_back(number(x));
    j["series"][k] = arr;
  }
  j["files"] = r.files;
  return j.dump(2) + "\n";
}

RunReport report_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw Error(std::string("report_from_json: ") + e.what());
  }
  if (j.value("schema", "") != kReportSchema) throw Error("report_from_json: unknown schema");
  RunReport r;
  r.version = j.at("version").get<std::string>();
  r.command = j.at("command").get<std::string>();
  r.config = j.at("config").get<std::map<std::string, std::string>>();
  r.error = j.value("error", "");
  for (const auto& c : j.at("checks")) {
    CheckRecord rec;
    rec.name = c.at("name").get<std::string>();
    rec.pass = c.at("status").get<std::string>() == "pass";
    rec.measured = from_number(c.at("measured"));
    rec.tolerance = from_number(c.at("tolerance"));
    rec.relation = c.at("relation").get<std::string>() == "at_least" ? Relation::at_least : Relation::at_most;
    rec.runtime_seconds = c.at("runtimeSeconds").get<double>();
    r.checks.push_back(rec);
  }
  for (const auto& [k, v] : j.at("metrics").items()) r.metrics[k] = from_number(v);
  for (const auto& [k, v] : j.at("series").items()) {
    std::vector<double> xs;
    for (const auto& x : v) xs.push_back(from_number(x));
    r.series[k] = xs;
  }
  r.files = j.at("files").get<std::map<std::string, std::string>>();
  return r;
}

std::string to_csv(const RunReport& r) {
  std::string out = "name,status,measured,tolerance,relation,runtime_seconds\n";
  for (const auto& c : r.checks) {
    out += c.name + "," + (c.pass ? "pass" : "fail") + "," + fmt(c.measured) + "," + fmt(c.tolerance) + "," +
           relation_name(c.relation) + "," + fmt(c.runtime_seconds) + "\n";
  }
  return out;
}

void emit_report(const RunReport& r, const std::string& dir, const std::string& format) {
  if (format != "json" && format != "csv" && format != "both") throw ConfigError("unknown report format " + format);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("emit_report: cannot create " + dir + ": " + ec.message());
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw Error("emit_report: cannot write " + (fs::path(dir) / name).string());
    out << body;
    if (!out) throw Error("emit_report: write failed for " + name);
  };
  if (format != "csv") write("report.json", to_json(r));
  if (format != "json") write("report.csv", to_csv(r));
}

// ---- commands ----

namespace {

using Clock = std::chrono::steady_clock;

const std::vector<std::string> kShared = {"seed", "timing"};
const std::vector<std::string> kGrid = {"n", "grid.h", "grid.half_points", "grid.center"};
const std::vector<std::string> kPP = {"pp.amplitude", "pp.radius", "pp.halfwidth"};

std::vector<std::string> join(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

// Command context: validated lookups, timing and the report under construction.
struct Run {
  const RunConfig& cfg;
  RunReport rep;
  bool timing = true;
  std::uint64_t seed = 1;

  explicit Run(const RunConfig& c) : cfg(c) {
    rep.command = c.command;
    rep.config = c.values;
    timing = c.get("timing", true);
    const double s = c.get("seed", 1.0);
    if (s < 0 || s != std::floor(s)) throw ConfigError("config: seed must be a non-negative integer");
    seed = static_cast<std::uint64_t>(s);
  }

  std::string dataset(const std::vector<std::string>& allowed, const std::string& def) const {
    const std::string d = cfg.get("dataset", def);
    if (std::find(allowed.begin(), allowed.end(), d) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError("dataset '" + d + "' is not one of: " + list);
    }
    return d;
  }

  int dim(int def, int lo, int hi) const {
    const int n = cfg.get("n", def);
    if (n < lo || n > hi) throw ConfigError("n must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return n;
  }

  double positive(const std::string& key, double def) const {
    const double v = cfg.get(key, def);
    if (!(v > 0)) throw ConfigError(key + " must be positive");
    return v;
  }

  int count(const std::string& key, int def, int lo, int hi) const {
    const int v = cfg.get(key, def);
    if (v < lo || v > hi) throw ConfigError(key + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
  }

  grid::ChartGrid chart(int n, double h_def, int hp_def, const Vec& center_def) const {
    const double h = positive("grid.h", h_def);
    const int hp = count("grid.half_points", hp_def, 3, 1000);
    const auto c = cfg.get_list("grid.center", std::vector<double>(center_def.data(), center_def.data() + n));
    if (static_cast<int>(c.size()) != n) throw ConfigError("grid.center must have n entries");
    double total = 1.0;
    for (int a = 0; a < n; ++a) total *= 2.0 * hp + 1;
    if (total > 5e6) throw ConfigError("grid has more than 5e6 points");
    Vec cv(n);
    for (int a = 0; a < n; ++a) cv(a) = c[a];
    return grid::ChartGrid::centered(cv, h, hp);
  }

  PPWaveSpec pp_spec(int n) const {
    PPWaveSpec s;
    s.n = n;
    s.F.amplitude = cfg.get("pp.amplitude", s.F.amplitude);
    s.F.radius = cfg.get("pp.radius", s.F.radius);
    s.bump.halfwidth = cfg.get("pp.halfwidth", s.bump.halfwidth);
    try {
      validate(s);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    return s;
  }

  double seconds(Clock::time_point t0) const {
    return timing ? std::chrono::duration<double>(Clock::now() - t0).count() : 0.0;
  }

  void check(const std::string& name, double measured, double tol, Relation rel, Clock::time_point t0) {
    add_check(rep, name, measured, tol, rel, seconds(t0));
  }
};

Vec pp_center(int n) {
  Vec c = Vec::Zero(n);
  c(0) = 0.3;
  c(n - 1) = 0.2;
  return c;
}

double field_max(const grid::TensorField& f, const std::vector<std::size_t>& pts) {
  double m = 0.0;
  for (auto p : pts)
    for (int c = 0; c < f.ncomp(); ++c) m = std::max(m, std::abs(f.at(p, c)));
  return m;
}

double field_max_diff(const grid::TensorField& a, const grid::TensorField& b, const std::vector<std::size_t>& pts) {
  double m = 0.0;
  for (auto p : pts)
    for (int c = 0; c < a.ncomp(); ++c) m = std::max(m, std::abs(a.at(p, c) - b.at(p, c)));
  return m;
}

double adjoint_max(const AdjointFields& a, const std::vector<std::size_t>& pts) {
  return std::max(field_max(a.cov, pts), field_max(a.contra, pts));
}

double summary_max(const std::vector<ResidualSummary>& rs, const std::string& name) {
  for (const auto& r : rs)
    if (r.name == name) return r.max_abs;
  throw Error("missing residual " + name);
}

std::string tag(const char* prefix, double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s[t=%+g]", prefix, t);
  return buf;
}

void write_fields(Run& run, const std::vector<std::pair<std::string, const grid::TensorField*>>& fields) {
  const fs::path dir = fs::path(run.cfg.out_dir) / "fields";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string());
  for (const auto& [name, f] : fields) {
    grid::write_field(*f, (dir / name).string());
    run.rep.files[name] = "fields/" + name + ".json";
  }
}

// ---- gen-ppwave ----

void gen_ppwave(Run& run) {
  const int n = run.dim(4, 3, 9);
  const PPWaveData pp(run.pp_spec(n));
  const grid::ChartGrid G = run.chart(n, 0.1, 5, pp_center(n));

  auto t0 = Clock::now();
  const PPGridData gd = pp_initial_data(pp, G);
  std::vector<Vec> pts;
  for (std::size_t p = 0; p < G.size(); ++p) pts.push_back(G.coords(p));
  const PPCheck pc = pp_closed_form_check(pp, pts);
  run.check("closed_sigma_max", pc.max_sigma, 1e-12, Relation::at_most, t0);
  run.check("closed_mu_minus_absJ", pc.max_mu_minus_J, 1e-12, Relation::at_most, t0);
  run.check("min_S", pc.min_S, 0.0, Relation::at_least, t0);
  run.check("max_transverse_laplacian_S", pc.max_lapS, 1e-12, Relation::at_most, t0);
  run.check("laplacian_identity", pc.lap_identity, 1e-10, Relation::at_most, t0);
  run.rep.metrics["gridPoints"] = static_cast<double>(G.size());
  write_fields(run, {{"g", &gd.data.g}, {"pi", &gd.data.pi}, {"f", &gd.pair.f}, {"X", &gd.pair.X},
                     {"mu", &gd.closed.mu}, {"J", &gd.closed.J}, {"sigma", &gd.closed.sigma}});
}

// ---- check-constraints ----

void check_constraints(Run& run) {
  const std::string ds = run.dataset({"flat", "ppwave", "schwarzschild", "file"}, "flat");
  const double tol = run.positive("tolerance", 1e-3);

  InitialData d;
  std::optional<LapseShift> pair;
  std::shared_ptr<Background> bg;
  std::shared_ptr<PPWaveData> pp;
  if (ds == "file") {
    const std::string in = run.cfg.get("input", std::string());
    if (in.empty()) throw ConfigError("dataset file needs input = <directory of field files>");
    for (const char* f : {"g", "pi"})
      if (!fs::exists(fs::path(in) / (std::string(f) + ".json"))) throw ConfigError("missing field file " + (fs::path(in) / f).string() + ".json");
    const bool has_pair = fs::exists(fs::path(in) / "f.json") && fs::exists(fs::path(in) / "X.json");
    try {
      d.g = grid::read_field((fs::path(in) / "g").string());
      d.pi = grid::read_field((fs::path(in) / "pi").string());
      validate(d);
      if (has_pair) pair = LapseShift{grid::read_field((fs::path(in) / "f").string()), grid::read_field((fs::path(in) / "X").string())};
    } catch (const Error& e) {
      throw ConfigError(std::string("invalid input fields: ") + e.what());
    }
  } else if (ds == "flat") {
    const int n = run.dim(3, 2, 9);
    bg = std::make_shared<FlatBackground>(n);
    const auto G = run.chart(n, 0.1, 5, Vec::Zero(n));
    d = sample_data(*bg, G);
    pair = sample_pair(G, [n](const Vec&) {
      PairJet p;
      p.f = Jet2(n, 1.0);
      p.X = VecJet::zero(n);
      return p;
    });
  } else if (ds == "schwarzschild") {
    const int n = run.dim(3, 3, 9);
    const double m = run.positive("mass", 1.0);
    bg = std::make_shared<SchwarzschildBackground>(n, m);
    Vec c = Vec::Zero(n);
    c(0) = 2.0;
    c(1) = 1.0;
    const auto G = run.chart(n, 0.1, 5, c);
    for (std::size_t p = 0; p < G.size(); ++p)
      if (G.coords(p).norm() < 0.5 * m) throw ConfigError("grid reaches the horizon region |x| < m/2");
    d = sample_data(*bg, G);
  } else {
    const int n = run.dim(4, 3, 9);
    pp = std::make_shared<PPWaveData>(run.pp_spec(n));
    bg = pp;
    d = pp_initial_data(*pp, run.chart(n, 0.1, 5, pp_center(n))).data;
  }
  const auto& G = d.g.grid;
  const auto pts = G.interior_points();
  if (pts.empty()) throw ConfigError("grid has no interior points");

  auto t0 = Clock::now();
  const ConstraintFields cm = constraint_map(d);
  run.rep.metrics["sigmaMin"] = cm.min_sigma;
  run.rep.metrics["interiorPoints"] = static_cast<double>(pts.size());
  if (ds == "flat") {
    run.check("max_abs_mu", field_max(cm.mu, pts), 1e-12, Relation::at_most, t0);
    run.check("max_abs_J", field_max(cm.J, pts), 1e-12, Relation::at_most, t0);
    run.check("sigma_min", cm.min_sigma, -1e-12, Relation::at_least, t0);
  } else if (ds == "schwarzschild") {
    run.check("max_abs_mu", field_max(cm.mu, pts), tol, Relation::at_most, t0);
    run.check("max_abs_J", field_max(cm.J, pts), 1e-12, Relation::at_most, t0);
    run.check("sigma_min", cm.min_sigma, -tol, Relation::at_least, t0);
  } else if (ds == "ppwave") {
    const PPGridData gd = pp_initial_data(*pp, G);
    const double smu = std::max(field_max(gd.closed.mu, pts), 1e-300);
    const double sJ = std::max(field_max(gd.closed.J, pts), 1e-300);
    run.check("rel_mu_vs_closed", field_max_diff(cm.mu, gd.closed.mu, pts) / smu, tol, Relation::at_most, t0);
    run.check("rel_J_vs_closed", field_max_diff(cm.J, gd.closed.J, pts) / sJ, tol, Relation::at_most, t0);
    run.check("sigma_min", cm.min_sigma, -tol, Relation::at_least, t0);
    pair = gd.pair;
  } else {
    run.check("sigma_min", cm.min_sigma, -tol, Relation::at_least, t0);
  }

  if (!pair) return;
  t0 = Clock::now();
  const double adj = adjoint_max(adjoint_eval(d, *pair, OperatorKind::bar), pts);
  const double nul = summary_max(j_null_gradf_residuals(d, *pair), "j-null-vector");
  run.rep.metrics["gridAdjointMax"] = adj;
  run.rep.metrics["gridNullVectorMax"] = nul;
  if (ds == "ppwave") {
    // Exact jets at the interior points, then the grid residual against the stencil truncation scale.
    double cadj = 0.0, cnul = 0.0;
    for (auto p : pts) {
      const Vec x = G.coords(p);
      const DataJet dj = pp->data(x);
      const PairJet fx = *pp->pair(x);
      const AdjointValue a = adjoint_at(OperatorKind::bar, dj, fx);
      cadj = std::max({cadj, a.cov.cwiseAbs().maxCoeff(), a.contra.cwiseAbs().maxCoeff()});
      const GradfResiduals gr = gradf_residuals_at(dj, pp->closed_constraints(x)->second, fx);
      cnul = std::max(cnul, gr.null_vector.cwiseAbs().maxCoeff());
    }
    run.check("closed_adjoint_max", cadj, 1e-6, Relation::at_most, t0);
    run.check("closed_null_vector_max", cnul, 1e-6, Relation::at_most, t0);
    const double trunc = stencil_truncation(*pp, d, &*pair, [&](const Vec& x) { return *pp->pair(x); });
    run.rep.metrics["stencilTruncation"] = trunc;
    run.check("grid_adjoint_over_truncation", adj / trunc, 10.0, Relation::at_most, t0);
    run.check("grid_null_vector_over_truncation", nul / trunc, 10.0, Relation::at_most, t0);
  } else {
    const double t = ds == "flat" ? 1e-12 : tol;
    run.check("grid_adjoint_max", adj, t, Relation::at_most, t0);
    run.check("grid_null_vector_max", nul, t, Relation::at_most, t0);
  }
}

// ---- adm ----

void adm(Run& run) {
  const std::string ds = run.dataset({"flat", "schwarzschild", "ppwave"}, "flat");
  const int n = ds == "ppwave" ? run.dim(4, 3, 9) : run.dim(3, 3, 9);
  std::vector<double> def_radii = ds == "flat" ? std::vector<double>{10, 20, 40}
                                  : ds == "schwarzschild" ? std::vector<double>{50, 100, 200}
                                                          : std::vector<double>{1e4, 2e4, 4e4};
  const auto radii = run.cfg.get_list("radii", def_radii);
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (!(radii[i] > 0) || (i > 0 && radii[i] <= radii[i - 1])) throw ConfigError("radii must be positive and increasing");
  const int angle = run.count("angle_nodes", ds == "ppwave" ? (n > 5 ? 2 : 4) : ds == "schwarzschild" ? 12 : 16, 2, 64);
  const int axis = run.count("axis_nodes", 16, 2, 128);
  const double m = run.positive("mass", 1.0);
  std::optional<PPWaveSpec> spec;
  if (ds == "ppwave") spec = run.pp_spec(n);

  auto t0 = Clock::now();
  ADMResult a;
  if (ds == "flat") {
    SurfaceOptions so;
    so.angle_nodes = angle;
    a = adm_energy_momentum(flux_source(FlatBackground(n)), n, radii, so);
    run.check("abs_E_plus_abs_P", std::abs(a.E) + a.P.norm(), 1e-10, Relation::at_most, t0);
  } else if (ds == "schwarzschild") {
    SurfaceOptions so;
    so.angle_nodes = angle;
    a = adm_energy_momentum(flux_source(SchwarzschildBackground(n, m)), n, radii, so);
    run.check("rel_mass_error", std::abs(a.E - m) / m, 1e-3, Relation::at_most, t0);
    run.check("abs_P", a.P.norm(), 1e-10, Relation::at_most, t0);
  } else {
    const PPWaveData pp(*spec);
    a = pp_adm(pp, radii, angle, axis);
    run.check("rel_E_plus_Pn", std::abs(a.E + a.P(n - 1)) / std::abs(a.E), 1e-6, Relation::at_most, t0);
    run.check("max_abs_P_transverse", a.P.head(n - 1).cwiseAbs().maxCoeff(), 1e-8, Relation::at_most, t0);
    run.check("rel_E_vs_radial_flux", std::abs(a.E - pp.energy_oracle()) / std::abs(pp.energy_oracle()), 1e-6,
              Relation::at_most, t0);
    run.rep.metrics["energyOracle"] = pp.energy_oracle();
  }
  run.rep.metrics["E"] = a.E;
  for (int i = 0; i < n; ++i) run.rep.metrics["P" + std::to_string(i + 1)] = a.P(i);
  run.rep.metrics["fittedDecay"] = a.fitted_p;
  run.rep.series["radii"] = a.radii;
  run.rep.series["partialE"] = a.partial_E;
}

// ---- deform ----

void deform(Run& run) {
  const int n = run.dim(5, 3, 9);
  auto pp = std::make_shared<PPWaveData>(run.pp_spec(n));
  const double r0 = run.positive("r0", 2.0);
  const double delta = run.positive("delta", default_delta(n - 3.0));
  if (delta >= 1.0) throw ConfigError("delta must lie in (0, 1)");
  const auto ts = run.cfg.get_list("t", {-0.1, -0.05, 0.05, 0.1});
  const auto radii = run.cfg.get_list("radii", {1e3, 2e3, 4e3});
  const int angle = run.count("angle_nodes", 10, 2, 64);
  const double mu_h = run.positive("mu_h", 0.16);
  const int mu_points = run.count("mu_points", 20, 1, 10000);
  const int samples = run.count("exterior_samples", 1000, 1, 1000000);
  for (double t : ts) {
    ConformalFamily fam(pp, r0, delta, t);
    if (std::abs(t) >= fam.positivity_bound()) throw ConfigError("|t| exceeds the positivity bound of u_t");
  }

  const double E = pp->energy_oracle();
  Vec P = Vec::Zero(n);
  P(n - 1) = -E;
  run.rep.metrics["E"] = E;
  std::vector<Vec> mu_pts;
  for (int k = 0; k < mu_points; ++k) {
    const double r = r0 * 1.1 + 0.2 * k;
    Vec x = Vec::Zero(n);
    for (int a = 0; a + 1 < n; ++a) x(a) = 0.1 * (a + 1) + 0.2 * (a % 2);
    x *= r / x.norm();
    x(n - 1) = 0.3;
    mu_pts.push_back(x);
  }
  for (double t : ts) {
    const ConformalFamily fam(pp, r0, delta, t);
    auto t0 = Clock::now();
    SurfaceOptions so;
    so.angle_nodes = angle;
    so.xn_breaks = {-pp->slab(), pp->slab()};
    const FamilyADM fa = family_adm(fam, radii, so);
    run.check(tag("energy_shift", t), std::abs(fa.adm.E - (E - t)), 1e-3 * (1 + std::abs(t)), Relation::at_most, t0);
    run.check(tag("momentum_shift", t), (fa.adm.P - P).norm(), 1e-3, Relation::at_most, t0);
    run.rep.metrics[tag("E", t)] = fa.adm.E;
    t0 = Clock::now();
    const MuCheck mc = mu_t_check(fam, mu_pts, mu_h);
    run.check(tag("mu_closed_vs_fd", t), mc.rel_u_fd, 1e-8, Relation::at_most, t0);
    run.rep.metrics[tag("J_closed_vs_fd", t)] = mc.rel_J_u_fd;
    if (t > 0) {
      t0 = Clock::now();
      const double r1 = find_r1(fam, {4, 6, 8, 12, 16, 24, 32}, 10, pp->slab(), 200, run.seed + 6);
      const auto sm = exterior_samples(n, r1, 10, pp->slab(), samples, run.seed + 10);
      const ExteriorReport er = exterior_sigma_check(fam, r1, sm);
      run.check(tag("exterior_sigma_violations", t), er.violations + (er.criterion_ok ? 0 : 1), 0, Relation::at_most, t0);
      run.rep.metrics[tag("r1", t)] = r1;
      run.rep.metrics[tag("exteriorMinRelMargin", t)] = er.min_rel_margin;
    }
  }
}

// ---- kernel ----

void kernel(Run& run) {
  const std::string ds = run.dataset({"flat", "ppwave"}, "flat");
  const int n = run.dim(3, 2, 3);
  if (ds == "ppwave" && n < 3) throw ConfigError("ppwave needs n >= 3");
  const int degree = run.count("degree", ds == "flat" ? 4 : 8, 1, 12);
  const double box = run.positive("box", 0.5);
  const int hp = run.count("grid.half_points", 9, 4, 12);
  const double gap_factor = run.positive("gap_factor", 1e-3);

  auto t0 = Clock::now();
  const auto G = grid::ChartGrid::centered(Vec::Zero(n), box / (hp - 2), hp);
  const int m = G.shape()[0];
  const std::vector<int> lo(n, 2), hi(n, m - 3);
  KernelOptions opt;
  opt.degree = degree;
  opt.gap_factor = gap_factor;
  KernelReport kr;
  if (ds == "flat") {
    const InitialData d = sample_data(FlatBackground(n), G);
    kr = kernel_search(d, nullptr, lo, hi, 1, opt);
    const int expect = (n + 1) * (n + 2) / 2;
    run.check("kernel_dim_deviation", std::abs(kr.kernel_dim - expect), 0, Relation::at_most, t0);
    run.check("gap", kr.gap, 1e3, Relation::at_least, t0);
  } else {
    const auto pp = local_pp_background(n);
    const PPGridData gd = pp_initial_data(*pp, G);
    const ModifierPair mp{grid::TensorField(G, 0, 0), gd.closed.J};
    opt.kind = OperatorKind::modified;
    kr = kernel_search(gd.data, &mp, lo, hi, 1, opt);
    run.check("kernel_dim_deviation", std::abs(kr.kernel_dim - 1), 0, Relation::at_most, t0);
    run.check("gap", kr.gap, 1e3, Relation::at_least, t0);
    run.check("candidate_cosine", candidate_cosine(kr, [pp](const Vec& x) { return *pp->pair(x); }), 0.999,
              Relation::at_least, t0);
    run.check("null_vector_residual", kr.null_vector_residual, 1e-3, Relation::at_most, t0);
  }
  run.rep.metrics["kernelDim"] = kr.kernel_dim;
  run.rep.metrics["nullVectorResidual"] = kr.null_vector_residual;
  run.rep.metrics["rows"] = kr.rows;
  run.rep.metrics["cols"] = kr.cols;
  run.rep.series["singularValues"] = kr.singular_values;

  const fs::path dir = fs::path(run.cfg.out_dir) / "fields";
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "candidate.csv");
  if (!out) throw Error("cannot write candidate.csv");
  for (int a = 0; a < n; ++a) out << "x" << a + 1 << ",";
  out << "f";
  for (int a = 0; a < n; ++a) out << ",X" << a + 1;
  out << "\n";
  for (std::size_t i = 0; i < kr.points.size(); ++i) {
    for (int a = 0; a < n; ++a) out << fmt(kr.points[i](a)) << ",";
    out << fmt(kr.cand_f[i]);
    for (int a = 0; a < n; ++a) out << "," << fmt(kr.cand_X[i](a));
    out << "\n";
  }
  run.rep.files["candidate"] = "fields/candidate.csv";
}

// ---- spacetime ----

void spacetime(Run& run) {
  const std::string ds = run.dataset({"ppwave", "random"}, "ppwave");
  const int n = run.dim(4, 3, 9);
  const int npts = run.count("points", 30, 1, 100000);
  const int dec = run.count("dec_samples", 10000, 1, 100000000);
  const double fd_h = run.positive("fd_h", 0.05);
  const double amp = run.positive("amplitude", 0.1);
  std::optional<PPWaveSpec> spec;
  if (ds == "ppwave") spec = run.pp_spec(n);

  std::mt19937_64 rng(run.seed);
  std::uniform_real_distribution<double> U(-0.9, 0.9);
  std::vector<Vec> pts(npts, Vec(n));
  for (auto& x : pts)
    for (int a = 0; a < n; ++a) x(a) = U(rng);

  auto t0 = Clock::now();
  SpacetimeCheck sc;
  if (ds == "ppwave") {
    auto pp = std::make_shared<PPWaveData>(*spec);
    KillingDevelopment dev(pp);
    sc = spacetime_check(dev, pts, dec, run.seed + 1, fd_h, [pp](const Vec& x) { return pp->ambient_metric(x); });
    run.check("expansion_vs_ambient", sc.expansion, 1e-12, Relation::at_most, t0);
  } else {
    auto bg = random_killing_background(n, run.seed, amp);
    KillingDevelopment dev(bg);
    sc = spacetime_check(dev, pts, dec, run.seed + 1, fd_h);
  }
  run.check("closed_normal", sc.closed_normal, 1e-10, Relation::at_most, t0);
  run.check("closed_tangential", sc.closed_tangential, 1e-10, Relation::at_most, t0);
  run.check("fd_vs_closed", sc.fd_vs_closed, 1e-5, Relation::at_most, t0);
  run.check("killing_residual", sc.killing_residual, 1e-10, Relation::at_most, t0);
  if (ds == "ppwave") {
    run.check("decomposition_residual", sc.fluid.max_residual, 1e-6, Relation::at_most, t0);
    run.check("p_std_dev", sc.fluid.p_std, 1e-8, Relation::at_most, t0);
    run.check("dec_min_sample", sc.dec_min, -1e-8, Relation::at_least, t0);
    t0 = Clock::now();
    std::mt19937_64 srng(run.seed + 2);
    Vec om = Vec::Zero(n);
    om(0) = 1.0;
    const DecSample syn = dec_sample_check(synthetic_null_fluid(n, 0.1, om), dec, srng);
    run.check("synthetic_p_rejected", syn.min_value, -1e-8, Relation::at_most, t0);
  }
  run.rep.metrics["pMin"] = sc.fluid.p_min;
  run.rep.metrics["pMax"] = sc.fluid.p_max;
  run.rep.metrics["pStdDev"] = sc.fluid.p_std;
  run.rep.metrics["decompositionResidual"] = sc.fluid.max_residual;
  run.rep.metrics["decMinSample"] = sc.dec_min;
  run.rep.metrics["decSamples"] = sc.dec_samples;
}

struct CommandDef {
  std::string name;
  std::vector<std::string> keys;
  std::function<void(Run&)> fn;
};

const std::vector<CommandDef>& commands() {
  static const std::vector<CommandDef> defs = {
      {"gen-ppwave", join({kGrid, kPP}), gen_ppwave},
      {"check-constraints", join({kGrid, kPP, {"dataset", "mass", "input", "tolerance"}}), check_constraints},
      {"adm", join({kPP, {"dataset", "n", "mass", "radii", "angle_nodes", "axis_nodes"}}), adm},
      {"deform", join({kPP, {"n", "r0", "delta", "t", "radii", "angle_nodes", "mu_h", "mu_points", "exterior_samples"}}),
       deform},
      {"kernel", {"dataset", "n", "degree", "box", "grid.half_points", "gap_factor"}, kernel},
      {"spacetime", join({kPP, {"dataset", "n", "points", "dec_samples", "fd_h", "amplitude"}}), spacetime},
  };
  return defs;
}

const CommandDef& find_command(const std::string& name) {
  for (const auto& c : commands())
    if (c.name == name) return c;
  throw ConfigError("unknown command '" + name + "'");
}

}  // namespace

std::vector<std::string> command_names() {
  std::vector<std::string> out;
  for (const auto& c : commands()) out.push_back(c.name);
  return out;
}

std::vector<std::string> command_keys(const std::string& command) { return find_command(command).keys; }

RunReport run_command(const RunConfig& cfg) {
  const CommandDef& def = find_command(cfg.command);
  for (const auto& [k, v] : cfg.values) {
    if (std::find(def.keys.begin(), def.keys.end(), k) == def.keys.end() &&
        std::find(kShared.begin(), kShared.end(), k) == kShared.end())
      throw ConfigError("unknown key '" + k + "' for " + cfg.command);
  }
  Run run(cfg);
  try {
    def.fn(run);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    run.rep.error = e.what();
    add_check(run.rep, "numerical_failure", std::numeric_limits<double>::quiet_NaN(), 0.0);
  }
  return run.rep;
}

}  // namespace declab
