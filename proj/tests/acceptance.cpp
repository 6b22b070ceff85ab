// Acceptance suite: one PASS/FAIL line per criterion, detail lines indented below it.
// Usage: acceptance [criterion numbers...]; exit status 1 when any selected criterion fails.

#include "declab/adm.hpp"
#include "declab/cli.hpp"
#include "declab/constraints.hpp"
#include "declab/kernel_probe.hpp"
#include "declab/ppwave.hpp"
#include "declab/spacetime.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

using namespace declab;

namespace {

using Clock = std::chrono::steady_clock;

struct Criterion {
  bool pass = true;
  std::vector<std::string> lines;

  void detail(const std::string& name, bool ok, const char* fmt, ...) __attribute__((format(printf, 4, 5)));
  void require(const std::string& name, double measured, double tol, bool at_most = true) {
    const bool ok = std::isfinite(measured) && (at_most ? measured <= tol : measured >= tol);
    detail(name, ok, "measured=%.3e %s %.3e", measured, at_most ? "<=" : ">=", tol);
  }
  void report(const RunReport& r, const std::string& label) {
    for (const auto& c : r.checks) require(label + " " + c.name, c.measured, c.tolerance, c.relation == Relation::at_most);
    if (!r.error.empty()) detail(label + " error", false, "%s", r.error.c_str());
  }
};

void Criterion::detail(const std::string& name, bool ok, const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  pass = pass && ok;
  lines.push_back(std::string("    ") + (ok ? "ok   " : "FAIL ") + name + ": " + buf);
}

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

RunReport run(const std::string& command, std::map<std::string, std::string> values) {
  RunConfig cfg;
  cfg.command = command;
  cfg.values = std::move(values);
  cfg.out_dir = "acceptance_out/" + command;
  return run_command(cfg);
}

// ---- 1 ----
void c1(Criterion& c) {
  const auto t0 = Clock::now();
  for (int n : {4, 5}) {
    PPWaveSpec s;
    s.n = n;
    const PPWaveData pp(s);
    Vec center = Vec::Zero(n);
    center(0) = 0.2;
    center(n - 1) = 0.1;
    const PPGridCheck r = pp_grid_constraint_check(pp, center, 0.04, n == 4 ? 4 : 3);
    const std::string t = "n=" + std::to_string(n);
    c.require(t + " interior points", r.points, 100, false);
    c.require(t + " rel mu (fine)", r.rel_mu_fine, 1e-6);
    c.require(t + " rel J (fine)", r.rel_J_fine, 1e-6);
    c.require(t + " order mu", r.order_mu, 3.0, false);
    c.require(t + " order J", r.order_J, 3.0, false);
  }
  c.require("runtime seconds", since(t0), 60.0);
}

// ---- 2 ----
void c2(Criterion& c) {
  c.report(run("check-constraints", {{"dataset", "ppwave"}, {"n", "4"}}), "n=4");
  c.report(run("check-constraints", {{"dataset", "ppwave"}, {"n", "5"}, {"grid.half_points", "4"}}), "n=5");
}

// ---- 3 ----
void c3(Criterion& c) {
  const int n = 3;
  const auto flat = std::make_shared<FlatBackground>(n);
  const auto pp = local_pp_background(n);
  const Vec center = Vec::Zero(n);
  const OperatorKind kinds[] = {OperatorKind::plain, OperatorKind::bar, OperatorKind::modified};
  const char* kind_names[] = {"plain", "bar", "modified"};
  std::mt19937_64 rng(3);
  int failures = 0, total = 0;
  double worst_fine = 0.0, worst_order = 1e300;
  for (int inst = 0; inst < 20; ++inst) {
    RandomSym hs(n, 3, 0.5, 1.0, rng), ws(n, 3, 0.5, 1.0, rng);
    RandomTrig ft(n, 3, 1.0, 1.0, rng), ph(n, 3, 0.3, 1.0, rng);
    RandomVec xv(n, 3, 1.0, 1.0, rng), zv(n, 3, 1.0, 1.0, rng);
    const OperatorKind kind = kinds[inst % 3];
    for (const auto& bg : {std::shared_ptr<const Background>(flat), std::shared_ptr<const Background>(pp)}) {
      auto mismatch = [&](int hp) {
        const auto G = grid::ChartGrid::centered(center, 1.0 / hp, hp + 2);
        const InitialData d = sample_data(*bg, G);
        const auto h = grid::sample_sym(G, 2, 0, [&](const Vec& x) { return scale(hs(x), poly_bump(x, center, 1.0, 6)).v; });
        const auto w = grid::sample_sym(G, 0, 2, [&](const Vec& x) { return scale(ws(x), poly_bump(x, center, 1.0, 6)).v; });
        const LapseShift s = sample_pair(G, [&](const Vec& x) {
          PairJet p;
          p.f = ft(x);
          p.X = xv(x);
          return p;
        });
        ModifierPair mp{grid::sample_scalar(G, [&](const Vec& x) { return ph(x).v; }),
                        grid::sample_vector(G, [&](const Vec& x) { return Vec(zv(x).v); })};
        return duality_mismatch(d, h, w, s, kind, kind == OperatorKind::modified ? &mp : nullptr).rel;
      };
      double rel[2] = {mismatch(8), mismatch(16)};
      double order = std::log2(rel[0] / rel[1]);
      const std::string label = "instance " + std::to_string(inst) + " " + bg->name() + " " + kind_names[inst % 3];
      if (rel[0] >= 1e-11 && order < 3.0) {
        // Signed errors can cancel on the coarse pair; refine once more and judge the finer pair.
        const double r32 = mismatch(32);
        c.detail(label + " refined", true, "h=1/8 %.3e, 1/16 %.3e (order %.2f), 1/32 %.3e (order %.2f)", rel[0], rel[1],
                 order, r32, std::log2(rel[1] / r32));
        rel[0] = rel[1];
        rel[1] = r32;
        order = std::log2(rel[0] / rel[1]);
      }
      const bool ok = rel[1] <= 1e-4 && (rel[0] < 1e-11 || order >= 3.0);
      ++total;
      if (!ok) {
        ++failures;
        c.detail(label, false, "coarse %.3e fine %.3e order %.2f", rel[0], rel[1], order);
      }
      worst_fine = std::max(worst_fine, rel[1]);
      if (rel[0] >= 1e-11) worst_order = std::min(worst_order, order);
    }
  }
  c.require("instances failing (of " + std::to_string(total) + ")", failures, 0);
  c.require("worst fine mismatch", worst_fine, 1e-4);
  c.require("lowest observed order", worst_order, 3.0, false);
}

// ---- 4 ----
void c4(Criterion& c) {
  c.report(run("adm", {{"dataset", "flat"}}), "flat");
  c.report(run("adm", {{"dataset", "schwarzschild"}}), "schwarzschild");
  for (const char* n : {"4", "5", "9"}) c.report(run("adm", {{"dataset", "ppwave"}, {"n", n}}), std::string("ppwave n=") + n);
}

// ---- 5 ----
void c5(Criterion& c) { c.report(run("deform", {}), "n=5"); }

// ---- 6 ----
void c6(Criterion& c) {
  c.report(run("spacetime", {{"dataset", "ppwave"}, {"n", "4"}}), "ppwave n=4");
  c.report(run("spacetime", {{"dataset", "ppwave"}, {"n", "5"}, {"points", "10"}}), "ppwave n=5");
  for (const char* n : {"3", "4"})
    c.report(run("spacetime", {{"dataset", "random"}, {"n", n}, {"points", "10"}}), std::string("random n=") + n);
}

// ---- 7 ----
void c7(Criterion& c) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N01;
  for (int n : {3, 4, 5}) {
    Mat A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = N01(rng);
    const Mat g = Mat::Identity(n, n) + 0.05 * (A + A.transpose());
    Vec Z(n);
    for (int i = 0; i < n; ++i) Z(i) = N01(rng);
    Phi3 phi{n, std::vector<double>(n * n * n)};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          std::array<int, 3> s{i, j, k};
          std::sort(s.begin(), s.end());
          phi.a[(i * n + j) * n + k] = std::sin(1.0 + s[0] + 2.3 * s[1] + 3.7 * s[2]);
        }
    const QBlocks q = assemble_q1_blocks(g, Z, phi);
    const std::string t = "n=" + std::to_string(n);
    c.require(t + " |det D1 - 2|", std::abs(q.det_D1() - 2.0), 1e-12);
    c.require(t + " |det D2 - 2^(n+1)| / 2^(n+1)", std::abs(q.det_D2() - std::ldexp(1.0, n + 1)) / std::ldexp(1.0, n + 1),
              1e-12);
    double outside = 0.0, inside = 0.0;
    for (int k = 0; k < q.R1.size(); ++k) {
      double& m = k < n ? inside : outside;
      m = std::max(m, std::abs(q.R1(k)));
    }
    c.require(t + " R1 outside the W block", outside, 0.0);
    c.require(t + " R1 inside the W block (nonzero)", inside, 1e-8, false);
  }
}

// ---- 8 ----
void c8(Criterion& c) {
  const auto t0 = Clock::now();
  const RunReport pp = run("kernel", {{"dataset", "ppwave"}});
  c.report(pp, "ppwave");
  c.report(run("kernel", {{"dataset", "flat"}}), "flat");
  c.require("runtime seconds", since(t0), 300.0);
}

// ---- 9 ----
void c9(Criterion& c) {
  const int n = 3;
  for (int zc = 1; zc >= 0; --zc) {
    int violations = 0, hyp = 0, points = 0;
    double worst = 1e300;
    for (int inst = 0; inst < 50; ++inst) {
      std::mt19937_64 rng(1000 + inst + 100 * zc);
      const auto bg = random_background(n, rng(), 0.1, 0.3);
      const auto G = grid::ChartGrid::centered(Vec::Zero(n), 0.1, 5);
      const InitialData d = sample_data(*bg, G);
      RandomSym hs(n, 3, 0.3, 1.5, rng);
      RandomTrig ph(n, 3, zc ? 0.1 : 0.5, 1.5, rng);
      RandomVec zv(n, 3, 0.5, 1.5, rng);
      const auto h = grid::sample_sym(G, 2, 0, [&](const Vec& x) { return hs(x).v; });
      const ModifierPair mp{grid::sample_scalar(G, [&](const Vec& x) { return ph(x).v; }),
                            grid::sample_vector(G, [&](const Vec& x) { return Vec(zv(x).v); })};
      const SigmaBoundReport r = sigma_bound_check(d, h, &mp, zc == 1);
      violations += r.violations;
      hyp += r.hypothesis_failures;
      points += r.points;
      worst = std::min(worst, r.worst_margin);
    }
    const std::string t = zc ? "Z = J" : "general Z";
    c.require(t + " violations over " + std::to_string(points) + " points", violations, 0);
    c.require(t + " hypothesis failures", hyp, 0);
    c.require(t + " worst relative margin", worst, -1e-10, false);
  }
}

// ---- 10 ----
void c10(Criterion& c) {
  std::vector<double> radii;
  for (int k = 0; k <= 8; ++k) radii.push_back(10.0 * std::pow(10.0, k / 4.0));
  for (int n : {4, 5, 6}) {
    PPWaveSpec s;
    s.n = n;
    const PPWaveData pp(s);
    Vec dir = Vec::Zero(n);
    for (int a = 0; a + 1 < n; ++a) dir(a) = 1.0 + 0.3 * a;
    dir /= dir.norm();
    const DecayFit f = decay_rate_estimate([&](double r) { return pp.S(r * dir).v - 1.0; }, radii);
    c.require("pp S-1 n=" + std::to_string(n) + " |q - (n-3)|", std::abs(f.q - (n - 3)), 0.2);
  }
  for (int n : {3, 4, 5}) {
    const SchwarzschildBackground sc(n, 1.0);
    Vec dir = Vec::Ones(n) / std::sqrt(double(n));
    const DecayFit f = decay_rate_estimate([&](double r) { return sc.data(r * dir).g.v(0, 0) - 1.0; }, radii);
    c.require("Schwarzschild g-delta n=" + std::to_string(n) + " |q - (n-2)|", std::abs(f.q - (n - 2)), 0.2);
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> all = {
      {"pp-wave constraint identity on grids", c1},
      {"constraint system residuals, closed-form and grid", c2},
      {"adjoint duality under refinement", c3},
      {"ADM energy-momentum", c4},
      {"conformal family", c5},
      {"Killing development and null fluid", c6},
      {"Q blocks", c7},
      {"kernel search", c8},
      {"sigma bounds", c9},
      {"decay fits", c10},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  bool ok = true;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Criterion c;
    const auto t0 = Clock::now();
    try {
      all[i].second(c);
    } catch (const std::exception& e) {
      c.detail("exception", false, "%s", e.what());
    }
    std::printf("%s criterion %d: %s (%.1f s)\n", c.pass ? "PASS" : "FAIL", id, all[i].first.c_str(), since(t0));
    for (const auto& l : c.lines) std::printf("%s\n", l.c_str());
    std::fflush(stdout);
    ok = ok && c.pass;
  }
  return ok ? 0 : 1;
}
