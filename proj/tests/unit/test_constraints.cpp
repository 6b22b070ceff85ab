#include "declab/background.hpp"
#include "declab/constraints.hpp"
#include "declab/ppwave.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace declab;

TEST_CASE("pi and k conversions are inverse") {
  auto bg = random_background(4, 3, 0.2, 0.4);
  Vec x = Vec::Constant(4, 0.1);
  const DataJet d = bg->data(x);
  const Mat k = pi_to_k(d.g.v, d.pi.v);
  CHECK((k_to_pi(d.g.v, k) - d.pi.v).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("dominant energy scalar is 2(mu - |J|)") {
  auto bg = random_background(3, 11, 0.1, 0.3);
  Vec x(3);
  x << 0.2, 0.1, -0.3;
  const DataJet d = bg->data(x);
  const ConstraintPoint c = constraints_at(d);
  const double J = std::sqrt(c.J.dot(d.g.v * c.J));
  CHECK(c.sigma == doctest::Approx(2.0 * (c.mu - J)).epsilon(1e-14));
}

TEST_CASE("flat and Schwarzschild data are vacuum") {
  Vec x(3);
  x << 1.0, 0.5, -0.2;
  const ConstraintPoint f = constraints_at(FlatBackground(3).data(x));
  CHECK(f.mu == 0.0);
  CHECK(f.J.norm() == 0.0);
  const ConstraintPoint s = constraints_at(SchwarzschildBackground(3, 1.0).data(x));
  CHECK(std::abs(s.mu) < 1e-13);
}

TEST_CASE("grid constraint map converges on Schwarzschild") {
  const SchwarzschildBackground bg(3, 1.0);
  Vec c(3);
  c << 2.0, 1.0, 0.0;
  double prev = 0.0;
  for (double h : {0.1, 0.05}) {
    const auto G = grid::ChartGrid::centered(c, h, 4);
    const ConstraintFields cm = constraint_map(sample_data(bg, G));
    double m = 0.0;
    for (auto p : G.interior_points()) m = std::max(m, std::abs(cm.mu.at(p, 0)));
    if (prev > 0) CHECK(std::log2(prev / m) > 3.5);
    prev = m;
  }
}

TEST_CASE("affine lapse and Killing shift are in the flat plain kernel") {
  Vec x(3);
  x << 0.4, -0.1, 0.3;
  const auto c = coordinate_jets(x);
  PairJet fx;
  fx.f = 1.0 + 0.5 * c[0] - c[2];
  fx.X = VecJet::from_components(3, [&](int i) { return i == 1 ? c[2] + 2.0 : i == 2 ? -1.0 * c[1] : Jet2(3, 0.7); });
  const AdjointValue a = adjoint_at(OperatorKind::plain, FlatBackground(3).data(x), fx);
  CHECK(a.cov.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(a.contra.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("pp pair solves the system and its Hessian consequences") {
  PPWaveSpec s;
  s.n = 4;
  const PPWaveData pp(s);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-0.9, 0.9);
  for (int t = 0; t < 10; ++t) {
    Vec x(4);
    for (int i = 0; i < 4; ++i) x(i) = U(rng);
    const DataJet d = pp.data(x);
    const PairJet fx = *pp.pair(x);
    const AdjointValue a = adjoint_at(OperatorKind::bar, d, fx);
    CHECK(std::max(a.cov.cwiseAbs().maxCoeff(), a.contra.cwiseAbs().maxCoeff()) < 1e-12);
    const GradfResiduals gr = gradf_residuals_at(d, pp.closed_constraints(x)->second, fx);
    CHECK(gr.null_vector.cwiseAbs().maxCoeff() < 1e-12);
    Modifier m;
    m.Z = constraints_at(d).J;
    CHECK(hessian_system_at(d, fx, m).max_abs() < 1e-11);
  }
}

TEST_CASE("linearization is linear in the direction") {
  auto bg = random_background(3, 21, 0.1, 0.3);
  Vec x(3);
  x << 0.1, 0.2, 0.3;
  const DataJet d = bg->data(x);
  std::mt19937_64 rng(4);
  RandomSym hs(3, 2, 0.3, 1.0, rng), ws(3, 2, 0.3, 1.0, rng);
  SymJet h = hs(x), w = ws(x);
  const auto a = linearize_at(OperatorKind::plain, d, h, w);
  const auto b = linearize_at(OperatorKind::plain, d, 2.0 * h, 2.0 * w);
  CHECK(b.first == doctest::Approx(2.0 * a.first).epsilon(1e-7));
  CHECK((b.second - 2.0 * a.second).norm() < 1e-7 * (1.0 + a.second.norm()));
}

TEST_CASE("duality mismatch decreases under refinement") {
  const int n = 3;
  const Vec c = Vec::Zero(n);
  auto bg = local_pp_background(n);
  std::mt19937_64 rng(9);
  RandomSym hs(n, 2, 0.5, 1.0, rng), ws(n, 2, 0.5, 1.0, rng);
  RandomTrig ft(n, 2, 1.0, 1.0, rng);
  RandomVec xv(n, 2, 1.0, 1.0, rng);
  double rel[2];
  for (int level = 0; level < 2; ++level) {
    const int hp = level == 0 ? 6 : 12;
    const auto G = grid::ChartGrid::centered(c, 1.0 / hp, hp + 2);
    const auto h = grid::sample_sym(G, 2, 0, [&](const Vec& x) { return scale(hs(x), poly_bump(x, c, 1.0, 6)).v; });
    const auto w = grid::sample_sym(G, 0, 2, [&](const Vec& x) { return scale(ws(x), poly_bump(x, c, 1.0, 6)).v; });
    const LapseShift s = sample_pair(G, [&](const Vec& x) {
      PairJet p;
      p.f = ft(x);
      p.X = xv(x);
      return p;
    });
    rel[level] = duality_mismatch(sample_data(*bg, G), h, w, s, OperatorKind::bar).rel;
  }
  CHECK(rel[1] < 1e-3);
  CHECK(std::log2(rel[0] / rel[1]) > 3.0);
}

TEST_CASE("sigma bounds on a random instance") {
  const int n = 3;
  std::mt19937_64 rng(77);
  const auto bg = random_background(n, rng(), 0.1, 0.3);
  const auto G = grid::ChartGrid::centered(Vec::Zero(n), 0.1, 4);
  RandomSym hs(n, 3, 0.3, 1.5, rng);
  RandomVec zv(n, 3, 0.5, 1.5, rng);
  const auto h = grid::sample_sym(G, 2, 0, [&](const Vec& x) { return hs(x).v; });
  const ModifierPair mp{grid::sample_scalar(G, [](const Vec&) { return 0.2; }),
                        grid::sample_vector(G, [&](const Vec& x) { return Vec(zv(x).v); })};
  const SigmaBoundReport r = sigma_bound_check(sample_data(*bg, G), h, &mp, false);
  CHECK(r.points > 0);
  CHECK(r.violations == 0);
  CHECK(r.hypothesis_failures == 0);
}

TEST_CASE("invalid data is rejected") {
  const auto G = grid::ChartGrid::centered(Vec::Zero(2), 0.1, 3);
  InitialData d{grid::sample_sym(G, 2, 0, [](const Vec&) { return Mat(-Mat::Identity(2, 2)); }),
                grid::TensorField(G, 0, 2, true)};
  CHECK_THROWS_AS(validate(d), Error);
}
