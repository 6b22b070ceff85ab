#include "declab/kernel_probe.hpp"
#include "declab/ppwave.hpp"
#include "declab/spacetime.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace declab;

TEST_CASE("static flat development is flat") {
  auto flat = std::make_shared<FlatBackground>(3);
  const KillingDevelopment dev(flat, [](const Vec& x) {
    PairJet p;
    p.f = Jet2(static_cast<int>(x.size()), 1.0);
    p.X = VecJet::zero(static_cast<int>(x.size()));
    return p;
  });
  Vec x(3);
  x << 0.1, 0.2, 0.3;
  CHECK(spacetime_einstein(dev, x).cwiseAbs().maxCoeff() < 1e-15);
  Mat eta = Mat::Identity(4, 4);
  eta(0, 0) = -4.0;
  CHECK((dev.metric(x) - eta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("normal components give the constraints") {
  for (int n : {3, 4}) {
    auto bg = random_killing_background(n, 40 + n);
    const KillingDevelopment dev(bg);
    Vec x = Vec::Constant(n, 0.2);
    const Mat G = spacetime_einstein(dev, x);
    const DataJet d = bg->data(x);
    const ConstraintPoint c = constraints_at(d);
    CHECK(std::abs(G(0, 0) - c.mu) < 1e-12);
    CHECK((G.block(1, 0, n, 1) - d.g.v * c.J).cwiseAbs().maxCoeff() < 1e-12);
    const TangentialEinstein T = einstein_tangential_closed_form(d, dev.pair(x));
    CHECK(T.killing_residual < 1e-13);
    CHECK((G.block(1, 1, n, n) - T.G).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((G - G.transpose()).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("pp development is null dust") {
  PPWaveSpec s;
  s.n = 4;
  auto pp = std::make_shared<PPWaveData>(s);
  const KillingDevelopment dev(pp);
  std::vector<Vec> pts;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-0.9, 0.9);
  for (int k = 0; k < 5; ++k) {
    Vec x(4);
    for (int i = 0; i < 4; ++i) x(i) = U(rng);
    pts.push_back(x);
  }
  const SpacetimeCheck sc = spacetime_check(dev, pts, 2000, 3, 0.05, [&](const Vec& x) { return pp->ambient_metric(x); });
  CHECK(sc.expansion < 1e-14);
  CHECK(sc.fd_vs_closed < 1e-5);
  CHECK(std::abs(sc.fluid.p_max) < 1e-12);
  CHECK(sc.fluid.max_residual < 1e-12);
  CHECK(sc.dec_min >= -1e-12);
  CHECK(sc.dec_samples >= 2000);
}

TEST_CASE("synthetic fluids: decomposition and DEC sampler") {
  const int n = 3;
  Vec om(n);
  om << 0.6, 0.0, 0.8;
  const Mat g = Mat::Identity(n, n);
  for (double p : {-0.2, 0.0, 0.1}) {
    const Mat G = synthetic_null_fluid(n, p, om, 0.7);
    const FluidPoint f = null_fluid_decompose(G, g, G(0, 0), Vec(G.block(1, 0, n, 1)));
    CHECK(f.p == doctest::Approx(p).epsilon(1e-12));
    CHECK(f.residual < 1e-12);
    std::mt19937_64 rng(8);
    const DecSample ds = dec_sample_check(G, 5000, rng);
    if (p > 0)
      CHECK(ds.min_value < -1e-8);
    else
      CHECK(ds.min_value >= -1e-12);
  }
}

TEST_CASE("orthonormal frame of the metric") {
  Mat g(2, 2);
  g << 2.0, 0.3, 0.3, 1.0;
  Mat G = Mat::Zero(3, 3);
  G(0, 0) = 1.0;
  G.block(1, 1, 2, 2) = g;
  const Mat on = orthonormal_frame(G, g);
  CHECK((on.block(1, 1, 2, 2) - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(on(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("jet vector round trip") {
  const int n = 4;
  CHECK(jet_vector_size(n) == 2 * n + n * (n - 1) / 2 + 1);
  const auto lp = lower_pairs(n);
  CHECK(static_cast<int>(lp.size()) == n * (n - 1) / 2);
  for (auto [j, k] : lp) CHECK(j > k);
  PPWaveSpec s;
  s.n = n;
  const PPWaveData pp(s);
  Vec x(n);
  x << 0.2, -0.3, 0.1, 0.25;
  const DataJet d = pp.data(x);
  const Vec Z = constraints_at(d).J;
  const JetState js = jet_state(d, *pp.pair(x));
  const JetState back = reconstruct_jet(jet_vector(wt_variables(js, d.g.v, Z), js), d.g.v, d.pi.v, Z);
  CHECK(std::abs(back.f - js.f) < 1e-14);
  CHECK((back.X - js.X).norm() < 1e-14);
  CHECK((back.gradX - js.gradX).norm() < 1e-13);
  CHECK((back.df - js.df).norm() < 1e-14);
}

TEST_CASE("Q1 blocks") {
  for (int n : {3, 4, 5}) {
    Mat g = Mat::Identity(n, n);
    g(0, 1) = g(1, 0) = 0.2;
    const Vec Z = Vec::LinSpaced(n, 0.3, 1.1);
    const QBlocks q = assemble_q1_blocks(g, Z);
    CHECK(q.det_D1() == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(q.det_D2() == doctest::Approx(std::ldexp(1.0, n + 1)).epsilon(1e-14));
    CHECK((q.zhat - Vec::Unit(n, 0)).norm() < 1e-14);
    CHECK(q.R1.norm() == 0.0);
  }
  CHECK_THROWS_AS(assemble_q1_blocks(Mat::Identity(3, 3), Vec::Zero(3)), Error);
}

TEST_CASE("jet propagation follows the pp pair") {
  const auto pp = local_pp_background(3);
  const DataFn data = [pp](const Vec& x) { return pp->data(x); };
  const ModifierFn mod = [pp](const Vec& x) {
    Modifier m;
    m.Z = constraints_at(pp->data(x)).J;
    return m;
  };
  Vec a(3), b(3);
  a << 0.1, -0.2, 0.3;
  b << 0.6, 0.4, -0.2;
  double prev = 0.0;
  for (int steps : {10, 20}) {
    const PropagationResult r = propagate_jet(data, mod, jet_state(pp->data(a), *pp->pair(a)), a, b, steps);
    const JetState ref = jet_state(pp->data(b), *pp->pair(b));
    const double e = std::abs(r.states.back().f - ref.f) + (r.states.back().X - ref.X).norm();
    CHECK(e < 1e-8);
    if (prev > 0) CHECK(prev / e > 8.0);
    prev = e;
  }
}

TEST_CASE("polynomial basis") {
  const PolyBasis B(3, 4, Vec::Zero(3), 1.0);
  CHECK(B.size() == 35);
  Vec x(3);
  x << 0.3, -0.2, 0.5;
  const auto all = B.eval_all(x);
  for (int k = 0; k < B.size(); ++k) CHECK(all[k].v == doctest::Approx(B.eval(k, x).v));
}

TEST_CASE("flat kernel has the expected dimension") {
  const auto G = grid::ChartGrid::centered(Vec::Zero(3), 0.1, 6);
  const int m = G.shape()[0];
  KernelOptions o;
  o.degree = 3;
  const KernelReport r = kernel_search(sample_data(FlatBackground(3), G), nullptr, {2, 2, 2}, {m - 3, m - 3, m - 3}, 1, o);
  CHECK(r.kernel_dim == 10);
  CHECK(r.gap > 1e3);
  CHECK_THROWS_AS(kernel_search(sample_data(FlatBackground(3), G), nullptr, {0, 0, 0}, {m - 1, m - 1, m - 1}, 1, o), Error);
}
