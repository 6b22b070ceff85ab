#include "declab/deformation.hpp"
#include "declab/ppwave.hpp"

#include <doctest.h>

#include <cmath>

using namespace declab;

TEST_CASE("radial potential solves the exterior equation") {
  for (int n : {3, 5}) {
    const RadialPotential pot{n, 0.4};
    for (double r : {2.0, 5.0, 30.0}) {
      const auto v = pot.derivatives(r);
      CHECK(v[2] + (n - 1) / r * v[1] == doctest::Approx(-std::pow(r, -n - 0.4)).epsilon(1e-10));
      CHECK(v[0] < 0.0);
    }
    const double r = 1e6;
    CHECK(pot.value(r) * std::pow(r, n - 2) == doctest::Approx(-0.5).epsilon(1e-2));
  }
}

TEST_CASE("cutoff is a smooth step") {
  const Cutoff chi{2.0};
  CHECK(chi.derivatives(1.9)[0] == 0.0);
  CHECK(chi.derivatives(4.1)[0] == 1.0);
  CHECK(chi.derivatives(3.0)[0] > 0.0);
  CHECK(chi.derivatives(3.0)[0] < 1.0);
}

TEST_CASE("default delta") {
  CHECK(default_delta(2.0) == 0.5);
  CHECK(default_delta(0.5) == 0.25);
}

TEST_CASE("conformal family at t = 0 is the base") {
  PPWaveSpec s;
  s.n = 5;
  auto pp = std::make_shared<PPWaveData>(s);
  const ConformalFamily fam(pp, 2.0, 0.5, 0.0);
  Vec x(5);
  x << 3.0, 1.0, -0.5, 0.2, 0.3;
  CHECK((fam.data(x).g.v - pp->data(x).g.v).norm() == 0.0);
  CHECK((fam.data(x).pi.v - pp->data(x).pi.v).norm() == 0.0);
  CHECK(fam.positivity_bound() > 0.1);
}

TEST_CASE("closed-form mu_t matches finite differences") {
  PPWaveSpec s;
  s.n = 5;
  auto pp = std::make_shared<PPWaveData>(s);
  const ConformalFamily fam(pp, 2.0, 0.5, 0.1);
  std::vector<Vec> pts;
  for (double r : {2.4, 3.0, 3.6}) {
    Vec x(5);
    x << 0.3, 0.5, 0.1, 0.2, 0.0;
    x *= r / x.norm();
    x(4) = 0.3;
    pts.push_back(x);
  }
  const MuCheck mc = mu_t_check(fam, pts, 0.16);
  CHECK(mc.rel_u_fd < 1e-8);
  CHECK(mc.rel_jet < 1e-10);
}

TEST_CASE("Poisson solve on a manufactured solution") {
  const double L = 2.0;
  double prev = 0.0;
  for (int N : {8, 16}) {
    const double h = L / N;
    const grid::ChartGrid G({-L, -L, -L}, {L, L, L}, {h, h, h});
    const auto g = grid::sample_sym(G, 2, 0, [](const Vec&) { return Mat(Mat::Identity(3, 3)); });
    const auto rho = grid::sample_scalar(G, [](const Vec& x) { return (4.0 * x.squaredNorm() - 6.0) * std::exp(-x.squaredNorm()); });
    PoissonOptions o;
    o.dirichlet = [](const Vec& x) { return std::exp(-x.squaredNorm()); };
    const PoissonResult r = solve_poisson(g, rho, o);
    CHECK(r.residual < 1e-9);
    double e = 0.0;
    for (std::size_t p = 0; p < G.size(); ++p) e = std::max(e, std::abs(r.v.at(p, 0) - std::exp(-G.coords(p).squaredNorm())));
    if (prev > 0) CHECK(prev / e > 3.0);
    prev = e;
  }
}

TEST_CASE("exterior sigma inequality for a positive deformation") {
  PPWaveSpec s;
  s.n = 5;
  auto pp = std::make_shared<PPWaveData>(s);
  const ConformalFamily fam(pp, 2.0, 0.5, 0.05);
  const double r1 = find_r1(fam, {4, 6, 8, 12, 16, 24, 32}, 10, 1.0, 100, 7);
  const ExteriorReport er = exterior_sigma_check(fam, r1, exterior_samples(5, r1, 10, 1.0, 200, 11));
  CHECK(er.criterion_ok);
  CHECK(er.violations == 0);
  CHECK(er.min_margin > 0.0);
}
