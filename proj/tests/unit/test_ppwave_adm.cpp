#include "declab/adm.hpp"
#include "declab/ppwave.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace declab;

TEST_CASE("pp-wave closed forms") {
  for (int n : {4, 5, 7}) {
    PPWaveSpec s;
    s.n = n;
    const PPWaveData pp(s);
    std::mt19937_64 rng(n);
    std::uniform_real_distribution<double> U(-1.2, 1.2);
    std::vector<Vec> pts;
    for (int k = 0; k < 50; ++k) {
      Vec x(n);
      for (int i = 0; i < n; ++i) x(i) = U(rng);
      pts.push_back(x);
    }
    const PPCheck c = pp_closed_form_check(pp, pts);
    CHECK(c.max_sigma < 1e-12);
    CHECK(c.max_mu_minus_J < 1e-12);
    CHECK(c.min_S > 0.0);
    CHECK(c.max_lapS <= 1e-14);
    CHECK(c.lap_identity < 1e-10);
    CHECK(pp.energy_oracle() > 0.0);
  }
}

TEST_CASE("pp-wave parameter validation") {
  PPWaveSpec s;
  s.n = 2;
  CHECK_THROWS_AS(validate(s), Error);
  s.n = 4;
  s.F.radius = -1.0;
  CHECK_THROWS_AS(validate(s), Error);
  s.F.radius = 1.0;
  s.bump.halfwidth = 0.0;
  CHECK_THROWS_AS(validate(s), Error);
}

TEST_CASE("pp-wave data is DEC with equality") {
  PPWaveSpec s;
  s.n = 4;
  const PPWaveData pp(s);
  Vec x(4);
  x << 0.3, -0.2, 0.1, 0.4;
  const ConstraintPoint c = constraints_at(pp.data(x));
  const double J = std::sqrt(c.J.dot(pp.data(x).g.v * c.J));
  CHECK(c.mu > 0.0);
  CHECK(std::abs(c.mu - J) < 1e-12);
}

TEST_CASE("decay estimate of a power law") {
  const DecayFit f = decay_rate_estimate([](double r) { return 3.0 * std::pow(r, -2.5); }, {10, 20, 40, 80});
  CHECK(f.q == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(decay_rate_estimate([](double) { return 0.0; }, {1, 2, 3}).exact_zero);
}

TEST_CASE("sphere rules integrate area") {
  double a = 0.0;
  for (double w : sphere_rule(3, 2.0, 8).weights) a += w;
  CHECK(a == doctest::Approx(16.0 * M_PI).epsilon(1e-13));
  double b = 0.0;
  for (double w : sphere_rule(4, 1.0, 8).weights) b += w;
  CHECK(b == doctest::Approx(2.0 * M_PI * M_PI).epsilon(1e-13));
  const SurfaceRule r = sphere_rule(3, 1.0, 6);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK((r.normals[i] - r.points[i]).norm() < 1e-14);
}

TEST_CASE("three-radius extrapolation recovers the model") {
  const std::array<double, 3> r{10, 20, 40};
  std::array<double, 3> v;
  for (int i = 0; i < 3; ++i) v[i] = 1.5 + 0.7 * std::pow(r[i], -1.3);
  const Extrapolation e = extrapolate3(r, v);
  CHECK(e.fitted);
  CHECK(e.limit == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(e.p == doctest::Approx(1.3).epsilon(1e-10));
}

TEST_CASE("ADM of flat and Schwarzschild") {
  const ADMResult f = adm_energy_momentum(flux_source(FlatBackground(3)), 3, {10, 20, 40});
  CHECK(std::abs(f.E) + f.P.norm() < 1e-12);
  SurfaceOptions so;
  so.angle_nodes = 12;
  const ADMResult s = adm_energy_momentum(flux_source(SchwarzschildBackground(4, 0.5)), 4, {50, 100, 200}, so);
  CHECK(s.E == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("pp-wave momentum is null") {
  PPWaveSpec s;
  s.n = 4;
  const PPWaveData pp(s);
  const ADMResult a = pp_adm(pp, {1e4, 2e4, 4e4});
  CHECK(std::abs(a.E + a.P(3)) < 1e-6 * a.E);
  CHECK(a.E == doctest::Approx(pp.energy_oracle()).epsilon(1e-6));
}

TEST_CASE("asymptotic fit of an exact affine pair") {
  const int n = 3;
  Vec c(n), b(n);
  c << 0.1, -0.2, 0.05;
  b << 0.3, 0.0, -0.1;
  Mat d = Mat::Zero(n, n);
  d(0, 1) = 0.2;
  d(1, 0) = -0.2;
  const auto pts = ray_samples(n, 6, {20, 40, 80}, 3);
  const AsymptoticFit fit = fit_asymptotic_lapse_shift(
      [&](const Vec& x) { return std::make_pair(c.dot(x) + 0.7, Vec(d * x + b)); }, pts, 1.0, Vec::Zero(n));
  CHECK((fit.c - c).norm() < 1e-10);
  CHECK((fit.d - d).norm() < 1e-10);
  CHECK(fit.a == doctest::Approx(0.7));
  CHECK((fit.b - b).norm() < 1e-10);
}
