#include "declab/background.hpp"
#include "declab/geometry.hpp"
#include "declab/grid.hpp"
#include "declab/jet.hpp"
#include "declab/quadrature.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>

using namespace declab;

namespace {

// Central-difference gradient and Hessian of a scalar function, for checking jets.
void fd_jet(const std::function<double(const Vec&)>& f, const Vec& x, Vec& grad, Mat& hess) {
  const int n = static_cast<int>(x.size());
  const double h = 1e-4;
  grad = Vec::Zero(n);
  hess = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e(i) = h;
    grad(i) = (f(x + e) - f(x - e)) / (2 * h);
    for (int j = 0; j < n; ++j) {
      Vec E = Vec::Zero(n);
      E(j) = h;
      hess(i, j) = (f(x + e + E) - f(x + e - E) - f(x - e + E) + f(x - e - E)) / (4 * h * h);
    }
  }
}

}  // namespace

TEST_CASE("jet arithmetic matches finite differences") {
  auto fn = [](const std::vector<Jet2>& c) { return exp(c[0] * c[1]) / (2.0 + sin(c[2])) + sqrt(1.0 + c[0] * c[0]) * log(3.0 + c[1]); };
  auto val = [&](const Vec& y) { return fn(coordinate_jets(y)).v; };
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-0.8, 0.8);
  for (int t = 0; t < 5; ++t) {
    Vec x(3);
    for (int i = 0; i < 3; ++i) x(i) = U(rng);
    const Jet2 j = fn(coordinate_jets(x));
    Vec g;
    Mat H;
    fd_jet(val, x, g, H);
    CHECK((j.d - g).cwiseAbs().maxCoeff() < 1e-7);
    CHECK((j.dd - H).cwiseAbs().maxCoeff() < 1e-5);
    CHECK((j.dd - j.dd.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("pow and compose agree") {
  Vec x(2);
  x << 0.3, 0.7;
  const auto c = coordinate_jets(x);
  const Jet2 a = 1.0 + c[0] * c[1];
  const Jet2 p = pow(a, 1.5);
  const Jet2 q = compose(a, std::pow(a.v, 1.5), 1.5 * std::pow(a.v, 0.5), 0.75 * std::pow(a.v, -0.5));
  CHECK(std::abs(p.v - q.v) < 1e-15);
  CHECK((p.d - q.d).norm() < 1e-14);
  CHECK((p.dd - q.dd).norm() < 1e-14);
}

TEST_CASE("five-point stencils are exact on quartics") {
  const auto G = grid::ChartGrid::centered(Vec::Zero(2), 0.1, 6);
  const auto f = grid::sample_scalar(G, [](const Vec& x) { return std::pow(x(0), 4) - 2 * x(0) * x(0) * x(1) + x(1); });
  const auto dx = grid::fd_derivative(f, 0, 1);
  const auto dxx = grid::fd_derivative(f, 0, 2);
  for (auto p : G.interior_points()) {
    const Vec x = G.coords(p);
    CHECK(std::abs(dx.at(p, 0) - (4 * std::pow(x(0), 3) - 4 * x(0) * x(1))) < 1e-11);
    CHECK(std::abs(dxx.at(p, 0) - (12 * x(0) * x(0) - 4 * x(1))) < 1e-9);
  }
}

TEST_CASE("grid indexing round trips") {
  const grid::ChartGrid G({-1, 0, 2}, {1, 1, 3}, {0.25, 0.125, 0.125});
  CHECK(G.shape() == std::vector<int>{9, 9, 9});
  for (std::size_t p = 0; p < G.size(); ++p) CHECK(G.flat(G.unflat(p)) == p);
  for (auto p : G.interior_points()) CHECK(G.boundary_distance(p) >= G.margin());
}

TEST_CASE("field files round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "declab_unit_fields";
  std::filesystem::create_directories(dir);
  const auto G = grid::ChartGrid::centered(Vec::Zero(2), 0.3, 3);
  const auto f = grid::sample_sym(G, 2, 0, [](const Vec& x) {
    Mat m(2, 2);
    m << 1 + x(0) / 3, 0.1 * x(1), 0.1 * x(1), 1.0 / 7.0;
    return m;
  });
  grid::write_field(f, (dir / "g").string());
  const auto r = grid::read_field((dir / "g").string());
  CHECK(r.grid == G);
  CHECK(r.data == f.data);
  CHECK(r.symmetric == f.symmetric);
  std::filesystem::remove_all(dir);
}

TEST_CASE("thread cap from the environment") {
  setenv("DEC_LAB_THREADS", "1", 1);
  CHECK(grid::thread_count() == 1);
  unsetenv("DEC_LAB_THREADS");
  CHECK(grid::thread_count() >= 1);
}

TEST_CASE("curvature of model metrics") {
  SUBCASE("flat") {
    Vec x(3);
    x << 0.1, 0.2, 0.3;
    const Geometry geo = geometry(FlatBackground(3).data(x).g);
    CHECK(geo.scalar == doctest::Approx(0.0).epsilon(1e-14));
  }
  SUBCASE("unit sphere has R = 2") {
    Vec x(2);
    x << 1.1, 0.4;
    CHECK(geometry(SphereBackground().data(x).g).scalar == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("Schwarzschild slices are scalar flat") {
    for (int n : {3, 4, 5}) {
      Vec x = Vec::Constant(n, 0.9);
      CHECK(std::abs(geometry(SchwarzschildBackground(n, 1.0).data(x).g).scalar) < 1e-12);
    }
  }
}

TEST_CASE("Riemann symmetries on random metrics") {
  auto bg = random_background(3, 5, 0.2, 0.0);
  Vec x(3);
  x << 0.2, -0.1, 0.4;
  const Geometry geo = geometry(bg->data(x).g);
  const int n = 3;
  double anti = 0.0, bianchi = 0.0;
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          anti = std::max(anti, std::abs(geo.riemann(l, i, j, k) + geo.riemann(l, j, i, k)));
          bianchi = std::max(bianchi, std::abs(geo.riemann(l, i, j, k) + geo.riemann(l, j, k, i) + geo.riemann(l, k, i, j)));
        }
  CHECK(anti < 1e-12);
  CHECK(bianchi < 1e-12);
  CHECK((geo.ricci - geo.ricci.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rotations are Killing for the flat metric") {
  Vec x(3);
  x << 0.3, -0.5, 0.2;
  const auto c = coordinate_jets(x);
  const VecJet X = VecJet::from_components(3, [&](int i) { return i == 0 ? -1.0 * c[1] : i == 1 ? c[0] : Jet2(3); });
  const Geometry geo = geometry(FlatBackground(3).data(x).g);
  CHECK(lie_metric(geo, X).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(divergence(geo, X) == doctest::Approx(0.0));
}

TEST_CASE("Gauss rules") {
  const QuadRule q = gauss_legendre(5);
  double s = 0.0;
  for (std::size_t i = 0; i < q.x.size(); ++i) s += q.w[i] * std::pow(q.x[i], 8);
  CHECK(s == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
  const QuadRule g = gauss_gegenbauer(4, 0.5);
  double t = 0.0;
  for (std::size_t i = 0; i < g.x.size(); ++i) t += g.w[i] * g.x[i] * g.x[i];
  CHECK(t == doctest::Approx(M_PI / 8.0).epsilon(1e-13));
  CHECK(integrate([](double y) { return std::exp(y); }, 0.0, 1.0) == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
}
