#include "declab/ppwave.hpp"

#include "declab/quadrature.hpp"

#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <limits>

namespace declab {

namespace {

// First-order jet of the partial ∂_a S from the Hessian of S (third derivatives are not tracked).
Jet2 partial(const Jet2& S, int a) {
  Jet2 out(S.dim(), S.d(a));
  out.d = S.dd.col(a);
  return out;
}

constexpr int kQuadNodes = 24;

}  // namespace

PPBackground::PPBackground(int n, ScalarJetFn S, ScalarJetFn lapS) : n_(n), S_(std::move(S)), lapS_(std::move(lapS)) {
  if (n < 2) throw Error("PPBackground: dimension must be at least 2");
}

Jet2 PPBackground::S(const Vec& x) const {
  const Jet2 s = S_(x);
  if (!(s.v > 0.0)) throw Error("pp-wave: S must be positive");
  return s;
}

Jet2 PPBackground::lapS(const Vec& x) const {
  if (lapS_) return lapS_(x);
  const Jet2 s = S(x);
  Jet2 out(n_, 0.0);
  for (int a = 0; a < n_ - 1; ++a) out.v += s.dd(a, a);
  // Derivatives of Δ'S need third derivatives of S; difference the Hessian trace.
  const double h = 1e-4;
  for (int k = 0; k < n_; ++k) {
    Vec e = Vec::Zero(n_);
    e(k) = h;
    auto tr = [&](const Vec& y) {
      const Jet2 t = S(y);
      double v = 0.0;
      for (int a = 0; a < n_ - 1; ++a) v += t.dd(a, a);
      return v;
    };
    out.d(k) = (tr(x - 2 * e) - 8 * tr(x - e) + 8 * tr(x + e) - tr(x + 2 * e)) / (12 * h);
  }
  return out;
}

DataJet PPBackground::data(const Vec& x) const {
  const int n = n_, N = n - 1;
  const Jet2 s = S(x);
  const SymJet g = SymJet::from_components(n, [&](int i, int j) {
    if (i != j) return Jet2(n, 0.0);
    return i == N ? s : Jet2(n, 1.0);
  });
  const Jet2 c = 0.5 * pow(s, -1.5);
  const Jet2 sn = partial(s, N);
  SymJet pi = SymJet::from_components(n, [&](int i, int j) {
    if (i == N && j == N) return Jet2(n, 0.0);
    if (i == N || j == N) return c * partial(s, i == N ? j : i);
    if (i == j) return -(c * sn);
    return Jet2(n, 0.0);
  });
  pi.dd.clear();
  return {g, pi};
}

std::optional<PairJet> PPBackground::pair(const Vec& x) const {
  const Jet2 s = S(x);
  PairJet p;
  p.f = 0.5 * pow(s, -0.5);
  const Jet2 inv = pow(s, -1.0);
  p.X = VecJet::from_components(n_, [&](int i) { return i == n_ - 1 ? inv : Jet2(n_, 0.0); });
  return p;
}

std::optional<std::pair<double, VecJet>> PPBackground::closed_constraints(const Vec& x) const {
  const Jet2 s = S(x);
  Jet2 lap = lapS(x);
  lap.dd.setZero();
  const double mu = -0.5 * lap.v / s.v;
  Jet2 sj = s;
  sj.dd.setZero();
  const Jet2 Jn = 0.5 * pow(sj, -1.5) * lap;
  VecJet J = VecJet::zero(n_, false);
  J.v(n_ - 1) = Jn.v;
  J.d.row(n_ - 1) = Jn.d.transpose();
  return std::pair<double, VecJet>{mu, J};
}

std::vector<Mat> PPBackground::christoffel(const Vec& x) const {
  const int n = n_, N = n - 1;
  const Jet2 s = S(x);
  std::vector<Mat> G(n, Mat::Zero(n, n));
  for (int a = 0; a < N; ++a) {
    G[a](N, N) = -0.5 * s.d(a);
    G[N](N, a) = G[N](a, N) = 0.5 * s.d(a) / s.v;
  }
  G[N](N, N) = 0.5 * s.d(N) / s.v;
  return G;
}

Mat PPBackground::k(const Vec& x) const {
  const int n = n_, N = n - 1;
  const Jet2 s = S(x);
  Mat k = Mat::Zero(n, n);
  const double r = std::pow(s.v, -0.5);
  k(N, N) = 0.5 * r * s.d(N);
  for (int a = 0; a < N; ++a) k(N, a) = k(a, N) = 0.5 * r * s.d(a);
  return k;
}

Mat PPBackground::ambient_metric(const Vec& x) const {
  const int n = n_;
  Mat G = Mat::Zero(n + 1, n + 1);
  for (int a = 1; a < n; ++a) G(a, a) = 1.0;
  G(0, n) = G(n, 0) = 1.0;
  G(n, n) = S(x).v;
  return G;
}

double RadialProfile::value_s(double s) const {
  const double q = s / (radius * radius);
  if (q >= 1.0) return 0.0;
  const double b = 1.0 - q;
  return amplitude * b * b * b;
}

double RadialProfile::derivative_s(double s) const {
  const double q = s / (radius * radius);
  if (q >= 1.0) return 0.0;
  const double b = 1.0 - q;
  return -3.0 * amplitude * b * b / (radius * radius);
}

Jet2 RadialProfile::jet(const Jet2& s) const {
  const double q = s.v / (radius * radius);
  if (q >= 1.0) return Jet2(s.dim(), 0.0);
  const double b = 1.0 - q, R2 = radius * radius;
  return compose(s, amplitude * b * b * b, -3.0 * amplitude * b * b / R2, 6.0 * amplitude * b / (R2 * R2));
}

double BumpProfile::value(double t) const {
  const double q = (t / halfwidth) * (t / halfwidth);
  if (q >= 1.0) return 0.0;
  const double b = 1.0 - q;
  return b * b * b;
}

Jet2 BumpProfile::jet(const Jet2& t) const {
  const double C2 = halfwidth * halfwidth;
  const double q = t.v * t.v / C2;
  if (q >= 1.0) return Jet2(t.dim(), 0.0);
  const double b = 1.0 - q;
  const double dq = 2.0 * t.v / C2;
  const double f1 = -3.0 * b * b * dq;
  const double f2 = 6.0 * b * dq * dq - 3.0 * b * b * (2.0 / C2);
  return compose(t, b * b * b, f1, f2);
}

void validate(const PPWaveSpec& spec) {
  if (spec.n < 4) throw Error("pp-wave family needs n >= 4: the superharmonic S does not exist for n = 3");
  if (spec.n > kMaxDim - 1) throw Error("pp-wave family: n exceeds the supported dimension");
  if (!(spec.F.radius > 0.0)) throw Error("pp-wave family: F.radius must be positive");
  if (!(spec.F.amplitude >= 0.0)) throw Error("pp-wave family: F.amplitude must be nonnegative");
  if (!(spec.bump.halfwidth > 0.0)) throw Error("pp-wave family: bump.halfwidth must be positive");
}

PPWaveData::PPWaveData(const PPWaveSpec& spec) : PPBackground(spec.n, nullptr, nullptr), spec_(spec) {
  validate(spec);
  const int n = spec.n, m = n - 1;
  const double R = spec.F.radius;
  // ψ'(r) = −r^{1−m} G(r) with G(r) = r^m K(r²); outside supp F, ψ = A r^{3−n} with A = G(R)/(n−3).
  A_ = std::pow(R, m) * K(R * R) / (n - 3);
  S_ = [this](const Vec& x) {
    const int N = n_ - 1;
    Jet2 s(n_, 0.0);
    for (int a = 0; a < N; ++a) {
      const Jet2 xa = Jet2::coordinate(n_, a, x(a));
      s = s + xa * xa;
    }
    const auto p = psi_s(s.v);
    const Jet2 psi = compose(s, p[0], p[1], p[2]);
    const Jet2 b = spec_.bump.jet(Jet2::coordinate(n_, N, x(N)));
    return 1.0 + b * psi;
  };
  lapS_ = [this](const Vec& x) {
    const int N = n_ - 1;
    Jet2 s(n_, 0.0);
    for (int a = 0; a < N; ++a) {
      const Jet2 xa = Jet2::coordinate(n_, a, x(a));
      s = s + xa * xa;
    }
    const Jet2 b = spec_.bump.jet(Jet2::coordinate(n_, N, x(N)));
    return -(b * spec_.F.jet(s));
  };
}

double PPWaveData::K(double s) const {
  const int m = n_ - 1;
  return integrate([&](double t) { return std::pow(t, m - 1) * spec_.F.value_s(s * t * t); }, 0.0, 1.0, kQuadNodes);
}

double PPWaveData::Kp(double s) const {
  const int m = n_ - 1;
  return integrate([&](double t) { return std::pow(t, m + 1) * spec_.F.derivative_s(s * t * t); }, 0.0, 1.0,
                   kQuadNodes);
}

std::array<double, 3> PPWaveData::psi_s(double s) const {
  const int n = n_;
  const double R2 = spec_.F.radius * spec_.F.radius;
  if (s >= R2) {
    const double e = (3.0 - n) / 2.0;
    return {A_ * std::pow(s, e), A_ * e * std::pow(s, e - 1.0), A_ * e * (e - 1.0) * std::pow(s, e - 2.0)};
  }
  // Ψ(s) = Ψ(R²) + ½ ∫_s^{R²} K(σ) dσ, nested with the inner K quadrature.
  const double inner = 0.5 * integrate([&](double sig) { return K(sig); }, s, R2, kQuadNodes);
  return {A_ * std::pow(R2, (3.0 - n) / 2.0) + inner, -0.5 * K(s), -0.5 * Kp(s)};
}

double PPWaveData::source_mass() const {
  const int m = n_ - 1;
  const double R = spec_.F.radius;
  return sphere_volume(m - 1) * std::pow(R, m) * K(R * R);
}

double PPWaveData::radial_flux() const { return (n_ - 3) * sphere_volume(n_ - 2) * A_ * spec_.bump.integral(); }

double PPWaveData::energy_oracle() const { return radial_flux() / (2.0 * (n_ - 1) * sphere_volume(n_ - 1)); }

PPGridData pp_initial_data(const PPBackground& pp, const grid::ChartGrid& G) {
  const int n = G.dim();
  if (n != pp.dim()) throw Error("pp_initial_data: grid dimension mismatch");
  for (std::size_t p = 0; p < G.size(); ++p)
    if (!(pp.S(G.coords(p)).v > 0.0)) throw Error("pp_initial_data: S <= 0 on the grid");
  PPGridData out;
  out.data = sample_data(pp, G);
  out.pair = sample_pair(G, [&](const Vec& x) { return *pp.pair(x); });
  out.closed = {grid::TensorField(G, 0, 0), grid::TensorField(G, 0, 1), grid::TensorField(G, 0, 0), 0.0};
  grid::parallel_for(G.size(), [&](std::size_t p) {
    const Vec x = G.coords(p);
    const auto cc = *pp.closed_constraints(x);
    const double Sv = pp.S(x).v;
    out.closed.mu.at(p, 0) = cc.first;
    for (int i = 0; i < n; ++i) out.closed.J.at(p, i) = cc.second.v(i);
    out.closed.sigma.at(p, 0) = 2.0 * (cc.first - std::sqrt(Sv) * std::abs(cc.second.v(n - 1)));
  });
  double m = std::numeric_limits<double>::infinity();
  for (double v : out.closed.sigma.data) m = std::min(m, v);
  out.closed.min_sigma = m;
  return out;
}

PPGridCheck pp_grid_constraint_check(const PPBackground& pp, const Vec& center, double h, int half_points,
                                     int accuracy) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = pp.dim();
  if (center.size() != n) throw Error("pp_grid_constraint_check: center dimension mismatch");
  const int margin = accuracy == 4 ? 2 : 1;
  if (half_points <= margin) throw Error("pp_grid_constraint_check: grid has no interior");
  const auto coarse = grid::ChartGrid::centered(center, h, half_points);
  // The fine grid only needs to cover the coarse interior plus its own stencil margin.
  const auto fine = grid::ChartGrid::centered(center, 0.5 * h, 2 * (half_points - margin) + margin);
  struct Err {
    double mu = 0.0, J = 0.0, mu_scale = 0.0, J_scale = 0.0;
  };
  auto run = [&](const grid::ChartGrid& G, const std::vector<Vec>& at) {
    const InitialData d = sample_data(pp, G);
    const ConstraintFields c = constraint_map(d, accuracy);
    Err e;
    for (const Vec& x : at) {
      std::vector<int> idx(n);
      for (int a = 0; a < n; ++a) idx[a] = static_cast<int>(std::lround((x(a) - G.lo()[a]) / G.spacing()[a]));
      const std::size_t p = G.flat(idx);
      const auto cc = *pp.closed_constraints(x);
      e.mu = std::max(e.mu, std::abs(c.mu.at(p, 0) - cc.first));
      e.mu_scale = std::max(e.mu_scale, std::abs(cc.first));
      for (int i = 0; i < n; ++i) {
        e.J = std::max(e.J, std::abs(c.J.at(p, i) - cc.second.v(i)));
        e.J_scale = std::max(e.J_scale, std::abs(cc.second.v(i)));
      }
    }
    return e;
  };
  std::vector<Vec> at;
  for (std::size_t p : coarse.interior_points()) at.push_back(coarse.coords(p));
  const Err ec = run(coarse, at), ef = run(fine, at);
  PPGridCheck out;
  out.points = static_cast<int>(at.size());
  auto rel = [](double e, double s) { return s > 0.0 ? e / s : e; };
  out.rel_mu_coarse = rel(ec.mu, ec.mu_scale);
  out.rel_mu_fine = rel(ef.mu, ef.mu_scale);
  out.rel_J_coarse = rel(ec.J, ec.J_scale);
  out.rel_J_fine = rel(ef.J, ef.J_scale);
  out.order_mu = std::log2(ec.mu / ef.mu);
  out.order_J = std::log2(ec.J / ef.J);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

PPCheck pp_closed_form_check(const PPWaveData& pp, const std::vector<Vec>& points) {
  PPCheck c;
  c.min_S = std::numeric_limits<double>::infinity();
  c.max_lapS = -std::numeric_limits<double>::infinity();
  const int n = pp.dim();
  for (const Vec& x : points) {
    const Jet2 S = pp.S(x);
    const auto cc = *pp.closed_constraints(x);
    const double jn = std::sqrt(S.v) * std::abs(cc.second.v(n - 1));
    c.max_sigma = std::max(c.max_sigma, std::abs(2.0 * (cc.first - jn)));
    c.max_mu_minus_J = std::max(c.max_mu_minus_J, std::abs(cc.first - jn));
    c.min_S = std::min(c.min_S, S.v);
    double lap = 0.0;
    for (int a = 0; a < n - 1; ++a) lap += S.dd(a, a);
    c.max_lapS = std::max(c.max_lapS, lap);
    double s = 0.0;
    for (int a = 0; a < n - 1; ++a) s += x(a) * x(a);
    const double bf = pp.spec().bump.value(x(n - 1)) * pp.spec().F.value_s(s);
    c.lap_identity = std::max(c.lap_identity, std::abs(lap + bf));
  }
  return c;
}

DecayFit decay_rate_estimate(const std::function<double(double)>& along_ray, const std::vector<double>& radii) {
  DecayFit fit;
  std::vector<double> lx, ly;
  for (double r : radii) {
    const double v = std::abs(along_ray(r));
    if (v > 0.0) {
      lx.push_back(std::log(r));
      ly.push_back(std::log(v));
    }
  }
  if (lx.empty()) {
    fit.exact_zero = true;
    return fit;
  }
  if (lx.size() < 3) throw Error("decay_rate_estimate: need at least three nonzero samples");
  const int k = static_cast<int>(lx.size());
  Eigen::MatrixXd M(k, 2);
  Eigen::VectorXd y(k);
  for (int i = 0; i < k; ++i) {
    M(i, 0) = 1.0;
    M(i, 1) = lx[i];
    y(i) = ly[i];
  }
  const Eigen::VectorXd c = M.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd res = y - M * c;
  fit.q = -c(1);
  fit.residual = res.norm();
  const double s2 = res.squaredNorm() / std::max(1, k - 2);
  const Eigen::MatrixXd cov = s2 * (M.transpose() * M).inverse();
  fit.ci95 = 1.96 * std::sqrt(std::max(0.0, cov(1, 1)));
  return fit;
}

std::shared_ptr<PPBackground> local_pp_background(int n) {
  if (n < 3) throw Error("local_pp_background: n must be at least 3");
  return std::make_shared<PPBackground>(n, [n](const Vec& x) {
    const auto c = coordinate_jets(x);
    Jet2 q(n);
    for (int a = 0; a + 1 < n; ++a) q = q + c[a] * c[a];
    return 1.0 + 0.3 * (1.0 - 0.25 * q) * (1.0 + 0.2 * c[n - 1]);
  });
}

}  // namespace declab
