#include "declab/background.hpp"

#include <cmath>

namespace declab {

namespace {

SymJet diag_metric(int n, const std::vector<Jet2>& diag) {
  return SymJet::from_components(n, [&](int i, int j) { return i == j ? diag[i] : Jet2(n, 0.0); });
}

}  // namespace

DataJet FlatBackground::data(const Vec&) const {
  return {SymJet::constant(Mat::Identity(n_, n_)), SymJet::zero(n_, false)};
}

std::optional<std::pair<double, VecJet>> FlatBackground::closed_constraints(const Vec&) const {
  return std::pair<double, VecJet>{0.0, VecJet::zero(n_, false)};
}

DataJet SphereBackground::data(const Vec& x) const {
  const Jet2 th = Jet2::coordinate(2, 0, x(0));
  const Jet2 s = sin(th);
  return {diag_metric(2, {Jet2(2, 1.0), s * s}), SymJet::zero(2, false)};
}

Jet2 SchwarzschildBackground::conformal_factor(const Vec& x) const {
  const auto c = coordinate_jets(x);
  Jet2 r2(n_, 0.0);
  for (const auto& xi : c) r2 = r2 + xi * xi;
  if (!(r2.v > 0.0)) throw Error("schwarzschild: evaluation at the origin");
  return 1.0 + (m_ / 2.0) * pow(r2, -(n_ - 2) / 2.0);
}

DataJet SchwarzschildBackground::data(const Vec& x) const {
  const Jet2 psi = conformal_factor(x);
  const Jet2 a = pow(psi, 4.0 / (n_ - 2));
  return {diag_metric(n_, std::vector<Jet2>(n_, a)), SymJet::zero(n_, false)};
}

InitialData sample_data(const Background& bg, const grid::ChartGrid& G) {
  if (G.dim() != bg.dim()) throw Error("sample_data: grid and background dimensions differ");
  const int n = G.dim();
  InitialData d{grid::TensorField(G, 2, 0, true), grid::TensorField(G, 0, 2, true)};
  grid::parallel_for(G.size(), [&](std::size_t p) {
    const DataJet j = bg.data(G.coords(p));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        d.g.at(p, i * n + k) = j.g.v(i, k);
        d.pi.at(p, i * n + k) = j.pi.v(i, k);
      }
  });
  return d;
}

LapseShift sample_pair(const grid::ChartGrid& G, const std::function<PairJet(const Vec&)>& fn) {
  const int n = G.dim();
  LapseShift s{grid::TensorField(G, 0, 0), grid::TensorField(G, 0, 1)};
  grid::parallel_for(G.size(), [&](std::size_t p) {
    const PairJet j = fn(G.coords(p));
    s.f.at(p, 0) = j.f.v;
    for (int i = 0; i < n; ++i) s.X.at(p, i) = j.X.v(i);
  });
  return s;
}

VecJet current_jet(const Background& bg, const Vec& x, double h) {
  const int n = bg.dim();
  auto J = [&](const Vec& y) {
    if (auto cc = bg.closed_constraints(y)) return Vec(cc->second.v);
    return Vec(constraints_at(bg.data(y)).J);
  };
  VecJet out = VecJet::zero(n, false);
  out.v = J(x);
  for (int k = 0; k < n; ++k) {
    Vec e = Vec::Zero(n);
    e(k) = h;
    out.d.col(k) = (J(x - 2 * e) - 8.0 * J(x - e) + 8.0 * J(x + e) - J(x + 2 * e)) / (12.0 * h);
  }
  return out;
}

RandomTrig::RandomTrig(int n, int terms, double amplitude, double max_freq, std::mt19937_64& rng) : n_(n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> ph(0.0, 2.0 * M_PI);
  double total = 0.0;
  for (int t = 0; t < terms; ++t) {
    Vec w(n);
    for (int i = 0; i < n; ++i) w(i) = u(rng) * max_freq;
    omega_.push_back(w);
    amp_.push_back(u(rng));
    phase_.push_back(ph(rng));
    total += std::abs(amp_.back());
  }
  if (total > 0.0)
    for (auto& a : amp_) a *= amplitude / total;
}

Jet2 RandomTrig::operator()(const Vec& x) const {
  Jet2 out(n_, 0.0);
  for (std::size_t t = 0; t < amp_.size(); ++t) {
    const double th = omega_[t].dot(x) + phase_[t];
    const double s = std::sin(th), c = std::cos(th);
    out.v += amp_[t] * s;
    out.d += amp_[t] * c * omega_[t];
    out.dd -= amp_[t] * s * omega_[t] * omega_[t].transpose();
  }
  return out;
}

Jet2 smooth_bump(const Vec& x, const Vec& center, double radius) {
  const int n = static_cast<int>(x.size());
  const Vec y = (x - center) / radius;
  const double q = y.squaredNorm();
  if (q >= 1.0) return Jet2(n, 0.0);
  Jet2 qj(n, q);
  qj.d = 2.0 * y / radius;
  qj.dd = Mat::Identity(n, n) * (2.0 / (radius * radius));
  return exp(1.0 - pow(1.0 - qj, -1.0));
}

RandomSym::RandomSym(int dim, int terms, double amplitude, double max_freq, std::mt19937_64& rng) : n(dim) {
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) comp.emplace_back(n, terms, amplitude, max_freq, rng);
}

SymJet RandomSym::operator()(const Vec& x) const {
  std::vector<Jet2> vals;
  vals.reserve(comp.size());
  for (const auto& c : comp) vals.push_back(c(x));
  return SymJet::from_components(n, [&](int i, int j) {
    if (i > j) std::swap(i, j);
    return vals[i * n - i * (i - 1) / 2 + (j - i)];
  });
}

RandomVec::RandomVec(int dim, int terms, double amplitude, double max_freq, std::mt19937_64& rng) : n(dim) {
  for (int i = 0; i < n; ++i) comp.emplace_back(n, terms, amplitude, max_freq, rng);
}

VecJet RandomVec::operator()(const Vec& x) const {
  return VecJet::from_components(n, [&](int i) { return comp[i](x); });
}

SymJet scale(const SymJet& t, const Jet2& s) {
  SymJet full = t;
  if (!full.has_second()) full.dd.assign(t.dim(), std::vector<Mat>(t.dim(), Mat::Zero(t.dim(), t.dim())));
  return SymJet::from_components(t.dim(), [&](int i, int j) { return full.component(i, j) * s; });
}

VecJet scale(const VecJet& v, const Jet2& s) {
  VecJet full = v;
  if (!full.has_second()) full.dd.assign(v.dim(), Mat::Zero(v.dim(), v.dim()));
  return VecJet::from_components(v.dim(), [&](int i) { return full.component(i) * s; });
}

Jet2 poly_bump(const Vec& x, const Vec& center, double radius, int k) {
  const int n = static_cast<int>(x.size());
  if (!(radius > 0.0) || k < 1) throw Error("poly_bump: radius must be positive and k ≥ 1");
  const auto c = coordinate_jets(x);
  Jet2 q(n);
  for (int i = 0; i < n; ++i) q = q + (c[i] - center(i)) * (c[i] - center(i));
  q = q / (radius * radius);
  if (q.v >= 1.0) return Jet2(n);
  Jet2 b = 1.0 - q, out = b;
  for (int i = 1; i < k; ++i) out = out * b;
  return out;
}

std::shared_ptr<FunctionBackground> random_background(int n, std::uint64_t seed, double g_amp, double pi_amp,
                                                      double max_freq) {
  std::mt19937_64 rng(seed);
  auto g = std::make_shared<RandomSym>(n, 3, g_amp, max_freq, rng);
  auto pi = std::make_shared<RandomSym>(n, 3, pi_amp, max_freq, rng);
  auto data = [g, pi, n](const Vec& x) {
    DataJet d{SymJet::constant(Mat::Identity(n, n)) + (*g)(x), (*pi)(x)};
    d.pi.dd.clear();
    return d;
  };
  return std::make_shared<FunctionBackground>(n, "random", data);
}

double stencil_truncation(const Background& bg, const InitialData& d, const LapseShift* s,
                          const std::function<PairJet(const Vec&)>& pair, int accuracy) {
  const auto& G = d.g.grid;
  const int n = G.dim();
  const auto pts = G.interior_points();
  std::vector<double> err(pts.size(), 0.0);
  auto upd = [](double& e, const auto& a, const auto& b) { e = std::max(e, (a - b).cwiseAbs().maxCoeff()); };
  grid::parallel_for(pts.size(), [&](std::size_t i) {
    const std::size_t p = pts[i];
    const Vec x = G.coords(p);
    const DataJet exact = bg.data(x);
    const DataJet fd = data_jet(d, p, accuracy);
    double e = 0.0;
    for (int a = 0; a < n; ++a) {
      upd(e, fd.g.d[a], exact.g.d[a]);
      upd(e, fd.pi.d[a], exact.pi.d[a]);
      for (int b = 0; b < n; ++b) upd(e, fd.g.dd[a][b], exact.g.dd[a][b]);
    }
    if (s && pair) {
      const PairJet pe = pair(x);
      const PairJet pf = pair_jet(*s, p, accuracy);
      upd(e, pf.f.d, pe.f.d);
      upd(e, pf.f.dd, pe.f.dd);
      upd(e, pf.X.d, pe.X.d);
      for (int k = 0; k < n; ++k) upd(e, pf.X.dd[k], pe.X.dd[k]);
    }
    err[i] = e;
  });
  double m = 0.0;
  for (double e : err) m = std::max(m, e);
  return m;
}

}  // namespace declab
