#include "declab/spacetime.hpp"

#include "declab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace declab {

namespace {

using MetricJet = KillingDevelopment::MetricJet;

PairJet background_pair(const Background& bg, const Vec& x) {
  auto p = bg.pair(x);
  if (!p) throw Error("background " + bg.name() + " has no closed-form lapse-shift pair");
  return *p;
}

MetricJet empty_jet(int N) {
  MetricJet m;
  m.v = Mat::Zero(N, N);
  m.d.assign(N, Mat::Zero(N, N));
  m.dd.assign(N, std::vector<Mat>(N, Mat::Zero(N, N)));
  return m;
}

// First and second partials of a matrix-valued function of the spatial point by fourth-order stencils.
void fd_matrix(const std::function<Mat(const Vec&)>& F, const Vec& x, double h, Mat& v, std::vector<Mat>& d,
               std::vector<std::vector<Mat>>& dd) {
  const int n = static_cast<int>(x.size());
  static const double c1[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
  static const double c2[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};
  v = F(x);
  d.assign(n, Mat::Zero(v.rows(), v.cols()));
  dd.assign(n, std::vector<Mat>(n, Mat::Zero(v.rows(), v.cols())));
  std::vector<std::vector<Mat>> line(n, std::vector<Mat>(5));
  for (int a = 0; a < n; ++a)
    for (int s = 0; s < 5; ++s) {
      Vec y = x;
      y(a) += (s - 2) * h;
      line[a][s] = s == 2 ? v : F(y);
    }
  for (int a = 0; a < n; ++a) {
    for (int s = 0; s < 5; ++s) {
      d[a] += c1[s] * line[a][s];
      dd[a][a] += c2[s] * line[a][s];
    }
    d[a] /= h;
    dd[a][a] /= h * h;
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      Mat acc = Mat::Zero(v.rows(), v.cols());
      for (int s = 0; s < 5; ++s) {
        if (c1[s] == 0.0) continue;
        for (int r = 0; r < 5; ++r) {
          if (c1[r] == 0.0) continue;
          Vec y = x;
          y(a) += (s - 2) * h;
          y(b) += (r - 2) * h;
          acc += c1[s] * c1[r] * F(y);
        }
      }
      dd[a][b] = dd[b][a] = acc / (h * h);
    }
}

Mat inverse_derivative(const Mat& ginv, const Mat& dg) { return -ginv * dg * ginv; }

}  // namespace

KillingDevelopment::KillingDevelopment(std::shared_ptr<const Background> base, PairFn pair)
    : base_(std::move(base)), pair_(std::move(pair)) {
  if (!base_) throw Error("KillingDevelopment: null background");
  if (!pair_) throw Error("KillingDevelopment: missing lapse-shift pair");
}

KillingDevelopment::KillingDevelopment(std::shared_ptr<const Background> base)
    : KillingDevelopment(base, [b = base.get()](const Vec& x) { return background_pair(*b, x); }) {}

PairJet KillingDevelopment::pair(const Vec& x) const {
  PairJet p = pair_(x);
  if (!(std::abs(p.f.v) > 0.0) || !std::isfinite(p.f.v))
    throw Error("KillingDevelopment: lapse vanishes or is not finite");
  return p;
}

Mat KillingDevelopment::metric(const Vec& x) const {
  const int n = dim();
  const Mat g = base_->data(x).g.v;
  const PairJet p = pair(x);
  const Vec Xl = g * p.X.v;
  Mat G(n + 1, n + 1);
  G(0, 0) = -4.0 * p.f.v * p.f.v + p.X.v.dot(Xl);
  G.block(1, 0, n, 1) = Xl;
  G.block(0, 1, 1, n) = Xl.transpose();
  G.block(1, 1, n, n) = g;
  return G;
}

MetricJet KillingDevelopment::metric_jet(const Vec& x) const {
  const int n = dim();
  const int N = n + 1;
  const DataJet d = base_->data(x);
  if (!d.g.has_second()) throw Error("KillingDevelopment: metric jet lacks second derivatives");
  const PairJet p = pair(x);
  if (!p.X.has_second()) throw Error("KillingDevelopment: shift jet lacks second derivatives");
  std::vector<Jet2> X(n);
  for (int i = 0; i < n; ++i) X[i] = p.X.component(i);
  std::vector<std::vector<Jet2>> comp(N, std::vector<Jet2>(N));
  Jet2 guu = -4.0 * p.f * p.f;
  for (int i = 0; i < n; ++i) {
    Jet2 xi(n);
    for (int j = 0; j < n; ++j) xi = xi + d.g.component(i, j) * X[j];
    comp[0][i + 1] = comp[i + 1][0] = xi;
    guu = guu + X[i] * xi;
    for (int j = 0; j < n; ++j) comp[i + 1][j + 1] = d.g.component(i, j);
  }
  comp[0][0] = guu;
  MetricJet m = empty_jet(N);
  for (int A = 0; A < N; ++A)
    for (int B = 0; B < N; ++B) {
      const Jet2& c = comp[A][B];
      m.v(A, B) = c.v;
      for (int a = 0; a < n; ++a) {
        m.d[a + 1](A, B) = c.d(a);
        for (int b = 0; b < n; ++b) m.dd[a + 1][b + 1](A, B) = c.dd(a, b);
      }
    }
  return m;
}

MetricJet KillingDevelopment::metric_fd(const Vec& x, double h) const {
  const int n = dim();
  const int N = n + 1;
  if (!(h > 0.0)) throw Error("KillingDevelopment: step must be positive");
  auto F = [this](const Vec& y) { return metric(y); };
  Mat v1, v2;
  std::vector<Mat> d1, d2;
  std::vector<std::vector<Mat>> dd1, dd2;
  fd_matrix(F, x, h, v1, d1, dd1);
  fd_matrix(F, x, 0.5 * h, v2, d2, dd2);
  MetricJet m = empty_jet(N);
  m.v = v1;
  for (int a = 0; a < n; ++a) {
    m.d[a + 1] = (16.0 * d2[a] - d1[a]) / 15.0;
    for (int b = 0; b < n; ++b) m.dd[a + 1][b + 1] = (16.0 * dd2[a][b] - dd1[a][b]) / 15.0;
  }
  return m;
}

Vec KillingDevelopment::normal(const Vec& x) const {
  const int n = dim();
  const PairJet p = pair(x);
  Vec v(n + 1);
  v(0) = 1.0;
  v.tail(n) = -p.X.v;
  return v / (2.0 * p.f.v);
}

Mat einstein_coordinates(const MetricJet& m) {
  const int N = static_cast<int>(m.v.rows());
  const Mat ginv = m.v.inverse();
  // Γ_{l ij} (first kind) and its derivatives.
  auto first_kind = [&](const std::vector<Mat>& dg, int l, int i, int j) {
    return 0.5 * (dg[i](l, j) + dg[j](l, i) - dg[l](i, j));
  };
  std::vector<Mat> G1(N, Mat::Zero(N, N));
  for (int l = 0; l < N; ++l)
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) G1[l](i, j) = first_kind(m.d, l, i, j);
  std::vector<Mat> gam(N, Mat::Zero(N, N));
  for (int l = 0; l < N; ++l)
    for (int q = 0; q < N; ++q) gam[l] += ginv(l, q) * G1[q];
  // ∂_a Γ^l_ij = ∂_a g^{lq} Γ_qij + g^{lq} ∂_a Γ_qij
  std::vector<std::vector<Mat>> dgam(N, std::vector<Mat>(N, Mat::Zero(N, N)));
  for (int a = 0; a < N; ++a) {
    const Mat dginv = inverse_derivative(ginv, m.d[a]);
    std::vector<Mat> dG1(N, Mat::Zero(N, N));
    for (int l = 0; l < N; ++l)
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
          dG1[l](i, j) = 0.5 * (m.dd[a][i](l, j) + m.dd[a][j](l, i) - m.dd[a][l](i, j));
    for (int l = 0; l < N; ++l)
      for (int q = 0; q < N; ++q) dgam[a][l] += dginv(l, q) * G1[q] + ginv(l, q) * dG1[q];
  }
  // Ric_jk = ∂_l Γ^l_jk − ∂_j Γ^l_lk + Γ^m_jk Γ^l_lm − Γ^m_lk Γ^l_jm
  Mat ric = Mat::Zero(N, N);
  for (int j = 0; j < N; ++j)
    for (int k = 0; k < N; ++k) {
      double s = 0.0;
      for (int l = 0; l < N; ++l) {
        s += dgam[l][l](j, k) - dgam[j][l](l, k);
        for (int q = 0; q < N; ++q) s += gam[q](j, k) * gam[l](l, q) - gam[q](l, k) * gam[l](j, q);
      }
      ric(j, k) = s;
    }
  ric = 0.5 * (ric + ric.transpose()).eval();
  const double R = (ginv.cwiseProduct(ric)).sum();
  return ric - 0.5 * R * m.v;
}

Mat spacetime_einstein(const KillingDevelopment& dev, const Vec& x, DerivativeMode mode, double h) {
  const int n = dev.dim();
  const MetricJet m = mode == DerivativeMode::jets ? dev.metric_jet(x) : dev.metric_fd(x, h);
  const Mat G = einstein_coordinates(m);
  Mat E = Mat::Zero(n + 1, n + 1);
  E.col(0) = dev.normal(x);
  for (int i = 0; i < n; ++i) E(i + 1, i + 1) = 1.0;
  return E.transpose() * G * E;
}

TangentialEinstein einstein_tangential_closed_form(const DataJet& d, const PairJet& fx) {
  const int n = d.dim();
  const Geometry geo = geometry(d.g, true);
  const double f = fx.f.v;
  if (!(std::abs(f) > 0.0)) throw Error("einstein_tangential_closed_form: lapse vanishes");
  const Mat& g = geo.g;
  const Mat& pi = d.pi.v;
  const Mat pl = lower2(geo, pi);
  const double tr = g.cwiseProduct(pi).sum();
  const double norm2 = pi.cwiseProduct(pl).sum();
  const Mat lie_pi = lower2(geo, lie_contra(d.pi, fx.X));
  TangentialEinstein out;
  out.G = geo.ricci - 0.5 * geo.scalar * g;
  out.G += -3.0 / (n - 1) * tr * pl + 2.0 * pl * geo.ginv * pl;
  out.G += (tr * tr / (2.0 * (n - 1)) - 0.5 * norm2) * g;
  out.G += (-0.5 * lie_pi - hessian(geo, fx.f) + laplacian(geo, fx.f) * g) / f;
  const Mat killing = 0.5 * lie_metric(geo, fx.X) - (2.0 / (n - 1) * tr * g - 2.0 * pl) * f;
  out.killing_residual = killing.cwiseAbs().maxCoeff();
  return out;
}

DataJet induced_data(const SymJet& gj, const PairJet& fx) {
  const int n = gj.dim();
  if (!gj.has_second() || !fx.X.has_second()) throw Error("induced_data: needs second derivatives of g and X");
  const double f = fx.f.v;
  if (!(std::abs(f) > 0.0)) throw Error("induced_data: lapse vanishes");
  const Mat& g = gj.v;
  const Mat ginv = g.inverse();
  const Mat& DX = fx.X.d;  // DX(m,i) = ∂_i X^m
  auto lie = [&](const Vec& X, const Mat& dX, const std::vector<Mat>& dg) {
    Mat L = dX.transpose() * g + g * dX;
    for (int m = 0; m < n; ++m) L += X(m) * dg[m];
    return L;
  };
  const Mat L = lie(fx.X.v, DX, gj.d);
  const Mat K = -L / (4.0 * f);
  const double trk = ginv.cwiseProduct(K).sum();
  const Mat Pl = K - trk * g;
  DataJet out;
  out.g = gj;
  out.pi.v = ginv * Pl * ginv;
  out.pi.d.assign(n, Mat::Zero(n, n));
  for (int a = 0; a < n; ++a) {
    Mat dDX(n, n);  // ∂_a ∂_i X^m
    for (int m = 0; m < n; ++m)
      for (int i = 0; i < n; ++i) dDX(m, i) = fx.X.dd[m](i, a);
    Mat dL = dDX.transpose() * g + DX.transpose() * gj.d[a] + gj.d[a] * DX + g * dDX;
    for (int m = 0; m < n; ++m) dL += DX(m, a) * gj.d[m] + fx.X.v(m) * gj.dd[a][m];
    const Mat dK = -dL / (4.0 * f) + L * (fx.f.d(a) / (4.0 * f * f));
    const Mat dginv = inverse_derivative(ginv, gj.d[a]);
    const double dtrk = dginv.cwiseProduct(K).sum() + ginv.cwiseProduct(dK).sum();
    const Mat dPl = dK - dtrk * g - trk * gj.d[a];
    out.pi.d[a] = dginv * Pl * ginv + ginv * dPl * ginv + ginv * Pl * dginv;
  }
  return out;
}

std::shared_ptr<FunctionBackground> random_killing_background(int n, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  auto gpert = std::make_shared<RandomSym>(n, 3, amplitude, 1.5, rng);
  auto fpert = std::make_shared<RandomTrig>(n, 3, amplitude, 1.5, rng);
  auto X = std::make_shared<RandomVec>(n, 3, 3.0 * amplitude, 1.5, rng);
  auto pair = [fpert, X](const Vec& x) {
    PairJet p;
    p.f = 1.0 + (*fpert)(x);
    p.X = (*X)(x);
    return p;
  };
  auto metric = [gpert, n](const Vec& x) { return SymJet::constant(Mat::Identity(n, n)) + (*gpert)(x); };
  auto data = [metric, pair](const Vec& x) { return induced_data(metric(x), pair(x)); };
  return std::make_shared<FunctionBackground>(n, "killing-development", data, pair);
}

FluidPoint null_fluid_decompose(const Mat& G, const Mat& g, double mu, const Vec& J, double floor) {
  const int n = static_cast<int>(g.rows());
  FluidPoint out;
  const Vec Jl = g * J;
  const double jn = std::sqrt(std::max(0.0, J.dot(Jl)));
  out.p = jn - mu;
  out.v = Vec::Zero(n + 1);
  Mat model = Mat::Zero(n + 1, n + 1);
  model(0, 0) = -out.p;
  model.block(1, 1, n, n) = out.p * g;
  if (jn > floor) {
    const double s = std::sqrt(jn);
    out.v(0) = s;
    out.v.tail(n) = -J / s;
    Vec vl(n + 1);
    vl(0) = -s;
    vl.tail(n) = -Jl / s;
    model += vl * vl.transpose();
  } else {
    out.null_branch = true;
  }
  out.residual = (G - model).cwiseAbs().maxCoeff();
  return out;
}

FluidSummary summarize(const std::vector<FluidPoint>& pts) {
  FluidSummary s;
  s.points = static_cast<int>(pts.size());
  if (pts.empty()) return s;
  s.p_min = std::numeric_limits<double>::infinity();
  s.p_max = -s.p_min;
  double mean = 0.0;
  for (const auto& p : pts) {
    s.p_min = std::min(s.p_min, p.p);
    s.p_max = std::max(s.p_max, p.p);
    s.max_residual = std::max(s.max_residual, p.residual);
    mean += p.p;
  }
  mean /= pts.size();
  double var = 0.0;
  for (const auto& p : pts) var += (p.p - mean) * (p.p - mean);
  s.p_std = std::sqrt(var / pts.size());
  return s;
}

Mat orthonormal_frame(const Mat& G, const Mat& g) {
  const int n = static_cast<int>(g.rows());
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) throw Error("orthonormal_frame: metric not positive definite");
  const Mat L = llt.matrixL();
  const Mat C = L.transpose().triangularView<Eigen::Upper>().solve(Mat::Identity(n, n));
  Mat T = Mat::Zero(n + 1, n + 1);
  T(0, 0) = 1.0;
  T.block(1, 1, n, n) = C;
  return T.transpose() * G * T;
}

namespace {
Vec random_direction(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N01;
  Vec w(n);
  do {
    for (int i = 0; i < n; ++i) w(i) = N01(rng);
  } while (w.norm() < 1e-12);
  return w / w.norm();
}
}  // namespace

DecSample dec_sample_check(const Mat& G_on, int count, std::mt19937_64& rng) {
  const int n = static_cast<int>(G_on.rows()) - 1;
  std::uniform_real_distribution<double> srange(0.0, 3.0);
  DecSample out;
  out.min_value = std::numeric_limits<double>::infinity();
  Vec u(n + 1), w(n + 1);
  for (int k = 0; k < count; ++k) {
    const double s = srange(rng);
    u(0) = std::cosh(s);
    u.tail(n) = std::sinh(s) * random_direction(n, rng);
    w(0) = 1.0;
    w.tail(n) = random_direction(n, rng);
    out.min_value = std::min(out.min_value, u.dot(G_on * w));
  }
  out.count = count;
  return out;
}

Mat synthetic_null_fluid(int n, double p, const Vec& omega, double scale) {
  Mat eta = Mat::Identity(n + 1, n + 1);
  eta(0, 0) = -1.0;
  Vec vl(n + 1);
  vl(0) = -scale;
  vl.tail(n) = scale * omega.normalized();
  return p * eta + vl * vl.transpose();
}

SpacetimeCheck spacetime_check(const KillingDevelopment& dev, const std::vector<Vec>& points, int dec_samples,
                               std::uint64_t seed, double fd_h, const std::function<Mat(const Vec&)>& reference) {
  if (points.empty()) throw Error("spacetime_check: no points");
  const int n = dev.dim();
  const Background& bg = dev.base();
  std::mt19937_64 rng(seed);
  const int per_point = (dec_samples + static_cast<int>(points.size()) - 1) / static_cast<int>(points.size());
  SpacetimeCheck r;
  r.points = static_cast<int>(points.size());
  r.dec_min = std::numeric_limits<double>::infinity();
  std::vector<FluidPoint> fluid;
  for (const Vec& x : points) {
    const Mat G = spacetime_einstein(dev, x);
    const Mat Gf = spacetime_einstein(dev, x, DerivativeMode::finite_difference, fd_h);
    const DataJet d = bg.data(x);
    const ConstraintPoint c = constraints_at(d);
    const TangentialEinstein T = einstein_tangential_closed_form(d, dev.pair(x));
    Mat closed(n + 1, n + 1);
    closed(0, 0) = c.mu;
    const Vec Jl = d.g.v * c.J;
    closed.block(1, 0, n, 1) = Jl;
    closed.block(0, 1, 1, n) = Jl.transpose();
    closed.block(1, 1, n, n) = T.G;
    r.closed_normal = std::max({r.closed_normal, std::abs(G(0, 0) - c.mu), (G.block(1, 0, n, 1) - Jl).cwiseAbs().maxCoeff()});
    r.closed_tangential = std::max(r.closed_tangential, (G.block(1, 1, n, n) - T.G).cwiseAbs().maxCoeff());
    r.fd_vs_closed = std::max(r.fd_vs_closed, (Gf - closed).cwiseAbs().maxCoeff());
    r.killing_residual = std::max(r.killing_residual, T.killing_residual);
    if (reference) r.expansion = std::max(r.expansion, (dev.metric(x) - reference(x)).cwiseAbs().maxCoeff());
    fluid.push_back(null_fluid_decompose(G, d.g.v, c.mu, c.J));
    const DecSample ds = dec_sample_check(orthonormal_frame(G, d.g.v), per_point, rng);
    r.dec_min = std::min(r.dec_min, ds.min_value);
    r.dec_samples += ds.count;
  }
  r.fluid = summarize(fluid);
  return r;
}

}  // namespace declab
