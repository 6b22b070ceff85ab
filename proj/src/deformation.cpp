#include "declab/deformation.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace declab {

// ---- Poisson ----

namespace {

// ∫ ∂_i φ_a ∂_j φ_b over one cell for multilinear nodal basis functions, nodes a, b ∈ {0,1}^n as bit masks.
std::vector<std::vector<Eigen::MatrixXd>> reference_stiffness(int n, const std::vector<double>& h) {
  const int nv = 1 << n;
  std::vector<std::vector<Eigen::MatrixXd>> I(n, std::vector<Eigen::MatrixXd>(n, Eigen::MatrixXd::Zero(nv, nv)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < nv; ++a)
        for (int b = 0; b < nv; ++b) {
          double v = 1.0;
          for (int k = 0; k < n; ++k) {
            const int ak = (a >> k) & 1, bk = (b >> k) & 1;
            const double sa = ak ? 1.0 : -1.0, sb = bk ? 1.0 : -1.0;
            const double mass = h[k] * (ak == bk ? 1.0 / 3.0 : 1.0 / 6.0);
            if (k == i && k == j)
              v *= sa * sb / h[k];
            else if (k == i)
              v *= 0.5 * sa;
            else if (k == j)
              v *= 0.5 * sb;
            else
              v *= mass;
          }
          I[i][j](a, b) = v;
        }
  return I;
}

}  // namespace

PoissonResult solve_poisson(const grid::TensorField& g, const grid::TensorField& rho, const PoissonOptions& opt) {
  const grid::ChartGrid& G = g.grid;
  if (!(rho.grid == G)) throw Error("solve_poisson: grid mismatch");
  if (g.rank() != 2 || g.covariant != 2 || rho.rank() != 0) throw Error("solve_poisson: expected covariant g and scalar rho");
  const int n = G.dim(), nv = 1 << n;
  if (n < 3) throw Error("solve_poisson: harmonic expansion needs n >= 3");
  const auto& shape = G.shape();
  const auto& h = G.spacing();
  double cellvol = 1.0;
  for (double s : h) cellvol *= s;

  // Pointwise √g g^{ij} and √g.
  std::vector<Mat> coef(G.size());
  std::vector<double> vol(G.size());
  for (std::size_t p = 0; p < G.size(); ++p) {
    Mat gm(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) gm(i, j) = g.at(p, i * n + j);
    if (!(min_eigenvalue(gm) > 0.0)) throw Error("solve_poisson: metric is not positive definite");
    const double sq = std::sqrt(gm.determinant());
    coef[p] = sq * gm.inverse();
    vol[p] = sq;
  }

  // Cells are indexed by their lowest corner node; corner b of the cell at node c is node c + off[b].
  std::vector<std::size_t> off(nv, 0);
  for (int a = 0; a < nv; ++a)
    for (int k = 0; k < n; ++k)
      if ((a >> k) & 1) off[a] += G.stride(k);
  std::vector<int> idx_all(G.size() * n);
  for (std::size_t p = 0; p < G.size(); ++p) {
    const auto idx = G.unflat(p);
    for (int k = 0; k < n; ++k) idx_all[p * n + k] = idx[k];
  }
  auto is_cell = [&](std::size_t c) {
    for (int k = 0; k < n; ++k)
      if (idx_all[c * n + k] >= shape[k] - 1) return false;
    return true;
  };
  const double bytes = static_cast<double>(G.size()) * nv * nv * sizeof(double);
  if (bytes > 1.5e9) throw Error("solve_poisson: memory budget exceeded");
  const auto I = reference_stiffness(n, h);
  std::vector<double> Ke(G.size() * nv * nv, 0.0);
  std::vector<char> cell(G.size());
  grid::parallel_for(G.size(), [&](std::size_t c) {
    cell[c] = is_cell(c);
    if (!cell[c]) return;
    Mat M = Mat::Zero(n, n);
    for (int a = 0; a < nv; ++a) M += coef[c + off[a]];
    M /= nv;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nv, nv);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) K += M(i, j) * I[i][j];
    for (int a = 0; a < nv; ++a)
      for (int b = 0; b < nv; ++b) Ke[(c * nv + a) * nv + b] = K(a, b);
  });

  // Node-centred application of K: y_p = Σ_{cells ∋ p} Σ_b K_e(a_p, b) x_b.
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    grid::parallel_for(G.size(), [&](std::size_t p) {
      double acc = 0.0;
      for (int a = 0; a < nv; ++a) {
        bool ok = true;
        for (int k = 0; k < n && ok; ++k)
          if (((a >> k) & 1) && idx_all[p * n + k] == 0) ok = false;
        if (!ok) continue;
        const std::size_t c = p - off[a];
        if (!cell[c]) continue;
        const double* K = &Ke[(c * nv + a) * nv];
        for (int b = 0; b < nv; ++b) acc += K[b] * x[c + off[b]];
      }
      y[p] = acc;
    });
  };

  std::vector<char> fixed(G.size());
  for (std::size_t p = 0; p < G.size(); ++p) fixed[p] = G.boundary_distance(p) == 0;

  // Moments of ρ for the boundary data.
  double mass = 0.0;
  Vec dip = Vec::Zero(n);
  for (std::size_t p = 0; p < G.size(); ++p) {
    const double w = rho.at(p, 0) * vol[p] * cellvol;
    mass += w;
    dip += w * G.coords(p);
  }
  const double wn = sphere_volume(n - 1);
  PoissonResult res;
  res.a_bc = -mass / ((n - 2) * wn);
  std::vector<double> v(G.size(), 0.0);
  if (opt.dirichlet) {
    for (std::size_t p = 0; p < G.size(); ++p)
      if (fixed[p]) v[p] = opt.dirichlet(G.coords(p));
  } else if (opt.harmonic_bc)
    for (std::size_t p = 0; p < G.size(); ++p)
      if (fixed[p]) {
        const Vec x = G.coords(p);
        const double r = x.norm();
        if (!(r > 0.0)) throw Error("solve_poisson: origin on the outer boundary");
        v[p] = res.a_bc * std::pow(r, 2.0 - n) - x.dot(dip) * std::pow(r, -double(n)) / wn;
      }

  // b = −M ρ − K v_B on the free nodes.
  std::vector<double> b(G.size(), 0.0), Kv(G.size());
  apply(v, Kv);
  for (std::size_t p = 0; p < G.size(); ++p)
    if (!fixed[p]) b[p] = -rho.at(p, 0) * vol[p] * cellvol - Kv[p];

  // Conjugate gradients on the free nodes.
  std::vector<double> x(G.size(), 0.0), r = b, d = b, q(G.size());
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p)
      if (!fixed[p]) s += a[p] * c[p];
    return s;
  };
  const double bnorm = std::sqrt(dot(b, b));
  double rr = dot(r, r);
  int it = 0;
  if (bnorm > 0.0) {
    for (; it < opt.max_iter && std::sqrt(rr) > opt.tol * bnorm; ++it) {
      apply(d, q);
      for (std::size_t p = 0; p < G.size(); ++p)
        if (fixed[p]) q[p] = 0.0;
      const double dq = dot(d, q);
      if (!(dq > 0.0)) throw Error("solve_poisson: discrete operator is not positive definite");
      const double alpha = rr / dq;
      for (std::size_t p = 0; p < G.size(); ++p)
        if (!fixed[p]) {
          x[p] += alpha * d[p];
          r[p] -= alpha * q[p];
        }
      const double rr2 = dot(r, r);
      const double beta = rr2 / rr;
      rr = rr2;
      for (std::size_t p = 0; p < G.size(); ++p)
        if (!fixed[p]) d[p] = r[p] + beta * d[p];
    }
    if (std::sqrt(rr) > opt.tol * bnorm) throw Error("solve_poisson: conjugate gradients did not converge");
  }
  res.iterations = it;
  res.residual = bnorm > 0.0 ? std::sqrt(rr) / bnorm : 0.0;
  res.v = grid::TensorField(G, 0, 0);
  for (std::size_t p = 0; p < G.size(); ++p) res.v.at(p, 0) = fixed[p] ? v[p] : x[p];

  // Leading coefficient from a shell: v ≈ a r^{2−n} + c r^{1−n}.
  double half = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) half = std::min({half, -G.lo()[k], G.hi()[k]});
  const double rmin = opt.fit_rmin > 0.0 ? opt.fit_rmin : 0.5 * half;
  const double rmax = opt.fit_rmax > 0.0 ? opt.fit_rmax : 0.9 * half;
  std::vector<std::size_t> shell;
  for (std::size_t p = 0; p < G.size(); ++p) {
    const double rp = G.coords(p).norm();
    if (rp >= rmin && rp <= rmax) shell.push_back(p);
  }
  if (shell.size() >= 2) {
    Eigen::MatrixXd A(shell.size(), 2);
    Eigen::VectorXd y(shell.size());
    for (std::size_t k = 0; k < shell.size(); ++k) {
      const double rp = G.coords(shell[k]).norm();
      A(k, 0) = std::pow(rp, 2.0 - n);
      A(k, 1) = std::pow(rp, 1.0 - n);
      y(k) = res.v.at(shell[k], 0);
    }
    res.a_fit = A.colPivHouseholderQr().solve(y)(0);
  }
  return res;
}

// ---- conformal family ----

double RadialPotential::value(double r) const { return derivatives(r)[0]; }

std::array<double, 3> RadialPotential::derivatives(double r) const {
  const double k = 1.0 / (delta * (n - 2 + delta));
  return {-0.5 * std::pow(r, 2.0 - n) - k * std::pow(r, 2.0 - n - delta),
          0.5 * (n - 2) * std::pow(r, 1.0 - n) + std::pow(r, 1.0 - n - delta) / delta,
          0.5 * (n - 2) * (1.0 - n) * std::pow(r, -double(n)) + (1.0 - n - delta) * std::pow(r, -n - delta) / delta};
}

std::array<double, 3> Cutoff::derivatives(double r) const {
  const double s = (r - r0) / r0;
  if (s <= 0.0) return {0.0, 0.0, 0.0};
  if (s >= 1.0) return {1.0, 0.0, 0.0};
  auto e = [](double x) -> std::array<double, 3> {
    const double v = std::exp(-1.0 / x);
    return {v, v / (x * x), v * (1.0 / (x * x * x * x) - 2.0 / (x * x * x))};
  };
  const auto a = e(s), bb = e(1.0 - s);
  const double N = a[0], N1 = a[1], N2 = a[2];
  const double D = a[0] + bb[0], D1 = a[1] - bb[1], D2 = a[2] + bb[2];
  const double f = N / D;
  const double f1 = (N1 * D - N * D1) / (D * D);
  const double f2 = (N2 * D - N * D2) / (D * D) - 2.0 * D1 * (N1 * D - N * D1) / (D * D * D);
  return {f, f1 / r0, f2 / (r0 * r0)};
}

ConformalFamily::ConformalFamily(std::shared_ptr<const Background> base, double r0, double delta, double t)
    : base_(std::move(base)), r0_(r0), t_(t) {
  const int n = base_->dim();
  if (n < 3) throw Error("conformal family: n must be at least 3");
  if (!(r0 > 0.0)) throw Error("conformal family: r0 must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw Error("conformal family: delta must lie in (0, 1)");
  pot_ = {n, delta};
  chi_ = {r0};
  if (std::abs(t) >= positivity_bound()) throw Error("conformal family: u_t <= 0 somewhere");
}

Jet2 ConformalFamily::chi_v(const Vec& x) const {
  const int n = dim();
  const double r = x.norm();
  if (r <= r0_) return Jet2(n, 0.0);
  Jet2 r2(n, 0.0);
  for (const auto& xi : coordinate_jets(x)) r2 = r2 + xi * xi;
  const Jet2 rj = sqrt(r2);
  const auto c = chi_.derivatives(r);
  const auto v = pot_.derivatives(r);
  return compose(rj, c[0] * v[0], c[1] * v[0] + c[0] * v[1], c[2] * v[0] + 2.0 * c[1] * v[1] + c[0] * v[2]);
}

Jet2 ConformalFamily::u(const Vec& x) const { return 1.0 + t_ * chi_v(x); }

DataJet ConformalFamily::data(const Vec& x) const {
  const DataJet d = base_->data(x);
  if (x.norm() <= r0_ || t_ == 0.0) return d;
  const int n = dim();
  const Jet2 uj = u(x);
  DataJet out{scale(d.g, pow(uj, 4.0 / (n - 2))), scale(d.pi, pow(uj, -6.0 / (n - 2)))};
  out.pi.dd.clear();
  return out;
}

FamilyPoint ConformalFamily::closed_form(const Vec& x) const {
  const int n = dim();
  const DataJet d = base_->data(x);
  const Geometry geo = geometry(d.g);
  const ConstraintPoint c = constraints_at(d, geo);
  const Jet2 w = chi_v(x);
  const double uv = 1.0 + t_ * w.v;
  const double lapw = laplacian(geo, w);
  FamilyPoint fp;
  fp.u = uv;
  fp.phi = -(2.0 * (n - 1) / (n - 2)) * lapw / uv;
  const Mat& pi = d.pi.v;
  const double tr = (geo.g.cwiseProduct(pi)).sum();
  fp.upsilon = (2.0 * (n - 1) / (n - 2)) * (pi * w.d) / uv - (2.0 / (n - 2)) * tr * (geo.ginv * w.d) / uv;
  fp.mu_closed = 0.5 * std::pow(uv, -4.0 / (n - 2)) * (2.0 * c.mu + 2.0 * t_ * fp.phi);
  fp.J_closed = std::pow(uv, -6.0 / (n - 2)) * (c.J + t_ * fp.upsilon);
  const double pi2 = (geo.g * pi * geo.g * pi).trace();
  fp.scale = std::pow(uv, -4.0 / (n - 2)) *
             (std::abs(4.0 * (n - 1) / (n - 2) * t_ * lapw / uv) + std::abs(geo.scalar) + pi2 + tr * tr / (n - 1));
  return fp;
}

double ConformalFamily::positivity_bound() const {
  double m = 0.0;
  const int steps = 4000;
  for (int k = 0; k <= steps; ++k) {
    const double r = r0_ * std::pow(1000.0, double(k) / steps);
    m = std::max(m, std::abs(chi_.derivatives(r)[0] * pot_.value(r)));
  }
  return m > 0.0 ? 1.0 / m : std::numeric_limits<double>::infinity();
}

double default_delta(double q) { return 0.5 * std::min(q, 1.0); }

DataJet fd_data_jet(const Background& bg, const Vec& x, double h) {
  const int n = bg.dim();
  auto vals = [&](const Vec& y) {
    const DataJet d = bg.data(y);
    return std::pair<Mat, Mat>{d.g.v, d.pi.v};
  };
  auto once = [&](double hh) {
    const auto c = vals(x);
    DataJet d{SymJet::zero(n, true), SymJet::zero(n, false)};
    d.g.v = c.first;
    d.pi.v = c.second;
    std::vector<std::pair<Mat, Mat>> pm(n), mm(n), p2(n), m2(n);
    for (int k = 0; k < n; ++k) {
      Vec e = Vec::Zero(n);
      e(k) = hh;
      pm[k] = vals(x + e);
      mm[k] = vals(x - e);
      p2[k] = vals(x + 2 * e);
      m2[k] = vals(x - 2 * e);
      d.g.d[k] = (m2[k].first - 8.0 * mm[k].first + 8.0 * pm[k].first - p2[k].first) / (12.0 * hh);
      d.pi.d[k] = (m2[k].second - 8.0 * mm[k].second + 8.0 * pm[k].second - p2[k].second) / (12.0 * hh);
      d.g.dd[k][k] = (-m2[k].first + 16.0 * mm[k].first - 30.0 * c.first + 16.0 * pm[k].first - p2[k].first) /
                     (12.0 * hh * hh);
    }
    const double w[4] = {1.0, -8.0, 8.0, -1.0};
    const double o[4] = {-2.0, -1.0, 1.0, 2.0};
    for (int k = 0; k < n; ++k)
      for (int l = k + 1; l < n; ++l) {
        Mat acc = Mat::Zero(n, n);
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) {
            Vec y = x;
            y(k) += o[a] * hh;
            y(l) += o[b] * hh;
            acc += w[a] * w[b] * vals(y).first;
          }
        d.g.dd[k][l] = d.g.dd[l][k] = acc / (144.0 * hh * hh);
      }
    return d;
  };
  const DataJet a = once(h), b = once(0.5 * h);
  DataJet out = b;
  for (int k = 0; k < n; ++k) {
    out.g.d[k] = (16.0 * b.g.d[k] - a.g.d[k]) / 15.0;
    out.pi.d[k] = (16.0 * b.pi.d[k] - a.pi.d[k]) / 15.0;
    for (int l = 0; l < n; ++l) out.g.dd[k][l] = (16.0 * b.g.dd[k][l] - a.g.dd[k][l]) / 15.0;
  }
  return out;
}

namespace {

// Gradient and Hessian of a scalar by fourth-order central differences with one Richardson step.
Jet2 fd_scalar_jet(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  const int n = static_cast<int>(x.size());
  auto once = [&](double hh) {
    Jet2 j(n, f(x));
    const double w[4] = {1.0, -8.0, 8.0, -1.0};
    const double o[4] = {-2.0, -1.0, 1.0, 2.0};
    for (int k = 0; k < n; ++k) {
      Vec e = Vec::Zero(n);
      e(k) = hh;
      const double fm2 = f(x - 2 * e), fm = f(x - e), fp = f(x + e), fp2 = f(x + 2 * e);
      j.d(k) = (fm2 - 8.0 * fm + 8.0 * fp - fp2) / (12.0 * hh);
      j.dd(k, k) = (-fm2 + 16.0 * fm - 30.0 * j.v + 16.0 * fp - fp2) / (12.0 * hh * hh);
      for (int l = 0; l < k; ++l) {
        double acc = 0.0;
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) {
            Vec y = x;
            y(k) += o[a] * hh;
            y(l) += o[b] * hh;
            acc += w[a] * w[b] * f(y);
          }
        j.dd(k, l) = j.dd(l, k) = acc / (144.0 * hh * hh);
      }
    }
    return j;
  };
  const Jet2 a = once(h), b = once(0.5 * h);
  Jet2 out = b;
  out.d = (16.0 * b.d - a.d) / 15.0;
  out.dd = (16.0 * b.dd - a.dd) / 15.0;
  return out;
}

}  // namespace

MuCheck mu_t_check(const ConformalFamily& fam, const std::vector<Vec>& points, double h) {
  MuCheck mc;
  const int n = fam.dim();
  const double t = fam.t();
  auto rel = [](double err, double den) { return den > 0.0 ? err / den : err; };
  for (const Vec& x : points) {
    const FamilyPoint fp = fam.closed_form(x);
    const double den = std::max(std::abs(fp.mu_closed), 0.5 * fp.scale);
    const double jden = fp.J_closed.cwiseAbs().maxCoeff();
    auto jerr = [&](const Vec& J) { return (J - fp.J_closed).cwiseAbs().maxCoeff(); };

    // Transformation law with finite differences of u_t − 1 = t χ v.
    const DataJet bd = fam.base().data(x);
    const Geometry geo = geometry(bd.g);
    const ConstraintPoint bc = constraints_at(bd, geo);
    // Step chosen among h, h/2, ... by the smallest discrepancy between successive halvings.
    auto wf = [&](const Vec& y) { return fam.chi_v(y).v; };
    std::vector<Jet2> lv;
    for (int k = 0; k < 6; ++k) lv.push_back(fd_scalar_jet(wf, x, h * std::pow(0.5, k)));
    int best = 0;
    double bestd = std::numeric_limits<double>::infinity();
    for (int k = 0; k + 1 < 6; ++k) {
      const double dlap = std::abs(laplacian(geo, lv[k]) - laplacian(geo, lv[k + 1]));
      const double dgr = (lv[k].d - lv[k + 1].d).cwiseAbs().maxCoeff();
      if (dlap + dgr < bestd) {
        bestd = dlap + dgr;
        best = k + 1;
      }
    }
    const Jet2& w = lv[best];
    const double u = fp.u;
    const double lapu = t * laplacian(geo, w);
    const Vec du = t * w.d;
    const Mat& pi = bd.pi.v;
    const double tr = geo.g.cwiseProduct(pi).sum();
    const double pi2 = (geo.g * pi * geo.g * pi).trace();
    const double mu1 = 0.5 * std::pow(u, -4.0 / (n - 2)) *
                       (-(4.0 * (n - 1) / (n - 2)) * lapu / u + geo.scalar - pi2 + tr * tr / (n - 1));
    const Vec divpi = bc.J;
    const Vec J1 = std::pow(u, -6.0 / (n - 2)) *
                   (divpi + (2.0 * (n - 1) / (n - 2)) * (pi * du) / u - (2.0 / (n - 2)) * tr * (geo.ginv * du) / u);
    mc.rel_u_fd = std::max(mc.rel_u_fd, rel(std::abs(mu1 - fp.mu_closed), den));
    mc.rel_J_u_fd = std::max(mc.rel_J_u_fd, rel(jerr(J1), jden));

    const ConstraintPoint cj = constraints_at(fam.data(x));
    mc.rel_jet = std::max(mc.rel_jet, rel(std::abs(cj.mu - fp.mu_closed), den));
    mc.rel_J_jet = std::max(mc.rel_J_jet, rel(jerr(cj.J), jden));

    const ConstraintPoint cf = constraints_at(fd_data_jet(fam, x, h));
    mc.rel_map_fd = std::max(mc.rel_map_fd, rel(std::abs(cf.mu - fp.mu_closed), den));
    mc.rel_J_map_fd = std::max(mc.rel_J_map_fd, rel(jerr(cf.J), jden));
    ++mc.points;
  }
  return mc;
}

std::vector<Vec> exterior_samples(int n, double r1, double span, double slab, int count, std::uint64_t seed) {
  if (!(r1 > slab)) throw Error("exterior_samples: r1 must exceed the slab half width");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  std::vector<Vec> out;
  for (int k = 0; k < count; ++k) {
    const double r = r1 * std::pow(span, ud(rng));
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = nd(rng);
    if (slab > 0.0 && k % 2 == 1) {
      const double xn = slab * (2.0 * ud(rng) - 1.0);
      Vec y = x.head(n - 1).normalized() * std::sqrt(r * r - xn * xn);
      x.head(n - 1) = y;
      x(n - 1) = xn;
    } else {
      x = r * x.normalized();
    }
    out.push_back(x);
  }
  return out;
}

ExteriorReport exterior_sigma_check(const ConformalFamily& fam, double r1, const std::vector<Vec>& samples) {
  ExteriorReport rep;
  rep.r1 = r1;
  rep.criterion_ok = true;
  rep.min_margin = std::numeric_limits<double>::infinity();
  rep.min_rel_margin = std::numeric_limits<double>::infinity();
  const int n = fam.dim();
  std::vector<double> margin(samples.size()), rel(samples.size());
  std::vector<char> crit(samples.size());
  grid::parallel_for(samples.size(), [&](std::size_t k) {
    const Vec& x = samples[k];
    const FamilyPoint fp = fam.closed_form(x);
    const DataJet bd = fam.base().data(x);
    const Geometry geo = geometry(bd.g);
    const double ups = norm_g(geo, fp.upsilon);
    crit[k] = (fp.phi - ups > 0.0) && (fam.chi_v(x).v < 0.0);
    const double s0 = constraints_at(bd, geo).sigma;
    const double s1 = constraints_at(fam.data(x)).sigma;
    margin[k] = s1 - s0;
    const double lead = std::pow(fp.u, -4.0 / (n - 2)) * 2.0 * std::abs(fam.t()) * fp.phi;
    rel[k] = lead > 0.0 ? margin[k] / lead : margin[k];
  });
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k].norm() < r1) continue;
    ++rep.samples;
    rep.criterion_ok = rep.criterion_ok && crit[k];
    rep.min_margin = std::min(rep.min_margin, margin[k]);
    rep.min_rel_margin = std::min(rep.min_rel_margin, rel[k]);
    if (fam.t() > 0.0 && !(margin[k] > 0.0)) ++rep.violations;
  }
  return rep;
}

double find_r1(const ConformalFamily& fam, const std::vector<double>& candidates, double span, double slab,
               int count, std::uint64_t seed) {
  for (double r1 : candidates) {
    if (r1 < 2.0 * fam.r0()) continue;
    const auto s = exterior_samples(fam.dim(), r1, span, slab, count, seed);
    bool ok = true;
    for (const Vec& x : s) {
      const FamilyPoint fp = fam.closed_form(x);
      const Geometry geo = geometry(fam.base().data(x).g, false);
      if (!(fp.phi - norm_g(geo, fp.upsilon) > 0.0) || !(fam.chi_v(x).v < 0.0)) {
        ok = false;
        break;
      }
    }
    if (ok) return r1;
  }
  throw Error("find_r1: no candidate radius satisfies the exterior criterion");
}

FamilyADM family_adm(const ConformalFamily& fam, const std::vector<double>& radii, const SurfaceOptions& opt) {
  FamilyADM out;
  out.t = fam.t();
  out.adm = adm_energy_momentum(flux_source(fam), fam.dim(), radii, opt);
  double umin = 1.0;
  for (int k = 0; k <= 4000; ++k) {
    const double r = fam.r0() * std::pow(1000.0, k / 4000.0);
    Vec x = Vec::Zero(fam.dim());
    x(0) = r;
    umin = std::min(umin, fam.u(x).v);
  }
  out.u_min = umin;
  return out;
}

}  // namespace declab
