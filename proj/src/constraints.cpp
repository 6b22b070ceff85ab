#include "declab/constraints.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace declab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Mat sym_product(const Vec& a, const Vec& b) { return 0.5 * (a * b.transpose() + b * a.transpose()); }

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

struct Derived {
  Mat pi_low;   // π_ij
  double tr = 0.0;
  double norm2 = 0.0;  // |π|²
  Mat pipi;     // π_iℓ π^ℓ_j
};

Derived derive(const Geometry& geo, const Mat& pi) {
  Derived d;
  d.pi_low = lower2(geo, pi);
  d.tr = (geo.g.array() * pi.array()).sum();
  d.norm2 = (d.pi_low.array() * pi.array()).sum();
  d.pipi = d.pi_low * geo.ginv * d.pi_low;
  return d;
}

}  // namespace

Mat pi_to_k(const Mat& g, const Mat& pi) {
  const int n = static_cast<int>(g.rows());
  const double tr = (g.array() * pi.array()).sum();
  return g * pi * g - tr / (n - 1) * g;
}

Mat k_to_pi(const Mat& g, const Mat& k) {
  const Mat ginv = g.inverse();
  const Mat kup = ginv * k * ginv;
  const double tr = (ginv.array() * k.array()).sum();
  return kup - tr * ginv;
}

ConstraintPoint constraints_at(const DataJet& d, const Geometry& geo) {
  const int n = geo.n;
  const Derived p = derive(geo, d.pi.v);
  ConstraintPoint c;
  c.mu = 0.5 * (geo.scalar + p.tr * p.tr / (n - 1) - p.norm2);
  c.J = divergence_contra(geo, d.pi);
  c.sigma = 2.0 * (c.mu - norm_g(geo, c.J));
  return c;
}

ConstraintPoint constraints_at(const DataJet& d) { return constraints_at(d, geometry(d.g)); }

std::pair<double, Vec> operator_value(OperatorKind kind, const DataJet& at, const Mat& base_g, const Vec& base_J,
                                      const Modifier& mod) {
  const ConstraintPoint c = constraints_at(at);
  double e = 2.0 * c.mu;
  Vec m = c.J;
  if (kind == OperatorKind::plain) return {e, m};
  const Mat ginv = base_g.inverse();
  const Mat& gamma = at.g.v;
  m += 0.5 * ginv * gamma * base_J;
  if (kind == OperatorKind::modified && mod.Z.size()) {
    const double znorm_g = std::sqrt(std::max(0.0, mod.Z.dot(base_g * mod.Z)));
    e += 2.0 * mod.phi * mod.Z.dot(gamma * mod.Z);
    m += mod.phi * znorm_g * ginv * gamma * mod.Z;
  }
  return {e, m};
}

std::pair<double, Vec> linearize_at(OperatorKind kind, const DataJet& base, const SymJet& h, const SymJet& w,
                                    const Modifier& mod, double eps) {
  const Geometry geo = geometry(base.g);
  const ConstraintPoint c0 = constraints_at(base, geo);
  if (eps <= 0.0) {
    double s = std::max(max_abs(h.v), max_abs(w.v));
    for (const auto& m : h.d) s = std::max(s, max_abs(m));
    for (const auto& m : w.d) s = std::max(s, max_abs(m));
    eps = 1e-4 / std::max(1.0, s);
  }
  if (eps < 1e-12) throw Error("linearize_at: step underflow");
  auto central = [&](double e) {
    DataJet plus{base.g + e * h, base.pi + e * w};
    DataJet minus{base.g + (-e) * h, base.pi + (-e) * w};
    auto a = operator_value(kind, plus, base.g.v, c0.J, mod);
    auto b = operator_value(kind, minus, base.g.v, c0.J, mod);
    return std::pair<double, Vec>{(a.first - b.first) / (2 * e), (a.second - b.second) / (2 * e)};
  };
  const auto d1 = central(eps);
  const auto d2 = central(0.5 * eps);
  return {(4.0 * d2.first - d1.first) / 3.0, (4.0 * d2.second - d1.second) / 3.0};
}

AdjointValue adjoint_at(OperatorKind kind, const DataJet& d, const Geometry& geo, const ConstraintPoint& c,
                        const PairJet& fx, const Modifier& mod) {
  const int n = geo.n;
  const Derived p = derive(geo, d.pi.v);
  const double f = fx.f.v;
  const Vec& X = fx.X.v;
  const Vec Xl = lower1(geo, X);
  const Vec Jl = lower1(geo, c.J);
  const Mat& g = geo.g;

  const Mat hess = hessian(geo, fx.f);
  const double lap = (geo.ginv.array() * hess.array()).sum();
  const Mat nablaX = nabla_lowered(geo, fx.X);  // X_i;j
  const double divX = (geo.ginv.array() * nablaX.array()).sum();
  const Mat lieXpi = lower2(geo, lie_contra(d.pi, fx.X));
  const double xkm_pi = (nablaX.array() * d.pi.v.array()).sum();
  const double xj = X.dot(Jl);

  AdjointValue a;
  a.cov = -lap * g + hess + (-geo.ricci + 2.0 / (n - 1) * p.tr * p.pi_low - 2.0 * p.pipi) * f;
  a.cov += 0.5 * (lieXpi + divX * p.pi_low - xkm_pi * g - xj * g);
  a.cov -= sym_product(Xl, Jl);
  const Mat lieXg_up = raise2(geo, nablaX + nablaX.transpose());
  a.contra = -0.5 * lieXg_up + (2.0 / (n - 1) * p.tr * geo.ginv - 2.0 * d.pi.v) * f;

  if (kind == OperatorKind::plain) return a;
  a.cov += 0.5 * sym_product(Xl, Jl);
  if (kind == OperatorKind::modified && mod.Z.size()) {
    const Vec Zl = lower1(geo, mod.Z);
    const double zn = norm_g(geo, mod.Z);
    a.cov += mod.phi * sym_product(Zl, 2.0 * f * Zl + zn * Xl);
  }
  return a;
}

AdjointValue adjoint_at(OperatorKind kind, const DataJet& d, const PairJet& fx, const Modifier& mod) {
  const Geometry geo = geometry(d.g);
  return adjoint_at(kind, d, geo, constraints_at(d, geo), fx, mod);
}

double HessianResiduals::max_abs() const {
  double m = std::max({declab::max_abs(hamiltonian), declab::max_abs(momentum), declab::max_abs(hessian)});
  for (const auto& s : second) m = std::max(m, declab::max_abs(s));
  return m;
}

HessianResiduals hessian_system_at(const DataJet& d, const PairJet& fx, const Modifier& mod) {
  const Geometry geo = geometry(d.g);
  const int n = geo.n;
  const ConstraintPoint c = constraints_at(d, geo);
  const Derived p = derive(geo, d.pi.v);
  const Mat& g = geo.g;
  const double f = fx.f.v;
  const Vec Xl = lower1(geo, fx.X.v);
  const Vec Jl = lower1(geo, c.J);
  const double xj = fx.X.v.dot(Jl);

  const Mat hess = hessian(geo, fx.f);
  const double lap = (geo.ginv.array() * hess.array()).sum();
  const Mat nablaX = nabla_lowered(geo, fx.X);
  const double divX = (geo.ginv.array() * nablaX.array()).sum();
  const Mat lieXpi = lower2(geo, lie_contra(d.pi, fx.X));
  const double tr_lieXpi = (geo.ginv.array() * lieXpi.array()).sum();
  const double xkm_pi = (nablaX.array() * d.pi.v.array()).sum();

  Mat zterm = Mat::Zero(n, n);
  double ztrace = 0.0;
  if (mod.Z.size()) {
    const Vec Zl = lower1(geo, mod.Z);
    const double zn = norm_g(geo, mod.Z);
    zterm = mod.phi * sym_product(Zl, 2.0 * f * Zl + zn * Xl);
    ztrace = mod.phi * (2.0 * f * zn * zn + zn * fx.X.v.dot(Zl));
  }

  HessianResiduals r;
  r.hamiltonian = -lap * g + hess - geo.ricci * f + (3.0 / (n - 1) * p.tr * p.pi_low - 2.0 * p.pipi) * f +
                  (-p.tr * p.tr / (n - 1) + p.norm2) * g * f + 0.5 * lieXpi - 0.5 * xj * g - 0.5 * sym_product(Xl, Jl) +
                  zterm;
  const Mat A = 2.0 / (n - 1) * p.tr * g - 2.0 * p.pi_low;
  r.momentum = -0.5 * (nablaX + nablaX.transpose()) + A * f;
  r.hessian = hess + (-geo.ricci + 2.0 / (n - 1) * p.tr * p.pi_low - 2.0 * p.pipi) * f +
              (1.0 / (n - 1)) * (geo.scalar - 2.0 / (n - 1) * p.tr * p.tr + 2.0 * p.norm2) * g * f +
              0.5 * (lieXpi + divX * p.pi_low) - 0.5 * sym_product(Xl, Jl) +
              (0.5 / (n - 1)) * (-tr_lieXpi - divX * p.tr + xkm_pi + 2.0 * xj) * g + zterm -
              (1.0 / (n - 1)) * ztrace * g;

  // C(a,b,c) = [A_ab f]_;c with A_ab;c = 2/(n−1) (tr π)_,c g_ab − 2 π_ab;c.
  const auto nab_pi = nabla_contra(geo, d.pi);
  std::vector<Mat> C(n);
  for (int k = 0; k < n; ++k) {
    const Mat pik = lower2(geo, nab_pi[k]);
    const double dtr = (g.array() * nab_pi[k].array()).sum();
    C[k] = (2.0 / (n - 1) * dtr * g - 2.0 * pik) * f + A * fx.f.d(k);
  }
  const auto X2 = second_nabla_lowered(geo, fx.X);
  r.second.assign(n, Mat::Zero(n, n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double curv = 0.0;
        for (int l = 0; l < n; ++l)
          curv += (geo.riemann(l, k, j, i) + geo.riemann(l, i, k, j) + geo.riemann(l, i, j, k)) * Xl(l);
        r.second[i](j, k) = X2[i](j, k) + 0.5 * curv - C[k](i, j) - C[j](k, i) + C[i](j, k);
      }
  return r;
}

GradfResiduals gradf_residuals_at(const DataJet& d, const VecJet& Jjet, const PairJet& fx, double floor) {
  const Geometry geo = geometry(d.g, false);
  const int n = geo.n;
  const Derived p = derive(geo, d.pi.v);
  const Vec& J = Jjet.v;
  const double jn = norm_g(geo, J);
  GradfResiduals r;
  r.null_vector = 2.0 * fx.f.v * J + jn * fx.X.v;
  if (!(jn >= floor)) return r;
  r.evaluated = true;
  const double f = fx.f.v;
  const Vec Jh = J / jn;
  const Vec Jhl = lower1(geo, Jh);
  const double pJJ = Jh.dot(p.pi_low * Jh);
  r.gradf = fx.f.d.dot(Jh) + (p.tr / (n - 1) - pJJ) * f;

  // ∇_i Ĵ^j: differentiate Ĵ = J/|J|_g with partials of J and g, then add the connection term.
  Mat dJh(n, n);  // dJh(j,i) = ∂_i Ĵ^j
  for (int i = 0; i < n; ++i) {
    const Vec dJ = Jjet.d.col(i);
    const double dnorm2 = 2.0 * J.dot(geo.g * dJ) + J.dot(geo.dg[i] * J);
    dJh.col(i) = dJ / jn - J * (0.5 * dnorm2 / (jn * jn * jn));
  }
  Mat nabJh = dJh;
  for (int j = 0; j < n; ++j) nabJh.row(j) += (geo.gamma[j] * Jh).transpose();
  const Vec gradf_up = raise1(geo, fx.f.d);
  r.gradf2 = gradf_up + (nabJh * Jh + p.tr / (n - 1) * Jh - 2.0 * d.pi.v * Jhl + pJJ * Jh) * f;
  return r;
}

SigmaBoundPoint sigma_bound_at(const DataJet& base, const SymJet& h, const Modifier& mod, bool z_is_current) {
  const int n = base.dim();
  const Geometry geo = geometry(base.g);
  const ConstraintPoint c = constraints_at(base, geo);
  SigmaBoundPoint out;
  out.sigma = c.sigma;

  const double hn = std::sqrt(std::max(0.0, (geo.ginv * h.v * geo.ginv * h.v).trace()));
  const Vec Z = z_is_current ? c.J : mod.Z;
  const double zn = norm_g(geo, Z);
  const double jn = norm_g(geo, c.J);
  if (!(hn < 1.0)) {
    out.hypotheses_ok = false;
    out.hypothesis_note = "|h| >= 1";
  }
  if (z_is_current) {
    if (!(std::abs(mod.phi) * jn < (std::sqrt(2.0) - 1.0) / 2.0)) {
      out.hypotheses_ok = false;
      out.hypothesis_note = "|phi J| out of range";
    }
  } else if (!(std::abs(mod.phi) < 1.0 && zn < 1.0)) {
    out.hypotheses_ok = false;
    out.hypothesis_note = "|phi| or |Z| out of range";
  }

  const SymJet gbar_jet = base.g + h;
  const Geometry gbar = geometry(gbar_jet);
  const Vec hJ = geo.ginv * h.v * c.J;
  const Vec hZ = geo.ginv * h.v * Z;
  const Vec target = c.J - 0.5 * hJ - mod.phi * zn * hZ;

  // Unknowns: w^{ab} (a ≤ b) and ∂_k w^{ab}.
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) pairs.emplace_back(a, b);
  const int np = static_cast<int>(pairs.size());
  const int nu = np * (n + 1);
  auto unit = [&](int col) {
    SymJet w = SymJet::zero(n, false);
    const int pi = col % np, slot = col / np;
    const auto [a, b] = pairs[pi];
    Mat& m = slot == 0 ? w.v : w.d[slot - 1];
    m(a, b) = m(b, a) = 1.0;
    return w;
  };
  SymJet tau_first = base.pi;
  tau_first.dd.clear();
  const Vec rhs = target - divergence_contra(gbar, tau_first);
  Eigen::MatrixXd A(n, nu);
  for (int col = 0; col < nu; ++col) A.col(col) = divergence_contra(gbar, unit(col));
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  const Eigen::VectorXd y = cod.solve(Eigen::VectorXd(rhs));
  SymJet w = SymJet::zero(n, false);
  for (int col = 0; col < nu; ++col) w = w + y(col) * unit(col);

  DataJet bar{gbar_jet, tau_first + w};
  const ConstraintPoint cb = constraints_at(bar, gbar);
  out.momentum_defect = (cb.J - target).cwiseAbs().maxCoeff();
  out.u = 2.0 * cb.mu + 2.0 * mod.phi * Z.dot(gbar.g * Z) - 2.0 * c.mu - 2.0 * mod.phi * Z.dot(geo.g * Z);
  out.sigma_bar = cb.sigma;
  out.bound = z_is_current ? 0.0
                           : 6.0 * std::sqrt(hn) * std::sqrt(std::abs(mod.phi)) * zn * (std::sqrt(jn) + 1.0);
  out.margin = out.sigma_bar - out.sigma - out.u + out.bound;
  out.scale = 1.0 + std::abs(c.mu) + jn + std::abs(out.u) + std::abs(cb.mu);
  return out;
}

// ---- grid layer ----

void validate(const InitialData& d) {
  if (d.g.covariant != 2 || d.g.contravariant != 0) throw Error("InitialData: g must be covariant rank 2");
  if (d.pi.contravariant != 2 || d.pi.covariant != 0) throw Error("InitialData: pi must be contravariant rank 2");
  if (!(d.g.grid == d.pi.grid)) throw Error("InitialData: g and pi live on different grids");
  for (double v : d.pi.data)
    if (!std::isfinite(v)) throw Error("InitialData: pi has non-finite values");
  const int n = d.g.grid.dim();
  for (std::size_t p = 0; p < d.g.grid.size(); ++p) {
    Mat g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = d.g.at(p, i * n + j);
    if (!g.allFinite() || Eigen::LLT<Mat>(g).info() != Eigen::Success)
      throw Error("InitialData: g is not a finite positive definite metric at point " + std::to_string(p));
  }
}

DataJet data_jet(const InitialData& d, std::size_t p, int accuracy) {
  DataJet j{grid::sym_jet(d.g, p, accuracy), grid::sym_jet(d.pi, p, accuracy)};
  j.pi.dd.clear();
  return j;
}

PairJet pair_jet(const LapseShift& s, std::size_t p, int accuracy) {
  return {grid::component_jet(s.f, p, 0, accuracy), grid::vec_jet(s.X, p, accuracy)};
}

namespace {

void fill_nan(grid::TensorField& f) { std::fill(f.data.begin(), f.data.end(), kNaN); }

void put_mat(grid::TensorField& f, std::size_t p, const Mat& m) {
  const int n = static_cast<int>(m.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) f.at(p, i * n + j) = m(i, j);
}

Modifier modifier_at(const ModifierPair* mod, std::size_t p) {
  Modifier m;
  if (!mod) return m;
  const int n = mod->Z.grid.dim();
  m.phi = mod->phi.at(p, 0);
  m.Z = Vec(n);
  for (int i = 0; i < n; ++i) m.Z(i) = mod->Z.at(p, i);
  return m;
}

void check_pair(const InitialData& d, const LapseShift& s, const ModifierPair* mod) {
  validate(d);
  if (!(s.f.grid == d.g.grid) || !(s.X.grid == d.g.grid)) throw Error("lapse-shift pair lives on a different grid");
  if (mod && (!(mod->phi.grid == d.g.grid) || !(mod->Z.grid == d.g.grid)))
    throw Error("modifier lives on a different grid");
}

}  // namespace

grid::TensorField pi_k_convert(const InitialData& d, bool to_k) {
  validate(d);
  const auto& G = d.g.grid;
  const int n = G.dim();
  grid::TensorField out(G, to_k ? 2 : 0, to_k ? 0 : 2, true);
  grid::parallel_for(G.size(), [&](std::size_t p) {
    Mat g(n, n), t(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        g(i, j) = d.g.at(p, i * n + j);
        t(i, j) = d.pi.at(p, i * n + j);
      }
    put_mat(out, p, to_k ? pi_to_k(g, t) : k_to_pi(g, t));
  });
  return out;
}

ConstraintFields constraint_map(const InitialData& d, int accuracy) {
  validate(d);
  const auto& G = d.g.grid;
  const int n = G.dim();
  ConstraintFields c{grid::TensorField(G, 0, 0), grid::TensorField(G, 0, 1), grid::TensorField(G, 0, 0), 0.0};
  fill_nan(c.mu);
  fill_nan(c.J);
  fill_nan(c.sigma);
  grid::parallel_for(G.size(), [&](std::size_t p) {
    if (!G.interior(p)) return;
    const ConstraintPoint v = constraints_at(data_jet(d, p, accuracy));
    c.mu.at(p, 0) = v.mu;
    c.sigma.at(p, 0) = v.sigma;
    for (int i = 0; i < n; ++i) c.J.at(p, i) = v.J(i);
  });
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < G.size(); ++p)
    if (G.interior(p)) m = std::min(m, c.sigma.at(p, 0));
  c.min_sigma = m;
  return c;
}

grid::TensorField dominant_energy_scalar(const InitialData& d, double* min_over_interior, int accuracy) {
  ConstraintFields c = constraint_map(d, accuracy);
  if (min_over_interior) *min_over_interior = c.min_sigma;
  return c.sigma;
}

AdjointFields adjoint_eval(const InitialData& d, const LapseShift& s, OperatorKind kind, const ModifierPair* mod,
                           int accuracy) {
  check_pair(d, s, mod);
  const auto& G = d.g.grid;
  AdjointFields out{grid::TensorField(G, 2, 0, true), grid::TensorField(G, 0, 2, true)};
  fill_nan(out.cov);
  fill_nan(out.contra);
  grid::parallel_for(G.size(), [&](std::size_t p) {
    if (!G.interior(p)) return;
    const AdjointValue a = adjoint_at(kind, data_jet(d, p, accuracy), pair_jet(s, p, accuracy), modifier_at(mod, p));
    put_mat(out.cov, p, a.cov);
    put_mat(out.contra, p, a.contra);
  });
  return out;
}

namespace {

struct Accum {
  double max_abs = 0.0;
  double sum2 = 0.0;
  void add(double v) {
    max_abs = std::max(max_abs, std::abs(v));
    sum2 += v * v;
  }
};

ResidualSummary summary(const std::string& name, const Accum& a, double cell) {
  return {name, a.max_abs, std::sqrt(a.sum2 * cell)};
}

double cell_volume(const grid::ChartGrid& G) {
  double v = 1.0;
  for (double h : G.spacing()) v *= h;
  return v;
}

}  // namespace

std::vector<ResidualSummary> hessian_system_residual(const InitialData& d, const LapseShift& s,
                                                     const ModifierPair* mod, int accuracy) {
  check_pair(d, s, mod);
  const auto& G = d.g.grid;
  const auto pts = G.interior_points();
  std::vector<HessianResiduals> res(pts.size());
  grid::parallel_for(pts.size(), [&](std::size_t i) {
    res[i] = hessian_system_at(data_jet(d, pts[i], accuracy), pair_jet(s, pts[i], accuracy), modifier_at(mod, pts[i]));
  });
  Accum a[4];
  for (const auto& r : res) {
    for (int k = 0; k < r.hamiltonian.size(); ++k) {
      a[0].add(r.hamiltonian(k));
      a[1].add(r.momentum(k));
      a[2].add(r.hessian(k));
    }
    for (const auto& m : r.second)
      for (int k = 0; k < m.size(); ++k) a[3].add(m(k));
  }
  const double cell = cell_volume(G);
  return {summary("hamiltonian", a[0], cell), summary("momentum", a[1], cell), summary("hessian", a[2], cell),
          summary("second-derivative", a[3], cell)};
}

std::vector<ResidualSummary> j_null_gradf_residuals(const InitialData& d, const LapseShift& s, double floor,
                                                    int accuracy) {
  check_pair(d, s, nullptr);
  const auto& G = d.g.grid;
  const int n = G.dim();
  // Current on the grid, then its derivatives by the same stencils.
  const ConstraintFields c = constraint_map(d, accuracy);
  const auto pts = G.interior_points();
  Accum a[3];
  std::vector<GradfResiduals> res(pts.size());
  // J carries NaN on the margin, so its jet is only taken where the stencil stays inside the interior.
  grid::parallel_for(pts.size(), [&](std::size_t i) {
    const std::size_t p = pts[i];
    VecJet Jj = VecJet::zero(n, false);
    const bool deep = G.boundary_distance(p) >= 2 * G.margin();
    if (deep) {
      Jj = grid::vec_jet(c.J, p, accuracy);
    } else {
      for (int k = 0; k < n; ++k) Jj.v(k) = c.J.at(p, k);
    }
    res[i] = gradf_residuals_at(data_jet(d, p, accuracy), Jj, pair_jet(s, p, accuracy), deep ? floor : INFINITY);
  });
  for (const auto& r : res) {
    for (int k = 0; k < n; ++k) a[0].add(r.null_vector(k));
    if (r.evaluated) {
      a[1].add(r.gradf);
      for (int k = 0; k < n; ++k) a[2].add(r.gradf2(k));
    }
  }
  const double cell = cell_volume(G);
  return {summary("j-null-vector", a[0], cell), summary("gradf", a[1], cell), summary("gradf-2", a[2], cell)};
}

DualityResult duality_mismatch(const InitialData& base, const grid::TensorField& h, const grid::TensorField& w,
                               const LapseShift& s, OperatorKind kind, const ModifierPair* mod, int accuracy) {
  check_pair(base, s, mod);
  const auto& G = base.g.grid;
  if (!(h.grid == G) || !(w.grid == G)) throw Error("duality_mismatch: direction lives on a different grid");
  const auto pts = G.interior_points();
  std::vector<std::array<double, 3>> dens(pts.size());
  grid::parallel_for(pts.size(), [&](std::size_t i) {
    const std::size_t p = pts[i];
    const DataJet d = data_jet(base, p, accuracy);
    SymJet hj = grid::sym_jet(h, p, accuracy);
    SymJet wj = grid::sym_jet(w, p, accuracy);
    wj.dd.clear();
    const PairJet fx = pair_jet(s, p, accuracy);
    const Modifier md = modifier_at(mod, p);
    const Mat& g = d.g.v;
    const Mat ginv = g.inverse();
    const double vol = std::sqrt(g.determinant());
    // Both integrands vanish where the direction jet does.
    if (hj.v.cwiseAbs().maxCoeff() == 0.0 && wj.v.cwiseAbs().maxCoeff() == 0.0) {
      dens[i] = {0.0, 0.0, 0.0};
      return;
    }
    const auto lin = linearize_at(kind, d, hj, wj, md);
    const double left = lin.first * fx.f.v + lin.second.dot(g * fx.X.v);
    const AdjointValue a = adjoint_at(kind, d, fx, md);
    const double right = (ginv * hj.v * ginv).cwiseProduct(a.cov).sum() + (g * wj.v * g).cwiseProduct(a.contra).sum();
    dens[i] = {left * vol, right * vol, std::abs(left) * vol};
  });
  DualityResult r;
  const double cell = cell_volume(G);
  for (const auto& v : dens) {
    r.lhs += v[0] * cell;
    r.rhs += v[1] * cell;
    r.scale += v[2] * cell;
  }
  r.rel = r.scale > 0.0 ? std::abs(r.lhs - r.rhs) / r.scale : std::abs(r.lhs - r.rhs);
  return r;
}

SigmaBoundReport sigma_bound_check(const InitialData& base, const grid::TensorField& h, const ModifierPair* mod,
                                   bool z_is_current, double tol, int accuracy) {
  validate(base);
  const auto& G = base.g.grid;
  if (!(h.grid == G)) throw Error("sigma_bound_check: perturbation lives on a different grid");
  if (mod && !(mod->phi.grid == G && mod->Z.grid == G)) throw Error("sigma_bound_check: modifier grid mismatch");
  const auto pts = G.interior_points();
  std::vector<SigmaBoundPoint> res(pts.size());
  grid::parallel_for(pts.size(), [&](std::size_t i) {
    const std::size_t p = pts[i];
    res[i] = sigma_bound_at(data_jet(base, p, accuracy), grid::sym_jet(h, p, accuracy), modifier_at(mod, p),
                            z_is_current);
  });
  SigmaBoundReport r;
  r.points = static_cast<int>(pts.size());
  r.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& b : res) {
    if (!b.hypotheses_ok) {
      ++r.hypothesis_failures;
      continue;
    }
    const double m = b.margin / b.scale;
    r.worst_margin = std::min(r.worst_margin, m);
    r.max_momentum_defect = std::max(r.max_momentum_defect, b.momentum_defect);
    if (m < -tol) ++r.violations;
  }
  return r;
}

}  // namespace declab
