#include "declab/adm.hpp"

#include "declab/grid.hpp"
#include "declab/quadrature.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>

namespace declab {

void SurfaceRule::append(const SurfaceRule& o) {
  points.insert(points.end(), o.points.begin(), o.points.end());
  normals.insert(normals.end(), o.normals.begin(), o.normals.end());
  weights.insert(weights.end(), o.weights.begin(), o.weights.end());
}

namespace {

// Gauss rule on [a, b] split at the given interior breakpoints.
QuadRule split_rule(int nodes, double a, double b, std::vector<double> breaks) {
  breaks.erase(std::remove_if(breaks.begin(), breaks.end(), [&](double t) { return !(t > a && t < b); }),
               breaks.end());
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  QuadRule out;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const QuadRule r = gauss_legendre(nodes, breaks[k], breaks[k + 1]);
    out.x.insert(out.x.end(), r.x.begin(), r.x.end());
    out.w.insert(out.w.end(), r.w.begin(), r.w.end());
  }
  return out;
}

}  // namespace

SurfaceRule unit_sphere_rule(int m, int nodes, const std::vector<double>& breaks) {
  if (m < 0 || nodes < 1) throw Error("unit_sphere_rule: invalid arguments");
  SurfaceRule out;
  if (m == 0) {
    for (double s : {-1.0, 1.0}) {
      out.points.push_back(Vec::Constant(1, s));
      out.normals.push_back(Vec::Constant(1, s));
      out.weights.push_back(1.0);
    }
    return out;
  }
  if (m == 1) {
    const int k = 2 * nodes;
    for (int j = 0; j < k; ++j) {
      const double t = 2.0 * M_PI * (j + 0.5) / k;
      Vec p(2);
      p << std::sin(t), std::cos(t);
      out.points.push_back(p);
      out.normals.push_back(p);
      out.weights.push_back(2.0 * M_PI / k);
    }
    return out;
  }
  // Polar angle θ with t = cos θ on the last coordinate. Without breaks the rule is Gauss in t for the weight
  // (1 − t²)^{(m−2)/2}; breaks in t split a Gauss–Legendre rule in θ instead.
  std::vector<double> tb;
  for (double b : breaks)
    if (b > -1.0 && b < 1.0) tb.push_back(std::acos(b));
  std::vector<double> ts, ws;
  if (tb.empty()) {
    const QuadRule r = gauss_gegenbauer(nodes, 0.5 * (m - 2));
    ts = r.x;
    ws = r.w;
  } else {
    const QuadRule th = split_rule(nodes, 0.0, M_PI, tb);
    for (std::size_t a = 0; a < th.x.size(); ++a) {
      ts.push_back(std::cos(th.x[a]));
      ws.push_back(th.w[a] * std::pow(std::sin(th.x[a]), m - 1));
    }
  }
  const SurfaceRule sub = unit_sphere_rule(m - 1, nodes);
  for (std::size_t a = 0; a < ts.size(); ++a) {
    const double c = ts[a], s = std::sqrt(std::max(0.0, 1.0 - c * c));
    for (std::size_t q = 0; q < sub.size(); ++q) {
      Vec p(m + 1);
      p.head(m) = s * sub.points[q];
      p(m) = c;
      out.points.push_back(p);
      out.normals.push_back(p);
      out.weights.push_back(ws[a] * sub.weights[q]);
    }
  }
  return out;
}

SurfaceRule sphere_rule(int n, double radius, int nodes, const std::vector<double>& xn_breaks) {
  if (!(radius > 0.0)) throw Error("sphere_rule: radius must be positive");
  std::vector<double> b;
  for (double t : xn_breaks) b.push_back(t / radius);
  SurfaceRule r = unit_sphere_rule(n - 1, nodes, b);
  const double scale = std::pow(radius, n - 1);
  for (std::size_t q = 0; q < r.size(); ++q) {
    r.points[q] *= radius;
    r.weights[q] *= scale;
  }
  return r;
}

SurfaceRule capped_cylinder_rule(int n, double rho, double H, int angle_nodes, int axis_nodes,
                                 const std::vector<double>& xn_breaks) {
  if (n < 2 || !(rho > 0.0) || !(H > 0.0)) throw Error("capped_cylinder_rule: invalid arguments");
  const int m = n - 1;
  const SurfaceRule circle = unit_sphere_rule(m - 1, angle_nodes);
  SurfaceRule out;
  // Side.
  const QuadRule ax = split_rule(axis_nodes, -H, H, xn_breaks);
  const double side = std::pow(rho, m - 1);
  for (std::size_t a = 0; a < ax.x.size(); ++a)
    for (std::size_t q = 0; q < circle.size(); ++q) {
      Vec p(n);
      p.head(m) = rho * circle.points[q];
      p(m) = ax.x[a];
      Vec nu = Vec::Zero(n);
      nu.head(m) = circle.normals[q];
      out.points.push_back(p);
      out.normals.push_back(nu);
      out.weights.push_back(ax.w[a] * side * circle.weights[q]);
    }
  // Caps: balls of radius ρ in R^{n−1}.
  const QuadRule rad = gauss_legendre(axis_nodes, 0.0, rho);
  for (double sgn : {-1.0, 1.0})
    for (std::size_t a = 0; a < rad.x.size(); ++a)
      for (std::size_t q = 0; q < circle.size(); ++q) {
        Vec p(n);
        p.head(m) = rad.x[a] * circle.points[q];
        p(m) = sgn * H;
        Vec nu = Vec::Zero(n);
        nu(m) = sgn;
        out.points.push_back(p);
        out.normals.push_back(nu);
        out.weights.push_back(rad.w[a] * std::pow(rad.x[a], m - 1) * circle.weights[q]);
      }
  return out;
}

FluxSource flux_source(const Background& bg) {
  return [&bg](const Vec& x) {
    const DataJet d = bg.data(x);
    return FluxSample{d.g.v, d.g.d, d.pi.v};
  };
}

FluxValue adm_flux(const FluxSource& src, const SurfaceRule& rule) {
  if (rule.size() == 0) throw Error("adm_flux: empty surface rule");
  const int n = static_cast<int>(rule.points[0].size());
  std::vector<double> e(rule.size());
  std::vector<Vec> p(rule.size());
  grid::parallel_for(rule.size(), [&](std::size_t q) {
    const FluxSample s = src(rule.points[q]);
    const Vec& nu = rule.normals[q];
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
      double t = 0.0;
      for (int i = 0; i < n; ++i) t += s.dg[i](i, j) - s.dg[j](i, i);
      acc += t * nu(j);
    }
    e[q] = rule.weights[q] * acc;
    p[q] = rule.weights[q] * (s.g * s.pi * s.g * nu);
  });
  FluxValue out{0.0, Vec::Zero(n)};
  for (std::size_t q = 0; q < rule.size(); ++q) {
    out.E += e[q];
    out.P += p[q];
  }
  return out;
}

Extrapolation extrapolate3(const std::array<double, 3>& r, const std::array<double, 3>& v) {
  Extrapolation ex;
  ex.limit = v[2];
  const double d1 = v[1] - v[0], d2 = v[2] - v[1];
  const double scale = std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2]), 1e-300});
  if (std::abs(d2) <= 1e-13 * scale || d1 * d2 <= 0.0) return ex;
  const double q = d1 / d2;
  auto model = [&](double p) {
    const double a = std::pow(r[0], -p), b = std::pow(r[1], -p), c = std::pow(r[2], -p);
    return (a - b) / (b - c);
  };
  double lo = 1e-3, hi = 30.0;
  if (!(model(lo) < q && model(hi) > q)) return ex;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (model(mid) < q ? lo : hi) = mid;
  }
  const double p = 0.5 * (lo + hi);
  const double c = d2 / (std::pow(r[2], -p) - std::pow(r[1], -p));
  ex.limit = v[2] - c * std::pow(r[2], -p);
  ex.p = p;
  ex.fitted = true;
  return ex;
}

ADMResult adm_energy_momentum(const FluxSource& src, int n, const std::vector<double>& radii,
                              const SurfaceOptions& opt) {
  if (radii.empty()) throw Error("adm_energy_momentum: no radii");
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] > 0.0)) throw Error("adm_energy_momentum: radii must be positive");
    if (k > 0 && !(radii[k] > radii[k - 1])) throw Error("adm_energy_momentum: radii must increase");
  }
  const double wn = sphere_volume(n - 1);
  ADMResult res;
  res.radii = radii;
  for (double r : radii) {
    SurfaceRule rule;
    if (opt.family == SurfaceFamily::spheres) {
      rule = sphere_rule(n, r, opt.angle_nodes, opt.xn_breaks);
    } else {
      const double H = opt.half_height > 0.0 ? opt.half_height : opt.half_height_factor * r;
      rule = capped_cylinder_rule(n, r, H, opt.angle_nodes, opt.axis_nodes, opt.xn_breaks);
    }
    const FluxValue f = adm_flux(src, rule);
    if (!std::isfinite(f.E) || !f.P.allFinite()) throw Error("adm_energy_momentum: non-finite flux");
    res.partial_E.push_back(f.E / (2.0 * (n - 1) * wn));
    res.partial_P.push_back(f.P / ((n - 1) * wn));
  }
  const std::size_t k = radii.size();
  for (std::size_t i = 1; i < k; ++i) {
    res.max_successive_diff = std::max(res.max_successive_diff, std::abs(res.partial_E[i] - res.partial_E[i - 1]));
    res.max_successive_diff =
        std::max(res.max_successive_diff, (res.partial_P[i] - res.partial_P[i - 1]).cwiseAbs().maxCoeff());
  }
  res.E = res.partial_E.back();
  res.P = res.partial_P.back();
  if (k >= 3) {
    const std::array<double, 3> r{radii[k - 3], radii[k - 2], radii[k - 1]};
    const Extrapolation e = extrapolate3(r, {res.partial_E[k - 3], res.partial_E[k - 2], res.partial_E[k - 1]});
    res.E = e.limit;
    res.fitted_p = e.p;
    res.extrapolated = e.fitted;
    for (int i = 0; i < n; ++i) {
      const Extrapolation ep =
          extrapolate3(r, {res.partial_P[k - 3](i), res.partial_P[k - 2](i), res.partial_P[k - 1](i)});
      res.P(i) = ep.limit;
      res.extrapolated = res.extrapolated || ep.fitted;
    }
  }
  // Growth between the last radii signals a divergent flux.
  if (k >= 3) {
    const double d1 = std::abs(res.partial_E[k - 2] - res.partial_E[k - 3]);
    const double d2 = std::abs(res.partial_E[k - 1] - res.partial_E[k - 2]);
    const double scale = std::max(std::abs(res.partial_E.back()), 1e-300);
    if (d2 > d1 * 1.0000001 && d2 > 1e-10 * scale) throw Error("adm_energy_momentum: flux is not converging");
  }
  return res;
}

ADMResult pp_adm(const PPWaveData& pp, const std::vector<double>& radii, int angle_nodes, int axis_nodes) {
  const double C = pp.slab();
  for (double r : radii)
    if (!(r > std::max(C, pp.spec().F.radius)))
      throw Error("pp_adm: cylinder radii must exceed the slab width and the support of F");
  SurfaceOptions opt;
  opt.family = SurfaceFamily::capped_cylinders;
  opt.angle_nodes = angle_nodes;
  opt.axis_nodes = axis_nodes;
  opt.half_height = 2.0 * C;
  opt.xn_breaks = {-C, C};
  return adm_energy_momentum(flux_source(pp), pp.dim(), radii, opt);
}

AsymptoticFit fit_asymptotic_lapse_shift(const PairValueFn& pair, const std::vector<Vec>& points, double E,
                                         const Vec& P) {
  if (points.empty()) throw Error("fit_asymptotic_lapse_shift: no sample points");
  const int n = static_cast<int>(points[0].size());
  const int m = static_cast<int>(points.size());
  const int na = n * (n - 1) / 2;
  std::vector<double> f(m);
  std::vector<Vec> X(m);
  for (int k = 0; k < m; ++k) {
    const auto v = pair(points[k]);
    f[k] = v.first;
    X[k] = v.second;
  }
  AsymptoticFit fit;
  // Linear model for f.
  Eigen::MatrixXd Mf(m, n);
  Eigen::VectorXd yf(m);
  for (int k = 0; k < m; ++k) {
    Mf.row(k) = points[k].transpose();
    yf(k) = f[k];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svf(Mf);
  fit.condition = svf.singularValues()(0) / std::max(svf.singularValues()(n - 1), 1e-300);
  fit.c = Mf.colPivHouseholderQr().solve(yf);
  // Linear antisymmetric model for X: X^i = Σ_j d_ij x^j with d_ji = −d_ij.
  fit.d = Mat::Zero(n, n);
  Eigen::VectorXd rf = yf - Mf * fit.c;
  std::vector<Vec> rX = X;
  if (na > 0) {
    Eigen::MatrixXd Md = Eigen::MatrixXd::Zero(m * n, na);
    Eigen::VectorXd yd(m * n);
    for (int k = 0; k < m; ++k) {
      int col = 0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++col) {
          Md(k * n + i, col) = points[k](j);
          Md(k * n + j, col) = -points[k](i);
        }
      yd.segment(k * n, n) = X[k];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Md);
    fit.condition =
        std::max(fit.condition, svd.singularValues()(0) / std::max(svd.singularValues()(na - 1), 1e-300));
    const Eigen::VectorXd dv = Md.colPivHouseholderQr().solve(yd);
    int col = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++col) {
        fit.d(i, j) = dv(col);
        fit.d(j, i) = -dv(col);
      }
    for (int k = 0; k < m; ++k) rX[k] = X[k] - fit.d * points[k];
  }
  double lin = 0.0;
  for (int k = 0; k < m; ++k) lin += rf(k) * rf(k) + rX[k].squaredNorm();
  // Constant model on the residual.
  fit.a = rf.mean();
  fit.b = Vec::Zero(n);
  for (int k = 0; k < m; ++k) fit.b += rX[k];
  fit.b /= m;
  double cres = 0.0;
  for (int k = 0; k < m; ++k) cres += std::pow(rf(k) - fit.a, 2) + (rX[k] - fit.b).squaredNorm();
  fit.linear_residual = std::sqrt(lin / m);
  fit.constant_residual = std::sqrt(cres / m);
  fit.ill_conditioned = fit.condition > 1e8;
  double defect = 0.0;
  for (int i = 0; i < n; ++i) defect = std::max(defect, std::abs(fit.b(i) * E + 2.0 * fit.a * P(i)));
  fit.relation_defect = defect;
  return fit;
}

std::vector<Vec> ray_samples(int n, int directions, const std::vector<double>& radii, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<Vec> out;
  for (int k = 0; k < directions; ++k) {
    Vec w(n);
    for (int i = 0; i < n; ++i) w(i) = nd(rng);
    w.normalize();
    for (double r : radii) {
      out.push_back(r * w);
      out.push_back(-r * w);
    }
  }
  return out;
}

}  // namespace declab
