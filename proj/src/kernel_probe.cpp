#include "declab/kernel_probe.hpp"

#include "declab/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace declab {

namespace {

Vec unit_lowered(const Mat& g, const Vec& Z) {
  const double zn = std::sqrt(std::max(0.0, Z.dot(g * Z)));
  if (!(zn > 0.0)) throw Error("Z vanishes at the point");
  return g * Z / zn;
}

Mat momentum_coefficient(const Mat& g, const Mat& pi) {
  const int n = static_cast<int>(g.rows());
  const double tr = g.cwiseProduct(pi).sum();
  return 2.0 / (n - 1) * tr * g - 2.0 * g * pi * g;
}

}  // namespace

WT wt_variables(const JetState& s, const Mat& g, const Vec& Z) {
  WT out;
  out.W = s.f * unit_lowered(g, Z) + 0.5 * g * s.X;
  out.T = 0.5 * (s.gradX - s.gradX.transpose());
  return out;
}

std::vector<std::pair<int, int>> lower_pairs(int n) {
  std::vector<std::pair<int, int>> out;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < j; ++k) out.emplace_back(j, k);
  return out;
}

int jet_vector_size(int n) { return 2 * n + n * (n - 1) / 2 + 1; }

Eigen::VectorXd jet_vector(const WT& wt, const JetState& s) {
  const int n = s.dim();
  const int N = jet_vector_size(n);
  Eigen::VectorXd P(N);
  P.head(n) = wt.W;
  P.segment(n, n) = s.df;
  int c = 2 * n;
  for (auto [j, k] : lower_pairs(n)) P(c++) = wt.T(j, k);
  P(N - 1) = s.f;
  return P;
}

JetState reconstruct_jet(const Eigen::VectorXd& P, const Mat& g, const Mat& pi, const Vec& Z) {
  const int n = static_cast<int>(g.rows());
  if (P.size() != jet_vector_size(n)) throw Error("reconstruct_jet: wrong jet vector length");
  JetState s;
  s.f = P(P.size() - 1);
  s.df = P.segment(n, n);
  const Vec W = P.head(n);
  s.X = g.inverse() * (2.0 * (W - s.f * unit_lowered(g, Z)));
  Mat T = Mat::Zero(n, n);
  int c = 2 * n;
  for (auto [j, k] : lower_pairs(n)) {
    T(j, k) = P(c);
    T(k, j) = -P(c);
    ++c;
  }
  s.gradX = T + momentum_coefficient(g, pi) * s.f;
  return s;
}

JetState jet_state(const DataJet& d, const PairJet& fx) {
  const Geometry geo = geometry(d.g, false);
  JetState s;
  s.f = fx.f.v;
  s.df = fx.f.d;
  s.X = fx.X.v;
  s.gradX = nabla_lowered(geo, fx.X);
  return s;
}

QBlocks assemble_q1_blocks(const Mat& g, const Vec& Z, const Phi3& phi3) {
  const int n = static_cast<int>(g.rows());
  if (n < 2) throw Error("assemble_q1_blocks: n must be at least 2");
  const double zn = std::sqrt(std::max(0.0, Z.dot(g * Z)));
  if (!(zn > 0.0)) throw Error("assemble_q1_blocks: Z(p) = 0");
  // Orthonormal frame with e1 = Ẑ: Gram–Schmidt in g over (Z, coordinate axes), dropping dependent vectors.
  Mat E = Mat::Zero(n, n);
  int filled = 0;
  auto add = [&](Vec v) {
    for (int a = 0; a < filled; ++a) v -= E.col(a).dot(g * v) * E.col(a);
    const double len = std::sqrt(std::max(0.0, v.dot(g * v)));
    if (len < 1e-8) return;
    E.col(filled++) = v / len;
  };
  add(Z);
  for (int i = 0; i < n && filled < n; ++i) add(Vec::Unit(n, i));
  const Vec z = E.partialPivLu().solve(Z / zn);  // Ẑ in the frame, upper and lower indices agree

  const int N = jet_vector_size(n);
  const auto pairs = lower_pairs(n);
  QBlocks q;
  q.n = n;
  q.zhat = z;
  q.Q1 = Eigen::MatrixXd::Zero(N - 1, N - 1);
  auto d = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  // Rows 0..n−1: φ₁ coefficients of W in the divergence relation.
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) q.Q1(j, l) = z(0) * d(j, l) + z(j) * d(l, 0);
  // Coefficients of f_m and T_ℓm in the differentiated relation for row (j, k).
  auto df_coeff = [&](int j, int k, int m) { return 2.0 * z(0) * z(j) * d(k, m) + 2.0 * z(m) * z(j) * d(k, 0); };
  auto t_coeff = [&](int j, int k, int l, int m) {
    return 0.5 * (z(0) * d(j, l) * d(k, m) + z(m) * d(j, l) * d(k, 0) + z(j) * d(0, l) * d(k, m) +
                  z(j) * d(m, l) * d(k, 0));
  };
  auto fill_row = [&](int row, int j, int k) {
    for (int m = 0; m < n; ++m) q.Q1(row, n + m) = df_coeff(j, k, m);
    int c = 2 * n;
    for (auto [l, m] : pairs) q.Q1(row, c++) = t_coeff(j, k, l, m) - t_coeff(j, k, m, l);
  };
  for (int k = 0; k < n; ++k) fill_row(n + k, 0, k);
  {
    int r = 2 * n;
    for (auto [j, k] : pairs) fill_row(r++, j, k);
  }
  const int nt = static_cast<int>(pairs.size());
  q.D1 = q.Q1.block(0, 0, n, n);
  q.D2 = q.Q1.block(n, n, n, n);
  q.D3 = q.Q1.block(2 * n, 2 * n, nt, nt);

  Eigen::VectorXd R1 = Eigen::VectorXd::Zero(N - 1);
  if (phi3.n == n) {
    auto frame3 = [&](int a, int b, int c) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) s += E(i, a) * E(j, b) * E(k, c) * phi3(i, j, k);
      return s;
    };
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < n; ++i) R1(l) += frame3(i, 0, 0) * (z(i) * d(l, 0) + z(0) * d(i, l));
  }
  q.R1 = R1;
  return q;
}

PropagationResult propagate_jet(const DataFn& data, const ModifierFn& mod, const JetState& start, const Vec& a,
                                const Vec& b, int steps) {
  const int n = start.dim();
  if (steps < 1) throw Error("propagate_jet: steps must be positive");
  if (a.size() != n || b.size() != n) throw Error("propagate_jet: endpoint dimension mismatch");
  const Vec t = b - a;
  const int ny = 1 + n + n + n * n;
  using Y = Eigen::VectorXd;

  auto unpack = [&](const Y& y) {
    PairJet fx;
    fx.f = Jet2(n, y(0));
    fx.f.d = y.segment(1, n);
    fx.X = VecJet::zero(n, true);
    fx.X.v = y.segment(1 + n, n);
    for (int m = 0; m < n; ++m)
      for (int i = 0; i < n; ++i) fx.X.d(m, i) = y(1 + 2 * n + m * n + i);
    return fx;
  };
  auto eval = [&](const Vec& x, const Y& y, double* mom) {
    const DataJet d = data(x);
    const Modifier md = mod ? mod(x) : Modifier{};
    const PairJet fx = unpack(y);
    const HessianResiduals r = hessian_system_at(d, fx, md);
    if (mom) *mom = r.momentum.cwiseAbs().maxCoeff();
    const Geometry geo = geometry(d.g, false);
    Y dy(ny);
    dy(0) = fx.f.d.dot(t);
    dy.segment(1, n) = -r.hessian * t;
    dy.segment(1 + n, n) = fx.X.d * t;
    for (int m = 0; m < n; ++m)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int k = 0; k < n; ++k)
          for (int i = 0; i < n; ++i) s -= geo.ginv(m, i) * r.second[i](j, k) * t(k);
        dy(1 + 2 * n + m * n + j) = s;
      }
    if (!dy.allFinite()) throw Error("propagate_jet: non-finite derivative along the path");
    return dy;
  };

  // Initial partials from the covariant 1-jet: ∂_j X^m = g^{mi} X_i;j − Γ^m_jl X^l.
  Y y(ny);
  {
    const DataJet d0 = data(a);
    const Geometry geo = geometry(d0.g, false);
    y(0) = start.f;
    y.segment(1, n) = start.df;
    y.segment(1 + n, n) = start.X;
    const Mat up = geo.ginv * start.gradX;
    for (int m = 0; m < n; ++m)
      for (int j = 0; j < n; ++j) y(1 + 2 * n + m * n + j) = up(m, j) - geo.gamma[m].row(j).dot(start.X);
  }

  PropagationResult out;
  auto record = [&](double s, const Y& yy) {
    const Vec x = a + s * t;
    double mom = 0.0;
    eval(x, yy, &mom);
    const DataJet d = data(x);
    out.s.push_back(s);
    out.states.push_back(jet_state(d, unpack(yy)));
    out.momentum_residual.push_back(mom);
  };
  record(0.0, y);
  const double h = 1.0 / steps;
  for (int k = 0; k < steps; ++k) {
    const double s = k * h;
    const Y k1 = eval(a + s * t, y, nullptr);
    const Y k2 = eval(a + (s + 0.5 * h) * t, y + 0.5 * h * k1, nullptr);
    const Y k3 = eval(a + (s + 0.5 * h) * t, y + 0.5 * h * k2, nullptr);
    const Y k4 = eval(a + (s + h) * t, y + h * k3, nullptr);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    record(s + h, y);
  }
  return out;
}

// ---- polynomial basis ----

PolyBasis::PolyBasis(int n, int degree, const Vec& center, double halfwidth)
    : n_(n), degree_(degree), center_(center), h_(halfwidth) {
  if (n < 1 || degree < 0) throw Error("PolyBasis: bad dimension or degree");
  if (!(halfwidth > 0.0)) throw Error("PolyBasis: halfwidth must be positive");
  legendre_.assign(degree + 1, {});
  legendre_[0] = {1.0};
  if (degree >= 1) legendre_[1] = {0.0, 1.0};
  for (int k = 1; k < degree; ++k) {
    std::vector<double> p(k + 2, 0.0);
    for (int i = 0; i <= k; ++i) p[i + 1] += (2.0 * k + 1) / (k + 1) * legendre_[k][i];
    for (int i = 0; i < k; ++i) p[i] -= static_cast<double>(k) / (k + 1) * legendre_[k - 1][i];
    legendre_[k + 1] = p;
  }
  std::vector<int> cur(n, 0);
  std::function<void(int, int)> rec = [&](int axis, int left) {
    if (axis == n) {
      alpha_.push_back(cur);
      return;
    }
    for (int e = 0; e <= left; ++e) {
      cur[axis] = e;
      rec(axis + 1, left - e);
    }
  };
  rec(0, degree);
}

std::vector<Jet2> PolyBasis::eval_all(const Vec& x) const {
  // 1D jets P_k(y_i) with y_i = (x_i − c_i)/h.
  std::vector<std::vector<Jet2>> one(n_, std::vector<Jet2>(degree_ + 1));
  for (int i = 0; i < n_; ++i) {
    const double y = (x(i) - center_(i)) / h_;
    for (int k = 0; k <= degree_; ++k) {
      const auto& c = legendre_[k];
      double p = 0.0, dp = 0.0, ddp = 0.0;
      for (int m = static_cast<int>(c.size()) - 1; m >= 0; --m) {
        ddp = ddp * y + 2.0 * dp;
        dp = dp * y + p;
        p = p * y + c[m];
      }
      Jet2 j(n_, p);
      j.d(i) = dp / h_;
      j.dd(i, i) = ddp / (h_ * h_);
      one[i][k] = j;
    }
  }
  std::vector<Jet2> out;
  out.reserve(alpha_.size());
  for (const auto& al : alpha_) {
    Jet2 v = one[0][al[0]];
    for (int i = 1; i < n_; ++i) v = v * one[i][al[i]];
    out.push_back(v);
  }
  return out;
}

Jet2 PolyBasis::eval(int k, const Vec& x) const { return eval_all(x).at(k); }

// ---- null-space search ----

namespace {

KernelReport search_core(const std::vector<Vec>& points, const std::vector<DataJet>& data,
                         const std::vector<Modifier>& mods, const Vec& center, double halfwidth,
                         const KernelOptions& opt) {
  if (points.empty()) throw Error("kernel_search: no collocation points");
  const int n = static_cast<int>(points[0].size());
  const PolyBasis basis(n, opt.degree, center, halfwidth);
  const int B = basis.size();
  const int cols = (n + 1) * B;
  const int per = n * (n + 1);
  const long rows = static_cast<long>(points.size()) * per;
  if (static_cast<double>(rows) * cols > 6e7) throw Error("kernel_search: memory budget exceeded, shrink the sub-box");
  if (rows < cols) throw Error("kernel_search: fewer equations than unknowns, add points or lower the degree");
  Eigen::MatrixXd A(rows, cols);
  std::vector<Vec> Zs(points.size());

  grid::parallel_for(points.size(), [&](std::size_t p) {
    const DataJet& d = data[p];
    const Geometry geo = geometry(d.g);
    const ConstraintPoint c = constraints_at(d, geo);
    const Modifier& md = mods[p];
    Zs[p] = md.Z.size() ? md.Z : c.J;
    const auto phi = basis.eval_all(points[p]);
    for (int col = 0; col < cols; ++col) {
      const int comp = col / B, k = col % B;
      PairJet fx;
      fx.f = Jet2(n);
      fx.X = VecJet::zero(n, true);
      if (comp == 0) {
        fx.f = phi[k];
      } else {
        const Jet2& j = phi[k];
        fx.X.v(comp - 1) = j.v;
        fx.X.d.row(comp - 1) = j.d.transpose();
        fx.X.dd[comp - 1] = j.dd;
      }
      const AdjointValue a = adjoint_at(opt.kind, d, geo, c, fx, md);
      long r = static_cast<long>(p) * per;
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          A(r++, col) = a.cov(i, j);
          A(r++, col) = a.contra(i, j);
        }
    }
  });

  // Columns at round-off level relative to the largest are left unscaled so that noise is not promoted to O(1).
  Eigen::VectorXd norms = A.colwise().norm().transpose();
  const double floor = std::max(norms.maxCoeff(), 1.0) * 1e-8;
  for (int c = 0; c < cols; ++c) {
    norms(c) = std::max(norms(c), floor);
    A.col(c) /= norms(c);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();

  KernelReport rep;
  rep.rows = static_cast<int>(rows);
  rep.cols = cols;
  rep.points = points;
  for (int i = cols - 1; i >= 0; --i) rep.singular_values.push_back(sv(i));
  std::vector<double> sorted = rep.singular_values;
  const double median = sorted[sorted.size() / 2];
  for (double s : sorted)
    if (s < opt.gap_factor * median) ++rep.kernel_dim;
  const int k = rep.kernel_dim;
  if (k > 0 && k < cols) {
    rep.gap = sorted[k] / std::max(sorted[k - 1], 1e-300);
  } else if (cols > 1) {
    rep.gap = sorted[1] / std::max(sorted[0], 1e-300);
  }
  rep.gap_found = k > 0 && rep.gap >= 1.0 / opt.gap_factor;

  const Eigen::VectorXd v = svd.matrixV().col(cols - 1);
  rep.coefficients.resize(cols);
  for (int c = 0; c < cols; ++c) rep.coefficients[c] = v(c) / norms(c);
  double num = 0.0, den = 0.0;
  rep.cand_f.resize(points.size());
  rep.cand_X.resize(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto phi = basis.eval_all(points[p]);
    double f = 0.0;
    Vec X = Vec::Zero(n);
    for (int b = 0; b < B; ++b) {
      f += rep.coefficients[b] * phi[b].v;
      for (int i = 0; i < n; ++i) X(i) += rep.coefficients[(i + 1) * B + b] * phi[b].v;
    }
    rep.cand_f[p] = f;
    rep.cand_X[p] = X;
    const Mat& g = data[p].g.v;
    const Vec& Z = Zs[p];
    const double zn = std::sqrt(std::max(0.0, Z.dot(g * Z)));
    const Vec res = 2.0 * f * Z + zn * X;
    num = std::max(num, std::sqrt(std::max(0.0, res.dot(g * res))));
    den = std::max(den, 2.0 * std::abs(f) * zn + zn * std::sqrt(std::max(0.0, X.dot(g * X))));
  }
  rep.null_vector_residual = den > 0.0 ? num / den : 0.0;
  return rep;
}

}  // namespace

KernelReport kernel_search(const DataFn& data, const ModifierFn& mod, const std::vector<Vec>& points,
                           const Vec& center, double halfwidth, const KernelOptions& opt) {
  std::vector<DataJet> d(points.size());
  std::vector<Modifier> m(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    d[p] = data(points[p]);
    if (mod) m[p] = mod(points[p]);
  }
  return search_core(points, d, m, center, halfwidth, opt);
}

KernelReport kernel_search(const InitialData& data, const ModifierPair* mod, const std::vector<int>& lo,
                           const std::vector<int>& hi, int stride, const KernelOptions& opt) {
  validate(data);
  const auto& G = data.g.grid;
  const int n = G.dim();
  if (static_cast<int>(lo.size()) != n || static_cast<int>(hi.size()) != n) throw Error("kernel_search: bad sub-box");
  if (stride < 1) throw Error("kernel_search: stride must be positive");
  std::vector<std::size_t> idx;
  std::vector<int> cur(lo);
  while (true) {
    const std::size_t p = G.flat(cur);
    if (!G.interior(p)) throw Error("kernel_search: sub-box leaves the grid interior");
    idx.push_back(p);
    int a = 0;
    for (; a < n; ++a) {
      cur[a] += stride;
      if (cur[a] <= hi[a]) break;
      cur[a] = lo[a];
    }
    if (a == n) break;
  }
  std::vector<Vec> pts(idx.size());
  std::vector<DataJet> d(idx.size());
  std::vector<Modifier> m(idx.size());
  grid::parallel_for(idx.size(), [&](std::size_t k) {
    pts[k] = G.coords(idx[k]);
    d[k] = data_jet(data, idx[k]);
    if (mod) {
      m[k].phi = mod->phi.at(idx[k], 0);
      m[k].Z = Vec(n);
      for (int i = 0; i < n; ++i) m[k].Z(i) = mod->Z.at(idx[k], i);
    }
  });
  const Vec c = 0.5 * (G.coords(G.flat(lo)) + G.coords(G.flat(hi)));
  double hw = 0.0;
  for (int a = 0; a < n; ++a) hw = std::max(hw, 0.5 * (hi[a] - lo[a]) * G.spacing()[a]);
  return search_core(pts, d, m, c, hw, opt);
}

double candidate_cosine(const KernelReport& r, const std::function<PairJet(const Vec&)>& ref) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t p = 0; p < r.points.size(); ++p) {
    const PairJet q = ref(r.points[p]);
    ab += r.cand_f[p] * q.f.v + r.cand_X[p].dot(q.X.v);
    aa += r.cand_f[p] * r.cand_f[p] + r.cand_X[p].squaredNorm();
    bb += q.f.v * q.f.v + q.X.v.squaredNorm();
  }
  if (!(aa > 0.0 && bb > 0.0)) return 0.0;
  return std::abs(ab) / std::sqrt(aa * bb);
}

}  // namespace declab
