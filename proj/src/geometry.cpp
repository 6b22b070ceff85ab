#include "declab/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace declab {

double min_eigenvalue(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

Geometry geometry(const SymJet& gj, bool with_curvature) {
  Geometry geo;
  const int n = gj.dim();
  geo.n = n;
  geo.g = gj.v;
  Eigen::LLT<Mat> llt(geo.g);
  if (llt.info() != Eigen::Success || !(min_eigenvalue(geo.g) > 0.0)) throw Error("geometry: metric is not positive definite");
  geo.ginv = llt.solve(Mat::Identity(n, n));
  geo.det = geo.g.determinant();
  geo.dg = gj.d;

  // Γ_{s,ij} = ½(∂_i g_js + ∂_j g_is − ∂_s g_ij)
  std::vector<Mat> low(n, Mat::Zero(n, n));
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) low[s](i, j) = 0.5 * (gj.d[i](j, s) + gj.d[j](i, s) - gj.d[s](i, j));
  geo.gamma.assign(n, Mat::Zero(n, n));
  for (int l = 0; l < n; ++l)
    for (int s = 0; s < n; ++s) geo.gamma[l] += geo.ginv(l, s) * low[s];

  if (!with_curvature) return geo;
  if (!gj.has_second()) throw Error("geometry: curvature needs second derivatives of the metric");

  geo.dgamma.assign(n, std::vector<Mat>(n, Mat::Zero(n, n)));
  for (int m = 0; m < n; ++m) {
    const Mat dginv = -geo.ginv * gj.d[m] * geo.ginv;
    std::vector<Mat> dlow(n, Mat::Zero(n, n));
    for (int s = 0; s < n; ++s)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          dlow[s](i, j) = 0.5 * (gj.dd[m][i](j, s) + gj.dd[m][j](i, s) - gj.dd[m][s](i, j));
    for (int l = 0; l < n; ++l)
      for (int s = 0; s < n; ++s) geo.dgamma[m][l] += dginv(l, s) * low[s] + geo.ginv(l, s) * dlow[s];
  }

  geo.riemann = Tensor4(n);
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double r = geo.dgamma[i][l](j, k) - geo.dgamma[j][l](i, k);
          for (int m = 0; m < n; ++m) r += geo.gamma[m](j, k) * geo.gamma[l](i, m) - geo.gamma[m](i, k) * geo.gamma[l](j, m);
          geo.riemann(l, i, j, k) = r;
        }
  geo.ricci = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) geo.ricci(j, k) += geo.riemann(l, l, j, k);
  geo.scalar = (geo.ginv.array() * geo.ricci.array()).sum();
  return geo;
}

Mat hessian(const Geometry& geo, const Jet2& f) {
  Mat h = f.dd;
  for (int k = 0; k < geo.n; ++k) h -= geo.gamma[k] * f.d(k);
  return h;
}

double laplacian(const Geometry& geo, const Jet2& f) { return (geo.ginv.array() * hessian(geo, f).array()).sum(); }

Mat nabla_vector(const Geometry& geo, const VecJet& X) {
  Mat out = X.d;
  for (int k = 0; k < geo.n; ++k) out.row(k) += (geo.gamma[k] * X.v).transpose();
  return out;
}

Mat nabla_lowered(const Geometry& geo, const VecJet& X) { return geo.g * nabla_vector(geo, X); }

double divergence(const Geometry& geo, const VecJet& X) { return nabla_vector(geo, X).trace(); }

Mat lie_metric(const Geometry& geo, const VecJet& X) {
  const Mat d = nabla_lowered(geo, X);
  return d + d.transpose();
}

Mat lie_contra(const SymJet& T, const VecJet& X) {
  const int n = T.dim();
  Mat out = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) out += X.v(k) * T.d[k];
  const Mat a = X.d * T.v;  // a(i,j) = ∂_k X^i T^kj
  return out - a - a.transpose();
}

std::vector<Mat> nabla_contra(const Geometry& geo, const SymJet& T) {
  std::vector<Mat> out(geo.n);
  for (int k = 0; k < geo.n; ++k) {
    Mat Gk(geo.n, geo.n);  // Gk(a,m) = Γ^a_km
    for (int a = 0; a < geo.n; ++a) Gk.row(a) = geo.gamma[a].row(k);
    const Mat a = Gk * T.v;
    out[k] = T.d[k] + a + a.transpose();
  }
  return out;
}

Vec divergence_contra(const Geometry& geo, const SymJet& T) {
  const int n = geo.n;
  Vec J = Vec::Zero(n);
  const auto nab = nabla_contra(geo, T);
  for (int i = 0; i < n; ++i) J += nab[i].row(i).transpose();
  return J;
}

std::vector<Mat> second_nabla_lowered(const Geometry& geo, const VecJet& X) {
  if (!X.has_second()) throw Error("second_nabla_lowered: vector jet lacks second derivatives");
  if (!geo.has_curvature()) throw Error("second_nabla_lowered: geometry lacks Christoffel derivatives");
  const int n = geo.n;
  const Mat N = nabla_vector(geo, X);  // N(i,j) = ∇_j X^i
  // up[i](j,k) = ∇_k ∇_j X^i
  std::vector<Mat> up(n, Mat::Zero(n, n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double v = X.dd[i](j, k);
        for (int m = 0; m < n; ++m) {
          v += geo.dgamma[k][i](j, m) * X.v(m) + geo.gamma[i](j, m) * X.d(m, k);
          v += geo.gamma[i](k, m) * N(m, j) - geo.gamma[m](k, j) * N(i, m);
        }
        up[i](j, k) = v;
      }
  std::vector<Mat> out(n, Mat::Zero(n, n));
  for (int i = 0; i < n; ++i)
    for (int l = 0; l < n; ++l) out[i] += geo.g(i, l) * up[l];
  return out;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class Fn>
void for_interior(const grid::ChartGrid& g, grid::TensorField& out, Fn fn) {
  std::fill(out.data.begin(), out.data.end(), kNaN);
  grid::parallel_for(g.size(), [&](std::size_t p) {
    if (g.interior(p)) fn(p);
  });
}

void require_metric(const grid::TensorField& g) {
  if (g.covariant != 2 || g.contravariant != 0) throw Error("metric field must be covariant rank 2");
}

void require_same_grid(const grid::TensorField& a, const grid::TensorField& b) {
  if (!(a.grid == b.grid)) throw Error("fields live on different grids");
}

}  // namespace

CurvatureFields curvature_suite(const grid::TensorField& gf, int accuracy) {
  require_metric(gf);
  const auto& G = gf.grid;
  const int n = G.dim();
  CurvatureFields c{grid::TensorField(G, 2, 1), grid::TensorField(G, 3, 1), grid::TensorField(G, 2, 0, true),
                    grid::TensorField(G, 0, 0)};
  for (auto* f : {&c.christoffel, &c.riemann, &c.ricci, &c.scalar}) std::fill(f->data.begin(), f->data.end(), kNaN);
  // Check positivity first so failures surface as an exception rather than from a worker thread.
  for (std::size_t p = 0; p < G.size(); ++p) {
    if (!G.interior(p)) continue;
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = gf.at(p, i * n + j);
    if (!(min_eigenvalue(m) > 0.0)) throw Error("curvature_suite: metric not positive definite at an interior point");
  }
  grid::parallel_for(G.size(), [&](std::size_t p) {
    if (!G.interior(p)) return;
    const Geometry geo = geometry(grid::sym_jet(gf, p, accuracy));
    for (int l = 0; l < n; ++l)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          c.christoffel.at(p, (l * n + i) * n + j) = geo.gamma[l](i, j);
          for (int k = 0; k < n; ++k) c.riemann.at(p, ((l * n + i) * n + j) * n + k) = geo.riemann(l, i, j, k);
        }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c.ricci.at(p, i * n + j) = geo.ricci(i, j);
    c.scalar.at(p, 0) = geo.scalar;
  });
  return c;
}

grid::TensorField hessian_field(const grid::TensorField& gf, const grid::TensorField& f, int accuracy) {
  require_metric(gf);
  require_same_grid(gf, f);
  if (f.rank() != 0) throw Error("hessian_field: input must be a scalar field");
  const int n = gf.grid.dim();
  grid::TensorField out(gf.grid, 2, 0, true);
  for_interior(gf.grid, out, [&](std::size_t p) {
    const Geometry geo = geometry(grid::sym_jet(gf, p, accuracy), false);
    const Mat h = hessian(geo, grid::component_jet(f, p, 0, accuracy));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out.at(p, i * n + j) = h(i, j);
  });
  return out;
}

grid::TensorField laplacian_field(const grid::TensorField& gf, const grid::TensorField& f, int accuracy) {
  require_metric(gf);
  require_same_grid(gf, f);
  if (f.rank() != 0) throw Error("laplacian_field: input must be a scalar field");
  grid::TensorField out(gf.grid, 0, 0);
  for_interior(gf.grid, out, [&](std::size_t p) {
    const Geometry geo = geometry(grid::sym_jet(gf, p, accuracy), false);
    out.at(p, 0) = laplacian(geo, grid::component_jet(f, p, 0, accuracy));
  });
  return out;
}

grid::TensorField divergence_field(const grid::TensorField& gf, const grid::TensorField& X, int accuracy) {
  require_metric(gf);
  require_same_grid(gf, X);
  if (X.contravariant != 1 || X.covariant != 0) throw Error("divergence_field: input must be a vector field");
  grid::TensorField out(gf.grid, 0, 0);
  for_interior(gf.grid, out, [&](std::size_t p) {
    const Geometry geo = geometry(grid::sym_jet(gf, p, accuracy), false);
    out.at(p, 0) = divergence(geo, grid::vec_jet(X, p, accuracy));
  });
  return out;
}

grid::TensorField lie_metric_field(const grid::TensorField& gf, const grid::TensorField& X, int accuracy) {
  require_metric(gf);
  require_same_grid(gf, X);
  if (X.contravariant != 1 || X.covariant != 0) throw Error("lie_metric_field: input must be a vector field");
  const int n = gf.grid.dim();
  grid::TensorField out(gf.grid, 2, 0, true);
  for_interior(gf.grid, out, [&](std::size_t p) {
    const Geometry geo = geometry(grid::sym_jet(gf, p, accuracy), false);
    const Mat L = lie_metric(geo, grid::vec_jet(X, p, accuracy));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out.at(p, i * n + j) = L(i, j);
  });
  return out;
}

namespace {

grid::TensorField move_indices(const grid::TensorField& gf, const grid::TensorField& T, bool raise) {
  require_metric(gf);
  require_same_grid(gf, T);
  const int n = gf.grid.dim();
  const int r = T.rank();
  if (r < 1 || r > 2) throw Error("index raising/lowering supports ranks 1 and 2");
  if (raise && T.contravariant != 0) throw Error("raise_field: input must be fully covariant");
  if (!raise && T.covariant != 0) throw Error("lower_field: input must be fully contravariant");
  grid::TensorField out(gf.grid, raise ? 0 : r, raise ? r : 0, T.symmetric);
  grid::parallel_for(gf.grid.size(), [&](std::size_t p) {
    Mat g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = gf.at(p, i * n + j);
    const Mat m = raise ? Mat(g.llt().solve(Mat::Identity(n, n))) : g;
    if (r == 1) {
      Vec v(n);
      for (int i = 0; i < n; ++i) v(i) = T.at(p, i);
      const Vec w = m * v;
      for (int i = 0; i < n; ++i) out.at(p, i) = w(i);
    } else {
      Mat t(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t(i, j) = T.at(p, i * n + j);
      const Mat w = m * t * m.transpose();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out.at(p, i * n + j) = w(i, j);
    }
  });
  return out;
}

}  // namespace

grid::TensorField raise_field(const grid::TensorField& g, const grid::TensorField& T) { return move_indices(g, T, true); }
grid::TensorField lower_field(const grid::TensorField& g, const grid::TensorField& T) { return move_indices(g, T, false); }

}  // namespace declab
