#pragma once

#include "declab/grid.hpp"
#include "declab/jet.hpp"

#include <vector>

namespace declab {

// Dense rank-4 array indexed (a,b,c,d), each in [0,n).
struct Tensor4 {
  int n = 0;
  std::vector<double> a;
  Tensor4() = default;
  explicit Tensor4(int dim) : n(dim), a(static_cast<std::size_t>(dim) * dim * dim * dim, 0.0) {}
  double& operator()(int i, int j, int k, int l) { return a[((i * n + j) * n + k) * n + l]; }
  double operator()(int i, int j, int k, int l) const { return a[((i * n + j) * n + k) * n + l]; }
};

// Pointwise Riemannian geometry of a metric jet.
// gamma[l](i,j) = Γ^l_ij; dgamma[m][l](i,j) = ∂_m Γ^l_ij.
// riemann(l,i,j,k) = R^l_ijk = dx^l(R(∂_i,∂_j)∂_k) with R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y],
// so that ricci(j,k) = R^l_ljk.
struct Geometry {
  int n = 0;
  Mat g, ginv;
  std::vector<Mat> dg;
  std::vector<Mat> gamma;
  std::vector<std::vector<Mat>> dgamma;
  Tensor4 riemann;
  Mat ricci;
  double scalar = 0.0;
  double det = 0.0;
  bool has_curvature() const { return !dgamma.empty(); }
};

// Throws Error when g is not positive definite. Curvature needs second derivatives in the jet.
Geometry geometry(const SymJet& g, bool with_curvature = true);

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Mat& m);

// Covariant operators at a point. Index conventions: X is contravariant, π is contravariant (2,0).
Mat hessian(const Geometry& geo, const Jet2& f);                       // f_;ij
double laplacian(const Geometry& geo, const Jet2& f);                  // Δ_g f
Mat nabla_vector(const Geometry& geo, const VecJet& X);                // (k,j) ↦ ∇_j X^k
Mat nabla_lowered(const Geometry& geo, const VecJet& X);               // (i,j) ↦ X_i;j
double divergence(const Geometry& geo, const VecJet& X);               // Div_g X
Mat lie_metric(const Geometry& geo, const VecJet& X);                  // (L_X g)_ij
Mat lie_contra(const SymJet& T, const VecJet& X);                      // (L_X T)^ij
Vec divergence_contra(const Geometry& geo, const SymJet& T);           // (Div_g T)^j = T^ij_;i
std::vector<Mat> nabla_contra(const Geometry& geo, const SymJet& T);   // out[k](a,b) = T^ab_;k
std::vector<Mat> second_nabla_lowered(const Geometry& geo, const VecJet& X);  // out[i](j,k) = X_i;jk

inline Mat lower2(const Geometry& geo, const Mat& T) { return geo.g * T * geo.g; }
inline Mat raise2(const Geometry& geo, const Mat& T) { return geo.ginv * T * geo.ginv; }
inline Vec lower1(const Geometry& geo, const Vec& X) { return geo.g * X; }
inline Vec raise1(const Geometry& geo, const Vec& w) { return geo.ginv * w; }
inline double norm_g(const Geometry& geo, const Vec& X) { return std::sqrt(std::max(0.0, X.dot(geo.g * X))); }

// Grid curvature suite: every output is NaN on points closer than the stencil margin.
struct CurvatureFields {
  grid::TensorField christoffel;  // contravariant 1, covariant 2, component (l*n+i)*n+j
  grid::TensorField riemann;      // contravariant 1, covariant 3
  grid::TensorField ricci;
  grid::TensorField scalar;
};
CurvatureFields curvature_suite(const grid::TensorField& g, int accuracy = 4);

// Grid covariant operators (same interior convention).
grid::TensorField hessian_field(const grid::TensorField& g, const grid::TensorField& f, int accuracy = 4);
grid::TensorField laplacian_field(const grid::TensorField& g, const grid::TensorField& f, int accuracy = 4);
grid::TensorField divergence_field(const grid::TensorField& g, const grid::TensorField& X, int accuracy = 4);
grid::TensorField lie_metric_field(const grid::TensorField& g, const grid::TensorField& X, int accuracy = 4);
grid::TensorField raise_field(const grid::TensorField& g, const grid::TensorField& T);
grid::TensorField lower_field(const grid::TensorField& g, const grid::TensorField& T);

}  // namespace declab
