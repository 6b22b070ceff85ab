#pragma once

#include "declab/background.hpp"
#include "declab/constraints.hpp"

#include <functional>
#include <vector>

namespace declab {

// ---- W/T variables ----

// 1-jet of a lapse-shift pair at a point: f, ∂f (covector), X (vector), ∇X lowered (i,j) ↦ X_i;j.
struct JetState {
  double f = 0.0;
  Vec df;
  Vec X;
  Mat gradX;
  int dim() const { return static_cast<int>(X.size()); }
};

// W_i = f Ẑ_i + ½ X_i and T_ij = ½(X_i;j − X_j;i), Ẑ = Z/|Z|_g lowered.
struct WT {
  Vec W;
  Mat T;
};
WT wt_variables(const JetState& s, const Mat& g, const Vec& Z);

// Pairs (j, k) with j > k in the order used for T inside the jet vector.
std::vector<std::pair<int, int>> lower_pairs(int n);
// Length 2n + n(n−1)/2 + 1.
int jet_vector_size(int n);
// (W, df, T_{jk} for j > k, f).
Eigen::VectorXd jet_vector(const WT& wt, const JetState& s);
// Inverse map: X = 2(W − fẐ), X_i;j = T_ij + (2/(n−1)(tr π) g_ij − 2π_ij) f. π is contravariant.
JetState reconstruct_jet(const Eigen::VectorXd& P, const Mat& g, const Mat& pi, const Vec& Z);

JetState jet_state(const DataJet& d, const PairJet& fx);

// ---- φ₁-coefficient blocks ----

struct QBlocks {
  int n = 0;
  Mat D1, D2;
  Eigen::MatrixXd D3;
  Eigen::VectorXd R1;  // length N − 1
  Eigen::MatrixXd Q1; // assembled (N−1)×(N−1) with the displayed blocks and the computable off-diagonal T block
  Vec zhat;           // Ẑ in the orthonormal frame (≈ e1)
  double det_D1() const { return D1.determinant(); }
  double det_D2() const { return D2.determinant(); }
  double det_D3() const { return D3.determinant(); }
};

// g and Z at p; phi3(i,j,k) = ∂_i∂_j∂_k φ at p in the same chart (may be empty). Builds an orthonormal frame
// with e1 = Ẑ by Gram–Schmidt in g and evaluates the block formulas with the numerically obtained Ẑ.
struct Phi3 {
  int n = 0;
  std::vector<double> a;
  double operator()(int i, int j, int k) const { return a[(i * n + j) * n + k]; }
};
QBlocks assemble_q1_blocks(const Mat& g, const Vec& Z, const Phi3& phi3 = {});

// ---- jet propagation ----

struct PropagationResult {
  std::vector<double> s;               // path parameter at each step
  std::vector<JetState> states;
  std::vector<double> momentum_residual;  // max |−½(L_X g) + (2/(n−1) trπ g − 2π) f| along the path
};

// RK4 along the segment from a to b with `steps` steps. The second derivatives of (f, X) are taken from the
// Hessian and second-derivative equations of the kernel system.
using DataFn = std::function<DataJet(const Vec&)>;
using ModifierFn = std::function<Modifier(const Vec&)>;
PropagationResult propagate_jet(const DataFn& data, const ModifierFn& mod, const JetState& start, const Vec& a,
                                const Vec& b, int steps);

// ---- null-space search ----

struct KernelOptions {
  OperatorKind kind = OperatorKind::plain;
  int degree = 4;           // total degree of the polynomial basis for f and each X^i
  double gap_factor = 1e-3; // kernel dimension = #{σ < gap_factor · median σ}
};

// Tensor Legendre basis in y = (x − center)/halfwidth with total degree ≤ degree.
class PolyBasis {
 public:
  PolyBasis(int n, int degree, const Vec& center, double halfwidth);
  int size() const { return static_cast<int>(alpha_.size()); }
  int dim() const { return n_; }
  Jet2 eval(int k, const Vec& x) const;
  std::vector<Jet2> eval_all(const Vec& x) const;

 private:
  int n_, degree_;
  Vec center_;
  double h_;
  std::vector<std::vector<int>> alpha_;
  std::vector<std::vector<double>> legendre_;  // monomial coefficients of P_k
};

struct KernelReport {
  std::vector<double> singular_values;  // ascending
  int kernel_dim = 0;
  bool gap_found = false;
  double gap = 0.0;                     // σ_{dim} / σ_{dim−1}, or σ_1/σ_0 when dim = 0
  double null_vector_residual = 0.0;    // relative max |2fZ + |Z|_g X| of the best candidate
  std::vector<Vec> points;
  std::vector<double> cand_f;           // candidate f at the points
  std::vector<Vec> cand_X;
  std::vector<double> coefficients;     // candidate in the polynomial basis, component-major
  int rows = 0, cols = 0;
};

// Collocation search on the given points with data and modifier callbacks. When mod is empty the null-vector
// residual uses the current J.
KernelReport kernel_search(const DataFn& data, const ModifierFn& mod, const std::vector<Vec>& points,
                           const Vec& center, double halfwidth, const KernelOptions& opt = {});

// Grid version: data jets by finite differences at the interior grid points of the sub-box [lo, hi] (index ranges,
// inclusive) with the given stride.
KernelReport kernel_search(const InitialData& d, const ModifierPair* mod, const std::vector<int>& lo,
                           const std::vector<int>& hi, int stride, const KernelOptions& opt = {});

// |cos| between the stacked (f, X) samples of the candidate and a reference pair.
double candidate_cosine(const KernelReport& r, const std::function<PairJet(const Vec&)>& ref);

}  // namespace declab
