#pragma once

#include "declab/geometry.hpp"
#include "declab/grid.hpp"
#include "declab/jet.hpp"

#include <optional>
#include <string>
#include <vector>

namespace declab {

// ---- pointwise layer (jets in, values out) ----

struct ConstraintPoint {
  double mu = 0.0;
  Vec J;
  double sigma = 0.0;
};

// Pointwise modifier values (φ, Z).
struct Modifier {
  double phi = 0.0;
  Vec Z;
};

// Slot convention of the adjoint: cov is the symmetric covariant tensor, contra the symmetric contravariant one.
struct AdjointValue {
  Mat cov;
  Mat contra;
};

enum class OperatorKind { plain, bar, modified };

Mat pi_to_k(const Mat& g, const Mat& pi);
Mat k_to_pi(const Mat& g, const Mat& k);

// μ, J, σ from a data jet (second derivatives of g, first of π).
ConstraintPoint constraints_at(const DataJet& d);
ConstraintPoint constraints_at(const DataJet& d, const Geometry& geo);

// Value of Φ (plain), Φ̄ (bar) or Φ^{(φ,Z)} (modified) at (γ,τ), with base current J and base metric g (values).
// Returns (energy component, momentum component) = (2μ + ..., J + ...).
std::pair<double, Vec> operator_value(OperatorKind kind, const DataJet& at, const Mat& base_g, const Vec& base_J,
                                      const Modifier& mod = {});

// Symmetric-difference linearization with one Richardson step: (4 D(ε/2) − D(ε)) / 3.
// eps ≤ 0 selects 1e-4 scaled by the direction size.
std::pair<double, Vec> linearize_at(OperatorKind kind, const DataJet& base, const SymJet& h, const SymJet& w,
                                    const Modifier& mod = {}, double eps = 0.0);

// Adjoint of the linearized operator of the given kind at a lapse-shift jet.
AdjointValue adjoint_at(OperatorKind kind, const DataJet& d, const PairJet& fx, const Modifier& mod = {});
AdjointValue adjoint_at(OperatorKind kind, const DataJet& d, const Geometry& geo, const ConstraintPoint& c,
                        const PairJet& fx, const Modifier& mod);

// Residuals of the four Hessian-type equations.
struct HessianResiduals {
  Mat hamiltonian;
  Mat momentum;
  Mat hessian;
  std::vector<Mat> second;  // second[i](j,k)
  double max_abs() const;
};
HessianResiduals hessian_system_at(const DataJet& d, const PairJet& fx, const Modifier& mod = {});

// J-null-vector residual 2fJ + |J|_g X and, where |J|_g ≥ floor, the two gradient identities.
// Jjet must carry the current and its first derivatives.
struct GradfResiduals {
  Vec null_vector;
  bool evaluated = false;
  double gradf = 0.0;
  Vec gradf2;
};
GradfResiduals gradf_residuals_at(const DataJet& d, const VecJet& Jjet, const PairJet& fx, double floor = 1e-10);

// σ comparison for a deformation at one point. The hypothesis equation is imposed by solving the momentum
// component for the 1-jet of w in the minimum-norm sense, then reading u off the energy component.
struct SigmaBoundPoint {
  bool hypotheses_ok = true;
  std::string hypothesis_note;
  double u = 0.0;
  double sigma = 0.0;
  double sigma_bar = 0.0;
  double bound = 0.0;   // error term, 0 when Z is the current
  double margin = 0.0;  // σ̄ − σ − u + bound
  double momentum_defect = 0.0;
  double scale = 1.0;
};
SigmaBoundPoint sigma_bound_at(const DataJet& base, const SymJet& h, const Modifier& mod, bool z_is_current);

// ---- grid layer ----

struct InitialData {
  grid::TensorField g;   // covariant rank 2
  grid::TensorField pi;  // contravariant rank 2
};

struct LapseShift {
  grid::TensorField f;
  grid::TensorField X;
};

struct ModifierPair {
  grid::TensorField phi;
  grid::TensorField Z;
};

struct ConstraintFields {
  grid::TensorField mu;
  grid::TensorField J;
  grid::TensorField sigma;
  double min_sigma = 0.0;
};

void validate(const InitialData& d);
DataJet data_jet(const InitialData& d, std::size_t p, int accuracy = 4);
PairJet pair_jet(const LapseShift& s, std::size_t p, int accuracy = 4);

grid::TensorField pi_k_convert(const InitialData& d, bool to_k);
ConstraintFields constraint_map(const InitialData& d, int accuracy = 4);
grid::TensorField dominant_energy_scalar(const InitialData& d, double* min_over_interior = nullptr, int accuracy = 4);

struct AdjointFields {
  grid::TensorField cov;
  grid::TensorField contra;
};
AdjointFields adjoint_eval(const InitialData& d, const LapseShift& s, OperatorKind kind,
                           const ModifierPair* mod = nullptr, int accuracy = 4);

struct ResidualSummary {
  std::string name;
  double max_abs = 0.0;
  double l2 = 0.0;
};
std::vector<ResidualSummary> hessian_system_residual(const InitialData& d, const LapseShift& s,
                                                     const ModifierPair* mod = nullptr, int accuracy = 4);
std::vector<ResidualSummary> j_null_gradf_residuals(const InitialData& d, const LapseShift& s, double floor = 1e-10,
                                                    int accuracy = 4);

// σ comparison at every interior point for a perturbation field h (covariant). A violation is a margin below
// −tol·scale at a point whose hypotheses hold; hypothesis failures are counted separately.
struct SigmaBoundReport {
  int points = 0;
  int violations = 0;
  int hypothesis_failures = 0;
  double worst_margin = 0.0;     // min margin / scale
  double max_momentum_defect = 0.0;
};
SigmaBoundReport sigma_bound_check(const InitialData& base, const grid::TensorField& h, const ModifierPair* mod,
                                   bool z_is_current, double tol = 1e-10, int accuracy = 4);

// L² duality ∫(u f + ⟨Y, X⟩_g) dμ_g against ∫(⟨h, A⟩_g + ⟨w, B⟩_g) dμ_g, where (u, Y) is the linearization in the
// direction (h, w) and (A, B) the adjoint of (f, X). Trapezoid sums over interior points; (h, w) must vanish near the
// margin. rel = |lhs − rhs| / Σ|lhs integrand| dμ.
struct DualityResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double scale = 0.0;
  double rel = 0.0;
};
DualityResult duality_mismatch(const InitialData& base, const grid::TensorField& h, const grid::TensorField& w,
                               const LapseShift& s, OperatorKind kind, const ModifierPair* mod = nullptr,
                               int accuracy = 4);

}  // namespace declab
