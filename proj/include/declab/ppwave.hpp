#pragma once

#include "declab/background.hpp"

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace declab {

// pp-wave slice data built from a positive function S on U ⊂ R^n:
// g = S (dx^n)² + Σ (dx^a)², π^{na} = ½ S^{-3/2} S_,a, π^{ab} = −½ S^{-3/2} S_,n δ^{ab}, π^{nn} = 0,
// kernel pair f = ½ S^{-1/2}, X = S^{-1} ∂_n. The last coordinate is x^n.
class PPBackground : public Background {
 public:
  using ScalarJetFn = std::function<Jet2(const Vec&)>;
  // lapS, when given, returns Δ'S with first derivatives (used for the closed-form current).
  PPBackground(int n, ScalarJetFn S, ScalarJetFn lapS = nullptr);
  int dim() const override { return n_; }
  std::string name() const override { return "ppwave"; }
  DataJet data(const Vec& x) const override;
  std::optional<PairJet> pair(const Vec& x) const override;
  std::optional<std::pair<double, VecJet>> closed_constraints(const Vec& x) const override;

  Jet2 S(const Vec& x) const;
  Jet2 lapS(const Vec& x) const;
  // Closed-form Christoffel symbols and k of the slice.
  std::vector<Mat> christoffel(const Vec& x) const;
  Mat k(const Vec& x) const;
  // Ambient metric 2 du dx^n + S (dx^n)² + Σ (dx^a)² in coordinates (u, x^1..x^n).
  Mat ambient_metric(const Vec& x) const;

 protected:
  int n_;
  ScalarJetFn S_;
  ScalarJetFn lapS_;
};

// Radial source F(r) = amplitude (1 − r²/R²)³ on r ≤ R, written as a function of s = r².
struct RadialProfile {
  double amplitude = 1.0;
  double radius = 1.0;
  double value_s(double s) const;       // F as a function of s
  double derivative_s(double s) const;  // dF/ds
  Jet2 jet(const Jet2& s) const;
};

// Bump b(t) = (1 − (t/C)²)³ on |t| ≤ C.
struct BumpProfile {
  double halfwidth = 1.0;
  double value(double t) const;
  Jet2 jet(const Jet2& t) const;
  double integral() const { return halfwidth * 32.0 / 35.0; }
};

struct PPWaveSpec {
  int n = 4;
  RadialProfile F;
  BumpProfile bump;
};

void validate(const PPWaveSpec& spec);

// S = 1 + bump(x^n) ψ(x'), Δ'ψ = −F on R^{n−1}, ψ = A |x'|^{3−n} outside supp F.
class PPWaveData : public PPBackground {
 public:
  explicit PPWaveData(const PPWaveSpec& spec);
  // S_ captures this, so instances stay where they were built.
  PPWaveData(const PPWaveData&) = delete;
  PPWaveData& operator=(const PPWaveData&) = delete;
  const PPWaveSpec& spec() const { return spec_; }
  double A() const { return A_; }
  double slab() const { return spec_.bump.halfwidth; }
  // ψ(s) with s = |x'|², and its first two s-derivatives.
  std::array<double, 3> psi_s(double s) const;
  // Radial flux ∫_{|x'|=ρ} −Σ_a S_,a x^a/|x'| dμ beyond supp F: (n−3) ω_{n−2} A ∫bump.
  double radial_flux() const;
  double energy_oracle() const;
  // ∫_{R^{n−1}} F.
  double source_mass() const;

 private:
  double K(double s) const;   // ∫_0^1 t^{m−1} F(s t²) dt
  double Kp(double s) const;  // ∫_0^1 t^{m+1} F'(s t²) dt
  PPWaveSpec spec_;
  double A_ = 0.0;
};

// Grid samples of (g, π), the kernel pair and the closed-form (μ, J, σ).
struct PPGridData {
  InitialData data;
  LapseShift pair;
  ConstraintFields closed;
};
PPGridData pp_initial_data(const PPBackground& pp, const grid::ChartGrid& G);

struct PPCheck {
  double max_sigma = 0.0;        // max |σ| from closed forms
  double max_mu_minus_J = 0.0;   // max |μ − |J|_g|
  double min_S = 0.0;
  double max_lapS = 0.0;         // max Δ'S (must be ≤ 0)
  double lap_identity = 0.0;     // max |Δ'S + bump F|
};
// Pointwise closed-form invariants over the given sample points.
// Local pp-wave data with S = 1 + 0.3(1 − ¼|x'|²)(1 + 0.2 x^n), positive on |x| ≤ 1.
std::shared_ptr<PPBackground> local_pp_background(int n);

PPCheck pp_closed_form_check(const PPWaveData& pp, const std::vector<Vec>& points);

// Finite-difference constraint map of sampled pp data against the closed forms on two nested grids centered at
// `center` (spacings h and h/2). Errors are max-norm relative: max |μ_fd − μ| / max |μ| and likewise for J, taken
// over the interior points of the coarse grid, which the fine grid contains.
struct PPGridCheck {
  int points = 0;
  double rel_mu_coarse = 0.0, rel_mu_fine = 0.0;
  double rel_J_coarse = 0.0, rel_J_fine = 0.0;
  double order_mu = 0.0, order_J = 0.0;  // log2 of the coarse/fine error ratio
  double seconds = 0.0;
};
PPGridCheck pp_grid_constraint_check(const PPBackground& pp, const Vec& center, double h, int half_points,
                                     int accuracy = 4);

// Decay exponent fit log|v| ≈ c − q log r over radii.
struct DecayFit {
  bool exact_zero = false;
  double q = 0.0;
  double ci95 = 0.0;
  double residual = 0.0;
};
DecayFit decay_rate_estimate(const std::function<double(double)>& along_ray, const std::vector<double>& radii);

}  // namespace declab
