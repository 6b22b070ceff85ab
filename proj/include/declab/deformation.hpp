#pragma once

#include "declab/adm.hpp"
#include "declab/background.hpp"
#include "declab/constraints.hpp"
#include "declab/grid.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace declab {

// ---- Poisson solve on a chart grid ----

struct PoissonOptions {
  double tol = 1e-10;       // relative residual
  int max_iter = 20000;
  bool harmonic_bc = true;  // Dirichlet data from the monopole + dipole expansion of ρ; zero otherwise
  std::function<double(const Vec&)> dirichlet;  // explicit boundary values, overrides harmonic_bc
  double fit_rmin = 0.0;    // shell used to fit the leading coefficient (0 selects defaults)
  double fit_rmax = 0.0;
};

struct PoissonResult {
  grid::TensorField v;
  double a_fit = 0.0;  // fitted coefficient of |x|^{2−n}
  double a_bc = 0.0;   // monopole coefficient −∫ρ dμ_g / ((n−2)ω_{n−1})
  int iterations = 0;
  double residual = 0.0;
};

// Δ_g v = ρ with Dirichlet data on the outer faces. Trilinear (multilinear) finite elements with the
// coefficient √g g^{ij} frozen per cell and a lumped mass; the discrete operator is SPD and solved by CG.
PoissonResult solve_poisson(const grid::TensorField& g, const grid::TensorField& rho, const PoissonOptions& opt = {});

// ---- conformal family ----

// Exterior solution of Δv = −|x|^{−n−δ} on |x| ≥ r0 with v ~ −½|x|^{2−n}:
// v = −½ r^{2−n} − r^{2−n−δ} / (δ (n−2+δ)). The interior extension of ρ only fixes the flux normalization and
// never enters u_t because the cutoff vanishes on Ω_{r0}.
struct RadialPotential {
  int n = 3;
  double delta = 0.5;
  double value(double r) const;
  std::array<double, 3> derivatives(double r) const;  // v, v', v''
};

// Smooth step: 0 for r ≤ r0, 1 for r ≥ 2 r0.
struct Cutoff {
  double r0 = 1.0;
  std::array<double, 3> derivatives(double r) const;
};

struct FamilyPoint {
  double mu_closed = 0.0;  // μ_t from the conformal transformation law
  Vec J_closed;
  double phi = 0.0;
  Vec upsilon;
  double u = 1.0;
  double scale = 0.0;  // size of the terms entering 2μ_t
};

// (g_t, π_t) = (u_t^{4/(n−2)} g, u_t^{−6/(n−2)} π), u_t = 1 + t χ v.
class ConformalFamily : public Background {
 public:
  ConformalFamily(std::shared_ptr<const Background> base, double r0, double delta, double t);
  int dim() const override { return base_->dim(); }
  std::string name() const override { return "conformal(" + base_->name() + ")"; }
  DataJet data(const Vec& x) const override;
  Jet2 u(const Vec& x) const;
  Jet2 chi_v(const Vec& x) const;
  FamilyPoint closed_form(const Vec& x) const;
  double t() const { return t_; }
  double r0() const { return r0_; }
  double delta() const { return pot_.delta; }
  // Largest |t| keeping u_t > 0: 1 / max|χ v|.
  double positivity_bound() const;
  const Background& base() const { return *base_; }

 private:
  std::shared_ptr<const Background> base_;
  double r0_, t_;
  RadialPotential pot_;
  Cutoff chi_;
};

// Default δ = min(q, 1)/2.
double default_delta(double q);

// Constraint map of a background by fourth-order central differences of its metric and momentum values only,
// with one Richardson step (h, h/2).
DataJet fd_data_jet(const Background& bg, const Vec& x, double h);

struct MuCheck {
  int points = 0;
  double rel_u_fd = 0.0;    // transformation law with finite differences of the closed-form u_t
  double rel_jet = 0.0;     // constraint map of (g_t, π_t) with exact jets
  double rel_map_fd = 0.0;  // constraint map of (g_t, π_t) by finite differences of sampled values
  double rel_J_u_fd = 0.0;
  double rel_J_jet = 0.0;
  double rel_J_map_fd = 0.0;
};
// Closed-form μ_t, J_t against three independent evaluations. The u_t path picks its step among h·2^{−k}. Relative errors are taken against
// max(|μ_t|, size of the terms entering 2μ_t) and max|J_t| respectively.
MuCheck mu_t_check(const ConformalFamily& fam, const std::vector<Vec>& points, double h);

struct ExteriorReport {
  double r1 = 0.0;
  bool criterion_ok = false;  // φ − |Υ|_g > 0 and v < 0 at every sample beyond r1
  double min_margin = 0.0;    // min σ(g_t, π_t) − σ(g, π)
  double min_rel_margin = 0.0;
  int samples = 0;
  int violations = 0;
};
// Sample points with r1 ≤ |x| ≤ r1·span, half of them inside the slab |x^n| ≤ slab when slab > 0.
std::vector<Vec> exterior_samples(int n, double r1, double span, double slab, int count, std::uint64_t seed);
ExteriorReport exterior_sigma_check(const ConformalFamily& fam, double r1, const std::vector<Vec>& samples);
// Smallest candidate radius at which the criterion holds on the samples; throws when none does.
double find_r1(const ConformalFamily& fam, const std::vector<double>& candidates, double span, double slab,
               int count, std::uint64_t seed);

struct FamilyADM {
  double t = 0.0;
  ADMResult adm;
  double u_min = 0.0;
};
FamilyADM family_adm(const ConformalFamily& fam, const std::vector<double>& radii, const SurfaceOptions& opt);

}  // namespace declab
