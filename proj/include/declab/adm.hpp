#pragma once

#include "declab/background.hpp"
#include "declab/ppwave.hpp"
#include "declab/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace declab {

// Quadrature on a hypersurface of R^n with Euclidean measure and outward unit normal.
struct SurfaceRule {
  std::vector<Vec> points;
  std::vector<Vec> normals;
  std::vector<double> weights;
  std::size_t size() const { return points.size(); }
  void append(const SurfaceRule& o);
};

// Unit sphere S^{m} ⊂ R^{m+1} by nested polar angles: Gauss–Gegenbauer in t = cos θ (t on the last coordinate),
// midpoint rule in the azimuth. `breaks` are values of the last coordinate where the first polar angle is split
// into panels of Gauss–Legendre in θ so that thin slabs are resolved.
SurfaceRule unit_sphere_rule(int m, int nodes, const std::vector<double>& breaks = {});
SurfaceRule sphere_rule(int n, double radius, int nodes, const std::vector<double>& xn_breaks = {});
// Side S^{n−2}(ρ) × [−H, H] (axis x^n) and the two caps {|x'| ≤ ρ, x^n = ±H}.
SurfaceRule capped_cylinder_rule(int n, double rho, double H, int angle_nodes, int axis_nodes,
                                 const std::vector<double>& xn_breaks = {});

enum class SurfaceFamily { spheres, capped_cylinders };

// Field values the flux integrands need: g_ij, ∂_k g_ij (dg[k]) and π^ij.
struct FluxSample {
  Mat g;
  std::vector<Mat> dg;
  Mat pi;
};
using FluxSource = std::function<FluxSample(const Vec&)>;
FluxSource flux_source(const Background& bg);

struct SurfaceOptions {
  SurfaceFamily family = SurfaceFamily::spheres;
  int angle_nodes = 16;
  int axis_nodes = 16;
  double half_height_factor = 1.0;  // cylinder half height H = factor · ρ
  double half_height = 0.0;         // fixed H when positive
  std::vector<double> xn_breaks;    // slab edges in x^n, used by both families
};

// Unnormalized flux integrals over one surface: ∫Σ(g_ij,i − g_ii,j)ν^j and ∫π_ij ν^j.
struct FluxValue {
  double E = 0.0;
  Vec P;
};
FluxValue adm_flux(const FluxSource& src, const SurfaceRule& rule);

// Extrapolation of value(r) = limit + c r^{−p} from three radii.
struct Extrapolation {
  double limit = 0.0;
  double p = 0.0;
  bool fitted = false;  // false when successive differences are at round-off (limit = last value)
};
Extrapolation extrapolate3(const std::array<double, 3>& r, const std::array<double, 3>& v);

struct ADMResult {
  double E = 0.0;
  Vec P;
  std::vector<double> radii;
  std::vector<double> partial_E;
  std::vector<Vec> partial_P;
  double max_successive_diff = 0.0;
  double fitted_p = 0.0;
  bool extrapolated = false;
};

// E = 1/(2(n−1)ω_{n−1}) lim ∫ Σ(g_ij,i − g_ii,j)ν^j, P_i = 1/((n−1)ω_{n−1}) lim ∫ π_ij ν^j (π lowered with g).
// With three or more radii the last three are extrapolated per component.
ADMResult adm_energy_momentum(const FluxSource& src, int n, const std::vector<double>& radii,
                              const SurfaceOptions& opt = {});

// E and P of pp-wave data over capped cylinders of radius ρ and half height beyond the slab.
ADMResult pp_adm(const PPWaveData& pp, const std::vector<double>& radii, int angle_nodes = 4,
                 int axis_nodes = 16);

// Asymptotic lapse-shift fit: f ≈ c·x + a, X ≈ d x + b with d antisymmetric.
struct AsymptoticFit {
  Vec c;
  Mat d;
  double a = 0.0;
  Vec b;
  double linear_residual = 0.0;  // RMS after the linear model
  double constant_residual = 0.0;
  double condition = 0.0;
  bool ill_conditioned = false;
  double relation_defect = 0.0;  // max_i |b_i E + 2 a P_i|
};
using PairValueFn = std::function<std::pair<double, Vec>(const Vec&)>;
// Points are the sample locations (use symmetric ray sets); the linear model (c, d) is fitted first,
// then the constant model (a, b) on its residual.
AsymptoticFit fit_asymptotic_lapse_shift(const PairValueFn& pair, const std::vector<Vec>& points, double E,
                                         const Vec& P);
// Symmetric ray samples: ±directions at each radius.
std::vector<Vec> ray_samples(int n, int directions, const std::vector<double>& radii, std::uint64_t seed);

}  // namespace declab
