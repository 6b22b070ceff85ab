#pragma once

#include "declab/background.hpp"
#include "declab/constraints.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <vector>

namespace declab {

// Killing development of (U, g, f, X): 𝐠 = −4f² du² + g_ij (dx^i + X^i du)(dx^j + X^j du) in coordinates
// (u, x^1, …, x^n), index 0 = u. All components are u-independent, so only spatial data is stored.
class KillingDevelopment {
 public:
  using PairFn = std::function<PairJet(const Vec&)>;
  // The pair must carry second derivatives; f must not vanish where the development is evaluated.
  KillingDevelopment(std::shared_ptr<const Background> base, PairFn pair);
  // Uses the background's own pair.
  explicit KillingDevelopment(std::shared_ptr<const Background> base);
  int dim() const { return base_->dim(); }
  const Background& base() const { return *base_; }
  PairJet pair(const Vec& x) const;
  Mat metric(const Vec& x) const;
  // Components with first and second spatial derivatives (u-derivatives vanish).
  struct MetricJet {
    Mat v;
    std::vector<Mat> d;                // d[a], a = 0..n, d[0] = 0
    std::vector<std::vector<Mat>> dd;  // dd[a][b]
  };
  MetricJet metric_jet(const Vec& x) const;
  // Same, derivatives by fourth-order central differences with one Richardson step (h, h/2).
  MetricJet metric_fd(const Vec& x, double h) const;
  // Future unit normal of the u-slices in coordinates: n = (∂_u − X^i ∂_i) / (2f).
  Vec normal(const Vec& x) const;

 private:
  std::shared_ptr<const Background> base_;
  PairFn pair_;
};

// Einstein tensor in coordinates from a metric jet (any signature).
Mat einstein_coordinates(const KillingDevelopment::MetricJet& m);

// Einstein tensor in the frame (n, ∂_1, …, ∂_n).
enum class DerivativeMode { jets, finite_difference };
Mat spacetime_einstein(const KillingDevelopment& dev, const Vec& x, DerivativeMode mode = DerivativeMode::jets,
                       double h = 1e-2);

// Tangential Einstein components of a Killing development in terms of (g, π, f, X), valid when
// ½(L_X g)_ij = (2/(n−1)(tr π) g_ij − 2π_ij) f holds; that residual is reported.
struct TangentialEinstein {
  Mat G;
  double killing_residual = 0.0;
};
TangentialEinstein einstein_tangential_closed_form(const DataJet& d, const PairJet& fx);

// Data (g, π) induced on the u-slices of a development: k = −(L_X g)/(4f), π = k − (tr k) g (raised).
// π carries first derivatives; needs second derivatives of g and X.
DataJet induced_data(const SymJet& g, const PairJet& fx);

// Random smooth (g, f, X) near (δ, 1, 0) with π induced by the development, so the Killing relation holds exactly.
std::shared_ptr<FunctionBackground> random_killing_background(int n, std::uint64_t seed, double amplitude = 0.1);

// Null perfect fluid decomposition at one point from the frame Einstein tensor and the slice data.
struct FluidPoint {
  double p = 0.0;
  Vec v;                 // frame components (v^0 along n, then v^i)
  double residual = 0.0; // max |G − p𝐠 − v⊗v| in the frame
  bool null_branch = false;
};
FluidPoint null_fluid_decompose(const Mat& G, const Mat& g, double mu, const Vec& J, double floor = 1e-10);

struct FluidSummary {
  double p_min = 0.0, p_max = 0.0, p_std = 0.0;
  double max_residual = 0.0;
  int points = 0;
};
FluidSummary summarize(const std::vector<FluidPoint>& pts);

// Frame Einstein tensor expressed in an orthonormal frame (n, e_1, …, e_n) built from g by Cholesky.
Mat orthonormal_frame(const Mat& G, const Mat& g);

// Min of G(u, w) over random pairs: u = (cosh s, sinh s ω) timelike, w = (1, ω') null, s ∈ [0, 3],
// ω, ω' uniform on the sphere. G is given in an orthonormal frame.
struct DecSample {
  double min_value = 0.0;
  int count = 0;
};
DecSample dec_sample_check(const Mat& G_on, int count, std::mt19937_64& rng);

// Synthetic null-fluid Einstein tensor p η + v⊗v in an orthonormal frame, v = (1, ω) future null.
Mat synthetic_null_fluid(int n, double p, const Vec& omega, double scale = 1.0);

// All development checks at the given points. The DEC budget is split evenly over the points; the reference
// metric (optional) is compared with the development metric.
struct SpacetimeCheck {
  int points = 0;
  double expansion = 0.0;      // max |𝐠 − reference|, 0 without a reference
  double closed_normal = 0.0;  // max |G(n,n) − μ| and |G(n,∂_i) − J_i|
  double closed_tangential = 0.0;
  double fd_vs_closed = 0.0;   // finite-difference Einstein tensor against the closed forms
  double killing_residual = 0.0;
  FluidSummary fluid;
  double dec_min = 0.0;
  int dec_samples = 0;
};
SpacetimeCheck spacetime_check(const KillingDevelopment& dev, const std::vector<Vec>& points, int dec_samples,
                               std::uint64_t seed, double fd_h = 0.05,
                               const std::function<Mat(const Vec&)>& reference = nullptr);

}  // namespace declab
