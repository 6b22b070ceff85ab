#pragma once

#include "declab/constraints.hpp"
#include "declab/jet.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>

namespace declab {

// Closed-form initial data with exact derivative callbacks (jets).
class Background {
 public:
  virtual ~Background() = default;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  // g with second derivatives, π with first derivatives.
  virtual DataJet data(const Vec& x) const = 0;
  // A distinguished lapse-shift pair when one is known in closed form.
  virtual std::optional<PairJet> pair(const Vec&) const { return std::nullopt; }
  // Closed-form (μ, J) when known, J with first derivatives.
  virtual std::optional<std::pair<double, VecJet>> closed_constraints(const Vec&) const { return std::nullopt; }
};

class FlatBackground : public Background {
 public:
  explicit FlatBackground(int n) : n_(n) {}
  int dim() const override { return n_; }
  std::string name() const override { return "flat"; }
  DataJet data(const Vec& x) const override;
  std::optional<std::pair<double, VecJet>> closed_constraints(const Vec& x) const override;

 private:
  int n_;
};

// Unit round 2-sphere in the polar chart (θ, ϕ), time symmetric.
class SphereBackground : public Background {
 public:
  int dim() const override { return 2; }
  std::string name() const override { return "sphere"; }
  DataJet data(const Vec& x) const override;
};

// Isotropic Schwarzschild slice g = (1 + m/(2|x|^{n-2}))^{4/(n-2)} δ, π = 0.
class SchwarzschildBackground : public Background {
 public:
  SchwarzschildBackground(int n, double m) : n_(n), m_(m) {}
  int dim() const override { return n_; }
  std::string name() const override { return "schwarzschild"; }
  DataJet data(const Vec& x) const override;
  Jet2 conformal_factor(const Vec& x) const;
  double mass() const { return m_; }

 private:
  int n_;
  double m_;
};

// Data from arbitrary callbacks.
class FunctionBackground : public Background {
 public:
  using DataFn = std::function<DataJet(const Vec&)>;
  using PairFn = std::function<PairJet(const Vec&)>;
  FunctionBackground(int n, std::string name, DataFn data, PairFn pair = nullptr)
      : n_(n), name_(std::move(name)), data_(std::move(data)), pair_(std::move(pair)) {}
  int dim() const override { return n_; }
  std::string name() const override { return name_; }
  DataJet data(const Vec& x) const override { return data_(x); }
  std::optional<PairJet> pair(const Vec& x) const override {
    if (!pair_) return std::nullopt;
    return pair_(x);
  }

 private:
  int n_;
  std::string name_;
  DataFn data_;
  PairFn pair_;
};

// Sample closed-form data on a grid.
InitialData sample_data(const Background& bg, const grid::ChartGrid& G);
LapseShift sample_pair(const grid::ChartGrid& G, const std::function<PairJet(const Vec&)>& fn);

// Current with first derivatives by fourth-order central differences of the closed-form constraint map.
VecJet current_jet(const Background& bg, const Vec& x, double h = 1e-3);

// Random smooth functions for property tests, all drawn from std::mt19937_64.
// Sum of `terms` Fourier modes a_k sin(ω_k·x + c_k) with |ω_k| ≤ max_freq and Σ|a_k| = amplitude.
class RandomTrig {
 public:
  RandomTrig() = default;
  RandomTrig(int n, int terms, double amplitude, double max_freq, std::mt19937_64& rng);
  Jet2 operator()(const Vec& x) const;
  int dim() const { return n_; }

 private:
  int n_ = 0;
  std::vector<Vec> omega_;
  std::vector<double> amp_, phase_;
};

// C^∞ bump exp(1 − 1/(1 − |x−c|²/r²)) on the ball, 0 outside; value 1 at the center.
Jet2 smooth_bump(const Vec& x, const Vec& center, double radius);

// Polynomial bump (1 − |x−c|²/r²)^k on the ball, 0 outside; C^{k−1}. Finite-difference tests prefer it to the
// C^∞ bump, whose steep edge keeps coarse stencils out of the asymptotic regime.
Jet2 poly_bump(const Vec& x, const Vec& center, double radius, int k);

// Random symmetric tensor jet with components from independent RandomTrig fields.
struct RandomSym {
  std::vector<RandomTrig> comp;  // upper triangle, row-major
  int n = 0;
  RandomSym() = default;
  RandomSym(int n, int terms, double amplitude, double max_freq, std::mt19937_64& rng);
  SymJet operator()(const Vec& x) const;
};

struct RandomVec {
  std::vector<RandomTrig> comp;
  int n = 0;
  RandomVec() = default;
  RandomVec(int n, int terms, double amplitude, double max_freq, std::mt19937_64& rng);
  VecJet operator()(const Vec& x) const;
};

// Largest error of the grid finite-difference jets (first and second derivatives of g, f, X; first of π) against
// the closed-form jets over the interior points. Used as the stencil truncation scale of grid residuals.
double stencil_truncation(const Background& bg, const InitialData& d, const LapseShift* s,
                          const std::function<PairJet(const Vec&)>& pair, int accuracy = 4);

// Random smooth data: g = δ + RandomSym(g_amp), π = RandomSym(pi_amp), drawn from the seed.
std::shared_ptr<FunctionBackground> random_background(int n, std::uint64_t seed, double g_amp, double pi_amp,
                                                      double max_freq = 1.5);

// Multiply every component by a scalar jet.
SymJet scale(const SymJet& t, const Jet2& s);
VecJet scale(const VecJet& v, const Jet2& s);

}  // namespace declab
