#pragma once

#include "declab/jet.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace declab::grid {

// Axis-aligned box chart with uniform spacing per axis.
class ChartGrid {
 public:
  ChartGrid() = default;
  // Points per axis follow from (hi - lo) / h, which must be integral to 1e-9 relative.
  ChartGrid(std::vector<double> lo, std::vector<double> hi, std::vector<double> h, int margin = 2);
  // Box centered at c with half-width m·h on every axis (2m+1 points per axis).
  static ChartGrid centered(const Vec& c, double h, int half_points, int margin = 2);

  int dim() const { return n_; }
  int margin() const { return margin_; }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }
  const std::vector<double>& spacing() const { return h_; }
  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return size_; }

  std::size_t flat(const std::vector<int>& idx) const;
  std::vector<int> unflat(std::size_t p) const;
  Vec coords(std::size_t p) const;
  // Distance (in points) from the nearest boundary face.
  int boundary_distance(std::size_t p) const;
  bool interior(std::size_t p) const { return boundary_distance(p) >= margin_; }
  std::vector<std::size_t> interior_points() const;
  std::size_t stride(int axis) const { return stride_[axis]; }
  bool operator==(const ChartGrid& o) const;

 private:
  int n_ = 0;
  int margin_ = 2;
  std::vector<double> lo_, hi_, h_;
  std::vector<int> shape_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
};

// Components of a tensor of given variance sampled at every grid point.
// Layout: data[p * ncomp + c], with c the row-major multi-index over (contravariant, covariant) slots.
struct TensorField {
  ChartGrid grid;
  int covariant = 0;
  int contravariant = 0;
  bool symmetric = false;
  std::vector<double> data;

  TensorField() = default;
  TensorField(const ChartGrid& g, int cov, int contra, bool sym = false);
  int rank() const { return covariant + contravariant; }
  int ncomp() const;
  double& at(std::size_t p, int c) { return data[p * ncomp() + c]; }
  double at(std::size_t p, int c) const { return data[p * ncomp() + c]; }
  // Maximum componentwise asymmetry of a rank-2 field over all points.
  double symmetry_defect() const;
};

using ScalarFn = std::function<double(const Vec&)>;

TensorField sample_scalar(const ChartGrid& g, const ScalarFn& fn);
TensorField sample_vector(const ChartGrid& g, const std::function<Vec(const Vec&)>& fn);
TensorField sample_sym(const ChartGrid& g, int cov, int contra, const std::function<Mat(const Vec&)>& fn);

// Central-difference partial derivative along axis (deriv_order 1 or 2).
// Accuracy 4 uses the five-point stencil where it fits and falls back to order 2 at distance 1.
// Values are NaN where no stencil fits (the outermost layer).
TensorField fd_derivative(const TensorField& field, int axis, int deriv_order, int accuracy = 4);

// Partial derivatives of one component at a point: value, gradient, Hessian (mixed via tensor products).
Jet2 component_jet(const TensorField& field, std::size_t p, int comp, int accuracy = 4);
SymJet sym_jet(const TensorField& field, std::size_t p, int accuracy = 4);
VecJet vec_jet(const TensorField& field, std::size_t p, int accuracy = 4);

// Serialization: <stem>.json header plus <stem>.c<k>.csv, one value per grid point per component file.
void write_field(const TensorField& f, const std::string& stem);
TensorField read_field(const std::string& stem);

// Runs fn(i) for i in [0, count) on up to DEC_LAB_THREADS threads.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);
int thread_count();

}  // namespace declab::grid
