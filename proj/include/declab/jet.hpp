#pragma once

#include "declab/types.hpp"

#include <functional>

namespace declab {

// Second-order Taylor jet of a scalar function: value, gradient, Hessian.
struct Jet2 {
  double v = 0.0;
  Vec d;
  Mat dd;

  Jet2() = default;
  explicit Jet2(int n, double value = 0.0) : v(value), d(Vec::Zero(n)), dd(Mat::Zero(n, n)) {}

  static Jet2 constant(int n, double c) { return Jet2(n, c); }
  static Jet2 coordinate(int n, int i, double xi) {
    Jet2 j(n, xi);
    j.d(i) = 1.0;
    return j;
  }
  int dim() const { return static_cast<int>(d.size()); }
};

Jet2 operator+(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a, const Jet2& b);
Jet2 operator*(const Jet2& a, const Jet2& b);
Jet2 operator/(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a);
Jet2 operator+(const Jet2& a, double c);
Jet2 operator+(double c, const Jet2& a);
Jet2 operator-(const Jet2& a, double c);
Jet2 operator-(double c, const Jet2& a);
Jet2 operator*(const Jet2& a, double c);
Jet2 operator*(double c, const Jet2& a);
Jet2 operator/(const Jet2& a, double c);

// h = F(a) given F(a.v), F'(a.v), F''(a.v).
Jet2 compose(const Jet2& a, double f0, double f1, double f2);
Jet2 pow(const Jet2& a, double p);
Jet2 sqrt(const Jet2& a);
Jet2 exp(const Jet2& a);
Jet2 log(const Jet2& a);
Jet2 sin(const Jet2& a);
Jet2 cos(const Jet2& a);

// Coordinate jets x^0..x^{n-1} at the point x.
std::vector<Jet2> coordinate_jets(const Vec& x);

// Jet of a symmetric 2-tensor (either variance): value, first and second partials.
// d[k](i,j) = ∂_k T_ij, dd[k][l](i,j) = ∂_k ∂_l T_ij. dd may be empty for first-order jets.
struct SymJet {
  Mat v;
  std::vector<Mat> d;
  std::vector<std::vector<Mat>> dd;

  int dim() const { return static_cast<int>(v.rows()); }
  bool has_second() const { return !dd.empty(); }
  static SymJet zero(int n, bool second = true);
  static SymJet from_components(int n, const std::function<Jet2(int, int)>& comp);
  static SymJet constant(const Mat& m, bool second = true);
  Jet2 component(int i, int j) const;
};

SymJet operator+(const SymJet& a, const SymJet& b);
SymJet operator*(double c, const SymJet& a);

// Jet of a vector field: v(i), d(i,k) = ∂_k X^i, dd[i](k,l) = ∂_k ∂_l X^i.
struct VecJet {
  Vec v;
  Mat d;
  std::vector<Mat> dd;

  int dim() const { return static_cast<int>(v.size()); }
  bool has_second() const { return !dd.empty(); }
  static VecJet zero(int n, bool second = true);
  static VecJet from_components(int n, const std::function<Jet2(int)>& comp);
  Jet2 component(int i) const;
};

VecJet operator+(const VecJet& a, const VecJet& b);
VecJet operator*(double c, const VecJet& a);

// Local data at a point: metric g_ij and momentum π^ij jets.
struct DataJet {
  SymJet g;
  SymJet pi;
  int dim() const { return g.dim(); }
};

// Lapse-shift pair jet.
struct PairJet {
  Jet2 f;
  VecJet X;
};

}  // namespace declab
