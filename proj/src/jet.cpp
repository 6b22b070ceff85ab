#include "declab/jet.hpp"

#include <cmath>

namespace declab {

double sphere_volume(int k) {
  const double m = 0.5 * (k + 1);
  return 2.0 * std::pow(M_PI, m) / std::tgamma(m);
}

Jet2 operator+(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.v = a.v + b.v;
  r.d = a.d + b.d;
  r.dd = a.dd + b.dd;
  return r;
}

Jet2 operator-(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.v = a.v - b.v;
  r.d = a.d - b.d;
  r.dd = a.dd - b.dd;
  return r;
}

Jet2 operator*(const Jet2& a, const Jet2& b) {
  Jet2 r;
  r.v = a.v * b.v;
  r.d = a.d * b.v + b.d * a.v;
  r.dd = a.dd * b.v + b.dd * a.v + a.d * b.d.transpose() + b.d * a.d.transpose();
  return r;
}

Jet2 operator/(const Jet2& a, const Jet2& b) { return a * pow(b, -1.0); }

Jet2 operator-(const Jet2& a) {
  Jet2 r;
  r.v = -a.v;
  r.d = -a.d;
  r.dd = -a.dd;
  return r;
}

Jet2 operator+(const Jet2& a, double c) {
  Jet2 r = a;
  r.v += c;
  return r;
}
Jet2 operator+(double c, const Jet2& a) { return a + c; }
Jet2 operator-(const Jet2& a, double c) { return a + (-c); }
Jet2 operator-(double c, const Jet2& a) { return (-a) + c; }

Jet2 operator*(const Jet2& a, double c) {
  Jet2 r;
  r.v = a.v * c;
  r.d = a.d * c;
  r.dd = a.dd * c;
  return r;
}
Jet2 operator*(double c, const Jet2& a) { return a * c; }
Jet2 operator/(const Jet2& a, double c) { return a * (1.0 / c); }

Jet2 compose(const Jet2& a, double f0, double f1, double f2) {
  Jet2 r;
  r.v = f0;
  r.d = a.d * f1;
  r.dd = a.dd * f1 + (a.d * a.d.transpose()) * f2;
  return r;
}

Jet2 pow(const Jet2& a, double p) {
  const double x = a.v;
  return compose(a, std::pow(x, p), p * std::pow(x, p - 1.0), p * (p - 1.0) * std::pow(x, p - 2.0));
}

Jet2 sqrt(const Jet2& a) { return pow(a, 0.5); }

Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.v);
  return compose(a, e, e, e);
}

Jet2 log(const Jet2& a) { return compose(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v)); }

Jet2 sin(const Jet2& a) { return compose(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }

Jet2 cos(const Jet2& a) { return compose(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }

std::vector<Jet2> coordinate_jets(const Vec& x) {
  const int n = static_cast<int>(x.size());
  std::vector<Jet2> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(Jet2::coordinate(n, i, x(i)));
  return out;
}

SymJet SymJet::zero(int n, bool second) {
  SymJet s;
  s.v = Mat::Zero(n, n);
  s.d.assign(n, Mat::Zero(n, n));
  if (second) s.dd.assign(n, std::vector<Mat>(n, Mat::Zero(n, n)));
  return s;
}

SymJet SymJet::from_components(int n, const std::function<Jet2(int, int)>& comp) {
  SymJet s = zero(n, true);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const Jet2 c = comp(i, j);
      s.v(i, j) = s.v(j, i) = c.v;
      for (int k = 0; k < n; ++k) {
        s.d[k](i, j) = s.d[k](j, i) = c.d(k);
        for (int l = 0; l < n; ++l) s.dd[k][l](i, j) = s.dd[k][l](j, i) = c.dd(k, l);
      }
    }
  }
  return s;
}

SymJet SymJet::constant(const Mat& m, bool second) {
  SymJet s = zero(static_cast<int>(m.rows()), second);
  s.v = m;
  return s;
}

Jet2 SymJet::component(int i, int j) const {
  const int n = dim();
  Jet2 c(n, v(i, j));
  for (int k = 0; k < n; ++k) {
    c.d(k) = d[k](i, j);
    if (has_second())
      for (int l = 0; l < n; ++l) c.dd(k, l) = dd[k][l](i, j);
  }
  return c;
}

SymJet operator+(const SymJet& a, const SymJet& b) {
  SymJet r = a;
  r.v += b.v;
  for (size_t k = 0; k < r.d.size(); ++k) r.d[k] += b.d[k];
  if (r.has_second() && b.has_second())
    for (size_t k = 0; k < r.dd.size(); ++k)
      for (size_t l = 0; l < r.dd[k].size(); ++l) r.dd[k][l] += b.dd[k][l];
  else
    r.dd.clear();
  return r;
}

SymJet operator*(double c, const SymJet& a) {
  SymJet r = a;
  r.v *= c;
  for (auto& m : r.d) m *= c;
  for (auto& row : r.dd)
    for (auto& m : row) m *= c;
  return r;
}

VecJet VecJet::zero(int n, bool second) {
  VecJet x;
  x.v = Vec::Zero(n);
  x.d = Mat::Zero(n, n);
  if (second) x.dd.assign(n, Mat::Zero(n, n));
  return x;
}

VecJet VecJet::from_components(int n, const std::function<Jet2(int)>& comp) {
  VecJet x = zero(n, true);
  for (int i = 0; i < n; ++i) {
    const Jet2 c = comp(i);
    x.v(i) = c.v;
    x.d.row(i) = c.d.transpose();
    x.dd[i] = c.dd;
  }
  return x;
}

Jet2 VecJet::component(int i) const {
  const int n = dim();
  Jet2 c(n, v(i));
  c.d = d.row(i).transpose();
  if (has_second()) c.dd = dd[i];
  return c;
}

VecJet operator+(const VecJet& a, const VecJet& b) {
  VecJet r = a;
  r.v += b.v;
  r.d += b.d;
  if (r.has_second() && b.has_second())
    for (size_t i = 0; i < r.dd.size(); ++i) r.dd[i] += b.dd[i];
  else
    r.dd.clear();
  return r;
}

VecJet operator*(double c, const VecJet& a) {
  VecJet r = a;
  r.v *= c;
  r.d *= c;
  for (auto& m : r.dd) m *= c;
  return r;
}

}  // namespace declab
