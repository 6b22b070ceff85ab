#include "declab/grid.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <exception>
#include <thread>

namespace declab::grid {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Central first/second derivative weights for offsets -2..2.
constexpr double kD1o4[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
constexpr double kD2o4[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};
constexpr double kD1o2[5] = {0.0, -0.5, 0.0, 0.5, 0.0};
constexpr double kD2o2[5] = {0.0, 1.0, -2.0, 1.0, 0.0};

int ipow(int b, int e) {
  int r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

ChartGrid::ChartGrid(std::vector<double> lo, std::vector<double> hi, std::vector<double> h, int margin)
    : n_(static_cast<int>(lo.size())), margin_(margin), lo_(std::move(lo)), hi_(std::move(hi)), h_(std::move(h)) {
  if (n_ < 1 || hi_.size() != lo_.size() || h_.size() != lo_.size())
    throw Error("ChartGrid: inconsistent axis counts");
  if (margin_ < 1) throw Error("ChartGrid: stencil margin must be at least 1");
  shape_.resize(n_);
  stride_.resize(n_);
  for (int a = 0; a < n_; ++a) {
    if (!(h_[a] > 0.0)) throw Error("ChartGrid: spacing must be positive");
    const double steps = (hi_[a] - lo_[a]) / h_[a];
    const double r = std::round(steps);
    if (std::abs(steps - r) > 1e-9 * std::max(1.0, r)) throw Error("ChartGrid: box not commensurate with spacing");
    shape_[a] = static_cast<int>(r) + 1;
    if (shape_[a] < 2 * margin_ + 3) throw Error("ChartGrid: axis has fewer than 2*margin+3 points");
  }
  size_ = 1;
  for (int a = n_ - 1; a >= 0; --a) {
    stride_[a] = size_;
    size_ *= static_cast<std::size_t>(shape_[a]);
  }
}

ChartGrid ChartGrid::centered(const Vec& c, double h, int half_points, int margin) {
  const int n = static_cast<int>(c.size());
  std::vector<double> lo(n), hi(n), hh(n, h);
  for (int a = 0; a < n; ++a) {
    lo[a] = c(a) - half_points * h;
    hi[a] = c(a) + half_points * h;
  }
  return ChartGrid(lo, hi, hh, margin);
}

std::size_t ChartGrid::flat(const std::vector<int>& idx) const {
  std::size_t p = 0;
  for (int a = 0; a < n_; ++a) p += static_cast<std::size_t>(idx[a]) * stride_[a];
  return p;
}

std::vector<int> ChartGrid::unflat(std::size_t p) const {
  std::vector<int> idx(n_);
  for (int a = 0; a < n_; ++a) {
    idx[a] = static_cast<int>(p / stride_[a]);
    p %= stride_[a];
  }
  return idx;
}

Vec ChartGrid::coords(std::size_t p) const {
  const auto idx = unflat(p);
  Vec x(n_);
  for (int a = 0; a < n_; ++a) x(a) = lo_[a] + idx[a] * h_[a];
  return x;
}

int ChartGrid::boundary_distance(std::size_t p) const {
  const auto idx = unflat(p);
  int d = std::numeric_limits<int>::max();
  for (int a = 0; a < n_; ++a) d = std::min({d, idx[a], shape_[a] - 1 - idx[a]});
  return d;
}

std::vector<std::size_t> ChartGrid::interior_points() const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < size_; ++p)
    if (interior(p)) out.push_back(p);
  return out;
}

bool ChartGrid::operator==(const ChartGrid& o) const {
  return n_ == o.n_ && margin_ == o.margin_ && lo_ == o.lo_ && hi_ == o.hi_ && h_ == o.h_;
}

TensorField::TensorField(const ChartGrid& g, int cov, int contra, bool sym)
    : grid(g), covariant(cov), contravariant(contra), symmetric(sym) {
  if (cov < 0 || contra < 0) throw Error("TensorField: negative rank");
  data.assign(g.size() * static_cast<std::size_t>(ncomp()), 0.0);
}

int TensorField::ncomp() const { return ipow(grid.dim(), rank()); }

double TensorField::symmetry_defect() const {
  if (rank() != 2) return 0.0;
  const int n = grid.dim();
  double worst = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p)
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) worst = std::max(worst, std::abs(at(p, i * n + j) - at(p, j * n + i)));
  return worst;
}

TensorField sample_scalar(const ChartGrid& g, const ScalarFn& fn) {
  TensorField f(g, 0, 0);
  parallel_for(g.size(), [&](std::size_t p) { f.data[p] = fn(g.coords(p)); });
  return f;
}

TensorField sample_vector(const ChartGrid& g, const std::function<Vec(const Vec&)>& fn) {
  TensorField f(g, 0, 1);
  const int n = g.dim();
  parallel_for(g.size(), [&](std::size_t p) {
    const Vec v = fn(g.coords(p));
    for (int i = 0; i < n; ++i) f.at(p, i) = v(i);
  });
  return f;
}

TensorField sample_sym(const ChartGrid& g, int cov, int contra, const std::function<Mat(const Vec&)>& fn) {
  TensorField f(g, cov, contra, true);
  const int n = g.dim();
  parallel_for(g.size(), [&](std::size_t p) {
    const Mat m = fn(g.coords(p));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) f.at(p, i * n + j) = m(i, j);
  });
  return f;
}

TensorField fd_derivative(const TensorField& field, int axis, int deriv_order, int accuracy) {
  const ChartGrid& g = field.grid;
  if (axis < 0 || axis >= g.dim()) throw Error("fd_derivative: axis out of range");
  if (deriv_order != 1 && deriv_order != 2) throw Error("fd_derivative: derivative order must be 1 or 2");
  if (accuracy != 2 && accuracy != 4) throw Error("fd_derivative: accuracy must be 2 or 4");
  TensorField out(g, field.covariant, field.contravariant, field.symmetric);
  const int nc = field.ncomp();
  const double h = g.spacing()[axis];
  const std::size_t s = g.stride(axis);
  const double scale = deriv_order == 1 ? 1.0 / h : 1.0 / (h * h);
  parallel_for(g.size(), [&](std::size_t p) {
    const int i = g.unflat(p)[axis];
    const int dist = std::min(i, g.shape()[axis] - 1 - i);
    const double* w = nullptr;
    if (dist >= 2 && accuracy == 4)
      w = deriv_order == 1 ? kD1o4 : kD2o4;
    else if (dist >= 1)
      w = deriv_order == 1 ? kD1o2 : kD2o2;
    for (int c = 0; c < nc; ++c) {
      if (!w) {
        out.at(p, c) = kNaN;
        continue;
      }
      double acc = 0.0;
      for (int o = -2; o <= 2; ++o) {
        if (w[o + 2] == 0.0) continue;
        const std::size_t q = static_cast<std::size_t>(static_cast<long long>(p) + o * static_cast<long long>(s));
        acc += w[o + 2] * field.at(q, c);
      }
      out.at(p, c) = acc * scale;
    }
  });
  return out;
}

Jet2 component_jet(const TensorField& field, std::size_t p, int comp, int accuracy) {
  const ChartGrid& g = field.grid;
  const int n = g.dim();
  const int dist = g.boundary_distance(p);
  if (dist < 1) throw Error("component_jet: point on the grid boundary");
  const bool o4 = dist >= 2 && accuracy == 4;
  const double* w1 = o4 ? kD1o4 : kD1o2;
  const double* w2 = o4 ? kD2o4 : kD2o2;
  Jet2 j(n, field.at(p, comp));
  auto val = [&](long long off) { return field.at(static_cast<std::size_t>(static_cast<long long>(p) + off), comp); };
  for (int a = 0; a < n; ++a) {
    const long long sa = static_cast<long long>(g.stride(a));
    const double ha = g.spacing()[a];
    double d1 = 0.0, d2 = 0.0;
    for (int o = -2; o <= 2; ++o) {
      if (w1[o + 2] != 0.0) d1 += w1[o + 2] * val(o * sa);
      if (w2[o + 2] != 0.0) d2 += w2[o + 2] * val(o * sa);
    }
    j.d(a) = d1 / ha;
    j.dd(a, a) = d2 / (ha * ha);
    for (int b = 0; b < a; ++b) {
      const long long sb = static_cast<long long>(g.stride(b));
      const double hb = g.spacing()[b];
      double m = 0.0;
      for (int oa = -2; oa <= 2; ++oa) {
        if (w1[oa + 2] == 0.0) continue;
        for (int ob = -2; ob <= 2; ++ob) {
          if (w1[ob + 2] == 0.0) continue;
          m += w1[oa + 2] * w1[ob + 2] * val(oa * sa + ob * sb);
        }
      }
      j.dd(a, b) = j.dd(b, a) = m / (ha * hb);
    }
  }
  return j;
}

SymJet sym_jet(const TensorField& field, std::size_t p, int accuracy) {
  const int n = field.grid.dim();
  if (field.rank() != 2) throw Error("sym_jet: field is not rank 2");
  return SymJet::from_components(n, [&](int i, int j) { return component_jet(field, p, i * n + j, accuracy); });
}

VecJet vec_jet(const TensorField& field, std::size_t p, int accuracy) {
  const int n = field.grid.dim();
  if (field.rank() != 1) throw Error("vec_jet: field is not rank 1");
  return VecJet::from_components(n, [&](int i) { return component_jet(field, p, i, accuracy); });
}

namespace {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return kNaN;
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc()) throw Error("read_field: malformed value '" + s + "'");
  return v;
}

}  // namespace

void write_field(const TensorField& f, const std::string& stem) {
  const ChartGrid& g = f.grid;
  nlohmann::json h;
  h["format"] = "declab-field";
  h["version"] = 1;
  h["dimension"] = g.dim();
  h["lo"] = g.lo();
  h["hi"] = g.hi();
  h["spacing"] = g.spacing();
  h["stencilMargin"] = g.margin();
  h["shape"] = g.shape();
  h["covariantRank"] = f.covariant;
  h["contravariantRank"] = f.contravariant;
  h["symmetric"] = f.symmetric;
  h["components"] = f.ncomp();
  std::ofstream js(stem + ".json");
  if (!js) throw Error("write_field: cannot open " + stem + ".json");
  js << h.dump(2) << "\n";
  for (int c = 0; c < f.ncomp(); ++c) {
    std::ofstream cs(stem + ".c" + std::to_string(c) + ".csv");
    if (!cs) throw Error("write_field: cannot open component file");
    for (std::size_t p = 0; p < g.size(); ++p) cs << format_double(f.at(p, c)) << "\n";
  }
}

TensorField read_field(const std::string& stem) {
  std::ifstream js(stem + ".json");
  if (!js) throw Error("read_field: cannot open " + stem + ".json");
  nlohmann::json h = nlohmann::json::parse(js);
  ChartGrid g(h["lo"].get<std::vector<double>>(), h["hi"].get<std::vector<double>>(),
              h["spacing"].get<std::vector<double>>(), h["stencilMargin"].get<int>());
  TensorField f(g, h["covariantRank"].get<int>(), h["contravariantRank"].get<int>(), h["symmetric"].get<bool>());
  for (int c = 0; c < f.ncomp(); ++c) {
    std::ifstream cs(stem + ".c" + std::to_string(c) + ".csv");
    if (!cs) throw Error("read_field: missing component file");
    std::string line;
    for (std::size_t p = 0; p < g.size(); ++p) {
      if (!std::getline(cs, line)) throw Error("read_field: truncated component file");
      f.at(p, c) = parse_double(line);
    }
  }
  return f;
}

int thread_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("DEC_LAB_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) return std::min(cap, hw);
  }
  return hw;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const int nt = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), std::max<std::size_t>(count, 1));
  if (nt <= 1 || count < 64) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(nt);
  const std::size_t chunk = (count + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    const std::size_t b = t * chunk, e = std::min(count, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, &errors, t, b, e] {
      try {
        for (std::size_t i = b; i < e; ++i) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace declab::grid
