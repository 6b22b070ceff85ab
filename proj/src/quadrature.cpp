#include "declab/quadrature.hpp"

#include "declab/types.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>

namespace declab {

namespace {

QuadRule reference_rule(int nodes) {
  static std::mutex mu;
  static std::map<int, QuadRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(nodes);
  if (it != cache.end()) return it->second;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(nodes, nodes);
  for (int k = 1; k < nodes; ++k) T(k, k - 1) = T(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  QuadRule r;
  for (int k = 0; k < nodes; ++k) {
    r.x.push_back(es.eigenvalues()(k));
    const double v = es.eigenvectors()(0, k);
    r.w.push_back(2.0 * v * v);
  }
  cache.emplace(nodes, r);
  return r;
}

}  // namespace

QuadRule gauss_legendre(int nodes, double a, double b) {
  if (nodes < 1) throw Error("gauss_legendre: need at least one node");
  QuadRule r = reference_rule(nodes);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  for (int k = 0; k < nodes; ++k) {
    r.x[k] = c + h * r.x[k];
    r.w[k] *= h;
  }
  return r;
}

QuadRule gauss_gegenbauer(int nodes, double alpha) {
  if (nodes < 1 || !(alpha > -0.5)) throw Error("gauss_gegenbauer: invalid arguments");
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(nodes, nodes);
  const double s = 2.0 * alpha;
  for (int k = 1; k < nodes; ++k) {
    const double b2 = 4.0 * k * (k + alpha) * (k + alpha) * (k + s) /
                      ((2.0 * k + s) * (2.0 * k + s) * (2.0 * k + s + 1.0) * (2.0 * k + s - 1.0));
    T(k, k - 1) = T(k - 1, k) = std::sqrt(b2);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  const double mu0 = std::exp((s + 1.0) * std::log(2.0) + 2.0 * std::lgamma(alpha + 1.0) - std::lgamma(s + 2.0));
  QuadRule r;
  for (int k = 0; k < nodes; ++k) {
    r.x.push_back(es.eigenvalues()(k));
    const double v = es.eigenvectors()(0, k);
    r.w.push_back(mu0 * v * v);
  }
  return r;
}

double integrate(const std::function<double(double)>& fn, double a, double b, int nodes) {
  const QuadRule r = gauss_legendre(nodes, a, b);
  double s = 0.0;
  for (int k = 0; k < nodes; ++k) s += r.w[k] * fn(r.x[k]);
  return s;
}

}  // namespace declab
