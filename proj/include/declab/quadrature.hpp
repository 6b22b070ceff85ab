#pragma once

#include <functional>
#include <vector>

namespace declab {

// Gauss–Legendre rule on [a, b] (Golub–Welsch).
struct QuadRule {
  std::vector<double> x, w;
};
QuadRule gauss_legendre(int nodes, double a = -1.0, double b = 1.0);
// Gauss rule on [−1, 1] for the weight (1 − t²)^alpha, alpha > −½ (Golub–Welsch on the Jacobi recurrence).
QuadRule gauss_gegenbauer(int nodes, double alpha);

// ∫_a^b fn with a fixed Gauss–Legendre rule.
double integrate(const std::function<double(double)>& fn, double a, double b, int nodes = 24);

}  // namespace declab
