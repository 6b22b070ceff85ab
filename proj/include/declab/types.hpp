#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace declab {

// Largest dimension handled by the pointwise kernels (spatial n ≤ 9, ambient n+1 ≤ 10).
constexpr int kMaxDim = 10;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Volume of the unit k-sphere in R^{k+1}.
double sphere_volume(int k);

inline Vec zero_vec(int n) { return Vec::Zero(n); }
inline Mat zero_mat(int n) { return Mat::Zero(n, n); }

}  // namespace declab
