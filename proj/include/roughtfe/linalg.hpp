#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>

namespace roughtfe {

// Upper bound on state, noise and parameter dimensions. Bounded sizes keep
// the small vectors and matrices on the stack inside the O(n^2) solvers.
inline constexpr int kMaxDim = 8;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

// Dynamic-size types for the few places that outgrow kMaxDim
// (covariance of MC samples, least-squares design matrices).
using DynVector = Eigen::VectorXd;
using DynMatrix = Eigen::MatrixXd;

inline Vector make_vector(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index k = 0;
  for (double x : values) v(k++) = x;
  return v;
}

}  // namespace roughtfe
