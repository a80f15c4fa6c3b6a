#pragma once

#include <Eigen/Dense>

namespace safeadp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Vector2 = Eigen::Vector2d;

// Numerical boundary of the safe set: h(x) <= kHMin counts as a breach.
inline constexpr double kHMin = 1e-9;

}  // namespace safeadp
