#ifndef PNPBO_DIRECTIONS_HPP
#define PNPBO_DIRECTIONS_HPP

#include <span>

#include "pnpbo/problem.hpp"
#include "pnpbo/types.hpp"

namespace pnpbo {

// Minibatch update directions of the three channels at an iterate:
//
//   direction_x = mean_{i in I} grad1_F_i - mean_{j in J} (d^2/dxdy G_j) z
//   direction_y = mean_{j in J} grad2_G_j
//   direction_z = mean_{j in J} (d^2/dy^2 G_j) z - mean_{i in I} grad2_F_i
//
// Full-batch index sets give the exact directions. Empty index sets are
// rejected with std::invalid_argument.
Vector direction_x(const BilevelProblem& problem, const Iterate& iterate,
                   std::span<const int> f_indices, std::span<const int> g_indices);
Vector direction_y(const BilevelProblem& problem, const Iterate& iterate,
                   std::span<const int> g_indices);
Vector direction_z(const BilevelProblem& problem, const Iterate& iterate,
                   std::span<const int> f_indices, std::span<const int> g_indices);

// Radial projection onto the ball of radius `radius`: z when ||z|| <= radius,
// otherwise z rescaled to norm radius. The rescale is re-applied if rounding
// leaves the norm a few ulp above radius, so the postcondition ||result|| <=
// radius holds exactly in floating point and clip is idempotent bitwise.
// radius <= 0 is rejected; z = 0 returns 0 without dividing.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> clip(
    const Eigen::MatrixBase<Derived>& z, typename Derived::Scalar radius) {
  using S = typename Derived::Scalar;
  if (!(radius > S(0))) {
    throw std::invalid_argument("clip: radius must be positive");
  }
  Eigen::Matrix<S, Eigen::Dynamic, 1> out = z;
  S norm = out.norm();
  while (norm > radius) {
    out *= radius / norm;
    norm = out.norm();
  }
  return out;
}

}  // namespace pnpbo

#endif
