// Copyright 2026 The wormcrawl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef WORMCRAWL_CONTROLLABILITY_HPP_
#define WORMCRAWL_CONTROLLABILITY_HPP_

#include <Eigen/Dense>

#include "wormcrawl/model.hpp"
#include "wormcrawl/numerics.hpp"

namespace wormcrawl {

/// [B, AB, A^2 B, ..., A^(n-1) B]
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> controllability_matrix(
    const Eigen::MatrixBase<DerivedA>& A, const Eigen::MatrixBase<DerivedB>& B) {
  if (A.rows() != A.cols()) throw DimensionMismatch("controllability_matrix: A must be square");
  if (B.rows() != A.rows()) {
    throw DimensionMismatch("controllability_matrix: B must have as many rows as A");
  }
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> ctrb(n, n * m);
  Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> block = B;
  for (Eigen::Index j = 0; j < n; ++j) {
    ctrb.middleCols(j * m, m) = block;
    block = A * block;
  }
  return ctrb;
}

/**
 * Controllability matrix of the balanced, norm-scaled realization
 * (D^-1 A D / |.|, D^-1 B / |.|) with D from balancing_scale(A).
 *
 * Its column space is D^-1 times the column space of the raw matrix and its
 * rank is the same, but the singular values no longer spread over the ratio
 * |A|^3 : 1. With stiff springs and light blocks that spread is around 1e12,
 * which hides the friction channels from a relative rank test.
 */
struct BalancedControllability {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd scale;  ///< d; raw state = diag(d) * balanced state
};

BalancedControllability balanced_controllability_matrix(const Eigen::Matrix4d& A,
                                                        const Eigen::MatrixXd& B);

struct ControllabilityReport {
  int rank = 0;
  /// Orthonormal basis of the controllable subspace, one state per column.
  Eigen::MatrixXd basis;
  bool cm_locked = false;
  bool fully_controllable = false;
};

inline constexpr double kCenterOfMassTolerance = 1e-9;

ControllabilityReport analyze(const ContinuousLTI& sys, const RobotParams& params,
                              double rel_tol = kDefaultRankTolerance);

/// The two directions that move the blocks against each other without
/// shifting the center of mass: [1, 0, -m1/m2, 0] and [0, 1, 0, -m1/m2].
Eigen::Matrix<double, 4, 2> internal_motion_basis(const RobotParams& params);

}  // namespace wormcrawl

#endif  // WORMCRAWL_CONTROLLABILITY_HPP_
