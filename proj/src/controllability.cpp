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

#include "wormcrawl/controllability.hpp"

#include <cmath>

namespace wormcrawl {

BalancedControllability balanced_controllability_matrix(const Eigen::Matrix4d& A,
                                                        const Eigen::MatrixXd& B) {
  if (B.rows() != A.rows()) {
    throw DimensionMismatch("balanced_controllability_matrix: B must have 4 rows");
  }
  BalancedControllability out;
  out.scale = balancing_scale(A);
  const Eigen::VectorXd inv = out.scale.cwiseInverse();
  Eigen::MatrixXd Ab = inv.asDiagonal() * A * out.scale.asDiagonal();
  Eigen::MatrixXd Bb = inv.asDiagonal() * B;
  const double a_norm = Ab.norm();
  const double b_norm = Bb.norm();
  if (a_norm > 0) Ab /= a_norm;
  if (b_norm > 0) Bb /= b_norm;
  out.matrix = controllability_matrix(Ab, Bb);
  return out;
}

ControllabilityReport analyze(const ContinuousLTI& sys, const RobotParams& params,
                              double rel_tol) {
  params.validate();
  const BalancedControllability ctrb = balanced_controllability_matrix(sys.A, sys.B);

  ControllabilityReport report;
  const Eigen::MatrixXd balanced_basis = column_space_basis(ctrb.matrix, rel_tol);
  report.rank = static_cast<int>(balanced_basis.cols());
  if (report.rank > 0) {
    const Eigen::MatrixXd raw = ctrb.scale.asDiagonal() * balanced_basis;
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    report.basis = qr.householderQ() * Eigen::MatrixXd::Identity(raw.rows(), report.rank);
  } else {
    report.basis.resize(sys.A.rows(), 0);
  }
  report.fully_controllable = report.rank == sys.A.rows();
  report.cm_locked = true;
  for (Eigen::Index j = 0; j < report.basis.cols(); ++j) {
    const StateVec v = report.basis.col(j);
    const StateVec velocities(v(kV1), 0.0, v(kV2), 0.0);
    if (std::abs(center_of_mass(v, params)) > kCenterOfMassTolerance ||
        std::abs(center_of_mass(velocities, params)) > kCenterOfMassTolerance) {
      report.cm_locked = false;
      break;
    }
  }
  return report;
}

Eigen::Matrix<double, 4, 2> internal_motion_basis(const RobotParams& params) {
  const double r = params.mass_ratio();
  Eigen::Matrix<double, 4, 2> chi;
  // clang-format off
  chi << 1,  0,
         0,  1,
        -r,  0,
         0, -r;
  // clang-format on
  return chi;
}

}  // namespace wormcrawl
