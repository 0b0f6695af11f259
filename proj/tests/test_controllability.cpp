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

#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "wormcrawl/controllability.hpp"

namespace wormcrawl {
namespace {

TEST(ControllabilityMatrix, ShapeAndBlocks) {
  const ContinuousLTI sys = build_mimo(RobotParams{});
  const Eigen::MatrixXd C = controllability_matrix(sys.A, sys.B);
  ASSERT_EQ(C.rows(), 4);
  ASSERT_EQ(C.cols(), 12);
  EXPECT_TRUE(C.middleCols(0, 3).isApprox(sys.B));
  EXPECT_TRUE(C.middleCols(6, 3).isApprox(sys.A * sys.A * sys.B));
}

TEST(ControllabilityMatrix, RejectsBadShapes) {
  EXPECT_THROW(controllability_matrix(Eigen::MatrixXd::Zero(3, 4), Eigen::MatrixXd::Zero(3, 1)),
               DimensionMismatch);
  EXPECT_THROW(controllability_matrix(Eigen::Matrix4d::Zero(), Eigen::MatrixXd::Zero(3, 1)),
               DimensionMismatch);
}

TEST(Analyze, DefaultsSisoIsRankTwoAndLocksTheCenterOfMass) {
  const RobotParams p;
  const ControllabilityReport r = analyze(build_siso(p), p);
  EXPECT_EQ(r.rank, 2);
  EXPECT_TRUE(r.cm_locked);
  EXPECT_FALSE(r.fully_controllable);
  EXPECT_EQ(r.basis.cols(), 2);
  EXPECT_TRUE((r.basis.transpose() * r.basis).isIdentity(1e-12));
  EXPECT_LT(projector_distance(r.basis, internal_motion_basis(p)), 1e-12);
}

TEST(Analyze, DefaultsMimoSpansTheStateSpace) {
  const RobotParams p;
  const ControllabilityReport r = analyze(build_mimo(p), p);
  EXPECT_EQ(r.rank, 4);
  EXPECT_TRUE(r.fully_controllable);
  EXPECT_FALSE(r.cm_locked);
}

TEST(Analyze, UndampedSpringlessSisoStillRankTwo) {
  RobotParams p;
  p.k = 0;
  p.c = 0;
  EXPECT_EQ(analyze(build_siso(p), p).rank, 2);
  EXPECT_EQ(analyze(build_mimo(p), p).rank, 4);
}

TEST(Analyze, RandomDrawsAcrossTolerances) {
  std::mt19937_64 rng(20260101);
  for (int trial = 0; trial < 300; ++trial) {
    const RobotParams p = testing::random_params(rng);
    for (double tol : {1e-12, 1e-9, 1e-6}) {
      const auto siso = analyze(build_siso(p), p, tol);
      const auto mimo = analyze(build_mimo(p), p, tol);
      ASSERT_EQ(siso.rank, 2) << "m1=" << p.m1 << " m2=" << p.m2 << " k=" << p.k << " tol=" << tol;
      ASSERT_EQ(mimo.rank, 4) << "m1=" << p.m1 << " m2=" << p.m2 << " k=" << p.k << " tol=" << tol;
      ASSERT_TRUE(siso.cm_locked);
    }
  }
}

TEST(Analyze, SubspaceMatchesInternalMotionOnRandomDraws) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const RobotParams p = testing::random_params(rng);
    const auto r = analyze(build_siso(p), p);
    ASSERT_LT(projector_distance(r.basis, internal_motion_basis(p)), 1e-8) << trial;
  }
}

TEST(Analyze, BalancedMatrixAgreesWithRawRankWhenWellConditioned) {
  const RobotParams p{1.0, 1.0, 1.0, 0.5};
  const ContinuousLTI mimo = build_mimo(p);
  const auto balanced = balanced_controllability_matrix(mimo.A, mimo.B);
  EXPECT_EQ(numerical_rank(balanced.matrix), numerical_rank(controllability_matrix(mimo.A, mimo.B)));
  const ContinuousLTI siso = build_siso(p);
  const auto b2 = balanced_controllability_matrix(siso.A, siso.B);
  // Raw column space is diag(scale) times the balanced one.
  const Eigen::MatrixXd mapped = b2.scale.asDiagonal() * column_space_basis(b2.matrix);
  EXPECT_LT(projector_distance(mapped, controllability_matrix(siso.A, siso.B)), 1e-12);
}

TEST(Analyze, InternalMotionBasisKeepsTheCenterOfMass) {
  RobotParams p;
  p.m1 = 0.3;
  p.m2 = 0.7;
  const auto chi = internal_motion_basis(p);
  for (int j = 0; j < 2; ++j) {
    const StateVec v = chi.col(j);
    EXPECT_NEAR(p.m1 * v(kX1) + p.m2 * v(kX2), 0.0, 1e-15);
    EXPECT_NEAR(p.m1 * v(kV1) + p.m2 * v(kV2), 0.0, 1e-15);
  }
}

}  // namespace
}  // namespace wormcrawl
