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

#ifndef WORMCRAWL_MODEL_HPP_
#define WORMCRAWL_MODEL_HPP_

#include <Eigen/Dense>

#include <numbers>
#include <stdexcept>
#include <string>

namespace wormcrawl {

class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kPascalPerPsi = 6894.757;
inline constexpr double kStandardGravity = 9.81;

constexpr double psi_to_pa(double psi) { return psi * kPascalPerPsi; }
constexpr double pa_to_psi(double pa) { return pa / kPascalPerPsi; }

/// Cross-section of a 35 mm diameter pneumatic actuator, in m^2.
inline constexpr double kDefaultActuatorArea = std::numbers::pi * 0.0175 * 0.0175;

/**
 * Physical parameters of the two-block crawler.
 *
 * Block 1 is the rear (trailing) block, block 2 the front (leading) block.
 * A positive axial force pushes block 1 toward -x and block 2 toward +x.
 * Defaults are the feedforward-simulation values: 0.2 kg blocks, a 200 N/m
 * actuator spring without damping, and friction switching between 0.1 and 1.
 */
struct RobotParams {
  double m1 = 0.2;
  double m2 = 0.2;
  double k = 200.0;
  double c = 0.0;
  double g = kStandardGravity;
  double mu_lo_1 = 0.1;
  double mu_hi_1 = 1.0;
  double mu_lo_2 = 0.1;
  double mu_hi_2 = 1.0;
  double s_a = kDefaultActuatorArea;

  /// Throws InvalidParameter whose message starts with the offending field.
  void validate() const;

  double mass_ratio() const { return m1 / m2; }
};

enum StateIndex : Eigen::Index { kX1 = 0, kV1 = 1, kX2 = 2, kV2 = 3 };

template <typename Scalar>
using State = Eigen::Matrix<Scalar, 4, 1>;

/// [x1, v1, x2, v2]
using StateVec = State<double>;

/// Continuous realization {A, B, C, D}. B and D carry one column per input.
template <typename Scalar>
struct StateSpace {
  using SquareMatrix = Eigen::Matrix<Scalar, 4, 4>;
  using InputMatrix = Eigen::Matrix<Scalar, 4, Eigen::Dynamic>;

  SquareMatrix A;
  InputMatrix B;
  SquareMatrix C;
  InputMatrix D;

  Eigen::Index inputs() const { return B.cols(); }
};

using ContinuousLTI = StateSpace<double>;

namespace detail {

template <typename Scalar>
Eigen::Matrix<Scalar, 4, 4> drift_matrix(const RobotParams& p) {
  const Scalar k1 = Scalar(p.k) / Scalar(p.m1);
  const Scalar c1 = Scalar(p.c) / Scalar(p.m1);
  const Scalar k2 = Scalar(p.k) / Scalar(p.m2);
  const Scalar c2 = Scalar(p.c) / Scalar(p.m2);
  Eigen::Matrix<Scalar, 4, 4> A;
  // clang-format off
  A << 0,   1,   0,   0,
      -k1, -c1,  k1,  c1,
       0,   0,   0,   1,
       k2,  c2, -k2, -c2;
  // clang-format on
  return A;
}

template <typename Scalar>
StateSpace<Scalar> with_inputs(const RobotParams& p,
                               Eigen::Matrix<Scalar, 4, Eigen::Dynamic> B) {
  StateSpace<Scalar> sys;
  sys.A = drift_matrix<Scalar>(p);
  sys.C.setIdentity();
  sys.D.setZero(4, B.cols());
  sys.B = std::move(B);
  return sys;
}

}  // namespace detail

/// Axial force only (frictionless model): u0 = fa.
template <typename Scalar = double>
StateSpace<Scalar> build_siso(const RobotParams& p) {
  p.validate();
  Eigen::Matrix<Scalar, 4, Eigen::Dynamic> B(4, 1);
  B << 0, -Scalar(1) / Scalar(p.m1), 0, Scalar(1) / Scalar(p.m2);
  return detail::with_inputs<Scalar>(p, std::move(B));
}

/// Axial and both friction forces as free inputs: u1 = [fa, f1, f2].
template <typename Scalar = double>
StateSpace<Scalar> build_mimo(const RobotParams& p) {
  p.validate();
  const Scalar inv1 = Scalar(1) / Scalar(p.m1);
  const Scalar inv2 = Scalar(1) / Scalar(p.m2);
  Eigen::Matrix<Scalar, 4, Eigen::Dynamic> B(4, 3);
  // clang-format off
  B <<  0,     0,     0,
       -inv1, -inv1,  0,
        0,     0,     0,
        inv2,  0,    -inv2;
  // clang-format on
  return detail::with_inputs<Scalar>(p, std::move(B));
}

/// Force produced by gauge pressure p_a (Pa) acting on area s_a (m^2).
double axial_force(double p_a, double s_a);

/// Kinetic friction sign(v) * mu * m * g, with sign(0) = 0.
///
/// The value has the sign of v; the plant's negative input entries turn it
/// into a force opposing the motion.
double friction_force(double v, double mu, double m, double g);

template <typename Derived>
typename Derived::Scalar center_of_mass(const Eigen::MatrixBase<Derived>& x,
                                        const RobotParams& p) {
  using Scalar = typename Derived::Scalar;
  return (Scalar(p.m1) * x(kX1) + Scalar(p.m2) * x(kX2)) / Scalar(p.m1 + p.m2);
}

/// Kinetic plus spring energy.
double mechanical_energy(const StateVec& x, const RobotParams& p);

}  // namespace wormcrawl

#endif  // WORMCRAWL_MODEL_HPP_
