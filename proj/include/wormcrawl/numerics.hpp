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

#ifndef WORMCRAWL_NUMERICS_HPP_
#define WORMCRAWL_NUMERICS_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <type_traits>

#include "wormcrawl/model.hpp"

namespace wormcrawl {

class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

template <typename Scalar>
struct DiscreteSystem {
  Eigen::Matrix<Scalar, 4, 4> Ad;
  Eigen::Matrix<Scalar, 4, Eigen::Dynamic> Bd;
  Scalar T;
};

using DiscreteLTI = DiscreteSystem<double>;

inline constexpr double kDefaultRankTolerance = 1e-9;

template <typename Derived>
using PlainMatrix = typename Derived::PlainObject;

/**
 * e^(M t) by scaling and squaring around a truncated Taylor series.
 *
 * M t is scaled by 2^-s until its 1-norm is at most 1/2, the series is summed
 * until the next term no longer changes the sum, and the result is squared s
 * times. Throws OverflowError when the input is not finite or the norm would
 * need more squarings than the scalar's exponent range allows.
 */
template <typename Derived>
PlainMatrix<Derived> matrix_exponential(const Eigen::MatrixBase<Derived>& M,
                                        typename Derived::Scalar t) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  using std::frexp;
  using std::isfinite;
  using std::ldexp;
  if (M.rows() != M.cols()) throw DimensionMismatch("matrix_exponential: M must be square");

  PlainMatrix<Derived> X = M * t;
  const Scalar norm = X.cwiseAbs().colwise().sum().maxCoeff();
  if (!isfinite(norm)) throw OverflowError("matrix_exponential: non-finite input");
  // e^700 is the edge of double range; beyond it the squarings overflow.
  if (norm > Scalar(700)) throw OverflowError("matrix_exponential: |Mt| too large");

  int squarings = 0;
  if (norm > Scalar(0.5)) {
    int exponent = 0;
    frexp(norm / Scalar(0.5), &exponent);
    squarings = exponent;
    X = X * ldexp(Scalar(1), -squarings);
  }

  const Eigen::Index n = M.rows();
  PlainMatrix<Derived> result = PlainMatrix<Derived>::Identity(n, n);
  PlainMatrix<Derived> term = PlainMatrix<Derived>::Identity(n, n);
  for (int j = 1; j < 64; ++j) {
    term = (term * X) / Scalar(j);
    const Scalar term_norm = term.cwiseAbs().maxCoeff();
    result += term;
    if (term_norm <= std::numeric_limits<Scalar>::epsilon() * result.cwiseAbs().maxCoeff()) {
      break;
    }
  }
  for (int s = 0; s < squarings; ++s) result = result * result;
  if (!result.allFinite()) throw OverflowError("matrix_exponential: result overflowed");
  return result;
}

/**
 * Zero-order-hold discretization.
 *
 * Both Ad and Bd come from one exponential of the augmented matrix
 * [[A, B], [0, 0]] * T, whose upper blocks are e^(AT) and int_0^T e^(As) ds B.
 * The drift matrix here is always singular, so no inverse of A is used.
 */
template <typename Scalar>
DiscreteSystem<Scalar> zoh_discretize(const StateSpace<Scalar>& sys, Scalar T) {
  if (!(T > Scalar(0))) throw InvalidParameter("T: sample period must be positive");
  const Eigen::Index n = sys.A.rows();
  const Eigen::Index m = sys.B.cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> aug =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = sys.A;
  aug.topRightCorner(n, m) = sys.B;
  const auto E = matrix_exponential(aug, T);
  DiscreteSystem<Scalar> d;
  d.Ad = E.topLeftCorner(n, n);
  d.Bd = E.topRightCorner(n, m);
  d.T = T;
  return d;
}

template <typename Derived>
int numerical_rank(const Eigen::MatrixBase<Derived>& M,
                   typename Derived::RealScalar rel_tol = kDefaultRankTolerance) {
  if (M.size() == 0) return 0;
  const Eigen::JacobiSVD<PlainMatrix<Derived>> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0) return 0;
  const auto cutoff = rel_tol * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > cutoff;
  return rank;
}

/**
 * Diagonal similarity scaling that balances row and column norms of a square
 * matrix (radix-2 Parlett-Reinsch sweep, no permutations).
 *
 * Returns d such that diag(d)^-1 * M * diag(d) has comparable off-diagonal
 * row and column 1-norms. Entries of d are powers of two, so applying the
 * scaling is exact.
 */
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> balancing_scale(
    const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  if (M.rows() != M.cols()) throw DimensionMismatch("balancing_scale: M must be square");
  const Eigen::Index n = M.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> B = M;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Ones(n);
  constexpr Scalar radix = 2;
  bool converged = false;
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    converged = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      Scalar col = 0;
      Scalar row = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        col += abs(B(j, i));
        row += abs(B(i, j));
      }
      if (col == 0 || row == 0) continue;
      Scalar f = 1;
      const Scalar s = col + row;
      Scalar g = row / radix;
      while (col < g) {
        f *= radix;
        col *= radix * radix;
      }
      g = row * radix;
      while (col >= g) {
        f /= radix;
        col /= radix * radix;
      }
      if ((col + row) / f < Scalar(0.95) * s) {
        converged = false;
        d(i) *= f;
        B.row(i) /= f;
        B.col(i) *= f;
      }
    }
  }
  return d;
}

/// Orthonormal basis of the numerical column space, one vector per column.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> column_space_basis(
    const Eigen::MatrixBase<Derived>& M,
    typename Derived::RealScalar rel_tol = kDefaultRankTolerance) {
  using Basis = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const int rank = numerical_rank(M, rel_tol);
  if (rank == 0) return Basis(M.rows(), 0);
  const Eigen::JacobiSVD<Basis> svd(M.eval(), Eigen::ComputeThinU);
  return svd.matrixU().leftCols(rank);
}

/// Orthogonal projector onto span(columns of basis); basis need not be orthonormal.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> projector(
    const Eigen::MatrixBase<Derived>& basis) {
  const auto Q = column_space_basis(basis);
  return Q * Q.transpose();
}

/// Spectral-norm distance between the projectors onto two column spaces.
template <typename DerivedA, typename DerivedB>
typename DerivedA::RealScalar projector_distance(const Eigen::MatrixBase<DerivedA>& a,
                                                 const Eigen::MatrixBase<DerivedB>& b) {
  if (a.rows() != b.rows()) throw DimensionMismatch("projector_distance: row counts differ");
  const auto diff = (projector(a) - projector(b)).eval();
  if (diff.size() == 0) return 0;
  return Eigen::JacobiSVD<std::decay_t<decltype(diff)>>(diff).singularValues()(0);
}

}  // namespace wormcrawl

#endif  // WORMCRAWL_NUMERICS_HPP_
