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

#ifndef WORMCRAWL_TESTS_TEST_SUPPORT_HPP_
#define WORMCRAWL_TESTS_TEST_SUPPORT_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

#include "wormcrawl/model.hpp"

namespace wormcrawl::testing {

/// Parameters drawn log-uniformly over m in [0.01, 10] kg and k in [1, 1e4]
/// N/m, uniformly over c in [0, 10] N s/m; the rest stay at their defaults.
inline RobotParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto log_uniform = [&](double lo, double hi) {
    return lo * std::pow(hi / lo, u(rng));
  };
  RobotParams p;
  p.m1 = log_uniform(0.01, 10.0);
  p.m2 = log_uniform(0.01, 10.0);
  p.k = log_uniform(1.0, 1e4);
  p.c = 10.0 * u(rng);
  return p;
}

/// e^(A t) as a fixed 30-term Taylor series in long double, applied on
/// 2^-s sub-intervals so each series argument has norm below 1/8.
inline Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> series_exp(
    const Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>& A, long double t) {
  using M = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const long double norm = (A * t).cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  while (norm / std::pow(2.0L, s) > 0.125L) ++s;
  const M X = A * (t / std::pow(2.0L, s));
  M result = M::Identity(A.rows(), A.cols());
  M term = result;
  for (int j = 1; j <= 30; ++j) {
    term = term * X / static_cast<long double>(j);
    result += term;
  }
  for (int i = 0; i < s; ++i) result = result * result;
  return result;
}

/// ZOH pair without the augmented matrix: the input integral
/// G(h) = sum_j A^j h^(j+1) / (j+1)! B on a short interval h, then the
/// doubling rule G(2h) = G(h) + e^(A h) G(h).
struct SeriesZoh {
  Eigen::Matrix<long double, 4, 4> Ad;
  Eigen::Matrix<long double, 4, Eigen::Dynamic> Bd;
};

inline SeriesZoh series_zoh(const Eigen::Matrix4d& A, const Eigen::MatrixXd& B, double T) {
  using M = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const M Al = A.cast<long double>();
  const M Bl = B.cast<long double>();
  const long double norm = (Al * static_cast<long double>(T)).cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  while (norm / std::pow(2.0L, s) > 0.125L) ++s;
  const long double h = static_cast<long double>(T) / std::pow(2.0L, s);
  M E = M::Identity(4, 4);
  M G = M::Zero(4, B.cols());
  M power = M::Identity(4, 4);
  long double coeff = h;  // h^(j+1) / (j+1)!
  for (int j = 0; j <= 30; ++j) {
    G += coeff * power * Bl;
    power = power * Al;
    coeff *= h / static_cast<long double>(j + 2);
  }
  M term = M::Identity(4, 4);
  for (int j = 1; j <= 30; ++j) {
    term = term * Al * h / static_cast<long double>(j);
    E += term;
  }
  for (int i = 0; i < s; ++i) {
    G = G + E * G;
    E = E * E;
  }
  SeriesZoh out;
  out.Ad = E;
  out.Bd = G;
  return out;
}

}  // namespace wormcrawl::testing

#endif  // WORMCRAWL_TESTS_TEST_SUPPORT_HPP_
