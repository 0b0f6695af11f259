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

#include "wormcrawl/model.hpp"

#include <cmath>

namespace wormcrawl {

namespace {

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw InvalidParameter(std::string(field) + ": " + what);
}

}  // namespace

void RobotParams::validate() const {
  require(std::isfinite(m1) && m1 > 0, "m1", "mass must be positive");
  require(std::isfinite(m2) && m2 > 0, "m2", "mass must be positive");
  require(std::isfinite(k) && k >= 0, "k", "stiffness must be non-negative");
  require(std::isfinite(c) && c >= 0, "c", "damping must be non-negative");
  require(std::isfinite(g) && g > 0, "g", "gravity must be positive");
  require(std::isfinite(s_a) && s_a > 0, "s_a", "actuator area must be positive");
  require(std::isfinite(mu_lo_1) && mu_lo_1 > 0, "mu_lo_1", "must be positive");
  require(std::isfinite(mu_lo_2) && mu_lo_2 > 0, "mu_lo_2", "must be positive");
  require(std::isfinite(mu_hi_1) && mu_hi_1 > mu_lo_1, "mu_hi_1", "must exceed mu_lo_1");
  require(std::isfinite(mu_hi_2) && mu_hi_2 > mu_lo_2, "mu_hi_2", "must exceed mu_lo_2");
}

double axial_force(double p_a, double s_a) {
  if (!(s_a > 0)) throw InvalidParameter("s_a: actuator area must be positive");
  if (p_a < 0) throw InvalidParameter("p_a: negative gauge pressure is not an axial drive");
  return s_a * p_a;
}

double friction_force(double v, double mu, double m, double g) {
  if (!(mu >= 0) || !(m > 0) || !(g > 0)) {
    throw InvalidParameter("friction_force: mu, m and g must be positive");
  }
  const double sign = (v > 0) - (v < 0);
  return sign * mu * m * g;
}

double mechanical_energy(const StateVec& x, const RobotParams& p) {
  const double stretch = x(kX2) - x(kX1);
  return 0.5 * p.m1 * x(kV1) * x(kV1) + 0.5 * p.m2 * x(kV2) * x(kV2) +
         0.5 * p.k * stretch * stretch;
}

}  // namespace wormcrawl
