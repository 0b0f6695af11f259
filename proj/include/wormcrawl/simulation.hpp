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

#ifndef WORMCRAWL_SIMULATION_HPP_
#define WORMCRAWL_SIMULATION_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wormcrawl/model.hpp"
#include "wormcrawl/numerics.hpp"

namespace wormcrawl {

class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class EmptyTrace : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class SignalKind { Sine, Square, Constant };

/// Periodic input profile. A square wave sits at `high` for a fraction `duty`
/// of each period, then at `low`; bias and amplitude then describe its midline
/// and half-swing. The levels are stored as given so that they are exact.
struct SignalSpec {
  SignalKind kind = SignalKind::Constant;
  double freq = 0.0;  ///< Hz
  double amplitude = 0.0;
  double bias = 0.0;
  double phase = 0.0;  ///< rad
  double duty = 0.5;
  double low = 0.0;   ///< square only
  double high = 0.0;  ///< square only

  static SignalSpec sine(double freq, double amplitude, double bias, double phase = 0.0);
  static SignalSpec square(double freq, double lo, double hi, double phase = 0.0,
                           double duty = 0.5);
  static SignalSpec constant(double value);

  double lo() const;
  double hi() const;
  void validate() const;
};

double sample_signal(const SignalSpec& spec, std::int64_t n, double T);

enum class FrictionVariant { Sign, Karnopp };

struct FrictionMode {
  FrictionVariant variant = FrictionVariant::Sign;
  double eps_v = 1e-4;            ///< m/s, Karnopp only
  double mu_static_scale = 1.0;   ///< static/kinetic ratio, Karnopp only

  static FrictionMode sign() { return {}; }
  static FrictionMode karnopp(double eps_v = 1e-4, double mu_static_scale = 1.0) {
    return {FrictionVariant::Karnopp, eps_v, mu_static_scale};
  }
  void validate() const;
};

/// Inputs applied during one sample: the drive, the commanded friction
/// coefficients and the resulting friction forces fed to the plant.
struct InputSample {
  double fa = 0;
  double mu1 = 0;
  double mu2 = 0;
  double f1 = 0;
  double f2 = 0;
};

struct SimTrace {
  double T = 0.001;
  std::vector<StateVec> states;
  std::vector<InputSample> inputs;

  std::size_t size() const { return states.size(); }
  double time(std::size_t n) const { return static_cast<double>(n) * T; }
  double duration() const;
};

/// x' = Ad x + Bd u
StateVec step(const DiscreteLTI& d, const StateVec& x, const Eigen::VectorXd& u);

/**
 * One ZOH step of the friction-coupled plant.
 *
 * Sign feeds f_i = sign(v_i) mu_i m_i g back as a plant input.
 *
 * Karnopp treats a block with |v| < eps_v as resting: its velocity is zeroed
 * and friction takes whatever value keeps it at rest over the step, up to the
 * static cap mu_static_scale * mu * m * g; above the cap it breaks away
 * against kinetic friction. A sliding block whose kinetic friction would
 * reverse its velocity within the step is instead brought exactly to rest.
 * Friction therefore never does positive work.
 */
class FrictionPlant {
 public:
  FrictionPlant(const RobotParams& params, double T, FrictionMode mode);

  struct Result {
    StateVec next;
    double f1 = 0;
    double f2 = 0;
  };

  /// Advances `x` one sample. In Karnopp mode `x` itself may have resting
  /// velocities snapped to zero, which is the state the inputs act on.
  Result advance(StateVec& x, double fa, double mu1, double mu2) const;

  const DiscreteLTI& discrete() const { return discrete_; }
  const RobotParams& params() const { return params_; }
  const FrictionMode& mode() const { return mode_; }

 private:
  Result karnopp(StateVec& x, double fa, double mu1, double mu2) const;

  RobotParams params_;
  FrictionMode mode_;
  DiscreteLTI discrete_;
};

inline constexpr double kInstabilityBound = 1e6;

/// Acceleration the friction input adds to each block, (-f1/m1, -f2/m2).
Eigen::Vector2d friction_acceleration(const InputSample& u, const RobotParams& params);

/// Throws InvariantViolation when friction adds power to either block.
void check_friction_dissipation(const StateVec& x, const InputSample& u,
                                const RobotParams& params);

/**
 * Feedforward friction-switching run from rest (or `initial`).
 *
 * Produces round(duration / T) + 1 samples; sample n holds the state at n T
 * and the inputs applied over [n T, (n + 1) T).
 */
SimTrace simulate(const RobotParams& params, const SignalSpec& fa_spec,
                  const SignalSpec& mu1_spec, const SignalSpec& mu2_spec, double duration,
                  double T, const FrictionMode& mode,
                  const std::optional<StateVec>& initial = std::nullopt);

/// Number of whole sample periods in `duration`; throws if it is not an integer.
std::int64_t step_count(double duration, double T);

struct Displacement {
  double x1 = 0;
  double x2 = 0;
};

Displacement net_displacement(const SimTrace& trace);
double average_speed(const SimTrace& trace);
double max_abs_center_of_mass(const SimTrace& trace, const RobotParams& params);

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Least-squares line through x1(t) over the whole trace.
LinearFit fit_rear_position(const SimTrace& trace);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

void write_trace_csv(std::ostream& out, const SimTrace& trace);

/// Parses the format written by write_trace_csv. T is taken from the second
/// row's timestamp, so at least two rows are needed unless T is supplied.
SimTrace read_trace_csv(std::istream& in, std::optional<double> T = std::nullopt);

}  // namespace wormcrawl

#endif  // WORMCRAWL_SIMULATION_HPP_
