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

#ifndef WORMCRAWL_GAIT_HPP_
#define WORMCRAWL_GAIT_HPP_

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "wormcrawl/model.hpp"
#include "wormcrawl/simulation.hpp"

namespace wormcrawl {

class InfeasibleSchedule : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Actuator order used by every per-actuator array in this header.
enum Actuator : std::size_t { kRear = 0, kCentral = 1, kFront = 2 };
inline constexpr std::array<const char*, 3> kActuatorNames = {"rear", "central", "front"};

struct GaitPhase {
  double duration_s = 1.0;
  double rear_psi = 0;
  double central_psi = 0;
  double front_psi = 0;

  std::array<double, 3> pressures() const { return {rear_psi, central_psi, front_psi}; }
};

/**
 * Four-phase actuation timetable: (1) rear anchors, (2) central extends and
 * drives the front block forward, (3) front anchors, (4) rear and central
 * release so the spring pulls the rear block forward.
 */
struct GaitSchedule {
  std::array<GaitPhase, 4> phases;

  /// Reference pressures of the fastest reported gait; the stance time is
  /// split evenly over phases 3, 4 and 1.
  static GaitSchedule reference(double protrusion_s = 1.6, double stance_s = 2.4);

  double stride_period() const;
  double protrusion_time() const { return phases[1].duration_s; }
  double stance_time() const;
  /// Index of the phase active at time t (wrapped to one stride).
  std::size_t phase_at(double t) const;
  void validate() const;
};

struct GaitMetrics {
  double stride_length = 0;  ///< m, leading block, periodic steady state
  double protrusion_time = 0;
  double stance_time = 0;
  double stride_period = 0;
  double avg_speed = 0;  ///< m/s, leading block over all strides
  std::vector<double> stride_displacements;
};

enum class Actuation { Inflating, Deflating };

/// Inflating: |f1| >= |fa| > |f2|, the rear block holds while the front slides.
/// Deflating: |f2| >= |fa| > |f1|.
bool check_anchoring(double fa, double f1_cap, double f2_cap, Actuation direction);

inline constexpr double kAnchorThresholdPsi = 1.2;

struct PlantInputs {
  double fa = 0;
  double mu1 = 0;
  double mu2 = 0;
};

/// Plant inputs implied by the reference pressures at time t: central
/// pressure becomes the axial force, an extremal actuator at or above the
/// threshold switches its block to high friction.
PlantInputs schedule_to_plant_inputs(const GaitSchedule& sched, const RobotParams& params,
                                     double t, double anchor_threshold_psi = kAnchorThresholdPsi);

// --- pressure control -------------------------------------------------------

struct PidGains {
  double kp = 0;  ///< duty / psi
  double ki = 0;  ///< duty / (psi s)
  double kd = 0;  ///< duty s / psi
  double output_min = 0;
  double output_max = 1;
};

/// Discrete PID producing a valve duty cycle. The derivative acts on the
/// measurement, and the integrator is held while the output is clamped.
class PidController {
 public:
  PidController(PidGains gains, double T);

  double update(double reference, double measured);
  void reset();

  bool saturated() const { return saturated_; }
  const PidGains& gains() const { return gains_; }

 private:
  PidGains gains_;
  double T_;
  double integral_ = 0;
  double prev_measured_ = 0;
  bool has_prev_ = false;
  bool saturated_ = false;
};

/**
 * Valve, actuator and sensor seen from the controller. The open fraction of
 * each PWM period fills from the supply; the rest vents to the exhaust, which
 * is atmosphere (0 psi gauge) unless a vacuum line is fitted:
 *
 *   dp/dt = duty (p_supply - p) / tau_inflate + (1 - duty) (p_exhaust - p) / tau_deflate
 *
 * with |dp/dt| capped at rate_limit.
 */
struct ValvePlant {
  double tau_inflate = 0.1;  ///< s
  double tau_deflate = 0.1;  ///< s
  double p_supply = 10.0;    ///< psi
  double p_exhaust = 0.0;    ///< psi
  double rate_limit = 30.0;  ///< psi/s

  void validate() const;
  double rate(double p, double duty) const;
  double advance(double p, double duty, double T) const;
};

struct ReferenceStep {
  double start_s = 0;
  double psi = 0;
};

/// Piecewise-constant reference; each step holds until the next one starts.
struct PressureProfile {
  std::vector<ReferenceStep> steps;
  double duration_s = 0;

  double at(double t) const;
  void validate() const;
};

/// Per-actuator references for n_strides repetitions of the schedule, with
/// consecutive equal levels merged into one step.
std::array<PressureProfile, 3> schedule_profiles(const GaitSchedule& sched, int n_strides);

inline constexpr double kDefaultSettleWindow = 0.5;

struct PidTrackResult {
  double T = 0;
  std::vector<double> reference;
  std::vector<double> pressure;
  std::vector<double> duty;
  double rmse = 0;  ///< psi, outside the settling windows
};

PidTrackResult pid_track(const PressureProfile& reference, const PidGains& gains,
                         const ValvePlant& plant, double T,
                         double settle_window = kDefaultSettleWindow,
                         double initial_psi = 0.0);

/// RMSE over samples that do not fall within `settle_window` of a step start.
double settled_rmse(const PressureProfile& reference, std::span<const double> pressure,
                    double T, double settle_window);

/// Coordinate search over (kp, ki, kd) minimizing the settled RMSE.
PidGains tune_pid(const PressureProfile& reference, const ValvePlant& plant, double T,
                  PidGains start, double settle_window = kDefaultSettleWindow,
                  int max_rounds = 60);

/// Shipped gains for the default plant: `wormcrawl pid --tune` on the reference
/// schedule, seeded at (kp, ki, kd) = (3, 30, 0) and rounded.
std::array<PidGains, 3> default_pid_gains();

// --- coupled gait -------------------------------------------------------------

struct GaitOptions {
  ValvePlant plant;
  std::array<PidGains, 3> gains = default_pid_gains();
  double anchor_threshold_psi = kAnchorThresholdPsi;
  /// A block grips once its measured pressure is within this band below the
  /// anchor threshold, so tracking ripple at the threshold does not chatter.
  double contact_band_psi = 0.1;
  FrictionMode mode = FrictionMode::karnopp();
  bool strict = false;
  double settle_window_s = kDefaultSettleWindow;
};

struct PressureSample {
  std::array<double, 3> reference{};
  std::array<double, 3> measured{};
  std::array<double, 3> duty{};
};

struct PressureTrace {
  double T = 0.001;
  std::vector<PressureSample> samples;
};

struct AnchoringCheck {
  double fa = 0;
  double f1_cap = 0;
  double f2_cap = 0;
  bool feasible = false;
};

struct GaitResult {
  SimTrace trace;
  PressureTrace pressures;
  GaitMetrics metrics;
  AnchoringCheck protrusion;  ///< phase 2, inflating
  AnchoringCheck retraction;  ///< phase 4, deflating
  std::vector<std::string> warnings;
  /// Per stride and phase: largest |displacement| of a block whose extremal
  /// actuator is referenced at or above the anchor threshold (m).
  std::vector<std::array<double, 4>> anchored_displacement;
  std::array<double, 3> rmse{};
};

/// Phase-2 and phase-4 anchoring inequalities evaluated on reference pressures.
std::array<AnchoringCheck, 2> check_schedule(const GaitSchedule& sched,
                                             const RobotParams& params,
                                             const GaitOptions& options = {});

/**
 * Runs three pressure loops and the friction plant on one clock. The axial
 * force comes from the measured central pressure, and each block grips when
 * its measured extremal pressure reaches the contact band.
 */
GaitResult simulate_gait(const GaitSchedule& sched, const RobotParams& params, int n_strides,
                         double T, const GaitOptions& options = {});

void write_pressure_csv(std::ostream& out, const PressureTrace& trace);

}  // namespace wormcrawl

#endif  // WORMCRAWL_GAIT_HPP_
