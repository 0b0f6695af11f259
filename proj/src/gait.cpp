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

#include "wormcrawl/gait.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace wormcrawl {

namespace {

double friction_for(double psi, double threshold, double lo, double hi) {
  return psi >= threshold ? hi : lo;
}

// Phase edges are sums of decimal durations; a nanosecond of slack keeps a
// sample that lands on an edge in the phase that starts there.
constexpr double kEdgeSlack = 1e-9;

double total_duration(const GaitSchedule& sched) {
  double sum = 0;
  for (const auto& p : sched.phases) sum += p.duration_s;
  return sum;
}

}  // namespace

GaitSchedule GaitSchedule::reference(double protrusion_s, double stance_s) {
  // Snapped to whole microseconds so the phase edges fall on sample instants.
  const double third = std::round(stance_s / 3.0 * 1e6) / 1e6;
  GaitSchedule s;
  s.phases = {{
      {third, 1.2, 0.0, 0.0},
      {protrusion_s, 1.2, 3.0, 0.0},
      {third, 1.2, 3.0, 1.2},
      {third, 0.0, 0.0, 1.2},
  }};
  return s;
}

double GaitSchedule::stride_period() const { return total_duration(*this); }

// Period minus protrusion rather than a three-term sum, so 0.8 s thirds give 2.4 s exactly.
double GaitSchedule::stance_time() const { return stride_period() - protrusion_time(); }

std::size_t GaitSchedule::phase_at(double t) const {
  const double period = stride_period();
  double local = std::fmod(t, period);
  if (local < 0) local += period;
  if (local > period - kEdgeSlack) local = 0;
  double end = 0;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    end += phases[i].duration_s;
    if (local < end - kEdgeSlack) return i;
  }
  return phases.size() - 1;
}

void GaitSchedule::validate() const {
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const auto& p = phases[i];
    const std::string where = "phases[" + std::to_string(i) + "].";
    if (!(p.duration_s > 0) || !std::isfinite(p.duration_s)) {
      throw InvalidParameter(where + "duration_s: must be positive");
    }
    if (!(p.rear_psi >= 0)) throw InvalidParameter(where + "rear_psi: must be >= 0");
    if (!(p.central_psi >= 0)) throw InvalidParameter(where + "central_psi: must be >= 0");
    if (!(p.front_psi >= 0)) throw InvalidParameter(where + "front_psi: must be >= 0");
  }
}

bool check_anchoring(double fa, double f1_cap, double f2_cap, Actuation direction) {
  const double drive = std::abs(fa);
  if (direction == Actuation::Inflating) return f1_cap >= drive && drive > f2_cap;
  return f2_cap >= drive && drive > f1_cap;
}

PlantInputs schedule_to_plant_inputs(const GaitSchedule& sched, const RobotParams& params,
                                     double t, double anchor_threshold_psi) {
  if (t < 0) throw InvalidParameter("t: must be >= 0");
  const GaitPhase& phase = sched.phases[sched.phase_at(t)];
  PlantInputs in;
  in.fa = axial_force(psi_to_pa(phase.central_psi), params.s_a);
  in.mu1 = friction_for(phase.rear_psi, anchor_threshold_psi, params.mu_lo_1, params.mu_hi_1);
  in.mu2 = friction_for(phase.front_psi, anchor_threshold_psi, params.mu_lo_2, params.mu_hi_2);
  return in;
}

// --- pressure control -------------------------------------------------------

PidController::PidController(PidGains gains, double T) : gains_(gains), T_(T) {
  if (!(T > 0)) throw InvalidParameter("T: sample period must be positive");
  if (!(gains.output_min < gains.output_max)) {
    throw InvalidParameter("output_min: must be below output_max");
  }
}

double PidController::update(double reference, double measured) {
  const double error = reference - measured;
  const double rate = has_prev_ ? (measured - prev_measured_) / T_ : 0.0;
  prev_measured_ = measured;
  has_prev_ = true;

  const double proportional = gains_.kp * error;
  const double derivative = -gains_.kd * rate;
  const double integral_next = integral_ + gains_.ki * error * T_;
  const double candidate = proportional + integral_next + derivative;
  if (candidate >= gains_.output_min && candidate <= gains_.output_max) {
    integral_ = integral_next;
    saturated_ = false;
    return candidate;
  }
  saturated_ = true;
  return std::clamp(proportional + integral_ + derivative, gains_.output_min, gains_.output_max);
}

void PidController::reset() {
  integral_ = 0;
  prev_measured_ = 0;
  has_prev_ = false;
  saturated_ = false;
}

void ValvePlant::validate() const {
  if (!(tau_inflate > 0)) throw InvalidParameter("tau_inflate: must be positive");
  if (!(tau_deflate > 0)) throw InvalidParameter("tau_deflate: must be positive");
  if (!(p_supply > 0)) throw InvalidParameter("p_supply: must be positive");
  if (!(p_exhaust <= 0)) throw InvalidParameter("p_exhaust: must be <= 0");
  if (!(rate_limit > 0)) throw InvalidParameter("rate_limit: must be positive");
}

double ValvePlant::rate(double p, double duty) const {
  const double raw =
      duty * (p_supply - p) / tau_inflate + (1.0 - duty) * (p_exhaust - p) / tau_deflate;
  return std::clamp(raw, -rate_limit, rate_limit);
}

double ValvePlant::advance(double p, double duty, double T) const {
  return p + T * rate(p, duty);
}

double PressureProfile::at(double t) const {
  double value = steps.empty() ? 0.0 : steps.front().psi;
  for (const auto& s : steps) {
    if (s.start_s > t + kEdgeSlack) break;
    value = s.psi;
  }
  return value;
}

void PressureProfile::validate() const {
  if (steps.empty()) throw InvalidParameter("reference: needs at least one step");
  if (!(duration_s > 0)) throw InvalidParameter("reference: duration must be positive");
  for (std::size_t i = 1; i < steps.size(); ++i) {
    if (!(steps[i].start_s > steps[i - 1].start_s)) {
      throw InvalidParameter("reference: step start times must increase");
    }
  }
}

std::array<PressureProfile, 3> schedule_profiles(const GaitSchedule& sched, int n_strides) {
  if (n_strides < 1) throw InvalidParameter("n_strides: must be >= 1");
  std::array<PressureProfile, 3> out;
  double t = 0;
  for (int s = 0; s < n_strides; ++s) {
    for (const auto& phase : sched.phases) {
      const auto levels = phase.pressures();
      for (std::size_t j = 0; j < 3; ++j) {
        auto& steps = out[j].steps;
        if (steps.empty() || steps.back().psi != levels[j]) steps.push_back({t, levels[j]});
      }
      t += phase.duration_s;
    }
  }
  for (auto& p : out) p.duration_s = t;
  return out;
}

double settled_rmse(const PressureProfile& reference, std::span<const double> pressure,
                    double T, double settle_window) {
  double sum = 0;
  std::size_t count = 0;
  std::size_t step = 0;
  for (std::size_t n = 0; n < pressure.size(); ++n) {
    const double t = static_cast<double>(n) * T;
    while (step + 1 < reference.steps.size() &&
           reference.steps[step + 1].start_s <= t + kEdgeSlack) {
      ++step;
    }
    if (t < reference.steps[step].start_s + settle_window - kEdgeSlack) continue;
    const double e = reference.steps[step].psi - pressure[n];
    sum += e * e;
    ++count;
  }
  return count == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(count));
}

PidTrackResult pid_track(const PressureProfile& reference, const PidGains& gains,
                         const ValvePlant& plant, double T, double settle_window,
                         double initial_psi) {
  reference.validate();
  plant.validate();
  const std::int64_t steps = step_count(reference.duration_s, T);
  PidController pid(gains, T);

  PidTrackResult out;
  out.T = T;
  out.reference.reserve(static_cast<std::size_t>(steps) + 1);
  out.pressure.reserve(static_cast<std::size_t>(steps) + 1);
  out.duty.reserve(static_cast<std::size_t>(steps) + 1);
  double p = initial_psi;
  for (std::int64_t n = 0; n <= steps; ++n) {
    const double r = reference.at(static_cast<double>(n) * T);
    const double duty = pid.update(r, p);
    out.reference.push_back(r);
    out.pressure.push_back(p);
    out.duty.push_back(duty);
    p = plant.advance(p, duty, T);
  }
  out.rmse = settled_rmse(reference, out.pressure, T, settle_window);
  return out;
}

PidGains tune_pid(const PressureProfile& reference, const ValvePlant& plant, double T,
                  PidGains start, double settle_window, int max_rounds) {
  auto cost = [&](const PidGains& g) {
    return pid_track(reference, g, plant, T, settle_window).rmse;
  };
  PidGains best = start;
  double best_cost = cost(best);
  double factor = 2.0;
  for (int round = 0; round < max_rounds && factor > 1.01; ++round) {
    bool improved = false;
    for (double PidGains::*field : {&PidGains::kp, &PidGains::ki, &PidGains::kd}) {
      for (double scale : {factor, 1.0 / factor}) {
        PidGains trial = best;
        // Zero gains are seeded so the search can switch a term on.
        trial.*field = best.*field == 0 ? 1e-3 * scale : best.*field * scale;
        const double c = cost(trial);
        if (c < best_cost) {
          best = trial;
          best_cost = c;
          improved = true;
        }
      }
    }
    if (!improved) factor = std::sqrt(factor);
  }
  return best;
}

std::array<PidGains, 3> default_pid_gains() {
  return {{
      {3.0, 30.0, 0.003, 0.0, 1.0},
      {3.0, 30.0, 0.003, 0.0, 1.0},
      {3.0, 30.0, 0.003, 0.0, 1.0},
  }};
}

// --- coupled gait -------------------------------------------------------------

std::array<AnchoringCheck, 2> check_schedule(const GaitSchedule& sched,
                                             const RobotParams& params,
                                             const GaitOptions& options) {
  sched.validate();
  params.validate();
  const double threshold = options.anchor_threshold_psi;
  const double static_scale =
      options.mode.variant == FrictionVariant::Karnopp ? options.mode.mu_static_scale : 1.0;
  auto cap = [&](double psi, double lo, double hi, double m, bool holding) {
    const double mu = friction_for(psi, threshold, lo, hi);
    return (holding ? static_scale : 1.0) * mu * m * params.g;
  };

  std::array<AnchoringCheck, 2> out;
  const GaitPhase& extend = sched.phases[1];
  out[0].fa = axial_force(psi_to_pa(extend.central_psi), params.s_a);
  out[0].f1_cap = cap(extend.rear_psi, params.mu_lo_1, params.mu_hi_1, params.m1, true);
  out[0].f2_cap = cap(extend.front_psi, params.mu_lo_2, params.mu_hi_2, params.m2, false);
  out[0].feasible = check_anchoring(out[0].fa, out[0].f1_cap, out[0].f2_cap, Actuation::Inflating);

  // Phase 4 releases the force the central actuator held during phase 3.
  const GaitPhase& hold = sched.phases[2];
  const GaitPhase& release = sched.phases[3];
  out[1].fa = axial_force(psi_to_pa(std::max(hold.central_psi, release.central_psi)), params.s_a);
  out[1].f1_cap = cap(release.rear_psi, params.mu_lo_1, params.mu_hi_1, params.m1, false);
  out[1].f2_cap = cap(release.front_psi, params.mu_lo_2, params.mu_hi_2, params.m2, true);
  out[1].feasible = check_anchoring(out[1].fa, out[1].f1_cap, out[1].f2_cap, Actuation::Deflating);
  return out;
}

GaitResult simulate_gait(const GaitSchedule& sched, const RobotParams& params, int n_strides,
                         double T, const GaitOptions& options) {
  if (n_strides < 1) throw InvalidParameter("n_strides: must be >= 1");
  options.plant.validate();
  if (options.mode.variant != FrictionVariant::Karnopp) {
    throw InvalidParameter("mode: the gait needs Karnopp friction for static anchoring");
  }

  GaitResult result;
  const auto checks = check_schedule(sched, params, options);
  result.protrusion = checks[0];
  result.retraction = checks[1];
  if (!checks[0].feasible) {
    result.warnings.push_back("phase 2 violates |f1| >= |fa| > |f2| (fa = " +
                              format_double(checks[0].fa) + " N)");
  }
  if (!checks[1].feasible) {
    result.warnings.push_back("phase 4 violates |f2| >= |fa| > |f1| (fa = " +
                              format_double(checks[1].fa) + " N)");
  }
  if (options.strict && !result.warnings.empty()) {
    throw InfeasibleSchedule("infeasible schedule: " + result.warnings.front());
  }

  const double period = sched.stride_period();
  const std::int64_t steps = step_count(period * n_strides, T);
  const FrictionPlant mech(params, T, options.mode);
  std::array<PidController, 3> pids = {PidController(options.gains[kRear], T),
                                       PidController(options.gains[kCentral], T),
                                       PidController(options.gains[kFront], T)};
  const double grip = options.anchor_threshold_psi - options.contact_band_psi;

  result.trace.T = T;
  result.pressures.T = T;
  result.trace.states.reserve(static_cast<std::size_t>(steps) + 1);
  result.trace.inputs.reserve(static_cast<std::size_t>(steps) + 1);
  result.pressures.samples.reserve(static_cast<std::size_t>(steps) + 1);

  StateVec x = StateVec::Zero();
  std::array<double, 3> p{};
  for (std::int64_t n = 0; n <= steps; ++n) {
    const double t = static_cast<double>(n) * T;
    const auto refs = sched.phases[sched.phase_at(t)].pressures();
    PressureSample ps;
    ps.reference = refs;
    ps.measured = p;
    for (std::size_t j = 0; j < 3; ++j) ps.duty[j] = pids[j].update(refs[j], p[j]);

    InputSample u;
    u.fa = params.s_a * psi_to_pa(p[kCentral]);
    u.mu1 = p[kRear] >= grip ? params.mu_hi_1 : params.mu_lo_1;
    u.mu2 = p[kFront] >= grip ? params.mu_hi_2 : params.mu_lo_2;
    const FrictionPlant::Result r = mech.advance(x, u.fa, u.mu1, u.mu2);
    u.f1 = r.f1;
    u.f2 = r.f2;
#ifdef WORMCRAWL_CHECK_INVARIANTS
    check_friction_dissipation(x, u, params);
#endif
    result.trace.states.push_back(x);
    result.trace.inputs.push_back(u);
    result.pressures.samples.push_back(ps);
    if (n == steps) break;
    x = r.next;
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kInstabilityBound) {
      throw InstabilityError("simulate_gait: state left the 1e6 bound");
    }
    for (std::size_t j = 0; j < 3; ++j) p[j] = options.plant.advance(p[j], ps.duty[j], T);
  }

  // Kinematics per stride and phase.
  auto index_of = [&](double t) { return static_cast<std::size_t>(std::llround(t / T)); };
  const auto& states = result.trace.states;
  double t0 = 0;
  for (int s = 0; s < n_strides; ++s) {
    std::array<double, 4> anchored{};
    double phase_start = t0;
    for (std::size_t k = 0; k < 4; ++k) {
      const GaitPhase& phase = sched.phases[k];
      const std::size_t a = index_of(phase_start);
      const std::size_t b = index_of(phase_start + phase.duration_s);
      double worst = 0;
      for (std::size_t n = a; n <= b; ++n) {
        if (phase.rear_psi >= options.anchor_threshold_psi) {
          worst = std::max(worst, std::abs(states[n](kX1) - states[a](kX1)));
        }
        if (phase.front_psi >= options.anchor_threshold_psi) {
          worst = std::max(worst, std::abs(states[n](kX2) - states[a](kX2)));
        }
      }
      anchored[k] = worst;
      phase_start += phase.duration_s;
    }
    result.anchored_displacement.push_back(anchored);
    const std::size_t a = index_of(t0);
    const std::size_t b = index_of(t0 + period);
    result.metrics.stride_displacements.push_back(states[b](kX2) - states[a](kX2));
    t0 += period;
  }

  GaitMetrics& m = result.metrics;
  m.protrusion_time = sched.protrusion_time();
  m.stance_time = sched.stance_time();
  m.stride_period = period;
  const auto& strides = m.stride_displacements;
  if (strides.size() > 1) {
    double sum = 0;
    for (std::size_t s = 1; s < strides.size(); ++s) sum += strides[s];
    m.stride_length = sum / static_cast<double>(strides.size() - 1);
  } else {
    m.stride_length = strides.front();
  }
  m.avg_speed = (states.back()(kX2) - states.front()(kX2)) / result.trace.duration();

  const auto profiles = schedule_profiles(sched, n_strides);
  for (std::size_t j = 0; j < 3; ++j) {
    std::vector<double> measured;
    measured.reserve(result.pressures.samples.size());
    for (const auto& s : result.pressures.samples) measured.push_back(s.measured[j]);
    result.rmse[j] = settled_rmse(profiles[j], measured, T, options.settle_window_s);
  }
  return result;
}

void write_pressure_csv(std::ostream& out, const PressureTrace& trace) {
  out << "t,p_ref_rear,p_m_rear,p_ref_central,p_m_central,p_ref_front,p_m_front,"
         "duty_rear,duty_central,duty_front\n";
  for (std::size_t n = 0; n < trace.samples.size(); ++n) {
    const auto& s = trace.samples[n];
    out << format_double(static_cast<double>(n) * trace.T);
    for (std::size_t j = 0; j < 3; ++j) {
      out << ',' << format_double(s.reference[j]) << ',' << format_double(s.measured[j]);
    }
    for (std::size_t j = 0; j < 3; ++j) out << ',' << format_double(s.duty[j]);
    out << '\n';
  }
}

}  // namespace wormcrawl
