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

#include "wormcrawl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

namespace wormcrawl {

namespace {

/// Re-throws a nested validation error with its field qualified by `prefix`.
template <typename Fn>
void qualified(const std::string& prefix, Fn&& fn) {
  try {
    fn();
  } catch (const InvalidParameter& e) {
    throw InvalidParameter(prefix + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  qualified("params.", [&] { params.validate(); });
  qualified("friction_mode.", [&] { mode.validate(); });
  step_count(duration_s, sample_period_s);
  qualified("sweep.", [&] { step_count(sweep.duration_s, sample_period_s); });
  if (!(axial.freq_hz >= 0)) throw InvalidParameter("axial.freq_hz: must be >= 0");
  if (!std::isfinite(axial.amplitude)) throw InvalidParameter("axial.amplitude: must be finite");
  if (!std::isfinite(axial.bias)) throw InvalidParameter("axial.bias: must be finite");
  if (!(friction.freq_hz >= 0)) throw InvalidParameter("friction.freq_hz: must be >= 0");
  if (!(friction.duty > 0 && friction.duty < 1)) {
    throw InvalidParameter("friction.duty: must lie in (0, 1)");
  }
  if (!std::isfinite(phase_rad)) throw InvalidParameter("phase_rad: must be finite");
  if (sweep.axial_freqs_hz.empty()) throw InvalidParameter("sweep.axial_freqs_hz: empty grid");
  if (sweep.friction_freqs_hz.empty()) {
    throw InvalidParameter("sweep.friction_freqs_hz: empty grid");
  }
  if (sweep.mass_trials_kg.empty()) throw InvalidParameter("sweep.mass_trials_kg: empty list");
  for (double m : sweep.mass_trials_kg) {
    if (!(m > 0)) throw InvalidParameter("sweep.mass_trials_kg: masses must be positive");
  }
  if (gait.n_strides < 1) throw InvalidParameter("gait.n_strides: must be >= 1");
  qualified("gait.schedule.", [&] { gait.schedule.validate(); });
  qualified("gait.plant.", [&] { gait.options.plant.validate(); });
  if (!(calibration.amplitude_min > 0 && calibration.amplitude_max > calibration.amplitude_min)) {
    throw InvalidParameter("calibration.amplitude_min: must be positive and below amplitude_max");
  }
  if (!(calibration.coarse_step > 0) || !(calibration.fine_step > 0)) {
    throw InvalidParameter("calibration.coarse_step: steps must be positive");
  }
}

std::vector<double> uniform_phase_grid(int points) {
  if (points < 1) throw InvalidParameter("phase grid: needs at least one point");
  std::vector<double> out(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) out[i] = 2.0 * std::numbers::pi * i / points;
  return out;
}

SignalSet make_signals(const ExperimentConfig& config) {
  const RobotParams& p = config.params;
  SignalSet s;
  s.fa = SignalSpec::sine(config.axial.freq_hz, config.axial.amplitude, config.axial.bias);
  if (config.friction.frictionless) {
    s.mu1 = SignalSpec::constant(0.0);
    s.mu2 = SignalSpec::constant(0.0);
    return s;
  }
  const double phase = config.phase_rad;
  const double mu1_phase = config.convention == PhaseConvention::FrictionPair ? 0.0 : phase;
  s.mu1 = SignalSpec::square(config.friction.freq_hz, p.mu_lo_1, p.mu_hi_1, mu1_phase,
                             config.friction.duty);
  s.mu2 = SignalSpec::square(config.friction.freq_hz, p.mu_lo_2, p.mu_hi_2, phase,
                             config.friction.duty);
  return s;
}

TraceSummary summarize(const SimTrace& trace, const RobotParams& params) {
  TraceSummary s;
  s.displacement = net_displacement(trace);
  s.average_speed = average_speed(trace);
  s.max_abs_center_of_mass = max_abs_center_of_mass(trace, params);
  s.linear_fit_r_squared = fit_rear_position(trace).r_squared;
  s.duration_s = trace.duration();
  return s;
}

TraceRun run_trace(const ExperimentConfig& config) {
  config.validate();
  const SignalSet s = make_signals(config);
  TraceRun run;
  run.trace = simulate(config.params, s.fa, s.mu1, s.mu2, config.duration_s,
                       config.sample_period_s, config.mode);
  run.summary = summarize(run.trace, config.params);
  return run;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

/// Net displacement of block 1 at the end of a sweep run.
double sweep_cell(const ExperimentConfig& base, double axial_hz, double friction_hz,
                  double phase, double mass) {
  ExperimentConfig c = base;
  c.axial.freq_hz = axial_hz;
  c.friction.freq_hz = friction_hz;
  c.phase_rad = phase;
  if (mass > 0) {
    c.params.m1 = mass;
    c.params.m2 = mass;
  }
  const SignalSet s = make_signals(c);
  const SimTrace trace =
      simulate(c.params, s.fa, s.mu1, s.mu2, c.sweep.duration_s, c.sample_period_s, c.mode);
  return net_displacement(trace).x1;
}

}  // namespace

FrequencyGrid run_frequency_grid(const ExperimentConfig& config, int jobs) {
  config.validate();
  FrequencyGrid grid;
  grid.axial_freqs_hz = config.sweep.axial_freqs_hz;
  grid.friction_freqs_hz = config.sweep.friction_freqs_hz;
  const std::size_t rows = grid.friction_freqs_hz.size();
  const std::size_t cols = grid.axial_freqs_hz.size();
  grid.dx1.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  parallel_for(rows * cols, jobs, [&](std::size_t i) {
    const std::size_t r = i / cols;
    const std::size_t c = i % cols;
    grid.dx1(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
        sweep_cell(config, grid.axial_freqs_hz[c], grid.friction_freqs_hz[r], config.phase_rad,
                   0.0);
  });
  return grid;
}

PhaseSweep run_phase_sweep(const ExperimentConfig& config, int jobs) {
  config.validate();
  PhaseSweep sweep;
  sweep.phases_rad =
      config.sweep.phases_rad.empty() ? uniform_phase_grid(64) : config.sweep.phases_rad;
  sweep.masses_kg = config.sweep.mass_trials_kg;
  const std::size_t rows = sweep.phases_rad.size();
  const std::size_t cols = sweep.masses_kg.size();
  sweep.dx1.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  parallel_for(rows * cols, jobs, [&](std::size_t i) {
    const std::size_t r = i / cols;
    const std::size_t c = i % cols;
    sweep.dx1(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
        sweep_cell(config, config.axial.freq_hz, config.friction.freq_hz, sweep.phases_rad[r],
                   sweep.masses_kg[c]);
  });
  return sweep;
}

Calibration calibrate_amplitude(const ExperimentConfig& config, int jobs) {
  config.validate();
  const CalibrationSettings& cal = config.calibration;
  auto speed_at = [&](double amplitude) {
    ExperimentConfig c = config;
    c.axial.amplitude = amplitude;
    c.axial.bias = amplitude;
    const SignalSet s = make_signals(c);
    const SimTrace trace =
        simulate(c.params, s.fa, s.mu1, s.mu2, c.duration_s, c.sample_period_s, c.mode);
    return average_speed(trace);
  };
  // Grid points are integer multiples of `step`, computed as k / (1 / step)
  // when 1 / step is whole, so 0.01 steps give decimals like 13.12 exactly.
  auto scan = [&](double lo, double hi, double step) {
    const double inv = 1.0 / step;
    const bool whole = std::abs(inv - std::round(inv)) < 1e-9 * inv;
    auto grid_point = [&](double k) { return whole ? k / std::round(inv) : k * step; };
    const double k_lo = std::ceil(lo / step - 1e-9);
    const double k_hi = std::floor(hi / step + 1e-9);
    const auto count = static_cast<std::size_t>(std::max(0.0, k_hi - k_lo + 1));
    std::vector<CalibrationPoint> pts(count);
    parallel_for(count, jobs, [&](std::size_t i) {
      const double a = grid_point(k_lo + static_cast<double>(i));
      pts[i] = {a, speed_at(a)};
    });
    return pts;
  };
  auto best_of = [&](const std::vector<CalibrationPoint>& pts) {
    if (pts.empty()) {
      throw InvalidParameter("calibration.coarse_step: no grid point inside the amplitude range");
    }
    return *std::min_element(pts.begin(), pts.end(), [&](const auto& a, const auto& b) {
      return std::abs(std::abs(a.speed) - cal.target_speed) <
             std::abs(std::abs(b.speed) - cal.target_speed);
    });
  };

  Calibration out;
  out.scan = scan(cal.amplitude_min, cal.amplitude_max, cal.coarse_step);
  const CalibrationPoint coarse = best_of(out.scan);
  const double lo = std::max(cal.amplitude_min, coarse.amplitude - cal.coarse_step);
  const double hi = std::min(cal.amplitude_max, coarse.amplitude + cal.coarse_step);
  const std::vector<CalibrationPoint> fine = scan(lo, hi, cal.fine_step);
  const CalibrationPoint best = best_of(fine);
  out.amplitude = best.amplitude;
  out.speed = best.speed;
  out.scan.insert(out.scan.end(), fine.begin(), fine.end());
  return out;
}

void write_grid_csv(std::ostream& out, const FrequencyGrid& grid) {
  out << "friction_hz\\axial_hz";
  for (double f : grid.axial_freqs_hz) out << ',' << format_double(f);
  out << '\n';
  for (Eigen::Index r = 0; r < grid.dx1.rows(); ++r) {
    out << format_double(grid.friction_freqs_hz[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < grid.dx1.cols(); ++c) out << ',' << format_double(grid.dx1(r, c));
    out << '\n';
  }
}

void write_phase_csv(std::ostream& out, const PhaseSweep& sweep) {
  out << "phi_rad";
  for (double m : sweep.masses_kg) out << ",dx1_m" << format_double(m) << "kg";
  out << '\n';
  for (Eigen::Index r = 0; r < sweep.dx1.rows(); ++r) {
    out << format_double(sweep.phases_rad[static_cast<std::size_t>(r)]);
    for (Eigen::Index c = 0; c < sweep.dx1.cols(); ++c) {
      out << ',' << format_double(sweep.dx1(r, c));
    }
    out << '\n';
  }
}

}  // namespace wormcrawl
