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

#ifndef WORMCRAWL_EXPERIMENTS_HPP_
#define WORMCRAWL_EXPERIMENTS_HPP_

#include <Eigen/Dense>

#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "wormcrawl/gait.hpp"
#include "wormcrawl/model.hpp"
#include "wormcrawl/simulation.hpp"

namespace wormcrawl {

/// Which pair of signals the phase difference separates.
enum class PhaseConvention {
  FrictionPair,     ///< mu1 in phase with fa, mu2 shifted by phi
  AxialVsFriction,  ///< both mu signals shifted by phi relative to fa
};

/// Amplitude (= bias) of the axial drive that reproduces the 1 Hz,
/// phi = 0.4 pi feedforward speed with the default parameters; output of
/// calibrate_amplitude, checked in.
inline constexpr double kCalibratedAxialAmplitude = 13.12;
inline constexpr double kReferenceSpeed = 0.1052;  ///< m/s
inline constexpr double kDefaultPhase = 0.4 * std::numbers::pi;

struct AxialDrive {
  double freq_hz = 1.0;
  double amplitude = kCalibratedAxialAmplitude;  ///< N
  double bias = kCalibratedAxialAmplitude;       ///< N
};

struct FrictionDrive {
  double freq_hz = 1.0;
  double duty = 0.5;
  bool frictionless = false;
};

struct SweepAxes {
  std::vector<double> axial_freqs_hz = {0.1, 0.2, 0.25, 0.5, 1.0};
  std::vector<double> friction_freqs_hz = {0.1, 0.2, 0.25, 0.5, 1.0};
  std::vector<double> phases_rad;  ///< empty: 64 uniform points over [0, 2 pi)
  std::vector<double> mass_trials_kg = {0.1, 0.2};
  double duration_s = 60.0;
};

struct GaitSettings {
  GaitSchedule schedule = GaitSchedule::reference();
  int n_strides = 10;
  GaitOptions options;
};

struct CalibrationSettings {
  double target_speed = kReferenceSpeed;
  double amplitude_min = 0.5;
  double amplitude_max = 25.0;
  double coarse_step = 0.5;
  double fine_step = 0.01;
};

struct ExperimentConfig {
  RobotParams params;
  AxialDrive axial;
  FrictionDrive friction;
  double phase_rad = kDefaultPhase;
  PhaseConvention convention = PhaseConvention::FrictionPair;
  double duration_s = 60.0;
  double sample_period_s = 0.001;
  FrictionMode mode;
  SweepAxes sweep;
  GaitSettings gait;
  CalibrationSettings calibration;
  std::string output_dir = "out";

  void validate() const;
};

std::vector<double> uniform_phase_grid(int points);

struct SignalSet {
  SignalSpec fa;
  SignalSpec mu1;
  SignalSpec mu2;
};

SignalSet make_signals(const ExperimentConfig& config);

struct TraceSummary {
  Displacement displacement;
  double average_speed = 0;
  double max_abs_center_of_mass = 0;
  double linear_fit_r_squared = 0;
  double duration_s = 0;
};

struct TraceRun {
  SimTrace trace;
  TraceSummary summary;
};

TraceRun run_trace(const ExperimentConfig& config);
TraceSummary summarize(const SimTrace& trace, const RobotParams& params);

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Each index is
/// handled exactly once, so writing results by index keeps them ordered.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

struct FrequencyGrid {
  std::vector<double> axial_freqs_hz;
  std::vector<double> friction_freqs_hz;
  Eigen::MatrixXd dx1;  ///< rows: friction frequency, columns: axial frequency
};

FrequencyGrid run_frequency_grid(const ExperimentConfig& config, int jobs = 1);

struct PhaseSweep {
  std::vector<double> phases_rad;
  std::vector<double> masses_kg;
  Eigen::MatrixXd dx1;  ///< rows: phase, columns: mass trial
};

PhaseSweep run_phase_sweep(const ExperimentConfig& config, int jobs = 1);

struct CalibrationPoint {
  double amplitude = 0;
  double speed = 0;
};

struct Calibration {
  double amplitude = 0;
  double speed = 0;
  std::vector<CalibrationPoint> scan;
};

/**
 * Scans the axial amplitude (bias = amplitude, so the drive never pulls) on a
 * coarse grid, then refines around the best cell on a fine grid. The score is
 * | |speed| - target |; the direction of travel is a sign convention.
 */
Calibration calibrate_amplitude(const ExperimentConfig& config, int jobs = 1);

void write_grid_csv(std::ostream& out, const FrequencyGrid& grid);
void write_phase_csv(std::ostream& out, const PhaseSweep& sweep);

}  // namespace wormcrawl

#endif  // WORMCRAWL_EXPERIMENTS_HPP_
