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

#include "wormcrawl/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include "wormcrawl/config.hpp"
#include "wormcrawl/controllability.hpp"
#include "wormcrawl/experiments.hpp"
#include "wormcrawl/gait.hpp"

namespace wormcrawl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
};

struct Context {
  ExperimentConfig config;
  fs::path out_dir;
  int jobs = 1;
};

Context load_context(const CommonFlags& flags) {
  if (flags.jobs < 1) throw ConfigError("--jobs: must be >= 1");
  Context ctx;
  ctx.config = load_config(flags.config_path, flags.overrides);
  ctx.out_dir = flags.out_dir.empty() ? fs::path(ctx.config.output_dir) : fs::path(flags.out_dir);
  ctx.jobs = flags.jobs;
  fs::create_directories(ctx.out_dir);
  return ctx;
}

/// Writes through a temporary stream so a failed run never leaves a
/// half-written file that looks complete.
template <typename Fn>
void write_file(const fs::path& path, Fn&& fn) {
  std::ostringstream buf;
  fn(buf);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << buf.str();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& doc) {
  write_file(path, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

int run_analyze(const CommonFlags& flags, std::ostream& out) {
  const Context ctx = load_context(flags);
  const RobotParams& p = ctx.config.params;
  const ControllabilityReport siso = analyze(build_siso<double>(p), p);
  const ControllabilityReport mimo = analyze(build_mimo<double>(p), p);
  write_json(ctx.out_dir / "summary.json",
             {{"siso", to_json(siso)}, {"mimo", to_json(mimo)}, {"config", config_to_json(ctx.config)}});
  out << "analyze: SISO rank " << siso.rank << (siso.cm_locked ? " (center of mass locked)" : "")
      << ", MIMO rank " << mimo.rank << (mimo.fully_controllable ? " (fully controllable)" : "")
      << '\n';
  return kExitOk;
}

int run_simulate(const CommonFlags& flags, std::ostream& out) {
  const Context ctx = load_context(flags);
  const TraceRun run = run_trace(ctx.config);
  write_file(ctx.out_dir / "trace.csv", [&](std::ostream& os) { write_trace_csv(os, run.trace); });
  write_json(ctx.out_dir / "summary.json",
             {{"summary", to_json(run.summary)}, {"config", config_to_json(ctx.config)}});
  out << "simulate: dx1 = " << fmt(run.summary.displacement.x1)
      << " m, average speed = " << fmt(run.summary.average_speed)
      << " m/s, max |x_cm| = " << fmt(run.summary.max_abs_center_of_mass) << " m\n";
  return kExitOk;
}

int run_sweep_freq(const CommonFlags& flags, std::ostream& out) {
  const Context ctx = load_context(flags);
  const FrequencyGrid grid = run_frequency_grid(ctx.config, ctx.jobs);
  write_file(ctx.out_dir / "grid.csv", [&](std::ostream& os) { write_grid_csv(os, grid); });
  out << "sweep-freq: " << grid.dx1.rows() << "x" << grid.dx1.cols()
      << " cells, max |dx1| = " << fmt(grid.dx1.cwiseAbs().maxCoeff()) << " m\n";
  return kExitOk;
}

int run_sweep_phase(const CommonFlags& flags, std::ostream& out) {
  const Context ctx = load_context(flags);
  const PhaseSweep sweep = run_phase_sweep(ctx.config, ctx.jobs);
  write_file(ctx.out_dir / "phase.csv", [&](std::ostream& os) { write_phase_csv(os, sweep); });
  out << "sweep-phase: " << sweep.dx1.rows() << " phases x " << sweep.dx1.cols()
      << " mass trials, dx1 in [" << fmt(sweep.dx1.minCoeff()) << ", "
      << fmt(sweep.dx1.maxCoeff()) << "] m\n";
  return kExitOk;
}

GaitSchedule resolve_schedule(const Context& ctx, const std::string& schedule_path) {
  if (schedule_path.empty()) return ctx.config.gait.schedule;
  std::ifstream in(schedule_path);
  if (!in) throw ConfigError("--schedule " + schedule_path + ": cannot open file");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("--schedule " + schedule_path + ": " + e.what());
  }
  return schedule_from_json(doc);
}

int run_gait(const CommonFlags& flags, const std::string& schedule_path, std::ostream& out) {
  const Context ctx = load_context(flags);
  const GaitSchedule sched = resolve_schedule(ctx, schedule_path);
  const GaitSettings& g = ctx.config.gait;
  const GaitResult res =
      simulate_gait(sched, ctx.config.params, g.n_strides, ctx.config.sample_period_s, g.options);

  double worst_anchor = 0;
  for (const auto& stride : res.anchored_displacement) {
    for (double d : stride) worst_anchor = std::max(worst_anchor, d);
  }
  auto check_json = [](const AnchoringCheck& c) {
    return json{{"fa_n", c.fa}, {"f1_cap_n", c.f1_cap}, {"f2_cap_n", c.f2_cap},
                {"feasible", c.feasible}};
  };
  json rmse = json::object();
  for (std::size_t i = 0; i < 3; ++i) rmse[kActuatorNames[i]] = res.rmse[i];

  write_file(ctx.out_dir / "trace.csv", [&](std::ostream& os) { write_trace_csv(os, res.trace); });
  write_file(ctx.out_dir / "pid_trace.csv",
             [&](std::ostream& os) { write_pressure_csv(os, res.pressures); });
  write_json(ctx.out_dir / "gait_metrics.json",
             {{"metrics", to_json(res.metrics)},
              {"anchoring", {{"protrusion", check_json(res.protrusion)},
                             {"retraction", check_json(res.retraction)}}},
              {"max_anchored_displacement_m", worst_anchor},
              {"pressure_rmse_psi", rmse},
              {"warnings", res.warnings},
              {"schedule", schedule_to_json(sched)}});
  out << "gait: stride length = " << fmt(res.metrics.stride_length * 100.0)
      << " cm, stride period = " << fmt(res.metrics.stride_period)
      << " s, average speed = " << fmt(res.metrics.avg_speed * 1000.0) << " mm/s";
  if (!res.warnings.empty()) out << ", " << res.warnings.size() << " anchoring warning(s)";
  out << '\n';
  return kExitOk;
}

int run_pid(const CommonFlags& flags, const std::string& schedule_path, bool tune,
            std::ostream& out) {
  const Context ctx = load_context(flags);
  const GaitSchedule sched = resolve_schedule(ctx, schedule_path);
  const GaitSettings& g = ctx.config.gait;
  const double T = ctx.config.sample_period_s;
  const auto profiles = schedule_profiles(sched, g.n_strides);

  std::array<PidGains, 3> gains = g.options.gains;
  if (tune) {
    parallel_for(3, ctx.jobs, [&](std::size_t i) {
      gains[i] = tune_pid(profiles[i], g.options.plant, T, gains[i], g.options.settle_window_s);
    });
  }
  std::array<PidTrackResult, 3> runs;
  parallel_for(3, ctx.jobs, [&](std::size_t i) {
    runs[i] = pid_track(profiles[i], gains[i], g.options.plant, T, g.options.settle_window_s);
  });

  PressureTrace trace;
  trace.T = T;
  trace.samples.resize(runs[0].pressure.size());
  for (std::size_t n = 0; n < trace.samples.size(); ++n) {
    for (std::size_t i = 0; i < 3; ++i) {
      trace.samples[n].reference[i] = runs[i].reference[n];
      trace.samples[n].measured[i] = runs[i].pressure[n];
      trace.samples[n].duty[i] = runs[i].duty[n];
    }
  }
  write_file(ctx.out_dir / "pid_trace.csv",
             [&](std::ostream& os) { write_pressure_csv(os, trace); });

  json rmse = json::object();
  json gains_json = json::object();
  for (std::size_t i = 0; i < 3; ++i) {
    rmse[kActuatorNames[i]] = runs[i].rmse;
    gains_json[kActuatorNames[i]] = to_json(gains[i]);
  }
  write_json(ctx.out_dir / "summary.json",
             {{"pressure_rmse_psi", rmse}, {"gains", gains_json}, {"tuned", tune},
              {"plant", config_to_json(ctx.config)["gait"]["plant"]}});
  out << "pid: RMSE rear = " << fmt(runs[0].rmse) << ", central = " << fmt(runs[1].rmse)
      << ", front = " << fmt(runs[2].rmse) << " psi" << (tune ? " (tuned gains)" : "") << '\n';
  return kExitOk;
}

int run_calibrate(const CommonFlags& flags, std::ostream& out) {
  const Context ctx = load_context(flags);
  const Calibration cal = calibrate_amplitude(ctx.config, ctx.jobs);
  json scan = json::array();
  for (const auto& p : cal.scan) scan.push_back({{"amplitude_n", p.amplitude}, {"speed_m_per_s", p.speed}});
  write_json(ctx.out_dir / "summary.json",
             {{"amplitude_n", cal.amplitude},
              {"bias_n", cal.amplitude},
              {"average_speed_m_per_s", cal.speed},
              {"target_speed_m_per_s", ctx.config.calibration.target_speed},
              {"scan", scan}});
  out << "calibrate: amplitude = bias = " << fmt(cal.amplitude, 6)
      << " N gives average speed " << fmt(cal.speed) << " m/s (target "
      << fmt(ctx.config.calibration.target_speed) << ")\n";
  return kExitOk;
}

void add_common(CLI::App* sub, CommonFlags& flags) {
  sub->add_option("--config", flags.config_path, "JSON configuration file")
      ->check(CLI::ExistingFile);
  sub->add_option("--set", flags.overrides, "Override a config value, e.g. params.m1=0.3")
      ->type_name("KEY=VALUE")
      ->allow_extra_args(false);
  sub->add_option("--out", flags.out_dir, "Output directory (default: config output_dir)");
  sub->add_option("--jobs", flags.jobs, "Worker threads for sweeps")->check(CLI::PositiveNumber);
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-block friction-modulated crawler simulator", "wormcrawl"};
  app.require_subcommand(1);
  app.fallthrough(false);

  CommonFlags flags;
  std::string schedule_path;
  bool tune = false;

  auto* analyze_cmd = app.add_subcommand("analyze", "Controllability of the SISO and MIMO models");
  auto* simulate_cmd = app.add_subcommand("simulate", "Single friction-modulated run");
  auto* freq_cmd = app.add_subcommand("sweep-freq", "Axial x friction frequency grid");
  auto* phase_cmd = app.add_subcommand("sweep-phase", "Displacement against phase difference");
  auto* gait_cmd = app.add_subcommand("gait", "Pressure-controlled four-phase gait");
  auto* pid_cmd = app.add_subcommand("pid", "Pressure loops on the gait references");
  auto* cal_cmd = app.add_subcommand("calibrate", "Fit the axial drive amplitude to the reference speed");
  for (auto* sub : {analyze_cmd, simulate_cmd, freq_cmd, phase_cmd, gait_cmd, pid_cmd, cal_cmd}) {
    add_common(sub, flags);
  }
  for (auto* sub : {gait_cmd, pid_cmd}) {
    sub->add_option("--schedule", schedule_path, "Gait schedule JSON ({\"phases\": [...]})")
        ->check(CLI::ExistingFile);
  }
  pid_cmd->add_flag("--tune", tune, "Search for gains before running the loops");

  if (args.empty()) {
    err << app.help();
    return kExitUsage;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (analyze_cmd->parsed()) return run_analyze(flags, out);
    if (simulate_cmd->parsed()) return run_simulate(flags, out);
    if (freq_cmd->parsed()) return run_sweep_freq(flags, out);
    if (phase_cmd->parsed()) return run_sweep_phase(flags, out);
    if (gait_cmd->parsed()) return run_gait(flags, schedule_path, out);
    if (pid_cmd->parsed()) return run_pid(flags, schedule_path, tune, out);
    if (cal_cmd->parsed()) return run_calibrate(flags, out);
  } catch (const InvalidParameter& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InfeasibleSchedule& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace wormcrawl
