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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "wormcrawl/cli.hpp"
#include "wormcrawl/config.hpp"
#include "wormcrawl/experiments.hpp"

namespace wormcrawl {
namespace {

namespace fs = std::filesystem;

const fs::path kSourceDir = WORMCRAWL_SOURCE_DIR;

/// Short horizons keep the sweeps quick; properties at 60 s live in the
/// acceptance suite.
ExperimentConfig quick_config() {
  ExperimentConfig c;
  c.duration_s = 10.0;
  c.sweep.duration_s = 10.0;
  return c;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("wormcrawl_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

TEST(Signals, PhaseConventions) {
  ExperimentConfig c;
  c.phase_rad = 1.0;
  SignalSet s = make_signals(c);
  EXPECT_EQ(s.mu1.phase, 0.0);
  EXPECT_EQ(s.mu2.phase, 1.0);
  EXPECT_EQ(s.fa.kind, SignalKind::Sine);
  EXPECT_EQ(s.fa.bias, kCalibratedAxialAmplitude);
  c.convention = PhaseConvention::AxialVsFriction;
  s = make_signals(c);
  EXPECT_EQ(s.mu1.phase, 1.0);
  EXPECT_EQ(s.mu2.phase, 1.0);
  c.friction.frictionless = true;
  s = make_signals(c);
  EXPECT_EQ(s.mu1.kind, SignalKind::Constant);
  EXPECT_EQ(s.mu1.bias, 0.0);
}

TEST(Config, ValidationQualifiesFields) {
  ExperimentConfig c;
  c.params.k = -1;
  try {
    c.validate();
    FAIL();
  } catch (const InvalidParameter& e) {
    EXPECT_EQ(std::string(e.what()).rfind("params.k:", 0), 0u) << e.what();
  }
  c = ExperimentConfig{};
  c.sweep.axial_freqs_hz.clear();
  EXPECT_THROW(c.validate(), InvalidParameter);
  c = ExperimentConfig{};
  c.duration_s = 1.0005;
  EXPECT_THROW(c.validate(), InvalidParameter);
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c;
  c.params.m1 = 0.37;
  c.convention = PhaseConvention::AxialVsFriction;
  c.mode = FrictionMode::karnopp(2e-4, 1.2);
  c.sweep.phases_rad = {0.0, 1.0, 2.0};
  c.gait.schedule.phases[1].duration_s = 1.2;
  c.gait.options.gains[kFront].kp = 7.5;
  const nlohmann::json doc = config_to_json(c);
  const ExperimentConfig back = config_from_json(doc);
  EXPECT_EQ(config_to_json(back), doc);
  EXPECT_EQ(back.params.m1, 0.37);
  EXPECT_EQ(back.mode.variant, FrictionVariant::Karnopp);
  EXPECT_EQ(back.gait.options.gains[kFront].kp, 7.5);
}

TEST(Config, UnknownAndMistypedKeysNameThePath) {
  auto message = [](const char* text) {
    try {
      config_from_json(nlohmann::json::parse(text));
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_EQ(message(R"({"params": {"mass": 1}})"), "params.mass: unknown key");
  EXPECT_EQ(message(R"({"params": {"m1": "heavy"}})"), "params.m1: expected a number");
  EXPECT_EQ(message(R"({"params": {"m2": 0}})").rfind("params.m2:", 0), 0u);
  EXPECT_EQ(message(R"({"gait": {"schedule": {"phases": []}}})").rfind("gait.schedule.phases:", 0),
            0u);
  EXPECT_EQ(message(R"({"sweep": {"phase_points": 0}})").rfind("sweep.phase_points", 0), 0u);
  EXPECT_EQ(message(R"({"friction_mode": {"variant": "viscous"}})")
                .rfind("friction_mode.variant", 0),
            0u);
  EXPECT_EQ(message("[1, 2]"), "config: expected an object");
}

TEST(Config, Overrides) {
  nlohmann::json doc = nlohmann::json::object();
  apply_override(doc, "params.m1=0.5");
  apply_override(doc, "sweep.mass_trials_kg=[0.1,0.3]");
  apply_override(doc, "output_dir=results/run1");
  apply_override(doc, "friction.frictionless=true");
  EXPECT_EQ(doc["params"]["m1"], 0.5);
  EXPECT_EQ(doc["sweep"]["mass_trials_kg"].size(), 2u);
  EXPECT_EQ(doc["output_dir"], "results/run1");
  const ExperimentConfig c = config_from_json(doc);
  EXPECT_TRUE(c.friction.frictionless);
  EXPECT_THROW(apply_override(doc, "novalue"), ConfigError);
  EXPECT_THROW(apply_override(doc, "params..m1=1"), ConfigError);
  EXPECT_THROW(apply_override(doc, "params.m1.x=1"), ConfigError);
}

TEST(Config, ShippedFilesLoad) {
  const ExperimentConfig def = load_config(kSourceDir / "configs/default.json");
  EXPECT_EQ(def.sweep.phases_rad.size(), 64u);
  EXPECT_DOUBLE_EQ(def.phase_rad, kDefaultPhase);
  const ExperimentConfig table = load_config(kSourceDir / "configs/tableI.json");
  EXPECT_EQ(table.gait.schedule.stride_period(), 4.0);
  EXPECT_TRUE(table.gait.options.strict);
  EXPECT_THROW(load_config(kSourceDir / "configs/missing.json"), ConfigError);
}

TEST(Experiments, FrictionlessRunKeepsCenterOfMass) {
  ExperimentConfig c = quick_config();
  c.friction.frictionless = true;
  const TraceRun run = run_trace(c);
  EXPECT_LE(run.summary.max_abs_center_of_mass, 1e-9);
}

TEST(Experiments, ZeroInputConfigGivesZeroTrace) {
  ExperimentConfig c = quick_config();
  c.axial.amplitude = 0;
  c.axial.bias = 0;
  const TraceRun run = run_trace(c);
  for (const auto& x : run.trace.states) ASSERT_TRUE(x.isZero(0));
  EXPECT_EQ(run.summary.average_speed, 0.0);
}

TEST(Experiments, SingleCellGridMatchesRunTrace) {
  ExperimentConfig c = quick_config();
  c.sweep.axial_freqs_hz = {0.5};
  c.sweep.friction_freqs_hz = {0.5};
  const FrequencyGrid grid = run_frequency_grid(c);
  c.axial.freq_hz = 0.5;
  c.friction.freq_hz = 0.5;
  const TraceRun run = run_trace(c);
  ASSERT_EQ(grid.dx1.size(), 1);
  EXPECT_EQ(grid.dx1(0, 0), run.summary.displacement.x1);
}

TEST(Experiments, SweepsAreIndependentOfJobCount) {
  ExperimentConfig c = quick_config();
  c.sweep.phases_rad = uniform_phase_grid(6);
  const PhaseSweep one = run_phase_sweep(c, 1);
  const PhaseSweep many = run_phase_sweep(c, 4);
  EXPECT_EQ(one.dx1, many.dx1);
  std::ostringstream a, b;
  write_phase_csv(a, one);
  write_phase_csv(b, many);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "phi_rad,dx1_m0.1kg,dx1_m0.2kg");
}

TEST(Experiments, FrictionlessPhaseSweepHasNoLocomotion) {
  ExperimentConfig c = quick_config();
  c.friction.frictionless = true;
  c.sweep.phases_rad = uniform_phase_grid(8);
  const PhaseSweep s = run_phase_sweep(c, 2);
  // Without friction the phase is irrelevant; block 1 only shows the elastic
  // offset of the biased push, bounded by the peak force over k.
  for (Eigen::Index r = 1; r < s.dx1.rows(); ++r) EXPECT_EQ(s.dx1.row(r), s.dx1.row(0));
  const double peak = c.axial.amplitude + std::abs(c.axial.bias);
  EXPECT_LE(s.dx1.cwiseAbs().maxCoeff(), peak / c.params.k);
  const TraceRun run = run_trace(c);
  EXPECT_LE(run.summary.max_abs_center_of_mass, 1e-9);
}

TEST(Experiments, FasterEqualFrequenciesTravelFurther) {
  ExperimentConfig c;
  c.sweep.axial_freqs_hz = {0.25, 0.5, 1.0};
  c.sweep.friction_freqs_hz = {0.25, 0.5, 1.0};
  const FrequencyGrid g = run_frequency_grid(c, 2);
  EXPECT_LT(std::abs(g.dx1(0, 0)), std::abs(g.dx1(1, 1)));
  EXPECT_LT(std::abs(g.dx1(1, 1)), std::abs(g.dx1(2, 2)));
}

TEST(Experiments, GridCsvLayout) {
  FrequencyGrid g;
  g.axial_freqs_hz = {0.1, 1.0};
  g.friction_freqs_hz = {0.5};
  g.dx1.resize(1, 2);
  g.dx1 << 0.25, -1.5;
  std::ostringstream os;
  write_grid_csv(os, g);
  EXPECT_EQ(os.str(), "friction_hz\\axial_hz,0.1,1\n0.5,0.25,-1.5\n");
}

TEST(Experiments, ParallelForPropagatesErrors) {
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
  std::vector<int> hits(100, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
}

// --- command line -----------------------------------------------------------

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli_dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

TEST(Cli, NoArgumentsPrintsUsage) {
  const CliRun r = run_cli({});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, UnknownSubcommandOrFlag) {
  EXPECT_EQ(run_cli({"fly"}).code, 1);
  const fs::path dir = scratch_dir("flag");
  const CliRun r = run_cli({"analyze", "--bogus", "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, AnalyzeReportsBothRanks) {
  const fs::path dir = scratch_dir("analyze");
  const CliRun r = run_cli(
      {"analyze", "--config", (kSourceDir / "configs/default.json").string(), "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("SISO rank 2"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("MIMO rank 4"), std::string::npos) << r.out;
  const auto doc = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(doc["siso"]["rank"], 2);
  EXPECT_EQ(doc["mimo"]["rank"], 4);
  EXPECT_EQ(doc["siso"]["cm_locked"], true);
}

TEST(Cli, ValidationErrorsExitOneWithTheField) {
  const fs::path dir = scratch_dir("invalid");
  const CliRun r = run_cli({"simulate", "--set", "params.m1=-2", "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("params.m1"), std::string::npos) << r.err;
  EXPECT_EQ(run_cli({"simulate", "--config", "/nonexistent.json"}).code, 1);
  EXPECT_EQ(run_cli({"simulate", "--jobs", "0"}).code, 1);
}

TEST(Cli, RuntimeErrorsExitTwo) {
  const fs::path dir = scratch_dir("runtime");
  const CliRun r = run_cli({"simulate", "--set", "axial.bias_n=1e9", "--set",
                            "friction.frictionless=true", "--out", dir.string()});
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_NE(r.err.find("runtime error"), std::string::npos);
}

TEST(Cli, SimulateWritesTraceAndSummaryDeterministically) {
  const fs::path a = scratch_dir("sim_a");
  const fs::path b = scratch_dir("sim_b");
  const std::vector<std::string> common = {"--set", "duration_s=5"};
  auto args = [&](const fs::path& dir) {
    std::vector<std::string> v = {"simulate", "--out", dir.string()};
    v.insert(v.end(), common.begin(), common.end());
    return v;
  };
  ASSERT_EQ(run_cli(args(a)).code, 0);
  ASSERT_EQ(run_cli(args(b)).code, 0);
  EXPECT_EQ(slurp(a / "trace.csv"), slurp(b / "trace.csv"));
  EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
  std::ifstream in(a / "trace.csv");
  const SimTrace tr = read_trace_csv(in);
  EXPECT_EQ(tr.size(), 5001u);
  const auto doc = nlohmann::json::parse(slurp(a / "summary.json"));
  EXPECT_EQ(doc["summary"]["net_displacement_m"]["x1"], net_displacement(tr).x1);
}

TEST(Cli, SweepsWriteTheirCsv) {
  const fs::path dir = scratch_dir("sweeps");
  ASSERT_EQ(run_cli({"sweep-freq", "--set", "sweep.duration_s=2", "--set",
                     "sweep.axial_freqs_hz=[0.5,1]", "--out", dir.string(), "--jobs", "2"})
                .code,
            0);
  EXPECT_EQ(slurp(dir / "grid.csv").substr(0, 22), "friction_hz\\axial_hz,0");
  ASSERT_EQ(run_cli({"sweep-phase", "--set", "sweep.duration_s=2", "--set",
                     "sweep.phase_points=4", "--out", dir.string()})
                .code,
            0);
  const std::string phase = slurp(dir / "phase.csv");
  EXPECT_EQ(std::count(phase.begin(), phase.end(), '\n'), 5);
}

TEST(Cli, GaitWithTableConfig) {
  const fs::path dir = scratch_dir("gait");
  const CliRun r = run_cli({"gait", "--config", (kSourceDir / "configs/tableI.json").string(),
                            "--set", "gait.n_strides=3", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(slurp(dir / "gait_metrics.json"));
  EXPECT_EQ(doc["metrics"]["stride_period_s"], 4.0);
  EXPECT_TRUE(doc["warnings"].empty());
  EXPECT_TRUE(fs::exists(dir / "trace.csv"));
  EXPECT_TRUE(fs::exists(dir / "pid_trace.csv"));
}

TEST(Cli, StrictGaitWithDefaultMassesIsRejected) {
  const fs::path dir = scratch_dir("gait_strict");
  const CliRun r = run_cli({"gait", "--set", "gait.strict=true", "--out", dir.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("infeasible"), std::string::npos) << r.err;
}

TEST(Cli, GaitScheduleFile) {
  const fs::path dir = scratch_dir("schedule");
  fs::create_directories(dir);
  std::ofstream(dir / "s.json") << R"({"phases": [
      {"duration_s": 1.0, "rear_psi": 1.2},
      {"duration_s": 1.0, "rear_psi": 1.2, "central_psi": 3.0},
      {"duration_s": 1.0, "rear_psi": 1.2, "central_psi": 3.0, "front_psi": 1.2},
      {"duration_s": 1.0, "front_psi": 1.2}]})";
  const CliRun r = run_cli({"gait", "--config", (kSourceDir / "configs/tableI.json").string(),
                            "--schedule", (dir / "s.json").string(), "--set",
                            "gait.n_strides=2", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(slurp(dir / "gait_metrics.json"));
  EXPECT_EQ(doc["metrics"]["protrusion_time_s"], 1.0);

  std::ofstream(dir / "bad.json") << R"({"phases": [{"duration_s": 1.0}]})";
  EXPECT_EQ(run_cli({"gait", "--schedule", (dir / "bad.json").string(), "--out", dir.string()})
                .code,
            1);
}

TEST(Cli, PidWritesTraceAndRmse) {
  const fs::path dir = scratch_dir("pid");
  const CliRun r = run_cli({"pid", "--set", "gait.n_strides=2", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(slurp(dir / "summary.json"));
  for (const char* name : kActuatorNames) EXPECT_LT(doc["pressure_rmse_psi"][name], 0.02);
  const std::string trace = slurp(dir / "pid_trace.csv");
  EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 8002);
}

TEST(Cli, CalibrateWritesTheAmplitude) {
  const fs::path dir = scratch_dir("calibrate");
  const CliRun r = run_cli({"calibrate", "--set", "duration_s=10", "--set",
                            "calibration.amplitude_max_n=15", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto doc = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_GT(doc["amplitude_n"].get<double>(), 0.5);
  EXPECT_FALSE(doc["scan"].empty());
}

}  // namespace
}  // namespace wormcrawl
