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

#include "wormcrawl/config.hpp"

#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace wormcrawl {

using nlohmann::json;

namespace {

/// Reads one JSON object, remembering which keys were consumed so leftovers
/// can be reported as unknown.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(label() + ": expected an object");
  }

  bool has(const char* key) const { return obj_.contains(key); }

  void get(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) throw ConfigError(path_ + key + ": expected a number");
      out = v->get<double>();
    }
  }

  void get(const char* key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) throw ConfigError(path_ + key + ": expected an integer");
      out = v->get<int>();
    }
  }

  void get(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) throw ConfigError(path_ + key + ": expected true or false");
      out = v->get<bool>();
    }
  }

  void get(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) throw ConfigError(path_ + key + ": expected a string");
      out = v->get<std::string>();
    }
  }

  void get(const char* key, std::vector<double>& out) {
    if (const json* v = take(key)) {
      if (!v->is_array()) throw ConfigError(path_ + key + ": expected an array of numbers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number()) throw ConfigError(path_ + key + ": expected an array of numbers");
        out.push_back(e.get<double>());
      }
    }
  }

  /// Nested object, or nullptr-equivalent (empty optional) when absent.
  std::optional<Reader> child(const char* key) {
    if (const json* v = take(key)) return Reader(*v, path_ + key + ".");
    return std::nullopt;
  }

  const json* raw(const char* key) { return take(key); }

  void finish() const {
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) throw ConfigError(path_ + item.key() + ": unknown key");
    }
  }

  const std::string& path() const { return path_; }

 private:
  std::string label() const {
    return path_.empty() ? std::string("config") : path_.substr(0, path_.size() - 1);
  }

  const json* take(const char* key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

json params_to_json(const RobotParams& p) {
  return {{"m1", p.m1},           {"m2", p.m2},           {"k", p.k},
          {"c", p.c},             {"g", p.g},             {"mu_lo_1", p.mu_lo_1},
          {"mu_hi_1", p.mu_hi_1}, {"mu_lo_2", p.mu_lo_2}, {"mu_hi_2", p.mu_hi_2},
          {"s_a", p.s_a}};
}

void read_params(Reader r, RobotParams& p) {
  r.get("m1", p.m1);
  r.get("m2", p.m2);
  r.get("k", p.k);
  r.get("c", p.c);
  r.get("g", p.g);
  r.get("mu_lo_1", p.mu_lo_1);
  r.get("mu_hi_1", p.mu_hi_1);
  r.get("mu_lo_2", p.mu_lo_2);
  r.get("mu_hi_2", p.mu_hi_2);
  r.get("s_a", p.s_a);
  r.finish();
}

const char* convention_name(PhaseConvention c) {
  return c == PhaseConvention::FrictionPair ? "friction-pair" : "axial-vs-friction";
}

const char* variant_name(FrictionVariant v) {
  return v == FrictionVariant::Sign ? "sign" : "karnopp";
}

json plant_to_json(const ValvePlant& p) {
  return {{"tau_inflate_s", p.tau_inflate},
          {"tau_deflate_s", p.tau_deflate},
          {"p_supply_psi", p.p_supply},
          {"p_exhaust_psi", p.p_exhaust},
          {"rate_limit_psi_per_s", p.rate_limit}};
}

void read_plant(Reader r, ValvePlant& p) {
  r.get("tau_inflate_s", p.tau_inflate);
  r.get("tau_deflate_s", p.tau_deflate);
  r.get("p_supply_psi", p.p_supply);
  r.get("p_exhaust_psi", p.p_exhaust);
  r.get("rate_limit_psi_per_s", p.rate_limit);
  r.finish();
}

void read_gains(Reader r, PidGains& g) {
  r.get("kp", g.kp);
  r.get("ki", g.ki);
  r.get("kd", g.kd);
  r.get("output_min", g.output_min);
  r.get("output_max", g.output_max);
  r.finish();
}

json matrix_columns(const Eigen::MatrixXd& m) {
  json cols = json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    json col = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) col.push_back(m(r, c));
    cols.push_back(std::move(col));
  }
  return cols;
}

}  // namespace

json schedule_to_json(const GaitSchedule& sched) {
  json phases = json::array();
  for (const auto& p : sched.phases) {
    phases.push_back({{"duration_s", p.duration_s},
                      {"rear_psi", p.rear_psi},
                      {"central_psi", p.central_psi},
                      {"front_psi", p.front_psi}});
  }
  return {{"phases", phases}};
}

namespace {

GaitSchedule read_schedule(Reader r) {
  GaitSchedule sched;
  const json* phases = r.raw("phases");
  if (!phases) throw ConfigError(r.path() + "phases: required");
  if (!phases->is_array() || phases->size() != 4) {
    throw ConfigError(r.path() + "phases: expected an array of exactly 4 phases");
  }
  for (std::size_t i = 0; i < 4; ++i) {
    Reader p((*phases)[i], r.path() + "phases[" + std::to_string(i) + "].");
    GaitPhase& ph = sched.phases[i];
    if (!p.has("duration_s")) throw ConfigError(p.path() + "duration_s: required");
    p.get("duration_s", ph.duration_s);
    p.get("rear_psi", ph.rear_psi);
    p.get("central_psi", ph.central_psi);
    p.get("front_psi", ph.front_psi);
    p.finish();
  }
  r.finish();
  return sched;
}

}  // namespace

GaitSchedule schedule_from_json(const json& doc) {
  GaitSchedule sched = read_schedule(Reader(doc, ""));
  sched.validate();
  return sched;
}

json config_to_json(const ExperimentConfig& c) {
  json gains = json::object();
  for (std::size_t i = 0; i < 3; ++i) gains[kActuatorNames[i]] = to_json(c.gait.options.gains[i]);
  return {
      {"params", params_to_json(c.params)},
      {"axial", {{"freq_hz", c.axial.freq_hz}, {"amplitude_n", c.axial.amplitude},
                 {"bias_n", c.axial.bias}}},
      {"friction", {{"freq_hz", c.friction.freq_hz}, {"duty", c.friction.duty},
                    {"frictionless", c.friction.frictionless}}},
      {"phase_rad", c.phase_rad},
      {"phase_convention", convention_name(c.convention)},
      {"duration_s", c.duration_s},
      {"sample_period_s", c.sample_period_s},
      {"friction_mode", {{"variant", variant_name(c.mode.variant)}, {"eps_v", c.mode.eps_v},
                         {"mu_static_scale", c.mode.mu_static_scale}}},
      {"sweep", {{"axial_freqs_hz", c.sweep.axial_freqs_hz},
                 {"friction_freqs_hz", c.sweep.friction_freqs_hz},
                 {"phases_rad", c.sweep.phases_rad},
                 {"mass_trials_kg", c.sweep.mass_trials_kg},
                 {"duration_s", c.sweep.duration_s}}},
      {"gait", {{"schedule", schedule_to_json(c.gait.schedule)},
                {"n_strides", c.gait.n_strides},
                {"strict", c.gait.options.strict},
                {"anchor_threshold_psi", c.gait.options.anchor_threshold_psi},
                {"contact_band_psi", c.gait.options.contact_band_psi},
                {"settle_window_s", c.gait.options.settle_window_s},
                {"plant", plant_to_json(c.gait.options.plant)},
                {"gains", gains}}},
      {"calibration", {{"target_speed_m_per_s", c.calibration.target_speed},
                       {"amplitude_min_n", c.calibration.amplitude_min},
                       {"amplitude_max_n", c.calibration.amplitude_max},
                       {"coarse_step_n", c.calibration.coarse_step},
                       {"fine_step_n", c.calibration.fine_step}}},
      {"output_dir", c.output_dir},
  };
}

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig c;
  Reader r(doc, "");
  if (auto p = r.child("params")) read_params(*p, c.params);
  if (auto a = r.child("axial")) {
    a->get("freq_hz", c.axial.freq_hz);
    a->get("amplitude_n", c.axial.amplitude);
    a->get("bias_n", c.axial.bias);
    a->finish();
  }
  if (auto f = r.child("friction")) {
    f->get("freq_hz", c.friction.freq_hz);
    f->get("duty", c.friction.duty);
    f->get("frictionless", c.friction.frictionless);
    f->finish();
  }
  r.get("phase_rad", c.phase_rad);
  std::string convention = convention_name(c.convention);
  r.get("phase_convention", convention);
  if (convention == "friction-pair") {
    c.convention = PhaseConvention::FrictionPair;
  } else if (convention == "axial-vs-friction") {
    c.convention = PhaseConvention::AxialVsFriction;
  } else {
    throw ConfigError("phase_convention: expected \"friction-pair\" or \"axial-vs-friction\"");
  }
  r.get("duration_s", c.duration_s);
  r.get("sample_period_s", c.sample_period_s);
  if (auto m = r.child("friction_mode")) {
    std::string variant = variant_name(c.mode.variant);
    m->get("variant", variant);
    if (variant == "sign") {
      c.mode.variant = FrictionVariant::Sign;
    } else if (variant == "karnopp") {
      c.mode.variant = FrictionVariant::Karnopp;
    } else {
      throw ConfigError("friction_mode.variant: expected \"sign\" or \"karnopp\"");
    }
    m->get("eps_v", c.mode.eps_v);
    m->get("mu_static_scale", c.mode.mu_static_scale);
    m->finish();
  }
  if (auto s = r.child("sweep")) {
    s->get("axial_freqs_hz", c.sweep.axial_freqs_hz);
    s->get("friction_freqs_hz", c.sweep.friction_freqs_hz);
    s->get("phases_rad", c.sweep.phases_rad);
    int points = 0;
    s->get("phase_points", points);
    if (s->has("phase_points")) {
      if (s->has("phases_rad")) {
        throw ConfigError("sweep.phase_points: give either phases_rad or phase_points");
      }
      try {
        c.sweep.phases_rad = uniform_phase_grid(points);
      } catch (const InvalidParameter&) {
        throw ConfigError("sweep.phase_points: must be >= 1");
      }
    }
    s->get("mass_trials_kg", c.sweep.mass_trials_kg);
    s->get("duration_s", c.sweep.duration_s);
    s->finish();
  }
  if (auto g = r.child("gait")) {
    if (auto s = g->child("schedule")) c.gait.schedule = read_schedule(*s);
    g->get("n_strides", c.gait.n_strides);
    g->get("strict", c.gait.options.strict);
    g->get("anchor_threshold_psi", c.gait.options.anchor_threshold_psi);
    g->get("contact_band_psi", c.gait.options.contact_band_psi);
    g->get("settle_window_s", c.gait.options.settle_window_s);
    if (auto p = g->child("plant")) read_plant(*p, c.gait.options.plant);
    if (auto gains = g->child("gains")) {
      for (std::size_t i = 0; i < 3; ++i) {
        if (auto one = gains->child(kActuatorNames[i])) read_gains(*one, c.gait.options.gains[i]);
      }
      gains->finish();
    }
    g->finish();
  }
  if (auto cal = r.child("calibration")) {
    cal->get("target_speed_m_per_s", c.calibration.target_speed);
    cal->get("amplitude_min_n", c.calibration.amplitude_min);
    cal->get("amplitude_max_n", c.calibration.amplitude_max);
    cal->get("coarse_step_n", c.calibration.coarse_step);
    cal->get("fine_step_n", c.calibration.fine_step);
    cal->finish();
  }
  r.get("output_dir", c.output_dir);
  r.finish();

  try {
    c.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  return c;
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("--set " + std::string(assignment) + ": expected key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));

  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ConfigError("--set " + key + ": empty path component");
    if (!node->is_object()) {
      throw ConfigError("--set " + key + ": '" + part + "' is not inside an object");
    }
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config " + path.string() + ": cannot open file");
    try {
      doc = json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
      throw ConfigError("--config " + path.string() + ": " + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

json to_json(const ControllabilityReport& report) {
  return {{"rank", report.rank},
          {"cm_locked", report.cm_locked},
          {"fully_controllable", report.fully_controllable},
          {"basis_columns", matrix_columns(report.basis)}};
}

json to_json(const TraceSummary& s) {
  return {{"net_displacement_m", {{"x1", s.displacement.x1}, {"x2", s.displacement.x2}}},
          {"average_speed_m_per_s", s.average_speed},
          {"max_abs_center_of_mass_m", s.max_abs_center_of_mass},
          {"linear_fit_r_squared", s.linear_fit_r_squared},
          {"duration_s", s.duration_s}};
}

json to_json(const GaitMetrics& m) {
  return {{"stride_length_m", m.stride_length},
          {"protrusion_time_s", m.protrusion_time},
          {"stance_time_s", m.stance_time},
          {"stride_period_s", m.stride_period},
          {"avg_speed_m_per_s", m.avg_speed},
          {"stride_displacements_m", m.stride_displacements}};
}

json to_json(const PidGains& g) {
  return {{"kp", g.kp}, {"ki", g.ki}, {"kd", g.kd},
          {"output_min", g.output_min}, {"output_max", g.output_max}};
}

}  // namespace wormcrawl
