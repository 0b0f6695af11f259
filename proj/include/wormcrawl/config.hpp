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

#ifndef WORMCRAWL_CONFIG_HPP_
#define WORMCRAWL_CONFIG_HPP_

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "wormcrawl/controllability.hpp"
#include "wormcrawl/experiments.hpp"
#include "wormcrawl/gait.hpp"

namespace wormcrawl {

/// Malformed or invalid configuration; the message names the field.
class ConfigError : public InvalidParameter {
 public:
  using InvalidParameter::InvalidParameter;
};

nlohmann::json config_to_json(const ExperimentConfig& config);

/// Keys absent from `doc` keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& doc);

/// Applies "dotted.path=value". The value is parsed as JSON when it can be,
/// otherwise stored as a string; intermediate objects are created on demand.
void apply_override(nlohmann::json& doc, std::string_view assignment);

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});

nlohmann::json schedule_to_json(const GaitSchedule& sched);
GaitSchedule schedule_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const ControllabilityReport& report);
nlohmann::json to_json(const TraceSummary& summary);
nlohmann::json to_json(const GaitMetrics& metrics);
nlohmann::json to_json(const PidGains& gains);

}  // namespace wormcrawl

#endif  // WORMCRAWL_CONFIG_HPP_
