// Copyright 2026 The corrspace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "corrspace/scenario_config.hpp"
#include "json.hpp"

namespace corrspace {

/// Default tolerance: CORRSPACE_TOLERANCE if set and valid, else 1e-10.
double default_tolerance_from_env();

/// Validates a scenario document. Field problems raise kConfig naming the
/// field path; wires beyond the site limit raise kCapacityExceeded.
ScenarioConfig parse_scenario(const nlohmann::json &doc, double default_tolerance = kDefaultTolerance);
ScenarioConfig load_scenario(const std::string &path, double default_tolerance = kDefaultTolerance);

/// Runs one branch at the wire level.
ProtocolReport run_protocol(const ScenarioConfig &config, const RunBranch &branch);

struct RunComparison {
    RunBranch branch;
    ProtocolReport protocol;
    ProtocolReport oracle;
    std::map<std::string, double> deltas;
    double max_delta = 0;
    bool within_tolerance = true;
};

RunComparison compare_run(const ScenarioConfig &config, const RunBranch &branch);

struct ExpectationCheck {
    std::string run;
    std::string key;
    double expected = 0;
    double actual = 0;
    bool ok = false;
};

struct RunReport {
    ScenarioConfig config;
    std::vector<RunComparison> runs;
    std::vector<ExpectationCheck> checks;
    double wall_time_ms = 0;

    bool agreement() const;
    bool expectations_met() const;
};

RunReport run_scenario(const ScenarioConfig &config);

struct SweepRow {
    double parameter = 0;
    std::string branch;
    double probability = 0;
    double value = 0;
    /// Probability that F succeeds on the first attempt; NaN when the wire
    /// has no decomposition.
    double filter_success = 0;
    double oracle_delta = 0;
    bool within_tolerance = true;
    std::optional<double> expected;
};

struct SweepReport {
    ScenarioConfig config;
    std::vector<SweepRow> rows;
    double wall_time_ms = 0;

    bool agreement() const;
    bool expectations_met() const;
};

SweepReport run_sweep(const ScenarioConfig &config);

/// Serialized bodies exclude wall time unless requested, so equal inputs
/// give byte-identical output.
nlohmann::json report_json(const RunReport &report, bool include_wall_time = true);
nlohmann::json report_json(const SweepReport &report, bool include_wall_time = true);
std::string report_csv(const RunReport &report);
std::string report_csv(const SweepReport &report);

/// CLI exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitTolerance = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCapacity = 3;

int exit_code_for(const Error &error);

/// Runs the scenario (or its sweep) and returns kExitOk or kExitTolerance.
int scenario_status(const ScenarioConfig &config);

}  // namespace corrspace
