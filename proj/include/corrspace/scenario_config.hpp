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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "corrspace/protocols.hpp"

namespace corrspace {

enum class ProtocolKind {
    kUpload,
    kDownload,
    kOrthogonalize,
    kInverseUpload,
    kGateTeleportU,
    kGateTeleportCz,
    kSwap,
    kOverlap,
};

const char *protocol_name(ProtocolKind kind);
ProtocolKind protocol_from_name(const std::string &name);

/// How a scenario resolves its measurement outcome.
enum class OutcomeMode { kForced, kSample, kEnumerate };

/// How a scenario resolves filter branches.
enum class FilterMode { kSample, kForceSuccess, kForceFailThenSuccess, kEnumerate };

struct Expectation {
    /// "fidelity", "success", "sites_consumed", "prob:<branch>" or "metric:<name>".
    std::string key;
    double value = 0;
};

struct SweepSpec {
    /// "theta" or "r1".
    std::string parameter;
    std::vector<double> grid;
    /// Expected primary column per grid point; empty means unchecked.
    std::vector<double> expected;
};

/// A fully validated scenario, independent of the file format.
struct ScenarioConfig {
    std::string name;
    ProtocolKind protocol = ProtocolKind::kUpload;
    WireState wire;
    std::optional<WireState> second_wire;
    Eigen::VectorXcd psi;
    CMat2 unitary = CMat2::Identity();

    OutcomeMode outcome_mode = OutcomeMode::kForced;
    /// Forced outcome index: Bell B1..B4 as 0..3, download s, or the CZ
    /// choice pair first + 8 * second.
    int outcome = 0;
    FilterMode filter_mode = FilterMode::kForceSuccess;

    std::uint64_t seed = 0;
    double tolerance = kDefaultTolerance;
    bool prepare_orthogonalize = false;
    int max_attempts = 8;
    int rotation_sites = 1;
    int realign_sites = 0;
    int measured_offset = 1;
    bool dephase = false;

    std::optional<SweepSpec> sweep;
    std::vector<Expectation> expectations;
    /// The source document, re-serialized, for report echoes.
    std::string echo;
};

/// The branch choices of one concrete run. Empty optionals mean sampling
/// from `seed`.
struct RunBranch {
    std::optional<int> outcome;
    std::optional<std::vector<int>> filter_path;
    std::uint64_t seed = 0;

    BranchPicker outcome_picker() const;
    BranchPicker filter_picker() const;
};

/// Number of distinct measurement outcomes the protocol can produce.
int outcome_count(ProtocolKind kind);

/// Expands the scenario's branch policy into concrete runs.
std::vector<RunBranch> expand_branches(const ScenarioConfig &config);

}  // namespace corrspace
