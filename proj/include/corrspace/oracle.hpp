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

#include <vector>

#include "corrspace/scenario_config.hpp"

namespace corrspace::oracle {

/// Projection onto a normalized state over `sites`; bit j of `state`
/// belongs to sites[j].
struct Projector {
    std::vector<int> sites;
    StateVector state;

    Projector(std::vector<int> sites, StateVector state);
};

struct Branch {
    double probability = 0;
    StateVector state;
};

/// Probability of the projection and the unnormalized post-state on the
/// remaining qubits, which keep their relative order.
Branch project(const StateVector &state, const Projector &p);

/// Applies a Kraus operator to one qubit; the register keeps its size.
Branch apply_kraus(const StateVector &state, int site, const CMat2 &k);

/// Wire amplitudes built by growing the register one site at a time from
/// the right boundary, with any front filter applied explicitly.
StateVector contract(const WireState &wire);

/// Amplitudes of Phi(x) for a wire template over sites first_site..N.
StateVector contract_boundary(const WireState &wire, int first_site, const CVec2 &x);

/// Least-squares x with `tail` = Phi(x)_{first_site}^N. Throws
/// kUnrecoverable when the two basis states are not independent or `tail`
/// is not of that form.
CVec2 recover_boundary(const WireState &wire, int first_site, const StateVector &tail);

/// Linear map Phi(x)_{from} -> Phi(map x)_{to} on the given bits of `state`,
/// which must be the top bits of the register.
StateVector map_tail(const StateVector &state,
                     int low_bits,
                     const WireState &wire,
                     int from_site,
                     int to_site,
                     const CMat2 &map);

/// Runs one scenario branch using only statevector operations.
ProtocolReport replay_protocol(const ScenarioConfig &config, const RunBranch &branch);

}  // namespace corrspace::oracle
