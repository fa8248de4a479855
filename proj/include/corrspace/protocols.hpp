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

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "corrspace/branch.hpp"
#include "corrspace/wire.hpp"

namespace corrspace {

/// Bell states between a physical site in the m-basis and a second qubit:
/// B1 = |m0,0> + |m1,1>, B2 = |m0,0> - |m1,1>, B3 = |m0,1> + |m1,0>,
/// B4 = |m0,1> - |m1,0>, each scaled by 1/sqrt(2).
enum class BellOutcome { B1 = 0, B2 = 1, B3 = 2, B4 = 3 };

const char *bell_label(BellOutcome b);
BellOutcome bell_from_label(const std::string &label);

/// Coefficients of the Bell state as (m-index s, partner index r) -> b[s][r].
std::array<std::array<double, 2>, 2> bell_coefficients(BellOutcome b);

enum class FrameBasis { kCorrelation, kPhysical };

/// The state equals X^bit_flip Z^phase_flip applied to the ideal one, up to
/// global phase, in the declared reference basis (columns of `reference`).
struct PauliFrame {
    bool bit_flip = false;
    bool phase_flip = false;
    FrameBasis basis = FrameBasis::kCorrelation;
    CMat2 reference = CMat2::Identity();

    PauliFrame compose(const PauliFrame &other) const;
    /// Z^phase X^bit, the operator that undoes the frame in reference coordinates.
    CMat2 correction() const;
    std::string label() const;
};

PauliFrame correction_table(BellOutcome b);

/// A two-outcome instrument with K^dag K + K_bar^dag K_bar = I.
struct FilterPair {
    CMat2 k;
    CMat2 k_bar;
    std::string success_label;
    std::string failure_label;

    double completeness_error() const;
};

/// {F, F_bar} maps the primed basis {m0', m1'} onto the m-basis.
FilterPair make_filter_f(double r0, double r1, const LocalBasis &basis = LocalBasis::computational());

/// {G, G_bar} maps the m-basis back onto the primed basis.
FilterPair make_filter_g(double r0, double r1, const LocalBasis &basis = LocalBasis::computational());

struct BranchProbability {
    std::string label;
    double probability = 0;
};

struct ProtocolReport {
    bool success = true;
    double fidelity = 0;
    PauliFrame frame;
    std::optional<PauliFrame> second_frame;
    int sites_consumed = 0;
    std::string branch;
    std::vector<BranchProbability> branch_probabilities;
    std::map<std::string, double> metrics;
    std::optional<WireState> wire;
    std::optional<WireState> second_wire;
    std::optional<StateVector> physical;
    /// Frame-corrected coordinates of the output correlation state in the
    /// reference basis (length 2, or 4 for two wires with index i + 2 j).
    Eigen::VectorXcd correlation;
};

/// Orthonormal frame for the pair (e0, e1): Gram-Schmidt, completed with the
/// decomposition's phi vectors when e0 or e1 vanishes or they are parallel.
CMat2 reference_frame(const CVec2 &e0, const CVec2 &e1, const Decomposition &d);

/// e_s = B[m_s] |R>, the front correlation vectors seen in the m-basis.
std::array<CVec2, 2> m_basis_vectors(const WireState &wire, const LocalBasis &basis);

struct OrthogonalizeOptions {
    int max_attempts = 8;
    /// Sites spent after a failed attempt on restoring the right boundary.
    int realign_sites = 0;
};

/// Repeat-until-success {F, F_bar} filtering of the first unconsumed site.
/// On success the returned wire carries F as its front filter.
ProtocolReport orthogonalize_wire(const WireState &wire,
                                  BranchPicker &filter_picker,
                                  const OrthogonalizeOptions &options = {});

/// Bell projection of (first unconsumed site, psi) onto B1..B4.
/// psi holds the amplitudes lambda_0, lambda_1.
ProtocolReport upload_teleport(const WireState &wire, const CVec2 &psi, BranchPicker &picker);
ProtocolReport upload_teleport(const WireState &wire, const CVec2 &psi, BellOutcome outcome);

struct DownloadOptions {
    /// Distance from the output site to the measured site.
    int measured_offset = 1;
};

/// Produces sum_s Phi(phi_s)_{k+1} (x) |m_s>_k (x) Z~^s |psi~>_f directly
/// from the correlation amplitudes `psi` and measures site k in the m-basis.
ProtocolReport download(const WireState &wire,
                        const CVec2 &psi,
                        BranchPicker &picker,
                        const DownloadOptions &options = {});
ProtocolReport download(const WireState &wire, const CVec2 &psi, int outcome, const DownloadOptions &options = {});

struct InverseUploadOptions {
    /// Sites spent by the correlation-space rotation {+, -} -> {phi0, phi1}.
    int rotation_sites = 1;
    /// Dephase the ancilla in the m-basis once it is entangled with the wire.
    bool dephase_ancilla = false;
    OrthogonalizeOptions orthogonalize;
};

/// Uploads psi~ = lambda_0 |m0> + lambda_1 |m1> from an ancilla by a
/// controlled-Z in the m-basis, G filtering and a boundary rotation. The
/// target is Phi(psi) with the ancilla as the new front site.
ProtocolReport inverse_download_upload(const WireState &wire,
                                       const CVec2 &psi,
                                       BranchPicker &filter_picker,
                                       const InverseUploadOptions &options = {});

struct GateTeleportOptions {
    /// Sites spent by the basis change {phi0, phi1} -> {|0>, |1>}.
    int rotation_sites = 1;
};

/// Teleports U psi into the correlation space by projecting onto
/// (I (x) U^dag) |B>.
ProtocolReport gate_teleport_single(const WireState &wire,
                                    const CVec2 &psi,
                                    const CMat2 &u,
                                    BranchPicker &picker,
                                    const GateTeleportOptions &options = {});
ProtocolReport gate_teleport_single(const WireState &wire,
                                    const CVec2 &psi,
                                    const CMat2 &u,
                                    BellOutcome outcome,
                                    const GateTeleportOptions &options = {});

/// One of the eight orthonormal three-qubit projection states
/// (1/sqrt 2) sum_a (-1)^{z a} |a+x> |a+y> |m_a>.
struct CzChoice {
    int x = 0;
    int y = 0;
    int z = 0;

    int index() const {
        return x + 2 * y + 4 * z;
    }
    static CzChoice from_index(int i) {
        return {i & 1, (i >> 1) & 1, (i >> 2) & 1};
    }
};

/// Amplitude of the projection state at (q_first, q_second, s).
/// `hadamard_middle` selects |h_{a+y}> (|+>, |->) on the middle qubit.
double cz_projection_amplitude(const CzChoice &c, int q_first, int q_middle, int s, bool hadamard_middle);

/// Teleports CZ acting on psi2 (amplitude index i + 2 j for |i>_1 |j>_2)
/// into two wires via the Bell pair on qubits 3, 4.
ProtocolReport gate_teleport_cz(const Eigen::Vector4cd &psi2,
                                const WireState &wire_a,
                                const WireState &wire_b,
                                const CzChoice &first,
                                const CzChoice &second);
ProtocolReport gate_teleport_cz(const Eigen::Vector4cd &psi2,
                                const WireState &wire_a,
                                const WireState &wire_b,
                                BranchPicker &picker);

/// Bell projection of the two front sites in their m-bases.
ProtocolReport entanglement_swap(const WireState &wire_a, const WireState &wire_b, BellOutcome outcome);
ProtocolReport entanglement_swap(const WireState &wire_a, const WireState &wire_b, BranchPicker &picker);

/// Correlation-space fidelity between coordinates `actual` and `target`.
double coordinate_fidelity(const Eigen::VectorXcd &actual, const Eigen::VectorXcd &target);

}  // namespace corrspace
