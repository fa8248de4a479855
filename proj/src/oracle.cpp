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

#include "corrspace/oracle.hpp"

#include <algorithm>
#include <string>

namespace corrspace::oracle {

namespace {

constexpr double kSqrtHalf = 0.70710678118654752440;
constexpr double kNullBranch = 1e-14;
constexpr double kRecoveryCondition = 1e-9;
constexpr double kRecoveryResidual = 1e-8;

std::vector<double> normalized(std::vector<double> p) {
    double total = 0;
    for (double x : p) {
        total += x;
    }
    if (!(total > 0)) {
        throw Error(ErrorCode::kZeroVector, "all branches have zero weight");
    }
    for (double &x : p) {
        x /= total;
    }
    return p;
}

void add(ProtocolReport &report, const std::string &label, double p) {
    report.branch_probabilities.push_back({label, p});
}

StateVector single(const CVec2 &v) {
    return StateVector::qubit(v);
}

Eigen::MatrixXcd boundary_basis(const WireState &wire, int first_site) {
    StateVector b0 = contract_boundary(wire, first_site, ket(0));
    StateVector b1 = contract_boundary(wire, first_site, ket(1));
    Eigen::MatrixXcd b(b0.size(), 2);
    b.col(0) = b0.amplitudes();
    b.col(1) = b1.amplitudes();
    return b;
}

// Least-squares coefficients of `target` in the span of the columns of `basis`.
Eigen::VectorXcd solve_in_span(const Eigen::MatrixXcd &basis, const Eigen::VectorXcd &target) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(basis, Eigen::ComputeThinU | Eigen::ComputeThinV);
    auto sv = svd.singularValues();
    if (!(sv(0) > 0) || sv(sv.size() - 1) < kRecoveryCondition * sv(0)) {
        throw Error(ErrorCode::kUnrecoverable, "wire basis states are linearly dependent on this tail");
    }
    Eigen::VectorXcd x = svd.solve(target);
    double resid = (basis * x - target).norm();
    if (resid > kRecoveryResidual * std::max(1.0, target.norm())) {
        throw Error(ErrorCode::kUnrecoverable, "state is not a wire state of the expected form");
    }
    return x;
}

// |m_s> projection of the front qubit followed by boundary recovery.
std::array<CVec2, 2> front_correlations(const WireState &wire, const StateVector &front_state, const LocalBasis &basis) {
    std::array<CVec2, 2> e;
    for (int s = 0; s < 2; ++s) {
        Branch b = project(front_state, Projector({0}, single(basis[s])));
        e[s] = b.state.norm() > 0 ? recover_boundary(wire, wire.first_site + 1, b.state) : CVec2(CVec2::Zero());
    }
    return e;
}

Decomposition fallback_computational() {
    return make_decomposition(LocalBasis::computational(), ket(0), ket(1), 0);
}

StateVector bell_projector(const LocalBasis &site, const CMat2 &partner_dag, BellOutcome b) {
    // Bit 0: the wire site (components in the computational basis), bit 1: partner.
    auto c = bell_coefficients(b);
    StateVector::Amplitudes amps = StateVector::Amplitudes::Zero(4);
    for (int s = 0; s < 2; ++s) {
        for (int r = 0; r < 2; ++r) {
            CVec2 partner = partner_dag * ket(r);
            for (int a = 0; a < 2; ++a) {
                for (int q = 0; q < 2; ++q) {
                    amps(a + 2 * q) += c[s][r] * site[s](a) * partner(q);
                }
            }
        }
    }
    return StateVector(2, amps);
}

void finish_single(ProtocolReport &report, const CVec2 &x, const CMat2 &frame_basis, const CVec2 &target) {
    report.frame.reference = frame_basis;
    CVec2 coords = report.frame.correction() * (frame_basis.adjoint() * x);
    report.correlation = coords;
    if (coords.norm() > 0) {
        report.fidelity = vector_fidelity(coords, target);
    } else {
        report.success = false;
        report.fidelity = 0;
    }
}

struct Orthogonalized {
    WireState wire;
    int failures = 0;
};

Orthogonalized orthogonalize_into(const WireState &wire,
                                  BranchPicker &picker,
                                  int max_attempts,
                                  int realign_sites,
                                  ProtocolReport &report) {
    Decomposition d = decompose(wire);
    LocalBasis basis = d.basis();
    FilterPair filter = make_filter_f(d.r0, d.r1, basis);
    CVec2 xi = std::sqrt((1 - d.r1) / 2) * basis.m0 + std::sqrt((1 + d.r1) / 2) * basis.m1;

    WireState current = wire;
    current.front_filter.reset();
    StateVector reg = contract(current);
    Orthogonalized out;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        if (reg.num_qubits() < 2) {
            throw Error(ErrorCode::kWireExhausted, "filtering needs two unconsumed sites");
        }
        Branch ok = apply_kraus(reg, 0, filter.k);
        Branch fail = apply_kraus(reg, 0, filter.k_bar);
        std::string tag = "attempt" + std::to_string(attempt) + ":";
        add(report, tag + "F", ok.probability);
        add(report, tag + "Fbar", fail.probability);
        int branch = picker.pick({ok.probability, fail.probability});
        if (branch == 0) {
            if (ok.probability < kNullBranch) {
                throw Error(ErrorCode::kZeroVector, "forced F branch has zero probability");
            }
            report.branch += "F";
            CVec2 r = recover_boundary(current, current.first_site, reg);
            StateVector ideal = tensor_product(contract_boundary(current, current.first_site + 1, r(0) * d.phi0),
                                               single(basis.m0));
            StateVector other = tensor_product(contract_boundary(current, current.first_site + 1, r(1) * d.phi1),
                                               single(basis.m1));
            ideal = StateVector(ideal.num_qubits(), ideal.amplitudes() + other.amplitudes());
            report.fidelity = fidelity(ok.state, ideal);
            report.metrics["attempts"] = attempt;
            report.metrics["success_probability"] = ok.probability;
            current.right = r;
            current.front_filter = filter.k;
            out.wire = current;
            return out;
        }
        if (fail.probability < kNullBranch) {
            throw Error(ErrorCode::kZeroVector, "forced Fbar branch has zero probability");
        }
        report.branch += "Fbar,";
        ++out.failures;
        Branch tail = project(fail.state, Projector({0}, single(xi)));
        int next = current.first_site + 1 + realign_sites;
        if (next > current.total_sites) {
            throw Error(ErrorCode::kWireExhausted, "filtering failures consumed the wire");
        }
        reg = map_tail(tail.state, 0, current, current.first_site + 1, next, d.phi_to_computational());
        current.first_site = next;
    }
    throw Error(ErrorCode::kAttemptsExhausted,
                "filter did not succeed within " + std::to_string(max_attempts) + " attempts");
}

WireState prepared(const ScenarioConfig &config, const WireState &wire, BranchPicker &filter, ProtocolReport &report) {
    if (!config.prepare_orthogonalize) {
        return wire;
    }
    Orthogonalized o = orthogonalize_into(wire, filter, config.max_attempts, config.realign_sites, report);
    report.sites_consumed += o.failures * (1 + config.realign_sites);
    report.branch += ";";
    return o.wire;
}

CVec2 psi2(const ScenarioConfig &config) {
    if (config.psi.size() != 2) {
        throw Error(ErrorCode::kDimensionMismatch, "protocol needs a single-qubit psi");
    }
    return config.psi;
}

ProtocolReport replay_upload_like(const ScenarioConfig &config, const RunBranch &branch, bool gate) {
    BranchPicker fp = branch.filter_picker();
    BranchPicker op = branch.outcome_picker();
    ProtocolReport report;
    WireState wire = prepared(config, config.wire, fp, report);
    CVec2 psi = psi2(config);
    if (gate && !is_unitary(config.unitary, kDefaultTolerance)) {
        throw Error(ErrorCode::kNonUnitary, "gate teleportation needs a unitary");
    }
    Decomposition d = decompose(wire);
    LocalBasis basis = d.basis();
    const int f = wire.first_site;
    StateVector front = contract(wire);
    int tail_site = f + 1;
    if (gate) {
        tail_site = f + 1 + config.rotation_sites;
        if (config.rotation_sites < 1 || tail_site > wire.total_sites) {
            throw Error(ErrorCode::kWireExhausted, "basis change would run past the end of the wire");
        }
        front = map_tail(front, 1, wire, f + 1, tail_site, d.phi_to_computational());
    } else if (front.num_qubits() < 2) {
        throw Error(ErrorCode::kWireExhausted, "upload needs two unconsumed sites");
    }
    WireState rotated = wire;
    rotated.first_site = tail_site - 1;
    rotated.front_filter.reset();

    StateVector reg = tensor_product(front, single(psi));
    CMat2 u_dag = gate ? CMat2(config.unitary.adjoint()) : CMat2(CMat2::Identity());
    std::vector<Branch> outcomes;
    std::vector<double> p;
    for (int i = 0; i < 4; ++i) {
        outcomes.push_back(project(reg, Projector({1, 0}, bell_projector(basis, u_dag, static_cast<BellOutcome>(i)))));
        p.push_back(outcomes.back().probability);
        add(report, bell_label(static_cast<BellOutcome>(i)), p.back());
    }
    auto outcome = static_cast<BellOutcome>(op.pick(p));
    int idx = static_cast<int>(outcome);
    report.branch += bell_label(outcome);
    report.frame = correction_table(outcome);
    report.metrics["probability"] = p[idx];
    report.sites_consumed += gate ? 1 + config.rotation_sites : 1;

    auto e = front_correlations(rotated, front, basis);
    CMat2 frame = gate ? reference_frame(e[0], e[1], fallback_computational()) : reference_frame(e[0], e[1], d);
    CVec2 x = outcomes[idx].state.norm() > 0 ? recover_boundary(wire, tail_site, outcomes[idx].state)
                                             : CVec2(CVec2::Zero());
    CVec2 target = gate ? CVec2(config.unitary * psi) : psi;
    finish_single(report, x, frame, target);
    WireState out = wire;
    out.right = x;
    out.first_site = tail_site;
    out.front_filter.reset();
    report.wire = out;
    return report;
}

ProtocolReport replay_download(const ScenarioConfig &config, const RunBranch &branch) {
    BranchPicker op = branch.outcome_picker();
    const WireState &wire = config.wire;
    CVec2 psi = psi2(config);
    int f = wire.first_site;
    int k = f + config.measured_offset;
    if (config.measured_offset < 1 || k + 1 > wire.total_sites) {
        throw Error(ErrorCode::kWireExhausted, "download needs the output site, the measured site and a tail");
    }
    Decomposition d = decompose(wire);
    LocalBasis basis = d.basis();
    CMat2 mb = basis.matrix();
    CMat2 z_tilde = mb * pauli_z() * mb.adjoint();
    CVec2 psi_tilde = unit(CVec2(psi(0) * basis.m0 + psi(1) * basis.m1));

    StateVector joint(1);
    for (int s = 0; s < 2; ++s) {
        CVec2 out = s == 0 ? psi_tilde : CVec2(z_tilde * psi_tilde);
        StateVector term = tensor_product(tensor_product(contract_boundary(wire, k + 1, d.phi(s)), single(basis[s])),
                                          single(out));
        joint = s == 0 ? term : StateVector(term.num_qubits(), joint.amplitudes() + term.amplitudes());
    }

    ProtocolReport report;
    std::vector<Branch> br;
    std::vector<double> p;
    for (int s = 0; s < 2; ++s) {
        br.push_back(project(joint, Projector({1}, single(basis[s]))));
        p.push_back(br.back().probability);
        add(report, "s=" + std::to_string(s), p.back());
    }
    int s = op.pick(p);
    report.branch = "s=" + std::to_string(s);
    report.frame.phase_flip = s == 1;
    report.frame.basis = FrameBasis::kPhysical;
    report.frame.reference = mb;
    report.metrics["probability"] = p[s];
    report.sites_consumed = k - f + 1;

    // Reduced state of the output qubit.
    const StateVector &post = br[s].state;
    CMat2 rho = CMat2::Zero();
    for (Eigen::Index rest = 0; rest < post.size() / 2; ++rest) {
        CVec2 col(post[2 * rest], post[2 * rest + 1]);
        rho += col * col.adjoint();
    }
    rho /= rho.trace().real();
    Eigen::SelfAdjointEigenSolver<CMat2> eig(rho);
    CVec2 phys = eig.eigenvectors().col(1);
    CMat2 corr = mb * report.frame.correction() * mb.adjoint();
    CMat2 rho_c = corr * rho * corr.adjoint();
    report.fidelity = psi_tilde.dot(rho_c * psi_tilde).real();
    report.physical = single(phys);
    report.correlation = mb.adjoint() * corr * phys;

    Branch tail = project(post, Projector({0}, single(phys)));
    WireState rest = wire;
    rest.first_site = k + 1;
    rest.right = recover_boundary(wire, k + 1, tail.state);
    rest.front_filter.reset();
    report.wire = rest;
    return report;
}

ProtocolReport replay_orthogonalize(const ScenarioConfig &config, const RunBranch &branch) {
    BranchPicker fp = branch.filter_picker();
    ProtocolReport report;
    report.frame.basis = FrameBasis::kPhysical;
    Orthogonalized o = orthogonalize_into(config.wire, fp, config.max_attempts, config.realign_sites, report);
    report.frame.reference = decompose(config.wire).basis().matrix();
    report.sites_consumed = o.failures * (1 + config.realign_sites);
    report.wire = o.wire;
    return report;
}

ProtocolReport replay_inverse_upload(const ScenarioConfig &config, const RunBranch &branch) {
    BranchPicker fp = branch.filter_picker();
    CVec2 psi = psi2(config);
    const int r = config.rotation_sites;
    if (r < 1) {
        throw Error(ErrorCode::kInvalidArgument, "rotation_sites must be at least 1");
    }
    Decomposition d = decompose(config.wire);
    LocalBasis basis = d.basis();
    FilterPair g = make_filter_g(d.r0, d.r1, basis);
    ProtocolReport report;
    Orthogonalized o = orthogonalize_into(config.wire, fp, config.max_attempts, config.realign_sites, report);
    report.metrics.clear();
    report.fidelity = 0;
    const int wasted = o.failures * (1 + config.realign_sites);
    const WireState &w = o.wire;
    const int f = w.first_site;
    if (f + r > w.total_sites) {
        throw Error(ErrorCode::kWireExhausted, "rotation would run past the end of the wire");
    }

    StateVector reg = tensor_product(contract(w), single(CVec2(psi(0) * basis.m0 + psi(1) * basis.m1)));
    CMat2 p1 = outer(basis.m1, basis.m1);
    CMat4 cz = CMat4::Identity() - 2 * kron(p1, p1);
    reg = reg.apply(0, 1, cz);

    Branch g1 = apply_kraus(reg, 1, g.k);
    add(report, "G(front)", g1.probability);
    add(report, "Gbar(front)", 1 - g1.probability);
    if (fp.pick({g1.probability, 1 - g1.probability}) != 0) {
        report.success = false;
        report.branch += ";Gbar(front)";
        report.sites_consumed = wasted + 1;
        return report;
    }
    report.branch += ";G(front)";

    std::vector<std::pair<double, StateVector>> mixture;
    if (config.dephase) {
        std::vector<double> wu;
        std::vector<StateVector> states;
        for (int u = 0; u < 2; ++u) {
            Branch b = apply_kraus(g1.state, 0, outer(basis[u], basis[u]));
            wu.push_back(b.probability);
            states.push_back(b.state);
        }
        wu = normalized(wu);
        add(report, "dephase:u=0", wu[0]);
        add(report, "dephase:u=1", wu[1]);
        for (int u = 0; u < 2; ++u) {
            if (wu[u] >= kNullBranch) {
                mixture.emplace_back(wu[u], states[u]);
            }
        }
    } else {
        mixture.emplace_back(1.0, g1.state);
    }

    CMat2 q = outer(d.phi0, ket_plus()) + outer(d.phi1, ket_minus());
    WireState templ = w;
    templ.front_filter.reset();
    StateVector target = contract_boundary(templ, f + r - 1, psi);
    double p_g2 = 0;
    double acc = 0;
    for (const auto &[weight, st] : mixture) {
        StateVector rotated = map_tail(st, 1, templ, f, f + r, q);
        Branch g2 = apply_kraus(rotated, 0, g.k);
        p_g2 += weight * g2.probability;
        if (g2.probability > kNullBranch) {
            acc += weight * g2.probability * fidelity(g2.state, target);
        }
    }
    add(report, "G(ancilla)", p_g2);
    add(report, "Gbar(ancilla)", 1 - p_g2);
    report.sites_consumed = wasted + r;
    if (fp.pick({p_g2, 1 - p_g2}) != 0) {
        report.success = false;
        report.branch += ";Gbar(ancilla)";
        return report;
    }
    report.branch += ";G(ancilla)";
    report.success = true;
    report.fidelity = p_g2 > 0 ? acc / p_g2 : 0;
    report.correlation = psi;
    WireState out = templ;
    out.first_site = f + r - 1;
    out.right = psi;
    report.wire = out;
    return report;
}

Eigen::VectorXcd flatten(const CMat2 &x) {
    Eigen::VectorXcd v(4);
    for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) {
            v(i + 2 * j) = x(i, j);
        }
    }
    return v;
}

// Correlation matrix T with tail = sum_ij T(i,j) Phi_a(|i>) (x) Phi_b(|j>).
CMat2 recover_pair(const WireState &a, const WireState &b, const StateVector &tail) {
    Eigen::MatrixXcd basis(tail.size(), 4);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            StateVector col =
                tensor_product(contract_boundary(b, b.first_site + 1, ket(j)), contract_boundary(a, a.first_site + 1, ket(i)));
            basis.col(i + 2 * j) = col.amplitudes();
        }
    }
    Eigen::VectorXcd x = solve_in_span(basis, tail.amplitudes());
    CMat2 t;
    t << x(0), x(2), x(1), x(3);
    return t;
}

struct PairFrames {
    LocalBasis ba;
    LocalBasis bb;
    CMat2 ua;
    CMat2 ub;
};

PairFrames pair_frames(const WireState &a, const WireState &b, const StateVector &sa, const StateVector &sb) {
    Decomposition da = decompose(a);
    Decomposition db = decompose(b);
    PairFrames out{da.basis(), db.basis(), CMat2(), CMat2()};
    auto ea = front_correlations(a, sa, out.ba);
    auto eb = front_correlations(b, sb, out.bb);
    out.ua = reference_frame(ea[0], ea[1], da);
    out.ub = reference_frame(eb[0], eb[1], db);
    return out;
}

ProtocolReport replay_cz(const ScenarioConfig &config, const RunBranch &branch) {
    if (config.psi.size() != 4 || !config.second_wire) {
        throw Error(ErrorCode::kDimensionMismatch, "CZ teleportation needs a two-qubit psi and two wires");
    }
    BranchPicker fp = branch.filter_picker();
    BranchPicker op = branch.outcome_picker();
    ProtocolReport report;
    WireState a = prepared(config, config.wire, fp, report);
    WireState b = prepared(config, *config.second_wire, fp, report);
    StateVector sa = contract(a);
    StateVector sb = contract(b);
    if (sa.num_qubits() < 2 || sb.num_qubits() < 2) {
        throw Error(ErrorCode::kWireExhausted, "two-wire protocol needs two unconsumed sites per wire");
    }
    PairFrames frames = pair_frames(a, b, sa, sb);
    const int na = sa.num_qubits();

    StateVector::Amplitudes bell34 = StateVector::Amplitudes::Zero(4);
    bell34(0) = kSqrtHalf;
    bell34(3) = kSqrtHalf;
    StateVector reg = tensor_product(tensor_product(sb, sa), tensor_product(StateVector(2, bell34),
                                                                            StateVector(2, config.psi)));

    auto projector = [](const CzChoice &c, const LocalBasis &basis, bool hadamard) {
        StateVector::Amplitudes amps = StateVector::Amplitudes::Zero(8);
        for (int q = 0; q < 2; ++q) {
            for (int mid = 0; mid < 2; ++mid) {
                for (int s = 0; s < 2; ++s) {
                    for (int a = 0; a < 2; ++a) {
                        amps(q + 2 * mid + 4 * a) += cz_projection_amplitude(c, q, mid, s, hadamard) * basis[s](a);
                    }
                }
            }
        }
        return StateVector(3, amps);
    };

    std::vector<double> p(64);
    std::vector<StateVector> posts;
    for (int j = 0; j < 8; ++j) {
        for (int i = 0; i < 8; ++i) {
            Branch first = project(reg, Projector({0, 2, 4}, projector(CzChoice::from_index(i), frames.ba, false)));
            Branch second =
                project(first.state, Projector({0, 1, 2 + na - 1}, projector(CzChoice::from_index(j), frames.bb, true)));
            p[i + 8 * j] = first.probability * second.probability;
            posts.push_back(second.state);
            add(report, "P1=" + std::to_string(i) + ",P2=" + std::to_string(j), p[i + 8 * j]);
        }
    }
    int chosen = op.pick(p);
    CzChoice c1 = CzChoice::from_index(chosen & 7);
    CzChoice c2 = CzChoice::from_index(chosen >> 3);
    report.branch += "P1=" + std::to_string(c1.index()) + ",P2=" + std::to_string(c2.index());
    report.frame.bit_flip = c1.x;
    report.frame.phase_flip = (c1.z ^ c2.x ^ c2.y) != 0;
    report.frame.reference = frames.ua;
    PauliFrame fb;
    fb.bit_flip = c2.x;
    fb.phase_flip = (c2.z ^ c1.x ^ c1.y) != 0;
    fb.reference = frames.ub;
    report.second_frame = fb;
    report.sites_consumed += 1;
    report.metrics["probability"] = p[chosen];
    report.success = p[chosen] > kNullBranch;
    if (!report.success) {
        report.fidelity = 0;
        return report;
    }
    CMat2 t = recover_pair(a, b, posts[chosen]);
    CMat2 x = report.frame.correction() * frames.ua.adjoint() * t * frames.ub.conjugate() * fb.correction().transpose();
    CMat2 target;
    target << config.psi(0), config.psi(2), config.psi(1), -config.psi(3);
    report.correlation = flatten(x);
    report.fidelity = vector_fidelity(flatten(x), flatten(target));
    return report;
}

ProtocolReport replay_swap(const ScenarioConfig &config, const RunBranch &branch) {
    if (!config.second_wire) {
        throw Error(ErrorCode::kInvalidArgument, "swap needs a second wire");
    }
    BranchPicker fp = branch.filter_picker();
    BranchPicker op = branch.outcome_picker();
    ProtocolReport report;
    WireState a = prepared(config, config.wire, fp, report);
    WireState b = prepared(config, *config.second_wire, fp, report);
    StateVector sa = contract(a);
    StateVector sb = contract(b);
    if (sa.num_qubits() < 2 || sb.num_qubits() < 2) {
        throw Error(ErrorCode::kWireExhausted, "two-wire protocol needs two unconsumed sites per wire");
    }
    PairFrames frames = pair_frames(a, b, sa, sb);
    const int na = sa.num_qubits();
    StateVector reg = tensor_product(sb, sa);

    std::vector<Branch> br;
    std::vector<double> p;
    for (int i = 0; i < 4; ++i) {
        auto bo = static_cast<BellOutcome>(i);
        auto c = bell_coefficients(bo);
        StateVector::Amplitudes amps = StateVector::Amplitudes::Zero(4);
        for (int s = 0; s < 2; ++s) {
            for (int r = 0; r < 2; ++r) {
                for (int qa = 0; qa < 2; ++qa) {
                    for (int qb = 0; qb < 2; ++qb) {
                        amps(qa + 2 * qb) += c[s][r] * frames.ba[s](qa) * frames.bb[r](qb);
                    }
                }
            }
        }
        br.push_back(project(reg, Projector({0, na}, StateVector(2, amps))));
        p.push_back(br.back().probability);
        add(report, bell_label(bo), p.back());
    }
    auto outcome = static_cast<BellOutcome>(op.pick(p));
    int idx = static_cast<int>(outcome);
    report.branch += bell_label(outcome);
    report.frame.reference = frames.ua;
    PauliFrame fb = correction_table(outcome);
    fb.reference = frames.ub;
    report.second_frame = fb;
    report.sites_consumed += 1;
    report.metrics["probability"] = p[idx];
    report.success = p[idx] > kNullBranch;
    if (!report.success) {
        report.fidelity = 0;
        return report;
    }
    CMat2 t = recover_pair(a, b, br[idx].state);
    CMat2 x = frames.ua.adjoint() * t * frames.ub.conjugate() * fb.correction().transpose();
    report.correlation = flatten(x);
    report.metrics["correlation_fidelity"] = vector_fidelity(flatten(x), flatten(CMat2::Identity()));

    // Downloaded qubits: |i>_corr -> |m_i> on each wire.
    StateVector::Amplitudes phys = StateVector::Amplitudes::Zero(4);
    StateVector::Amplitudes ideal = StateVector::Amplitudes::Zero(4);
    for (int qa = 0; qa < 2; ++qa) {
        for (int qb = 0; qb < 2; ++qb) {
            for (int i = 0; i < 2; ++i) {
                ideal(qa + 2 * qb) += kSqrtHalf * frames.ba[i](qa) * frames.bb[i](qb);
                for (int j = 0; j < 2; ++j) {
                    phys(qa + 2 * qb) += x(i, j) * frames.ba[i](qa) * frames.bb[j](qb);
                }
            }
        }
    }
    report.physical = StateVector(2, phys);
    report.fidelity = fidelity(*report.physical, StateVector(2, ideal));
    return report;
}

ProtocolReport replay_overlap(const ScenarioConfig &config) {
    WireState other = config.wire;
    other.right = psi2(config);
    StateVector a = contract(config.wire);
    StateVector b = contract(other);
    Complex ov = a.inner(b) / std::sqrt(a.squared_norm() * b.squared_norm());
    ProtocolReport report;
    report.branch = "overlap";
    report.fidelity = std::norm(ov);
    report.metrics["overlap_re"] = ov.real();
    report.metrics["overlap_im"] = ov.imag();
    return report;
}

}  // namespace

Projector::Projector(std::vector<int> sites_in, StateVector state_in) : sites(std::move(sites_in)), state(std::move(state_in)) {
    if (static_cast<int>(sites.size()) != state.num_qubits()) {
        throw Error(ErrorCode::kDimensionMismatch, "projector state size does not match its site list");
    }
    if (std::abs(state.norm() - 1) > kCompletenessTolerance) {
        throw Error(ErrorCode::kInvalidArgument, "projector state must be normalized");
    }
}

Branch project(const StateVector &state, const Projector &p) {
    const int n = state.num_qubits();
    const int k = static_cast<int>(p.sites.size());
    std::uint64_t used = 0;
    for (int s : p.sites) {
        if (s < 0 || s >= n) {
            throw Error(ErrorCode::kSiteOutOfRange, "projector site " + std::to_string(s) + " outside register");
        }
        if (used & (std::uint64_t{1} << s)) {
            throw Error(ErrorCode::kInvalidArgument, "projector sites must be distinct");
        }
        used |= std::uint64_t{1} << s;
    }
    if (n - k < 1) {
        throw Error(ErrorCode::kInvalidArgument, "projection must leave at least one qubit");
    }
    std::vector<int> rest;
    for (int b = 0; b < n; ++b) {
        if (!(used & (std::uint64_t{1} << b))) {
            rest.push_back(b);
        }
    }
    auto scatter = [](Eigen::Index compact, const std::vector<int> &bits) {
        Eigen::Index full = 0;
        for (size_t j = 0; j < bits.size(); ++j) {
            if ((compact >> j) & 1) {
                full |= Eigen::Index{1} << bits[j];
            }
        }
        return full;
    };
    std::vector<Eigen::Index> proj_offsets(std::size_t{1} << k);
    for (Eigen::Index q = 0; q < static_cast<Eigen::Index>(proj_offsets.size()); ++q) {
        proj_offsets[q] = scatter(q, p.sites);
    }
    StateVector::Amplitudes out = StateVector::Amplitudes::Zero(Eigen::Index{1} << (n - k));
    for (Eigen::Index r = 0; r < out.size(); ++r) {
        Eigen::Index base = scatter(r, rest);
        Complex acc = 0;
        for (size_t q = 0; q < proj_offsets.size(); ++q) {
            acc += std::conj(p.state[static_cast<Eigen::Index>(q)]) * state[base | proj_offsets[q]];
        }
        out(r) = acc;
    }
    double total = state.squared_norm();
    if (!(total > 0)) {
        throw Error(ErrorCode::kZeroVector, "cannot project the zero state");
    }
    StateVector post(n - k, std::move(out));
    return {post.squared_norm() / total, post};
}

Branch apply_kraus(const StateVector &state, int site, const CMat2 &k) {
    StateVector post = state.apply(site, k);
    double total = state.squared_norm();
    if (!(total > 0)) {
        throw Error(ErrorCode::kZeroVector, "cannot filter the zero state");
    }
    return {post.squared_norm() / total, post};
}

StateVector contract(const WireState &wire) {
    const int n = wire.unconsumed();
    if (n < 1) {
        throw Error(ErrorCode::kWireExhausted, "wire has no unconsumed sites");
    }
    if (n > kMaxWireSites) {
        throw Error(ErrorCode::kCapacityExceeded, "cannot contract more than " + std::to_string(kMaxWireSites) + " sites");
    }
    // bond[i] holds A[l_j] ... A[l_k] |R> for the sites processed so far.
    std::vector<CVec2> bond{wire.a0 * wire.right, wire.a1 * wire.right};
    for (int j = 1; j < n; ++j) {
        std::vector<CVec2> next(bond.size() * 2);
        for (size_t idx = 0; idx < bond.size(); ++idx) {
            next[idx] = wire.a0 * bond[idx];
            next[idx + bond.size()] = wire.a1 * bond[idx];
        }
        bond = std::move(next);
    }
    StateVector::Amplitudes amps(static_cast<Eigen::Index>(bond.size()));
    for (size_t idx = 0; idx < bond.size(); ++idx) {
        amps(static_cast<Eigen::Index>(idx)) = wire.left.dot(bond[idx]);
    }
    StateVector out(n, std::move(amps));
    if (wire.front_filter) {
        out = out.apply(0, *wire.front_filter);
    }
    return out;
}

StateVector contract_boundary(const WireState &wire, int first_site, const CVec2 &x) {
    WireState w = wire;
    w.first_site = first_site;
    w.right = x;
    w.front_filter.reset();
    return contract(w);
}

CVec2 recover_boundary(const WireState &wire, int first_site, const StateVector &tail) {
    Eigen::MatrixXcd basis = boundary_basis(wire, first_site);
    if (basis.rows() != tail.size()) {
        throw Error(ErrorCode::kDimensionMismatch, "tail size does not match the wire template");
    }
    return solve_in_span(basis, tail.amplitudes());
}

StateVector map_tail(const StateVector &state,
                     int low_bits,
                     const WireState &wire,
                     int from_site,
                     int to_site,
                     const CMat2 &map) {
    Eigen::MatrixXcd old_basis = boundary_basis(wire, from_site);
    Eigen::MatrixXcd new_basis(Eigen::Index{1} << (wire.total_sites - to_site + 1), 2);
    new_basis.col(0) = contract_boundary(wire, to_site, map * ket(0)).amplitudes();
    new_basis.col(1) = contract_boundary(wire, to_site, map * ket(1)).amplitudes();
    const Eigen::Index low = Eigen::Index{1} << low_bits;
    if (old_basis.rows() * low != state.size()) {
        throw Error(ErrorCode::kDimensionMismatch, "register does not end with the expected wire tail");
    }
    const int out_qubits = low_bits + (wire.total_sites - to_site + 1);
    StateVector::Amplitudes out = StateVector::Amplitudes::Zero(new_basis.rows() * low);
    for (Eigen::Index l = 0; l < low; ++l) {
        Eigen::VectorXcd slice(old_basis.rows());
        for (Eigen::Index h = 0; h < old_basis.rows(); ++h) {
            slice(h) = state[l + low * h];
        }
        if (slice.norm() == 0) {
            continue;
        }
        Eigen::VectorXcd x = solve_in_span(old_basis, slice);
        Eigen::VectorXcd mapped = new_basis * x;
        for (Eigen::Index h = 0; h < new_basis.rows(); ++h) {
            out(l + low * h) = mapped(h);
        }
    }
    return StateVector(out_qubits, std::move(out));
}

ProtocolReport replay_protocol(const ScenarioConfig &config, const RunBranch &branch) {
    int qubits = config.wire.unconsumed() + 1;
    if (config.protocol == ProtocolKind::kGateTeleportCz && config.second_wire) {
        qubits = 4 + config.wire.unconsumed() + config.second_wire->unconsumed();
    } else if (config.protocol == ProtocolKind::kSwap && config.second_wire) {
        qubits = config.wire.unconsumed() + config.second_wire->unconsumed();
    }
    if (qubits > kMaxWireSites) {
        throw Error(ErrorCode::kCapacityExceeded,
                    "oracle replay needs " + std::to_string(qubits) + " qubits, limit is " +
                        std::to_string(kMaxWireSites));
    }
    switch (config.protocol) {
        case ProtocolKind::kUpload:
            return replay_upload_like(config, branch, false);
        case ProtocolKind::kGateTeleportU:
            return replay_upload_like(config, branch, true);
        case ProtocolKind::kDownload:
            return replay_download(config, branch);
        case ProtocolKind::kOrthogonalize:
            return replay_orthogonalize(config, branch);
        case ProtocolKind::kInverseUpload:
            return replay_inverse_upload(config, branch);
        case ProtocolKind::kGateTeleportCz:
            return replay_cz(config, branch);
        case ProtocolKind::kSwap:
            return replay_swap(config, branch);
        case ProtocolKind::kOverlap:
            return replay_overlap(config);
    }
    throw Error(ErrorCode::kInvalidArgument, "unknown protocol");
}

}  // namespace corrspace::oracle
