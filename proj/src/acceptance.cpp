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

#include "corrspace/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "corrspace/oracle.hpp"
#include "corrspace/scenario.hpp"

namespace corrspace {

namespace {

// Pinned tolerances.
constexpr double kLawTol = 1e-10;
constexpr double kFidelityTol = 1e-10;
constexpr double kCompletenessTol = 1e-12;
constexpr double kOracleTol = 1e-10;
constexpr double kBoundaryTol = 1e-12;
constexpr double kDistortionGap = 1e-6;

const std::vector<std::string> kProtocolScenarios = {"cluster_upload",
                                                     "download",
                                                     "orthogonalize",
                                                     "inverse_upload",
                                                     "gate_identity",
                                                     "gate_hadamard",
                                                     "gate_t",
                                                     "cz",
                                                     "swap"};
const std::vector<std::string> kSweepScenarios = {"theta_sweep", "r1_sweep"};

CVec2 random_qubit(std::mt19937_64 &rng) {
    std::normal_distribution<double> n;
    return CVec2(Complex(n(rng), n(rng)), Complex(n(rng), n(rng))).normalized();
}

CMat2 random_su2(std::mt19937_64 &rng) {
    CVec2 v = random_qubit(rng);
    CMat2 w;
    w << v(0), -std::conj(v(1)), v(1), std::conj(v(0));
    return w;
}

std::string sci(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}

std::string scenario_path(const std::string &dir, const std::string &name) {
    return (std::filesystem::path(dir) / (name + ".scenario")).string();
}

nlohmann::json read_json(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::kConfig, "cannot open " + path);
    }
    return nlohmann::json::parse(in);
}

CriterionResult overlap_law() {
    CriterionResult r{1, "theta-family overlap equals cos^N theta", true, "", 0};
    const double pi = std::numbers::pi;
    double worst = 0;
    for (double theta : {0.0, pi / 6, pi / 4, pi / 3, pi / 2}) {
        for (int n = 1; n <= 8; ++n) {
            WireState plus = theta_wire(theta, n, ket_plus());
            WireState minus = theta_wire(theta, n, ket_minus());
            Complex ov = normalized_wire_overlap(plus, minus);
            worst = std::max(worst, std::abs(ov - std::pow(std::cos(theta), n)));
        }
    }
    r.passed = worst <= kLawTol;
    r.detail = "max |overlap - cos^N| = " + sci(worst);
    return r;
}

CriterionResult cluster_upload() {
    CriterionResult r{2, "cluster-wire upload, 50 random states x 4 Bell outcomes", true, "", 0};
    std::mt19937_64 rng(2026);
    WireState wire = cluster_wire(4);
    double worst = 0;
    for (int i = 0; i < 50; ++i) {
        CVec2 psi = random_qubit(rng);
        for (int b = 0; b < 4; ++b) {
            ProtocolReport rep = upload_teleport(wire, psi, static_cast<BellOutcome>(b));
            worst = std::max(worst, 1 - rep.fidelity);
            // The frame-corrected coordinates must reproduce psi itself.
            worst = std::max(worst, 1 - coordinate_fidelity(rep.correlation, psi));
        }
    }
    r.passed = worst <= kFidelityTol;
    r.detail = "max infidelity = " + sci(worst);
    return r;
}

CriterionResult round_trip() {
    CriterionResult r{3, "upload then download on orthogonalized general-form wires", true, "", 0};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> angle(0.2, std::numbers::pi - 0.2);
    std::uniform_real_distribution<double> phase(0, 2 * std::numbers::pi);
    double worst = 0;
    for (int i = 0; i < 20; ++i) {
        GeneralFormParams p;
        p.w = random_su2(rng);
        p.alpha = angle(rng);
        p.scale0 = std::polar(1.0, phase(rng));
        p.scale1 = std::polar(1.0, phase(rng));
        // Upload weights psi_s by <s|R>, so the boundary needs equal moduli.
        CVec2 right(1, std::polar(1.0, phase(rng)));
        WireState wire = general_form_wire(p, 4, right / std::sqrt(2.0));
        BranchPicker filters = BranchPicker::fixed({0});
        ProtocolReport orth = orthogonalize_wire(wire, filters);
        CVec2 psi = random_qubit(rng);
        for (int b = 0; b < 4; ++b) {
            ProtocolReport up = upload_teleport(*orth.wire, psi, static_cast<BellOutcome>(b));
            for (int s = 0; s < 2; ++s) {
                ProtocolReport down = download(*up.wire, CVec2(up.correlation), s);
                LocalBasis basis = decompose(*up.wire).basis();
                CVec2 target = psi(0) * basis.m0 + psi(1) * basis.m1;
                CVec2 out = down.frame.reference * down.frame.correction() * down.frame.reference.adjoint() *
                            CVec2(down.physical->amplitudes());
                worst = std::max(worst, 1 - vector_fidelity(out, target));
            }
        }
    }
    r.passed = worst <= kFidelityTol;
    r.detail = "max infidelity = " + sci(worst);
    return r;
}

CriterionResult filter_completeness() {
    CriterionResult r{4, "F and G completeness, F maps the primed basis onto the m-basis", true, "", 0};
    std::mt19937_64 rng(11);
    double worst_complete = 0;
    double worst_action = 0;
    for (int i = 0; i < 20; ++i) {
        double r1 = 0.95 * i / 19.0;
        double r0 = std::sqrt(1 - r1 * r1);
        LocalBasis basis = LocalBasis::completing(random_qubit(rng));
        FilterPair f = make_filter_f(r0, r1, basis);
        FilterPair g = make_filter_g(r0, r1, basis);
        worst_complete = std::max({worst_complete, f.completeness_error(), g.completeness_error()});
        CVec2 m0p = r0 * basis.m0 + r1 * basis.m1;
        CVec2 m1p = basis.m1;
        double scale = r0 / std::sqrt(1 + r1);
        worst_action = std::max(worst_action, (f.k * m0p - scale * basis.m0).norm());
        worst_action = std::max(worst_action, (f.k * m1p - scale * basis.m1).norm());
    }
    r.passed = worst_complete <= kCompletenessTol && worst_action <= kFidelityTol;
    r.detail = "completeness " + sci(worst_complete) + ", action " + sci(worst_action);
    return r;
}

CriterionResult oracle_equivalence(const std::string &dir) {
    CriterionResult r{5, "protocols agree with the statevector oracle on every bundled scenario", true, "", 0};
    double worst = 0;
    int runs = 0;
    std::string failing;
    for (const std::string &name : kProtocolScenarios) {
        ScenarioConfig config = load_scenario(scenario_path(dir, name), kOracleTol);
        config.tolerance = kOracleTol;
        for (const RunBranch &b : expand_branches(config)) {
            RunComparison c = compare_run(config, b);
            ++runs;
            worst = std::max(worst, c.max_delta);
            if (!c.within_tolerance && failing.empty()) {
                failing = name + " " + c.protocol.branch;
            }
        }
    }
    r.passed = worst <= kOracleTol;
    r.detail = std::to_string(runs) + " runs, max delta " + sci(worst) + (failing.empty() ? "" : ", first failure " + failing);
    return r;
}

CriterionResult cz_sign() {
    CriterionResult r{6, "CZ teleportation of |++> carries the minus sign", true, "", 0};
    Eigen::Vector4cd plus2 = Eigen::Vector4cd::Constant(0.5);
    Eigen::Vector4cd target = plus2;
    target(3) = -target(3);
    WireState a = cluster_wire(3);
    WireState b = cluster_wire(3);
    double worst = 0;
    double worst_sign = 0;
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            ProtocolReport rep = gate_teleport_cz(plus2, a, b, CzChoice::from_index(i), CzChoice::from_index(j));
            worst = std::max(worst, 1 - rep.fidelity);
            worst = std::max(worst, 1 - coordinate_fidelity(rep.correlation, target));
            worst_sign = std::max(worst_sign, std::abs(rep.correlation(3) / rep.correlation(0) + 1.0));
        }
    }
    r.passed = worst <= kFidelityTol && worst_sign <= kFidelityTol;
    r.detail = "max infidelity " + sci(worst) + ", sign error " + sci(worst_sign);
    return r;
}

CriterionResult download_destroys() {
    CriterionResult r{7, "post-download boundary is independent of the downloaded state", true, "", 0};
    std::mt19937_64 rng(19);
    WireState wire = decomposed_wire(make_decomposition(LocalBasis::completing(random_qubit(rng)),
                                                        ket_plus(),
                                                        ket_minus(),
                                                        0.0),
                                     5,
                                     random_qubit(rng));
    ScenarioConfig config;
    config.protocol = ProtocolKind::kDownload;
    config.wire = wire;
    std::optional<CVec2> first_wire;
    std::optional<CVec2> first_oracle;
    double worst = 0;
    for (int i = 0; i < 20; ++i) {
        CVec2 psi = random_qubit(rng);
        ProtocolReport rep = download(wire, psi, 0);
        config.psi = psi;
        ProtocolReport orc = oracle::replay_protocol(config, RunBranch{0, std::vector<int>{0}, 0});
        CVec2 bw = rep.wire->right;
        CVec2 bo = orc.wire->right;
        if (!first_wire) {
            first_wire = bw;
            first_oracle = bo;
        }
        worst = std::max(worst, max_abs(bw - *first_wire));
        worst = std::max(worst, 1 - vector_fidelity(bo, *first_oracle));
    }
    r.passed = worst <= kBoundaryTol;
    r.detail = "max boundary spread " + sci(worst);
    return r;
}

CriterionResult distortion() {
    CriterionResult r{8, "unfiltered upload of |+> is distorted for r1 >= 0.3 and matches the oracle", true, "", 0};
    double max_fid = 0;
    double worst_delta = 0;
    for (double r1 : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
        ScenarioConfig config;
        config.protocol = ProtocolKind::kUpload;
        config.wire = decomposed_wire(make_decomposition(LocalBasis::computational(), ket_plus(), ket_minus(), r1), 4);
        config.psi = ket_plus();
        config.outcome_mode = OutcomeMode::kEnumerate;
        config.tolerance = kOracleTol;
        for (const RunBranch &b : expand_branches(config)) {
            RunComparison c = compare_run(config, b);
            worst_delta = std::max(worst_delta, c.max_delta);
            if (r1 >= 0.3) {
                max_fid = std::max(max_fid, c.protocol.fidelity);
            }
        }
    }
    r.passed = max_fid < 1 - kDistortionGap && worst_delta <= kOracleTol;
    r.detail = "max fidelity at r1 >= 0.3: " + std::to_string(max_fid) + ", oracle delta " + sci(worst_delta);
    return r;
}

/// Every expected value, individually perturbed.
std::vector<nlohmann::json> corruptions(const nlohmann::json &doc) {
    std::vector<nlohmann::json> out;
    if (doc.contains("expect")) {
        for (auto it = doc["expect"].begin(); it != doc["expect"].end(); ++it) {
            nlohmann::json c = doc;
            auto &v = c["expect"][it.key()];
            v = v.is_boolean() ? nlohmann::json(!v.get<bool>()) : nlohmann::json(v.get<double>() + 0.5);
            out.push_back(c);
        }
    }
    if (doc.contains("sweep") && doc["sweep"].contains("expect")) {
        for (size_t i = 0; i < doc["sweep"]["expect"].size(); ++i) {
            nlohmann::json c = doc;
            c["sweep"]["expect"][i] = c["sweep"]["expect"][i].get<double>() + 0.5;
            out.push_back(c);
        }
    }
    return out;
}

CriterionResult cli_contract(const std::string &dir) {
    CriterionResult r{9, "bundled scenarios pass and any corrupted expectation fails", true, "", 0};
    int scenarios = 0;
    int corrupted = 0;
    std::vector<std::string> names = kProtocolScenarios;
    names.insert(names.end(), kSweepScenarios.begin(), kSweepScenarios.end());
    for (const std::string &name : names) {
        nlohmann::json doc = read_json(scenario_path(dir, name));
        ++scenarios;
        if (scenario_status(parse_scenario(doc, kDefaultTolerance)) != kExitOk) {
            r.passed = false;
            r.detail = name + " does not pass; ";
        }
        for (const nlohmann::json &bad : corruptions(doc)) {
            ++corrupted;
            if (scenario_status(parse_scenario(bad, kDefaultTolerance)) != kExitTolerance) {
                r.passed = false;
                r.detail += "corrupted " + name + " still passes; ";
            }
        }
    }
    r.detail += std::to_string(scenarios) + " scenarios, " + std::to_string(corrupted) + " corruptions";
    return r;
}

CriterionResult timed(const std::function<CriterionResult()> &fn, int id, const std::string &name, double limit) {
    auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
        r = fn();
    } catch (const std::exception &e) {
        r = {id, name, false, std::string("error: ") + e.what(), 0};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (limit > 0 && r.seconds >= limit) {
        r.passed = false;
        r.detail += ", over the " + std::to_string(static_cast<int>(limit)) + " s budget";
    }
    return r;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const std::string &scenario_dir) {
    return {
        timed(overlap_law, 1, "theta-family overlap", 1.0),
        timed(cluster_upload, 2, "cluster-wire upload", 1.0),
        timed(round_trip, 3, "upload/download round trip", 0),
        timed(filter_completeness, 4, "filter completeness", 0),
        timed([&] { return oracle_equivalence(scenario_dir); }, 5, "oracle equivalence", 30.0),
        timed(cz_sign, 6, "CZ sign", 0),
        timed(download_destroys, 7, "download destructiveness", 0),
        timed(distortion, 8, "non-orthogonal distortion", 0),
        timed([&] { return cli_contract(scenario_dir); }, 9, "scenario contract", 0),
    };
}

std::string format_acceptance(const std::vector<CriterionResult> &results) {
    std::ostringstream os;
    for (const auto &r : results) {
        os << (r.passed ? "PASS" : "FAIL") << "  [" << r.id << "] " << r.name << ": " << r.detail << " ("
           << std::fixed;
        os.precision(3);
        os << r.seconds << " s)\n";
        os.unsetf(std::ios::fixed);
    }
    return os.str();
}

}  // namespace corrspace
