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

#include "corrspace/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <regex>
#include <set>
#include <sstream>

#include "corrspace/oracle.hpp"

namespace corrspace {

using nlohmann::json;

namespace {

constexpr std::uint64_t kFilterStreamSalt = 0x9e3779b97f4a7c15ULL;

[[noreturn]] void config_error(const std::string &path, const std::string &message) {
    throw Error(ErrorCode::kConfig, "field '" + path + "': " + message);
}

const json &require(const json &obj, const std::string &key, const std::string &path) {
    if (!obj.contains(key)) {
        config_error(path.empty() ? key : path + "." + key, "missing");
    }
    return obj.at(key);
}

std::string child(const std::string &path, const std::string &key) {
    return path.empty() ? key : path + "." + key;
}

std::string index_path(const std::string &path, size_t i) {
    return path + "[" + std::to_string(i) + "]";
}

void reject_unknown(const json &obj, const std::set<std::string> &allowed, const std::string &path) {
    if (!obj.is_object()) {
        config_error(path.empty() ? "<root>" : path, "expected an object");
    }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            config_error(child(path, it.key()), "unknown field");
        }
    }
}

double parse_number(const json &j, const std::string &path) {
    if (!j.is_number()) {
        config_error(path, "expected a number");
    }
    return j.get<double>();
}

Complex parse_complex(const json &j, const std::string &path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        config_error(path, "expected a complex number as [re, im]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

Eigen::VectorXcd parse_vector(const json &j, const std::string &path) {
    if (!j.is_array()) {
        config_error(path, "expected an array of [re, im] pairs");
    }
    Eigen::VectorXcd v(static_cast<Eigen::Index>(j.size()));
    for (size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = parse_complex(j[i], index_path(path, i));
    }
    return v;
}

CVec2 parse_vec2(const json &j, const std::string &path) {
    Eigen::VectorXcd v = parse_vector(j, path);
    if (v.size() != 2) {
        config_error(path, "expected 2 complex entries, got " + std::to_string(v.size()));
    }
    return v;
}

CMat2 parse_mat2(const json &j, const std::string &path) {
    if (!j.is_array() || j.size() != 2) {
        config_error(path, "expected a 2x2 matrix as two rows of [re, im] pairs");
    }
    CMat2 m;
    for (size_t r = 0; r < 2; ++r) {
        CVec2 row = parse_vec2(j[r], index_path(path, r));
        m(static_cast<Eigen::Index>(r), 0) = row(0);
        m(static_cast<Eigen::Index>(r), 1) = row(1);
    }
    return m;
}

/// A number, or a string such as "pi", "-pi/4" or "2*pi/3".
double parse_angle(const json &j, const std::string &path) {
    if (j.is_number()) {
        return j.get<double>();
    }
    if (!j.is_string()) {
        config_error(path, "expected a number or an expression like \"pi/3\"");
    }
    static const std::regex pattern(R"(^\s*(-)?\s*(?:([0-9.]+)\s*\*\s*)?pi\s*(?:/\s*([0-9.]+))?\s*$)");
    std::smatch m;
    std::string text = j.get<std::string>();
    if (!std::regex_match(text, m, pattern)) {
        config_error(path, "cannot read angle '" + text + "'");
    }
    double value = std::numbers::pi;
    if (m[2].matched) {
        value *= std::stod(m[2].str());
    }
    if (m[3].matched) {
        double den = std::stod(m[3].str());
        if (den == 0) {
            config_error(path, "division by zero");
        }
        value /= den;
    }
    return m[1].matched ? -value : value;
}

int parse_int(const json &j, const std::string &path, int lo, int hi) {
    if (!j.is_number_integer()) {
        config_error(path, "expected an integer");
    }
    long long v = j.get<long long>();
    if (v < lo || v > hi) {
        config_error(path, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " +
                               std::to_string(v));
    }
    return static_cast<int>(v);
}

bool parse_bool(const json &j, const std::string &path) {
    if (!j.is_boolean()) {
        config_error(path, "expected true or false");
    }
    return j.get<bool>();
}

std::string parse_string(const json &j, const std::string &path) {
    if (!j.is_string()) {
        config_error(path, "expected a string");
    }
    return j.get<std::string>();
}

WireState parse_wire(const json &j, const std::string &path) {
    reject_unknown(j,
                   {"preset", "sites", "left", "right", "first_site", "a0", "a1", "theta", "alpha", "w", "scale0",
                    "scale1", "r1", "m0", "phi0", "phi1"},
                   path);
    const json &sites_j = require(j, "sites", path);
    if (!sites_j.is_number_integer()) {
        config_error(child(path, "sites"), "expected an integer");
    }
    long long sites = sites_j.get<long long>();
    if (sites > kMaxWireSites) {
        throw Error(ErrorCode::kCapacityExceeded,
                    "field '" + child(path, "sites") + "': " + std::to_string(sites) + " sites exceeds the limit of " +
                        std::to_string(kMaxWireSites));
    }
    if (sites < 2) {
        config_error(child(path, "sites"), "must lie in [2, " + std::to_string(kMaxWireSites) + "]");
    }
    int n = static_cast<int>(sites);
    CVec2 left = j.contains("left") ? parse_vec2(j["left"], child(path, "left")) : ket(0);
    CVec2 right = j.contains("right") ? parse_vec2(j["right"], child(path, "right")) : ket_plus();

    std::string preset = j.contains("preset") ? parse_string(j["preset"], child(path, "preset")) : "explicit";
    WireState wire;
    if (preset == "explicit") {
        wire = make_wire(parse_mat2(require(j, "a0", path), child(path, "a0")),
                         parse_mat2(require(j, "a1", path), child(path, "a1")),
                         left,
                         right,
                         n);
    } else if (preset == "cluster") {
        wire = cluster_wire(n, right, left);
    } else if (preset == "theta") {
        wire = theta_wire(parse_angle(require(j, "theta", path), child(path, "theta")), n, right, left);
    } else if (preset == "general") {
        GeneralFormParams p;
        p.w = j.contains("w") ? parse_mat2(j["w"], child(path, "w")) : CMat2(CMat2::Identity());
        if (!is_unitary(p.w, kDefaultTolerance) || std::abs(p.w.determinant() - Complex(1)) > 1e-8) {
            config_error(child(path, "w"), "must be special unitary");
        }
        p.alpha = parse_angle(require(j, "alpha", path), child(path, "alpha"));
        p.scale0 = j.contains("scale0") ? parse_complex(j["scale0"], child(path, "scale0")) : Complex(1);
        p.scale1 = j.contains("scale1") ? parse_complex(j["scale1"], child(path, "scale1")) : Complex(1);
        wire = general_form_wire(p, n, right, left);
    } else if (preset == "decomposed") {
        double r1 = parse_number(require(j, "r1", path), child(path, "r1"));
        if (!(r1 >= 0 && r1 < 1)) {
            config_error(child(path, "r1"), "must lie in [0, 1)");
        }
        CVec2 m0 = j.contains("m0") ? parse_vec2(j["m0"], child(path, "m0")) : ket(0);
        CVec2 phi0 = j.contains("phi0") ? parse_vec2(j["phi0"], child(path, "phi0")) : ket_plus();
        CVec2 phi1 = j.contains("phi1") ? parse_vec2(j["phi1"], child(path, "phi1"))
                                        : CVec2(-std::conj(phi0(1)), std::conj(phi0(0)));
        for (const auto &[name, v] : {std::pair{"m0", m0}, std::pair{"phi0", phi0}, std::pair{"phi1", phi1}}) {
            if (std::abs(v.norm() - 1) > 1e-6) {
                config_error(child(path, name), "must be normalized");
            }
        }
        if (std::abs(phi0.dot(phi1)) > 1e-6) {
            config_error(child(path, "phi1"), "must be orthogonal to phi0");
        }
        wire = decomposed_wire(make_decomposition(LocalBasis::completing(m0), phi0, phi1, r1), n, right, left);
    } else {
        config_error(child(path, "preset"), "unknown preset '" + preset + "'");
    }
    if (j.contains("first_site")) {
        wire.first_site = parse_int(j["first_site"], child(path, "first_site"), 1, n);
    }
    return wire;
}

CMat2 parse_unitary(const json &j, const std::string &path) {
    if (j.is_string()) {
        std::string name = j.get<std::string>();
        if (name == "I") {
            return CMat2::Identity();
        }
        if (name == "H") {
            return hadamard();
        }
        if (name == "X") {
            return pauli_x();
        }
        if (name == "Z") {
            return pauli_z();
        }
        if (name == "Z^1/4" || name == "T") {
            CMat2 t = CMat2::Identity();
            t(1, 1) = std::polar(1.0, std::numbers::pi / 4);
            return t;
        }
        config_error(path, "unknown gate '" + name + "'");
    }
    return parse_mat2(j, path);
}

CzChoice parse_cz_choice(const json &j, const std::string &path) {
    if (!j.is_array() || j.size() != 3) {
        config_error(path, "expected [x, y, z] with entries 0 or 1");
    }
    return {parse_int(j[0], index_path(path, 0), 0, 1),
            parse_int(j[1], index_path(path, 1), 0, 1),
            parse_int(j[2], index_path(path, 2), 0, 1)};
}

void parse_outcome(const json &j, const std::string &path, ScenarioConfig &c) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "sample") {
            c.outcome_mode = OutcomeMode::kSample;
            return;
        }
        if (s == "enumerate") {
            c.outcome_mode = OutcomeMode::kEnumerate;
            return;
        }
        if (s.size() == 2 && s[0] == 'B' && s[1] >= '1' && s[1] <= '4') {
            c.outcome = s[1] - '1';
            return;
        }
        config_error(path, "expected B1..B4, sample, enumerate, an index or a CZ choice");
    }
    if (j.is_number_integer()) {
        c.outcome = parse_int(j, path, 0, 63);
        return;
    }
    if (j.is_object()) {
        reject_unknown(j, {"first", "second"}, path);
        CzChoice a = parse_cz_choice(require(j, "first", path), child(path, "first"));
        CzChoice b = parse_cz_choice(require(j, "second", path), child(path, "second"));
        c.outcome = a.index() + 8 * b.index();
        return;
    }
    config_error(path, "expected B1..B4, sample, enumerate, an index or a CZ choice");
}

std::string run_label(const RunBranch &b) {
    std::string s = b.outcome ? "outcome=" + std::to_string(*b.outcome) : "outcome=sampled";
    if (b.filter_path) {
        s += ",filters=";
        for (size_t i = 0; i < b.filter_path->size(); ++i) {
            s += (i ? "," : "") + std::to_string((*b.filter_path)[i]);
        }
    } else {
        s += ",filters=sampled";
    }
    return s;
}

bool uses_filters(const ScenarioConfig &c) {
    return c.prepare_orthogonalize || c.protocol == ProtocolKind::kOrthogonalize ||
           c.protocol == ProtocolKind::kInverseUpload;
}

ProtocolReport merged(const ProtocolReport &prep, ProtocolReport main) {
    std::vector<BranchProbability> probs = prep.branch_probabilities;
    probs.insert(probs.end(), main.branch_probabilities.begin(), main.branch_probabilities.end());
    main.branch_probabilities = std::move(probs);
    main.branch = prep.branch + main.branch;
    main.sites_consumed += prep.sites_consumed;
    std::map<std::string, double> metrics = prep.metrics;
    for (const auto &[k, v] : main.metrics) {
        metrics[k] = v;
    }
    main.metrics = std::move(metrics);
    return main;
}

json complex_json(Complex z) {
    return json::array({z.real(), z.imag()});
}

json vector_json(const Eigen::VectorXcd &v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(complex_json(v(i)));
    }
    return out;
}

json frame_json(const PauliFrame &f) {
    return {{"bit_flip", f.bit_flip},
            {"phase_flip", f.phase_flip},
            {"label", f.label()},
            {"basis", f.basis == FrameBasis::kPhysical ? "physical" : "correlation"}};
}

json protocol_json(const ProtocolReport &r) {
    json probs = json::array();
    for (const auto &bp : r.branch_probabilities) {
        probs.push_back({{"label", bp.label}, {"probability", bp.probability}});
    }
    json out = {{"success", r.success},
                {"fidelity", r.fidelity},
                {"branch", r.branch},
                {"frame", frame_json(r.frame)},
                {"sites_consumed", r.sites_consumed},
                {"branch_probabilities", probs},
                {"metrics", r.metrics}};
    if (r.second_frame) {
        out["second_frame"] = frame_json(*r.second_frame);
    }
    if (r.correlation.size() > 0) {
        out["correlation"] = vector_json(r.correlation);
    }
    if (r.physical) {
        out["physical"] = vector_json(r.physical->amplitudes());
    }
    if (r.wire) {
        out["wire"] = {{"first_site", r.wire->first_site}, {"right", vector_json(r.wire->right)}};
    }
    return out;
}

double first_f_probability(const WireState &wire) {
    try {
        if (wire.front_filter) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        Decomposition d = decompose(wire);
        WireState filtered = wire;
        filtered.front_filter = make_filter_f(d.r0, d.r1, d.basis()).k;
        return wire_norm2(filtered) / wire_norm2(wire);
    } catch (const Error &) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

std::string fmt(double v) {
    if (std::isnan(v)) {
        return "";
    }
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

const char *protocol_name(ProtocolKind kind) {
    switch (kind) {
        case ProtocolKind::kUpload:
            return "upload";
        case ProtocolKind::kDownload:
            return "download";
        case ProtocolKind::kOrthogonalize:
            return "orthogonalize";
        case ProtocolKind::kInverseUpload:
            return "inverse-upload";
        case ProtocolKind::kGateTeleportU:
            return "gate-teleport-u";
        case ProtocolKind::kGateTeleportCz:
            return "gate-teleport-cz";
        case ProtocolKind::kSwap:
            return "swap";
        case ProtocolKind::kOverlap:
            return "overlap-sweep";
    }
    return "?";
}

ProtocolKind protocol_from_name(const std::string &name) {
    for (int i = 0; i <= static_cast<int>(ProtocolKind::kOverlap); ++i) {
        auto k = static_cast<ProtocolKind>(i);
        if (name == protocol_name(k)) {
            return k;
        }
    }
    if (name == "overlap") {
        return ProtocolKind::kOverlap;
    }
    throw Error(ErrorCode::kConfig, "field 'protocol': unknown protocol '" + name + "'");
}

int outcome_count(ProtocolKind kind) {
    switch (kind) {
        case ProtocolKind::kUpload:
        case ProtocolKind::kGateTeleportU:
        case ProtocolKind::kSwap:
            return 4;
        case ProtocolKind::kDownload:
            return 2;
        case ProtocolKind::kGateTeleportCz:
            return 64;
        default:
            return 0;
    }
}

BranchPicker RunBranch::outcome_picker() const {
    return outcome ? BranchPicker::fixed({*outcome}) : BranchPicker::sampled(seed);
}

BranchPicker RunBranch::filter_picker() const {
    return filter_path ? BranchPicker::fixed(*filter_path) : BranchPicker::sampled(seed ^ kFilterStreamSalt);
}

std::vector<RunBranch> expand_branches(const ScenarioConfig &config) {
    std::vector<std::optional<int>> outcomes;
    int count = outcome_count(config.protocol);
    if (count == 0 || config.outcome_mode == OutcomeMode::kSample) {
        outcomes.push_back(count == 0 ? std::optional<int>(0) : std::nullopt);
    } else if (config.outcome_mode == OutcomeMode::kForced) {
        outcomes.push_back(config.outcome);
    } else {
        for (int i = 0; i < count; ++i) {
            outcomes.push_back(i);
        }
    }
    std::vector<std::optional<std::vector<int>>> paths;
    if (!uses_filters(config)) {
        paths.push_back(std::vector<int>{0});
    } else {
        switch (config.filter_mode) {
            case FilterMode::kSample:
                paths.push_back(std::nullopt);
                break;
            case FilterMode::kForceSuccess:
                paths.push_back(std::vector<int>{0});
                break;
            case FilterMode::kForceFailThenSuccess:
                paths.push_back(std::vector<int>{1, 0});
                break;
            case FilterMode::kEnumerate:
                paths.push_back(std::vector<int>{0});
                paths.push_back(std::vector<int>{1, 0});
                break;
        }
    }
    std::vector<RunBranch> out;
    for (const auto &path : paths) {
        for (const auto &o : outcomes) {
            out.push_back({o, path, config.seed});
        }
    }
    return out;
}

double default_tolerance_from_env() {
    const char *env = std::getenv("CORRSPACE_TOLERANCE");
    if (env == nullptr || *env == '\0') {
        return kDefaultTolerance;
    }
    char *end = nullptr;
    double v = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(v > 0)) {
        throw Error(ErrorCode::kConfig, "CORRSPACE_TOLERANCE must be a positive number");
    }
    return v;
}

ScenarioConfig parse_scenario(const json &doc, double default_tolerance) {
    reject_unknown(doc,
                   {"name", "description", "protocol", "wire", "second_wire", "psi", "outcome", "bell",
                    "filter_branch", "seed", "tolerance", "unitary", "prepare", "max_attempts", "rotation_sites",
                    "realign_sites", "measured_offset", "dephase", "sweep", "expect"},
                   "");
    ScenarioConfig c;
    c.echo = doc.dump();
    c.name = doc.contains("name") ? parse_string(doc["name"], "name") : "unnamed";
    c.protocol = protocol_from_name(parse_string(require(doc, "protocol", ""), "protocol"));
    c.wire = parse_wire(require(doc, "wire", ""), "wire");
    if (doc.contains("second_wire")) {
        c.second_wire = parse_wire(doc["second_wire"], "second_wire");
    }
    bool two_wire = c.protocol == ProtocolKind::kGateTeleportCz || c.protocol == ProtocolKind::kSwap;
    if (two_wire && !c.second_wire) {
        config_error("second_wire", "required by protocol '" + std::string(protocol_name(c.protocol)) + "'");
    }

    int psi_len = c.protocol == ProtocolKind::kGateTeleportCz ? 4 : 2;
    if (c.protocol == ProtocolKind::kSwap || c.protocol == ProtocolKind::kOrthogonalize) {
        c.psi = ket(0);
        if (doc.contains("psi")) {
            config_error("psi", "not used by protocol '" + std::string(protocol_name(c.protocol)) + "'");
        }
    } else {
        c.psi = parse_vector(require(doc, "psi", ""), "psi");
        if (c.psi.size() != psi_len) {
            config_error("psi", "expected " + std::to_string(psi_len) + " complex entries, got " +
                                    std::to_string(c.psi.size()));
        }
        if (std::abs(c.psi.norm() - 1) > 1e-6) {
            config_error("psi", "must be normalized within 1e-6 (norm is " + fmt(c.psi.norm()) + ")");
        }
    }

    if (doc.contains("outcome") && doc.contains("bell")) {
        config_error("bell", "give either 'bell' or 'outcome', not both");
    }
    if (doc.contains("outcome")) {
        parse_outcome(doc["outcome"], "outcome", c);
    } else if (doc.contains("bell")) {
        parse_outcome(doc["bell"], "bell", c);
    }
    int count = outcome_count(c.protocol);
    if (c.outcome_mode == OutcomeMode::kForced && count > 0 && c.outcome >= count) {
        config_error(doc.contains("bell") ? "bell" : "outcome",
                     "index " + std::to_string(c.outcome) + " out of range for this protocol");
    }

    if (doc.contains("filter_branch")) {
        std::string f = parse_string(doc["filter_branch"], "filter_branch");
        if (f == "sample") {
            c.filter_mode = FilterMode::kSample;
        } else if (f == "force-success") {
            c.filter_mode = FilterMode::kForceSuccess;
        } else if (f == "force-fail-then-success") {
            c.filter_mode = FilterMode::kForceFailThenSuccess;
        } else if (f == "enumerate") {
            c.filter_mode = FilterMode::kEnumerate;
        } else {
            config_error("filter_branch", "expected sample, force-success, force-fail-then-success or enumerate");
        }
    }
    if (doc.contains("seed")) {
        const json &seed = doc["seed"];
        if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
            config_error("seed", "expected a non-negative integer");
        }
        c.seed = doc["seed"].get<std::uint64_t>();
    }
    c.tolerance = default_tolerance;
    if (doc.contains("tolerance")) {
        c.tolerance = parse_number(doc["tolerance"], "tolerance");
        if (!(c.tolerance > 0)) {
            config_error("tolerance", "must be positive");
        }
    }
    if (doc.contains("unitary")) {
        c.unitary = parse_unitary(doc["unitary"], "unitary");
    }
    if (doc.contains("prepare")) {
        std::string p = parse_string(doc["prepare"], "prepare");
        if (p == "orthogonalize") {
            c.prepare_orthogonalize = true;
        } else if (p != "none") {
            config_error("prepare", "expected orthogonalize or none");
        }
    }
    if (doc.contains("max_attempts")) {
        c.max_attempts = parse_int(doc["max_attempts"], "max_attempts", 1, 1000);
    }
    if (doc.contains("rotation_sites")) {
        c.rotation_sites = parse_int(doc["rotation_sites"], "rotation_sites", 1, kMaxWireSites);
    }
    if (doc.contains("realign_sites")) {
        c.realign_sites = parse_int(doc["realign_sites"], "realign_sites", 0, kMaxWireSites);
    }
    if (doc.contains("measured_offset")) {
        c.measured_offset = parse_int(doc["measured_offset"], "measured_offset", 1, kMaxWireSites);
    }
    if (doc.contains("dephase")) {
        c.dephase = parse_bool(doc["dephase"], "dephase");
    }

    if (doc.contains("sweep")) {
        const json &s = doc["sweep"];
        reject_unknown(s, {"parameter", "grid", "expect"}, "sweep");
        SweepSpec spec;
        spec.parameter = parse_string(require(s, "parameter", "sweep"), "sweep.parameter");
        if (spec.parameter != "theta" && spec.parameter != "r1") {
            config_error("sweep.parameter", "expected theta or r1");
        }
        const json &grid = require(s, "grid", "sweep");
        if (!grid.is_array() || grid.empty()) {
            config_error("sweep.grid", "expected a non-empty array");
        }
        for (size_t i = 0; i < grid.size(); ++i) {
            spec.grid.push_back(parse_angle(grid[i], index_path("sweep.grid", i)));
        }
        if (s.contains("expect")) {
            const json &e = s["expect"];
            if (!e.is_array() || e.size() != grid.size()) {
                config_error("sweep.expect", "expected one value per grid point");
            }
            for (size_t i = 0; i < e.size(); ++i) {
                spec.expected.push_back(parse_number(e[i], index_path("sweep.expect", i)));
            }
        }
        c.sweep = spec;
    }

    if (doc.contains("expect")) {
        const json &e = doc["expect"];
        if (!e.is_object()) {
            config_error("expect", "expected an object");
        }
        for (auto it = e.begin(); it != e.end(); ++it) {
            std::string path = child("expect", it.key());
            const std::string &k = it.key();
            bool known = k == "fidelity" || k == "success" || k == "sites_consumed" || k.rfind("prob:", 0) == 0 ||
                         k.rfind("metric:", 0) == 0;
            if (!known) {
                config_error(path, "unknown expectation");
            }
            double v;
            if (it.value().is_boolean()) {
                v = it.value().get<bool>() ? 1 : 0;
            } else {
                v = parse_number(it.value(), path);
            }
            c.expectations.push_back({k, v});
        }
    }
    return c;
}

ScenarioConfig load_scenario(const std::string &path, double default_tolerance) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::kConfig, "cannot open scenario file '" + path + "'");
    }
    json doc;
    try {
        doc = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error &e) {
        throw Error(ErrorCode::kConfig, path + ": " + e.what());
    }
    return parse_scenario(doc, default_tolerance);
}

ProtocolReport run_protocol(const ScenarioConfig &config, const RunBranch &branch) {
    BranchPicker fp = branch.filter_picker();
    BranchPicker op = branch.outcome_picker();
    ProtocolReport prep;
    auto prepare = [&](const WireState &w) {
        if (!config.prepare_orthogonalize) {
            return w;
        }
        ProtocolReport o = orthogonalize_wire(w, fp, {config.max_attempts, config.realign_sites});
        o.branch += ";";
        prep = merged(prep, o);
        return *o.wire;
    };
    CVec2 psi = config.psi.size() == 2 ? CVec2(config.psi) : CVec2(CVec2::Zero());

    switch (config.protocol) {
        case ProtocolKind::kUpload: {
            WireState w = prepare(config.wire);
            return merged(prep, upload_teleport(w, psi, op));
        }
        case ProtocolKind::kGateTeleportU: {
            WireState w = prepare(config.wire);
            return merged(prep, gate_teleport_single(w, psi, config.unitary, op, {config.rotation_sites}));
        }
        case ProtocolKind::kDownload:
            return download(config.wire, psi, op, {config.measured_offset});
        case ProtocolKind::kOrthogonalize:
            return orthogonalize_wire(config.wire, fp, {config.max_attempts, config.realign_sites});
        case ProtocolKind::kInverseUpload: {
            InverseUploadOptions opts;
            opts.rotation_sites = config.rotation_sites;
            opts.dephase_ancilla = config.dephase;
            opts.orthogonalize = {config.max_attempts, config.realign_sites};
            return inverse_download_upload(config.wire, psi, fp, opts);
        }
        case ProtocolKind::kGateTeleportCz: {
            WireState a = prepare(config.wire);
            WireState b = prepare(*config.second_wire);
            return merged(prep, gate_teleport_cz(Eigen::Vector4cd(config.psi), a, b, op));
        }
        case ProtocolKind::kSwap: {
            WireState a = prepare(config.wire);
            WireState b = prepare(*config.second_wire);
            return merged(prep, entanglement_swap(a, b, op));
        }
        case ProtocolKind::kOverlap: {
            WireState other = config.wire;
            other.right = psi;
            Complex ov = normalized_wire_overlap(config.wire, other);
            ProtocolReport r;
            r.branch = "overlap";
            r.fidelity = std::norm(ov);
            r.metrics["overlap_re"] = ov.real();
            r.metrics["overlap_im"] = ov.imag();
            return r;
        }
    }
    throw Error(ErrorCode::kInvalidArgument, "unknown protocol");
}

RunComparison compare_run(const ScenarioConfig &config, const RunBranch &branch) {
    RunComparison c;
    c.branch = branch;
    c.protocol = run_protocol(config, branch);
    c.oracle = oracle::replay_protocol(config, branch);
    const ProtocolReport &p = c.protocol;
    const ProtocolReport &o = c.oracle;
    auto &d = c.deltas;
    d["success"] = p.success == o.success ? 0 : 1;
    d["fidelity"] = std::abs(p.fidelity - o.fidelity);
    d["sites_consumed"] = std::abs(p.sites_consumed - o.sites_consumed);
    d["branch"] = p.branch == o.branch ? 0 : 1;
    double frame = (p.frame.bit_flip != o.frame.bit_flip) + (p.frame.phase_flip != o.frame.phase_flip);
    if (p.second_frame.has_value() != o.second_frame.has_value()) {
        frame += 1;
    } else if (p.second_frame) {
        frame += (p.second_frame->bit_flip != o.second_frame->bit_flip) +
                 (p.second_frame->phase_flip != o.second_frame->phase_flip);
    }
    d["frame"] = frame;
    if (p.branch_probabilities.size() != o.branch_probabilities.size()) {
        d["prob:count"] = 1;
    } else {
        for (size_t i = 0; i < p.branch_probabilities.size(); ++i) {
            const auto &a = p.branch_probabilities[i];
            const auto &b = o.branch_probabilities[i];
            d["prob:" + a.label] = a.label == b.label ? std::abs(a.probability - b.probability) : 1;
        }
    }
    for (const auto &[k, v] : p.metrics) {
        auto it = o.metrics.find(k);
        if (it != o.metrics.end()) {
            d["metric:" + k] = std::abs(v - it->second);
        }
    }
    if (p.physical && o.physical) {
        d["physical"] = 1 - fidelity(*p.physical, *o.physical);
    }
    if (p.wire && o.wire) {
        bool same_site = p.wire->first_site == o.wire->first_site;
        bool nonzero = p.wire->right.norm() > 0 && o.wire->right.norm() > 0;
        d["wire_boundary"] = same_site && nonzero ? 1 - vector_fidelity(p.wire->right, o.wire->right) : 1;
    }
    if (p.correlation.size() > 0 && p.correlation.size() == o.correlation.size() && p.correlation.norm() > 0 &&
        o.correlation.norm() > 0) {
        d["correlation"] = 1 - vector_fidelity(p.correlation, o.correlation);
    }
    c.max_delta = 0;
    for (const auto &[k, v] : d) {
        c.max_delta = std::max(c.max_delta, v);
    }
    c.within_tolerance = c.max_delta <= config.tolerance;
    return c;
}

bool RunReport::agreement() const {
    for (const auto &r : runs) {
        if (!r.within_tolerance) {
            return false;
        }
    }
    return true;
}

bool RunReport::expectations_met() const {
    for (const auto &c : checks) {
        if (!c.ok) {
            return false;
        }
    }
    return true;
}

RunReport run_scenario(const ScenarioConfig &config) {
    auto start = std::chrono::steady_clock::now();
    RunReport report;
    report.config = config;
    for (const RunBranch &b : expand_branches(config)) {
        report.runs.push_back(compare_run(config, b));
        const ProtocolReport &p = report.runs.back().protocol;
        for (const Expectation &e : config.expectations) {
            double actual = std::numeric_limits<double>::quiet_NaN();
            if (e.key == "fidelity") {
                actual = p.fidelity;
            } else if (e.key == "success") {
                actual = p.success ? 1 : 0;
            } else if (e.key == "sites_consumed") {
                actual = p.sites_consumed;
            } else if (e.key.rfind("prob:", 0) == 0) {
                std::string label = e.key.substr(5);
                for (const auto &bp : p.branch_probabilities) {
                    if (bp.label == label) {
                        actual = bp.probability;
                    }
                }
            } else if (e.key.rfind("metric:", 0) == 0) {
                auto it = p.metrics.find(e.key.substr(7));
                if (it != p.metrics.end()) {
                    actual = it->second;
                }
            }
            bool ok = std::abs(actual - e.value) <= config.tolerance;
            report.checks.push_back({p.branch, e.key, e.value, actual, ok});
        }
    }
    report.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return report;
}

bool SweepReport::agreement() const {
    for (const auto &r : rows) {
        if (!r.within_tolerance) {
            return false;
        }
    }
    return true;
}

bool SweepReport::expectations_met() const {
    for (const auto &r : rows) {
        if (r.expected && !(std::abs(r.value - *r.expected) <= config.tolerance)) {
            return false;
        }
    }
    return true;
}

SweepReport run_sweep(const ScenarioConfig &config) {
    if (!config.sweep) {
        throw Error(ErrorCode::kConfig, "field 'sweep': missing");
    }
    auto start = std::chrono::steady_clock::now();
    SweepReport report;
    report.config = config;
    const SweepSpec &spec = *config.sweep;
    for (size_t i = 0; i < spec.grid.size(); ++i) {
        double x = spec.grid[i];
        ScenarioConfig variant = config;
        const WireState &w = config.wire;
        if (spec.parameter == "theta") {
            variant.wire = theta_wire(x, w.total_sites, w.right, w.left);
        } else {
            if (!(x >= 0 && x < 1)) {
                throw Error(ErrorCode::kConfig, "field 'sweep.grid[" + std::to_string(i) + "]': r1 must lie in [0, 1)");
            }
            Decomposition d = decompose(w);
            variant.wire = decomposed_wire(make_decomposition(d.basis(), d.phi0, d.phi1, x, d.scale),
                                           w.total_sites, w.right, w.left);
        }
        variant.wire.first_site = w.first_site;
        double f_success = first_f_probability(variant.wire);
        for (const RunBranch &b : expand_branches(variant)) {
            RunComparison c = compare_run(variant, b);
            SweepRow row;
            row.parameter = x;
            row.branch = c.protocol.branch;
            auto it = c.protocol.metrics.find("probability");
            row.probability = it != c.protocol.metrics.end() ? it->second : 1.0;
            row.value = config.protocol == ProtocolKind::kOverlap ? c.protocol.metrics["overlap_re"]
                                                                   : c.protocol.fidelity;
            row.filter_success = f_success;
            row.oracle_delta = c.max_delta;
            row.within_tolerance = c.within_tolerance;
            if (!spec.expected.empty()) {
                row.expected = spec.expected[i];
            }
            report.rows.push_back(row);
        }
    }
    report.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return report;
}

json report_json(const RunReport &report, bool include_wall_time) {
    json runs = json::array();
    for (const auto &r : report.runs) {
        runs.push_back({{"run", run_label(r.branch)},
                        {"branch", r.protocol.branch},
                        {"protocol", protocol_json(r.protocol)},
                        {"oracle", protocol_json(r.oracle)},
                        {"deltas", r.deltas},
                        {"max_delta", r.max_delta},
                        {"within_tolerance", r.within_tolerance}});
    }
    json checks = json::array();
    for (const auto &c : report.checks) {
        checks.push_back(
            {{"run", c.run}, {"key", c.key}, {"expected", c.expected}, {"actual", c.actual}, {"ok", c.ok}});
    }
    std::string status = !report.agreement()           ? "tolerance-violation"
                         : !report.expectations_met() ? "expectation-failed"
                                                      : "pass";
    json out = {{"scenario", json::parse(report.config.echo)},
                {"tolerance", report.config.tolerance},
                {"runs", runs},
                {"expectations", checks},
                {"status", status}};
    if (include_wall_time) {
        out["wall_time_ms"] = report.wall_time_ms;
    }
    return out;
}

json report_json(const SweepReport &report, bool include_wall_time) {
    json rows = json::array();
    for (const auto &r : report.rows) {
        json row = {{"parameter", r.parameter},
                    {"branch", r.branch},
                    {"probability", r.probability},
                    {"value", r.value},
                    {"filter_success", r.filter_success},
                    {"oracle_delta", r.oracle_delta},
                    {"within_tolerance", r.within_tolerance}};
        if (r.expected) {
            row["expected"] = *r.expected;
        }
        rows.push_back(row);
    }
    std::string status = !report.agreement()           ? "tolerance-violation"
                         : !report.expectations_met() ? "expectation-failed"
                                                      : "pass";
    json out = {{"scenario", json::parse(report.config.echo)},
                {"tolerance", report.config.tolerance},
                {"parameter", report.config.sweep->parameter},
                {"rows", rows},
                {"status", status}};
    if (include_wall_time) {
        out["wall_time_ms"] = report.wall_time_ms;
    }
    return out;
}

std::string report_csv(const RunReport &report) {
    std::ostringstream os;
    os << "branch,success,fidelity,sites_consumed,probability,max_delta,within_tolerance\n";
    for (const auto &r : report.runs) {
        auto it = r.protocol.metrics.find("probability");
        double p = it != r.protocol.metrics.end() ? it->second : 1.0;
        os << '"' << r.protocol.branch << "\"," << (r.protocol.success ? 1 : 0) << ',' << fmt(r.protocol.fidelity)
           << ',' << r.protocol.sites_consumed << ',' << fmt(p) << ',' << fmt(r.max_delta) << ','
           << (r.within_tolerance ? 1 : 0) << '\n';
    }
    return os.str();
}

std::string report_csv(const SweepReport &report) {
    std::ostringstream os;
    os << report.config.sweep->parameter << ",branch,probability,value,filter_success,oracle_delta,within_tolerance\n";
    for (const auto &r : report.rows) {
        os << fmt(r.parameter) << ",\"" << r.branch << "\"," << fmt(r.probability) << ',' << fmt(r.value) << ','
           << fmt(r.filter_success) << ',' << fmt(r.oracle_delta) << ',' << (r.within_tolerance ? 1 : 0) << '\n';
    }
    return os.str();
}

int exit_code_for(const Error &error) {
    return error.code() == ErrorCode::kCapacityExceeded ? kExitCapacity : kExitConfig;
}

int scenario_status(const ScenarioConfig &config) {
    if (config.sweep) {
        SweepReport r = run_sweep(config);
        return r.agreement() && r.expectations_met() ? kExitOk : kExitTolerance;
    }
    RunReport r = run_scenario(config);
    return r.agreement() && r.expectations_met() ? kExitOk : kExitTolerance;
}

}  // namespace corrspace
