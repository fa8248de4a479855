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

#include "corrspace/protocols.hpp"

#include <string>

namespace corrspace {

namespace {

constexpr double kSqrtHalf = 0.70710678118654752440;

// Probabilities below this are treated as an annihilated branch.
constexpr double kNullBranch = 1e-14;

using Vec4 = Eigen::Vector4cd;

double quad(const CVec2 &x, const CMat2 &m) {
    return x.dot(m * x).real();
}

void require_sites(const WireState &wire, int needed, const char *what) {
    if (wire.unconsumed() < needed) {
        throw Error(ErrorCode::kWireExhausted,
                    std::string(what) + " needs " + std::to_string(needed) + " unconsumed sites, wire has " +
                        std::to_string(wire.unconsumed()));
    }
}

void check_filter_params(double r0, double r1) {
    if (!(r0 > 0) || !(r1 >= 0) || std::abs(r0 * r0 + r1 * r1 - 1) > kCompletenessTolerance) {
        throw Error(ErrorCode::kInvalidArgument, "filters need r0 > 0, r1 >= 0 and r0^2 + r1^2 = 1");
    }
}

CMat2 in_basis(const CMat2 &coords, const LocalBasis &basis) {
    CMat2 m = basis.matrix();
    return m * coords * m.adjoint();
}

CVec2 bell_result(const std::array<CVec2, 2> &e, const CVec2 &lambda, BellOutcome b) {
    auto c = bell_coefficients(b);
    CVec2 out = CVec2::Zero();
    for (int s = 0; s < 2; ++s) {
        for (int r = 0; r < 2; ++r) {
            out += c[s][r] * lambda(r) * e[s];
        }
    }
    return out;
}

CMat2 reference_frame_with(const CVec2 &e0, const CVec2 &e1, const CVec2 &fallback0, const CVec2 &fallback1) {
    double size = std::max(e0.norm(), e1.norm());
    double eps = kDefaultTolerance * (size > 0 ? size : 1.0);
    CVec2 u0 = e0.norm() > eps ? CVec2(e0 / e0.norm()) : unit(fallback0);
    CVec2 u1;
    CVec2 rest = e1 - u0 * u0.dot(e1);
    if (rest.norm() > eps) {
        u1 = rest / rest.norm();
    } else {
        rest = fallback1 - u0 * u0.dot(fallback1);
        if (rest.norm() < 1e-6) {
            rest = fallback0 - u0 * u0.dot(fallback0);
        }
        u1 = unit(rest);
    }
    CMat2 u;
    u.col(0) = u0;
    u.col(1) = u1;
    return u;
}

void add_probabilities(ProtocolReport &report, const std::vector<std::string> &labels, const std::vector<double> &p) {
    for (size_t i = 0; i < labels.size(); ++i) {
        report.branch_probabilities.push_back({labels[i], p[i]});
    }
}

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

// Frame-corrected coordinates of a single-wire correlation vector.
void finish_single(ProtocolReport &report, const CVec2 &boundary, const CMat2 &frame_basis, const CVec2 &target) {
    report.frame.reference = frame_basis;
    CVec2 coords = report.frame.correction() * (frame_basis.adjoint() * boundary);
    report.correlation = coords;
    if (coords.norm() > 0) {
        report.fidelity = coordinate_fidelity(coords, target);
    } else {
        report.success = false;
        report.fidelity = 0;
    }
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

double pair_norm2(const CMat2 &t, const CMat2 &ma, const CMat2 &mb) {
    return (t.adjoint() * ma * t * mb.transpose()).trace().real();
}

}  // namespace

const char *bell_label(BellOutcome b) {
    switch (b) {
        case BellOutcome::B1:
            return "B1";
        case BellOutcome::B2:
            return "B2";
        case BellOutcome::B3:
            return "B3";
        case BellOutcome::B4:
            return "B4";
    }
    return "?";
}

BellOutcome bell_from_label(const std::string &label) {
    for (int i = 0; i < 4; ++i) {
        auto b = static_cast<BellOutcome>(i);
        if (label == bell_label(b)) {
            return b;
        }
    }
    throw Error(ErrorCode::kInvalidArgument, "unknown Bell outcome '" + label + "'");
}

std::array<std::array<double, 2>, 2> bell_coefficients(BellOutcome b) {
    const double h = kSqrtHalf;
    switch (b) {
        case BellOutcome::B1:
            return {{{h, 0}, {0, h}}};
        case BellOutcome::B2:
            return {{{h, 0}, {0, -h}}};
        case BellOutcome::B3:
            return {{{0, h}, {h, 0}}};
        case BellOutcome::B4:
            return {{{0, h}, {-h, 0}}};
    }
    return {};
}

PauliFrame PauliFrame::compose(const PauliFrame &other) const {
    PauliFrame out = *this;
    out.bit_flip = bit_flip != other.bit_flip;
    out.phase_flip = phase_flip != other.phase_flip;
    return out;
}

CMat2 PauliFrame::correction() const {
    CMat2 c = CMat2::Identity();
    if (bit_flip) {
        c = pauli_x() * c;
    }
    if (phase_flip) {
        c = pauli_z() * c;
    }
    return c;
}

std::string PauliFrame::label() const {
    std::string s;
    s += bit_flip ? "X" : "";
    s += phase_flip ? "Z" : "";
    return s.empty() ? "I" : s;
}

PauliFrame correction_table(BellOutcome b) {
    PauliFrame f;
    f.bit_flip = b == BellOutcome::B3 || b == BellOutcome::B4;
    f.phase_flip = b == BellOutcome::B2 || b == BellOutcome::B4;
    return f;
}

double FilterPair::completeness_error() const {
    return max_abs((k.adjoint() * k + k_bar.adjoint() * k_bar - CMat2::Identity()).eval());
}

FilterPair make_filter_f(double r0, double r1, const LocalBasis &basis) {
    check_filter_params(r0, r1);
    double n = 1 / std::sqrt(1 + r1);
    CMat2 f;
    f << n, 0, -n * r1, n * r0;
    CVec2 xi(std::sqrt((1 - r1) / 2), std::sqrt((1 + r1) / 2));
    CMat2 f_bar = std::sqrt(2 * r1 / (1 + r1)) * outer(xi, xi);
    return {in_basis(f, basis), in_basis(f_bar, basis), "F", "Fbar"};
}

FilterPair make_filter_g(double r0, double r1, const LocalBasis &basis) {
    check_filter_params(r0, r1);
    double n = 1 / std::sqrt(1 + r1);
    CMat2 g;
    g << n * r0, 0, n * r1, n;
    CVec2 eta(kSqrtHalf, -kSqrtHalf);
    CMat2 g_bar = std::sqrt(2 * r1 / (1 + r1)) * outer(eta, eta);
    return {in_basis(g, basis), in_basis(g_bar, basis), "G", "Gbar"};
}

CMat2 reference_frame(const CVec2 &e0, const CVec2 &e1, const Decomposition &d) {
    return reference_frame_with(e0, e1, d.phi0, d.phi1);
}

std::array<CVec2, 2> m_basis_vectors(const WireState &wire, const LocalBasis &basis) {
    auto v = front_vectors(wire);
    std::array<CVec2, 2> e;
    for (int s = 0; s < 2; ++s) {
        e[s] = std::conj(basis[s](0)) * v[0] + std::conj(basis[s](1)) * v[1];
    }
    return e;
}

double coordinate_fidelity(const Eigen::VectorXcd &actual, const Eigen::VectorXcd &target) {
    return vector_fidelity(actual, target);
}

ProtocolReport orthogonalize_wire(const WireState &wire, BranchPicker &filter_picker, const OrthogonalizeOptions &options) {
    if (options.max_attempts < 1) {
        throw Error(ErrorCode::kInvalidArgument, "max_attempts must be at least 1");
    }
    if (options.realign_sites < 0) {
        throw Error(ErrorCode::kInvalidArgument, "realign_sites must be non-negative");
    }
    if (wire.front_filter) {
        throw Error(ErrorCode::kInvalidArgument, "wire already carries a front filter");
    }
    Decomposition d = decompose(wire);
    LocalBasis basis = d.basis();
    FilterPair filter = make_filter_f(d.r0, d.r1, basis);
    CMat2 realign = d.phi_to_computational();

    ProtocolReport report;
    report.frame.basis = FrameBasis::kPhysical;
    report.frame.reference = basis.matrix();
    WireState current = wire;
    int failures = 0;
    for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
        require_sites(current, 2, "filtering");
        WireState filtered = current;
        filtered.front_filter = filter.k;
        double p = wire_norm2(filtered) / wire_norm2(current);
        std::string tag = "attempt" + std::to_string(attempt) + ":";
        add_probabilities(report, {tag + "F", tag + "Fbar"}, {p, 1 - p});
        int branch = filter_picker.pick({p, 1 - p});
        if (branch == 0) {
            if (p < kNullBranch) {
                throw Error(ErrorCode::kZeroVector, "forced F branch has zero probability");
            }
            report.branch += "F";
            // Ideal result: sum_s |m_s> (x) Phi(R_s phi_s).
            CMat2 tail = tail_gram(filtered, filtered.first_site + 1);
            auto v = front_vectors(filtered);
            std::array<CVec2, 2> ideal;
            for (int l = 0; l < 2; ++l) {
                ideal[l] = basis.m0(l) * current.right(0) * d.phi0 + basis.m1(l) * current.right(1) * d.phi1;
            }
            Complex ov = 0;
            double nv = 0;
            double nw = 0;
            for (int l = 0; l < 2; ++l) {
                ov += v[l].dot(tail * ideal[l]);
                nv += quad(v[l], tail);
                nw += quad(ideal[l], tail);
            }
            report.fidelity = std::norm(ov) / (nv * nw);
            report.sites_consumed = failures * (1 + options.realign_sites);
            report.metrics["attempts"] = attempt;
            report.metrics["success_probability"] = p;
            report.wire = filtered;
            return report;
        }
        if (1 - p < kNullBranch) {
            throw Error(ErrorCode::kZeroVector, "forced Fbar branch has zero probability");
        }
        report.branch += "Fbar,";
        ++failures;
        // F_bar = c |xi><xi| leaves |xi> on the site and c A[xi] R on the tail.
        CVec2 xi = std::sqrt((1 - d.r1) / 2) * basis.m0 + std::sqrt((1 + d.r1) / 2) * basis.m1;
        double weight = std::sqrt(2 * d.r1 / (1 + d.r1));
        auto v = front_vectors(current);
        CVec2 tail_vec = weight * (std::conj(xi(0)) * v[0] + std::conj(xi(1)) * v[1]);
        current.right = realign * tail_vec;
        current.first_site += 1 + options.realign_sites;
        current.front_filter.reset();
        if (current.first_site > current.total_sites) {
            throw Error(ErrorCode::kWireExhausted, "filtering failures consumed the wire");
        }
    }
    throw Error(ErrorCode::kAttemptsExhausted,
                "filter did not succeed within " + std::to_string(options.max_attempts) + " attempts");
}

namespace {

ProtocolReport upload_impl(const WireState &wire, const CVec2 &psi, BranchPicker *picker, BellOutcome forced) {
    require_sites(wire, 2, "upload");
    Decomposition d = decompose(wire);
    auto e = m_basis_vectors(wire, d.basis());
    CMat2 tail = tail_gram(wire, wire.first_site + 1);

    std::vector<double> p(4);
    std::vector<std::string> labels;
    for (int i = 0; i < 4; ++i) {
        auto b = static_cast<BellOutcome>(i);
        p[i] = quad(bell_result(e, psi, b), tail);
        labels.emplace_back(bell_label(b));
    }
    p = normalized(p);
    BellOutcome outcome = picker ? static_cast<BellOutcome>(picker->pick(p)) : forced;

    ProtocolReport report;
    add_probabilities(report, labels, p);
    report.branch = bell_label(outcome);
    report.frame = correction_table(outcome);
    CVec2 boundary = bell_result(e, psi, outcome);
    finish_single(report, boundary, reference_frame(e[0], e[1], d), psi);
    report.sites_consumed = 1;
    report.metrics["probability"] = p[static_cast<int>(outcome)];
    double ne = e[0].norm() * e[1].norm();
    report.metrics["front_overlap"] = ne > 0 ? std::abs(e[0].dot(e[1])) / ne : 0;
    WireState out = wire;
    out.right = boundary;
    out.first_site += 1;
    out.front_filter.reset();
    report.wire = out;
    return report;
}

}  // namespace

ProtocolReport upload_teleport(const WireState &wire, const CVec2 &psi, BranchPicker &picker) {
    return upload_impl(wire, psi, &picker, BellOutcome::B1);
}

ProtocolReport upload_teleport(const WireState &wire, const CVec2 &psi, BellOutcome outcome) {
    return upload_impl(wire, psi, nullptr, outcome);
}

namespace {

ProtocolReport download_impl(const WireState &wire, const CVec2 &psi, BranchPicker *picker, int forced,
                             const DownloadOptions &options) {
    if (options.measured_offset < 1) {
        throw Error(ErrorCode::kInvalidArgument, "measured_offset must be at least 1");
    }
    int f = wire.first_site;
    int k = f + options.measured_offset;
    if (k + 1 > wire.total_sites) {
        throw Error(ErrorCode::kWireExhausted, "download needs the output site, the measured site and a tail");
    }
    Decomposition d = decompose(wire);
    LocalBasis basis = d.basis();
    CMat2 tail = tail_gram(wire, k + 1);
    std::vector<double> p = normalized({quad(d.phi0, tail), quad(d.phi1, tail)});
    int s = picker ? picker->pick(p) : forced;
    if (s != 0 && s != 1) {
        throw Error(ErrorCode::kInvalidArgument, "download outcome must be 0 or 1");
    }

    CMat2 mb = basis.matrix();
    CMat2 z_tilde = mb * pauli_z() * mb.adjoint();
    CVec2 psi_tilde = unit(CVec2(psi(0) * basis.m0 + psi(1) * basis.m1));
    CVec2 out = s == 1 ? CVec2(z_tilde * psi_tilde) : psi_tilde;

    ProtocolReport report;
    add_probabilities(report, {"s=0", "s=1"}, p);
    report.branch = "s=" + std::to_string(s);
    report.frame.phase_flip = s == 1;
    report.frame.basis = FrameBasis::kPhysical;
    report.frame.reference = mb;
    CVec2 corrected = mb * report.frame.correction() * mb.adjoint() * out;
    report.fidelity = vector_fidelity(corrected, psi_tilde);
    report.physical = StateVector::qubit(out);
    report.correlation = mb.adjoint() * corrected;
    report.sites_consumed = k - f + 1;
    report.metrics["probability"] = p[s];
    WireState rest = wire;
    rest.right = d.phi(s);
    rest.first_site = k + 1;
    rest.front_filter.reset();
    report.wire = rest;
    return report;
}

}  // namespace

ProtocolReport download(const WireState &wire, const CVec2 &psi, BranchPicker &picker, const DownloadOptions &options) {
    return download_impl(wire, psi, &picker, 0, options);
}

ProtocolReport download(const WireState &wire, const CVec2 &psi, int outcome, const DownloadOptions &options) {
    return download_impl(wire, psi, nullptr, outcome, options);
}

ProtocolReport inverse_download_upload(const WireState &wire,
                                       const CVec2 &psi,
                                       BranchPicker &filter_picker,
                                       const InverseUploadOptions &options) {
    const int r = options.rotation_sites;
    if (r < 1) {
        throw Error(ErrorCode::kInvalidArgument, "rotation_sites must be at least 1");
    }
    Decomposition d = decompose(wire);
    LocalBasis basis = d.basis();
    FilterPair g = make_filter_g(d.r0, d.r1);  // m-basis coordinates
    const CMat2 &gm = g.k;

    ProtocolReport report = orthogonalize_wire(wire, filter_picker, options.orthogonalize);
    const int wasted = report.sites_consumed;
    WireState w = *report.wire;
    const int f = w.first_site;
    if (f + r > w.total_sites) {
        throw Error(ErrorCode::kWireExhausted, "rotation would run past the end of the wire");
    }
    report.wire.reset();
    report.frame = PauliFrame{};
    report.metrics.clear();

    // v[t][u]: tail vector paired with |m_t>_f |m_u>_0.
    auto e = m_basis_vectors(w, basis);
    std::array<std::array<CVec2, 2>, 2> v;
    for (int t = 0; t < 2; ++t) {
        for (int u = 0; u < 2; ++u) {
            v[t][u] = psi(u) * e[t];
        }
    }
    v[1][1] = -v[1][1];

    CMat2 tail = tail_gram(w, f + 1);
    auto norm_of = [&](const std::array<std::array<CVec2, 2>, 2> &x) {
        double n = 0;
        for (int t = 0; t < 2; ++t) {
            for (int u = 0; u < 2; ++u) {
                n += quad(x[t][u], tail);
            }
        }
        return n;
    };

    // G on site f.
    std::array<std::array<CVec2, 2>, 2> vg;
    for (int t = 0; t < 2; ++t) {
        for (int u = 0; u < 2; ++u) {
            vg[t][u] = gm(t, 0) * v[0][u] + gm(t, 1) * v[1][u];
        }
    }
    double p_g1 = norm_of(vg) / norm_of(v);
    add_probabilities(report, {"G(front)", "Gbar(front)"}, {p_g1, 1 - p_g1});
    if (filter_picker.pick({p_g1, 1 - p_g1}) != 0) {
        report.success = false;
        report.branch += ";Gbar(front)";
        report.fidelity = 0;
        report.sites_consumed = wasted + 1;
        return report;
    }
    report.branch += ";G(front)";

    // Fold site f back into the wire: solve A[m_t] b_u = vg[t][u].
    Eigen::Matrix<Complex, 4, 2> stacked;
    stacked.topRows<2>() = site_matrix(w, basis.m0);
    stacked.bottomRows<2>() = site_matrix(w, basis.m1);
    auto qr = stacked.colPivHouseholderQr();
    if (qr.rank() < 2) {
        throw Error(ErrorCode::kUnrecoverable, "site matrices do not determine the boundary");
    }
    CMat2 q = outer(d.phi0, ket_plus()) + outer(d.phi1, ket_minus());
    std::array<CVec2, 2> c;
    for (int u = 0; u < 2; ++u) {
        Eigen::Matrix<Complex, 4, 1> rhs;
        rhs.head<2>() = vg[0][u];
        rhs.tail<2>() = vg[1][u];
        CVec2 b = qr.solve(rhs);
        double resid = (stacked * b - rhs).norm();
        if (resid > 1e-8 * std::max(1.0, rhs.norm())) {
            throw Error(ErrorCode::kUnrecoverable, "filtered state is not a wire state on the front site");
        }
        c[u] = q * b;
    }

    CMat2 out_tail = tail_gram(w, f + r);
    std::array<CVec2, 2> target{site_matrix(w, basis.m0) * psi, site_matrix(w, basis.m1) * psi};
    double n_target = quad(target[0], out_tail) + quad(target[1], out_tail);

    // Final G on the ancilla, then compare with Phi(psi) on (ancilla, tail).
    auto finish = [&](const std::array<CVec2, 2> &cu, double &p_g2, double &fid) {
        std::array<CVec2, 2> wt;
        double n_before = quad(cu[0], out_tail) + quad(cu[1], out_tail);
        double n_after = 0;
        Complex ov = 0;
        for (int t = 0; t < 2; ++t) {
            wt[t] = gm(t, 0) * cu[0] + gm(t, 1) * cu[1];
            n_after += quad(wt[t], out_tail);
            ov += target[t].dot(out_tail * wt[t]);
        }
        p_g2 = n_after / n_before;
        fid = n_after > 0 ? std::norm(ov) / (n_after * n_target) : 0;
    };

    double p_g2 = 0;
    double fid = 0;
    if (options.dephase_ancilla) {
        std::vector<double> wu(2);
        for (int u = 0; u < 2; ++u) {
            wu[u] = quad(vg[0][u], tail) + quad(vg[1][u], tail);
        }
        wu = normalized(wu);
        add_probabilities(report, {"dephase:u=0", "dephase:u=1"}, wu);
        double acc = 0;
        for (int u = 0; u < 2; ++u) {
            if (wu[u] < kNullBranch) {
                continue;
            }
            std::array<CVec2, 2> cu{CVec2::Zero(), CVec2::Zero()};
            cu[u] = c[u];
            double pu = 0;
            double fu = 0;
            finish(cu, pu, fu);
            p_g2 += wu[u] * pu;
            acc += wu[u] * pu * fu;
        }
        fid = p_g2 > 0 ? acc / p_g2 : 0;
    } else {
        finish(c, p_g2, fid);
    }
    add_probabilities(report, {"G(ancilla)", "Gbar(ancilla)"}, {p_g2, 1 - p_g2});
    report.sites_consumed = wasted + r;
    if (filter_picker.pick({p_g2, 1 - p_g2}) != 0) {
        report.success = false;
        report.branch += ";Gbar(ancilla)";
        report.fidelity = 0;
        return report;
    }
    report.branch += ";G(ancilla)";
    report.success = true;
    report.fidelity = fid;
    report.correlation = psi;
    WireState out = w;
    out.front_filter.reset();
    out.first_site = f + r - 1;
    out.right = psi;
    report.wire = out;
    return report;
}

namespace {

ProtocolReport gate_single_impl(const WireState &wire,
                                const CVec2 &psi,
                                const CMat2 &u,
                                BranchPicker *picker,
                                BellOutcome forced,
                                const GateTeleportOptions &options) {
    if (!is_unitary(u, kDefaultTolerance)) {
        throw Error(ErrorCode::kNonUnitary, "gate teleportation needs a unitary");
    }
    const int r = options.rotation_sites;
    if (r < 1) {
        throw Error(ErrorCode::kInvalidArgument, "rotation_sites must be at least 1");
    }
    int g = wire.first_site + 1 + r;
    if (g > wire.total_sites) {
        throw Error(ErrorCode::kWireExhausted, "basis change would run past the end of the wire");
    }
    Decomposition d = decompose(wire);
    auto e = m_basis_vectors(wire, d.basis());
    CMat2 p_map = d.phi_to_computational();
    std::array<CVec2, 2> er{p_map * e[0], p_map * e[1]};
    CVec2 upsi = u * psi;
    CMat2 tail = tail_gram(wire, g);

    std::vector<double> p(4);
    std::vector<std::string> labels;
    for (int i = 0; i < 4; ++i) {
        auto b = static_cast<BellOutcome>(i);
        p[i] = quad(bell_result(er, upsi, b), tail);
        labels.emplace_back(bell_label(b));
    }
    p = normalized(p);
    BellOutcome outcome = picker ? static_cast<BellOutcome>(picker->pick(p)) : forced;

    ProtocolReport report;
    add_probabilities(report, labels, p);
    report.branch = bell_label(outcome);
    report.frame = correction_table(outcome);
    CVec2 boundary = bell_result(er, upsi, outcome);
    finish_single(report, boundary, reference_frame_with(er[0], er[1], ket(0), ket(1)), upsi);
    report.sites_consumed = 1 + r;
    report.metrics["probability"] = p[static_cast<int>(outcome)];
    WireState out = wire;
    out.right = boundary;
    out.first_site = g;
    out.front_filter.reset();
    report.wire = out;
    return report;
}

}  // namespace

ProtocolReport gate_teleport_single(const WireState &wire,
                                    const CVec2 &psi,
                                    const CMat2 &u,
                                    BranchPicker &picker,
                                    const GateTeleportOptions &options) {
    return gate_single_impl(wire, psi, u, &picker, BellOutcome::B1, options);
}

ProtocolReport gate_teleport_single(const WireState &wire,
                                    const CVec2 &psi,
                                    const CMat2 &u,
                                    BellOutcome outcome,
                                    const GateTeleportOptions &options) {
    return gate_single_impl(wire, psi, u, nullptr, outcome, options);
}

double cz_projection_amplitude(const CzChoice &c, int q_first, int q_middle, int s, bool hadamard_middle) {
    if (q_first != (s ^ c.x)) {
        return 0;
    }
    double sign = (c.z & s) ? -1.0 : 1.0;
    int h = s ^ c.y;
    double middle;
    if (hadamard_middle) {
        middle = (h & q_middle) ? -kSqrtHalf : kSqrtHalf;
    } else {
        middle = q_middle == h ? 1.0 : 0.0;
    }
    return kSqrtHalf * sign * middle;
}

namespace {

struct TwoWireSetup {
    Decomposition da;
    Decomposition db;
    std::array<CVec2, 2> ea;
    std::array<CVec2, 2> eb;
    CMat2 ma;
    CMat2 mb;
    CMat2 ua;
    CMat2 ub;
    double norm2 = 0;
};

TwoWireSetup two_wire_setup(const WireState &wire_a, const WireState &wire_b) {
    require_sites(wire_a, 2, "two-wire protocol");
    require_sites(wire_b, 2, "two-wire protocol");
    TwoWireSetup s;
    s.da = decompose(wire_a);
    s.db = decompose(wire_b);
    s.ea = m_basis_vectors(wire_a, s.da.basis());
    s.eb = m_basis_vectors(wire_b, s.db.basis());
    s.ma = tail_gram(wire_a, wire_a.first_site + 1);
    s.mb = tail_gram(wire_b, wire_b.first_site + 1);
    s.ua = reference_frame(s.ea[0], s.ea[1], s.da);
    s.ub = reference_frame(s.eb[0], s.eb[1], s.db);
    s.norm2 = wire_norm2(wire_a) * wire_norm2(wire_b);
    return s;
}

CMat2 pair_tensor(const TwoWireSetup &s, const CMat2 &coeff) {
    CMat2 t = CMat2::Zero();
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            t += coeff(a, b) * s.ea[a] * s.eb[b].transpose();
        }
    }
    return t;
}

CMat2 cz_coefficients(const Eigen::Vector4cd &psi2, const CzChoice &first, const CzChoice &second) {
    CMat2 coeff = CMat2::Zero();
    for (int s = 0; s < 2; ++s) {
        for (int r = 0; r < 2; ++r) {
            Complex acc = 0;
            for (int q1 = 0; q1 < 2; ++q1) {
                for (int q2 = 0; q2 < 2; ++q2) {
                    for (int q34 = 0; q34 < 2; ++q34) {
                        acc += cz_projection_amplitude(first, q1, q34, s, false) *
                               cz_projection_amplitude(second, q2, q34, r, true) * psi2(q1 + 2 * q2) * kSqrtHalf;
                    }
                }
            }
            coeff(s, r) = acc;
        }
    }
    return coeff;
}

ProtocolReport cz_impl(const Eigen::Vector4cd &psi2,
                       const WireState &wire_a,
                       const WireState &wire_b,
                       BranchPicker *picker,
                       CzChoice first,
                       CzChoice second) {
    if (!(psi2.norm() > 0)) {
        throw Error(ErrorCode::kZeroVector, "two-qubit input is zero");
    }
    TwoWireSetup s = two_wire_setup(wire_a, wire_b);
    double n0 = s.norm2 * psi2.squaredNorm();
    std::vector<double> p(64);
    std::vector<std::string> labels(64);
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            CMat2 t = pair_tensor(s, cz_coefficients(psi2, CzChoice::from_index(i), CzChoice::from_index(j)));
            p[i + 8 * j] = pair_norm2(t, s.ma, s.mb) / n0;
            labels[i + 8 * j] = "P1=" + std::to_string(i) + ",P2=" + std::to_string(j);
        }
    }
    if (picker) {
        int pick = picker->pick(p);
        first = CzChoice::from_index(pick & 7);
        second = CzChoice::from_index(pick >> 3);
    }
    int chosen = first.index() + 8 * second.index();

    ProtocolReport report;
    add_probabilities(report, labels, p);
    report.branch = labels[chosen];
    report.frame.bit_flip = first.x;
    report.frame.phase_flip = (first.z ^ second.x ^ second.y) != 0;
    report.frame.reference = s.ua;
    PauliFrame fb;
    fb.bit_flip = second.x;
    fb.phase_flip = (second.z ^ first.x ^ first.y) != 0;
    fb.reference = s.ub;
    report.second_frame = fb;

    CMat2 t = pair_tensor(s, cz_coefficients(psi2, first, second));
    CMat2 x = report.frame.correction() * s.ua.adjoint() * t * s.ub.conjugate() * fb.correction().transpose();
    CMat2 target;
    target << psi2(0), psi2(2), psi2(1), -psi2(3);
    report.correlation = flatten(x);
    report.success = p[chosen] > kNullBranch;
    report.fidelity = report.success ? coordinate_fidelity(flatten(x), flatten(target)) : 0;
    report.sites_consumed = 1;
    report.metrics["probability"] = p[chosen];
    return report;
}

}  // namespace

ProtocolReport gate_teleport_cz(const Eigen::Vector4cd &psi2,
                                const WireState &wire_a,
                                const WireState &wire_b,
                                const CzChoice &first,
                                const CzChoice &second) {
    return cz_impl(psi2, wire_a, wire_b, nullptr, first, second);
}

ProtocolReport gate_teleport_cz(const Eigen::Vector4cd &psi2,
                                const WireState &wire_a,
                                const WireState &wire_b,
                                BranchPicker &picker) {
    return cz_impl(psi2, wire_a, wire_b, &picker, {}, {});
}

namespace {

ProtocolReport swap_impl(const WireState &wire_a, const WireState &wire_b, BranchPicker *picker, BellOutcome forced) {
    TwoWireSetup s = two_wire_setup(wire_a, wire_b);
    auto coeff_of = [](BellOutcome b) {
        auto c = bell_coefficients(b);
        CMat2 m;
        m << c[0][0], c[0][1], c[1][0], c[1][1];
        return m;
    };
    std::vector<double> p(4);
    std::vector<std::string> labels;
    for (int i = 0; i < 4; ++i) {
        auto b = static_cast<BellOutcome>(i);
        p[i] = pair_norm2(pair_tensor(s, coeff_of(b)), s.ma, s.mb) / s.norm2;
        labels.emplace_back(bell_label(b));
    }
    BellOutcome outcome = picker ? static_cast<BellOutcome>(picker->pick(p)) : forced;

    ProtocolReport report;
    add_probabilities(report, labels, p);
    report.branch = bell_label(outcome);
    report.frame.reference = s.ua;
    PauliFrame fb = correction_table(outcome);
    fb.reference = s.ub;
    report.second_frame = fb;

    CMat2 t = pair_tensor(s, coeff_of(outcome));
    CMat2 x = s.ua.adjoint() * t * s.ub.conjugate() * fb.correction().transpose();
    report.correlation = flatten(x);
    int idx = static_cast<int>(outcome);
    report.success = p[idx] > kNullBranch;
    report.metrics["probability"] = p[idx];
    report.sites_consumed = 1;
    if (!report.success) {
        report.fidelity = 0;
        return report;
    }
    report.metrics["correlation_fidelity"] = coordinate_fidelity(flatten(x), flatten(CMat2::Identity()));

    // Download both wires: correlation index i becomes |m_i> on each qubit.
    LocalBasis ba = s.da.basis();
    LocalBasis bb = s.db.basis();
    StateVector::Amplitudes amps = StateVector::Amplitudes::Zero(4);
    StateVector::Amplitudes bell = StateVector::Amplitudes::Zero(4);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            for (int pa = 0; pa < 2; ++pa) {
                for (int pb = 0; pb < 2; ++pb) {
                    Complex prod = ba[i](pa) * bb[j](pb);
                    amps(pa + 2 * pb) += x(i, j) * prod;
                    if (i == j) {
                        bell(pa + 2 * pb) += kSqrtHalf * prod;
                    }
                }
            }
        }
    }
    StateVector phys(2, amps);
    report.fidelity = fidelity(phys, StateVector(2, bell));
    report.physical = phys;
    return report;
}

}  // namespace

ProtocolReport entanglement_swap(const WireState &wire_a, const WireState &wire_b, BellOutcome outcome) {
    return swap_impl(wire_a, wire_b, nullptr, outcome);
}

ProtocolReport entanglement_swap(const WireState &wire_a, const WireState &wire_b, BranchPicker &picker) {
    return swap_impl(wire_a, wire_b, &picker, BellOutcome::B1);
}

}  // namespace corrspace
