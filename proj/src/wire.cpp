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

#include "corrspace/wire.hpp"

#include <string>

namespace corrspace {

namespace {

void check_sites(int total_sites) {
    if (total_sites < 1 || total_sites > kMaxWireSites) {
        throw Error(ErrorCode::kCapacityExceeded,
                    "wires have 1 to " + std::to_string(kMaxWireSites) + " sites, got " + std::to_string(total_sites));
    }
}

bool same_matrix(const CMat2 &a, const CMat2 &b) {
    return max_abs((a - b).eval()) <= kCompletenessTolerance;
}

}  // namespace

LocalBasis LocalBasis::computational() {
    return {ket(0), ket(1)};
}

LocalBasis LocalBasis::plus_minus() {
    return {ket_plus(), ket_minus()};
}

LocalBasis LocalBasis::completing(const CVec2 &m0) {
    CVec2 u = unit(m0);
    return {u, CVec2(-std::conj(u(1)), std::conj(u(0)))};
}

CMat2 LocalBasis::matrix() const {
    CMat2 m;
    m.col(0) = m0;
    m.col(1) = m1;
    return m;
}

WireState make_wire(const CMat2 &a0, const CMat2 &a1, const CVec2 &left, const CVec2 &right, int total_sites) {
    check_sites(total_sites);
    WireState w;
    w.a0 = a0;
    w.a1 = a1;
    w.left = left;
    w.right = right;
    w.first_site = 1;
    w.total_sites = total_sites;
    return w;
}

WireState cluster_wire(int total_sites, const CVec2 &right, const CVec2 &left) {
    return make_wire(outer(ket_plus(), ket(0)), outer(ket_minus(), ket(1)), left, right, total_sites);
}

WireState theta_wire(double theta, int total_sites, const CVec2 &right, const CVec2 &left) {
    double c = std::cos(theta / 2);
    double s = std::sin(theta / 2);
    CVec2 phi0(c, s);
    CVec2 phi1(s, -c);
    return make_wire(outer(phi0, ket(0)), outer(phi1, ket(1)), left, right, total_sites);
}

CMat2 site_matrix(const CMat2 &a0, const CMat2 &a1, const CVec2 &m) {
    return std::conj(m(0)) * a0 + std::conj(m(1)) * a1;
}

CMat2 site_matrix(const WireState &wire, const CVec2 &m) {
    return site_matrix(wire.a0, wire.a1, m);
}

std::array<CMat2, 2> front_matrices(const WireState &wire) {
    if (!wire.front_filter) {
        return {wire.a0, wire.a1};
    }
    const CMat2 &k = *wire.front_filter;
    return {k(0, 0) * wire.a0 + k(0, 1) * wire.a1, k(1, 0) * wire.a0 + k(1, 1) * wire.a1};
}

std::array<CVec2, 2> front_vectors(const WireState &wire) {
    auto b = front_matrices(wire);
    return {b[0] * wire.right, b[1] * wire.right};
}

CMat2 tail_gram(const WireState &wire, int site) {
    if (site < 1 || site > wire.total_sites + 1) {
        throw Error(ErrorCode::kSiteOutOfRange, "tail start " + std::to_string(site) + " outside the wire");
    }
    CMat2 m = outer(wire.left, wire.left);
    for (int j = wire.total_sites; j >= site; --j) {
        m = transfer_map_apply(wire.a0, wire.a1, m);
    }
    return m;
}

double wire_norm2(const WireState &wire) {
    if (wire.unconsumed() < 1) {
        throw Error(ErrorCode::kWireExhausted, "wire has no unconsumed sites");
    }
    CMat2 m = tail_gram(wire, wire.first_site + 1);
    auto v = front_vectors(wire);
    return (v[0].dot(m * v[0]) + v[1].dot(m * v[1])).real();
}

StateVector contract_to_statevector(const WireState &wire) {
    int n = wire.unconsumed();
    if (n < 1) {
        throw Error(ErrorCode::kWireExhausted, "wire has no unconsumed sites");
    }
    if (n > kMaxWireSites) {
        throw Error(ErrorCode::kCapacityExceeded, "cannot contract more than " + std::to_string(kMaxWireSites) + " sites");
    }
    auto front = front_matrices(wire);
    StateVector::Amplitudes amps(Eigen::Index{1} << n);
    for (Eigen::Index index = 0; index < amps.size(); ++index) {
        // Row vector <L| A[l_N] ... walked down to the front site.
        Eigen::Matrix<Complex, 1, 2> row = wire.left.adjoint();
        for (int bit = n - 1; bit >= 1; --bit) {
            row = row * wire.a((index >> bit) & 1);
        }
        row = row * front[index & 1];
        amps(index) = row * wire.right;
    }
    return StateVector(n, std::move(amps));
}

GeneralFormParams detect_general_form(const CMat2 &a0, const CMat2 &a1, double tol) {
    double size0 = max_abs(a0);
    if (!(size0 > tol)) {
        throw Error(ErrorCode::kNotAWire, "A[0] vanishes");
    }
    CMat2 gram = a0.adjoint() * a0;
    double c = gram.trace().real() / 2;
    if (max_abs((gram - c * CMat2::Identity()).eval()) > tol * c) {
        throw Error(ErrorCode::kNotAWire, "A[0] is not proportional to a unitary");
    }
    CMat2 w = a0 / std::sqrt(c);
    double chi = std::arg(w.determinant());
    w *= std::polar(1.0, -chi / 2);

    GeneralFormParams out;
    out.w = w;
    out.scale0 = std::sqrt(c) * std::polar(1.0, chi / 2);
    if (max_abs(a1) <= tol * size0) {
        out.alpha = 0;
        out.scale1 = 0;
        return out;
    }
    CMat2 y = w.adjoint() * a1;
    double ysize = max_abs(y);
    if (std::abs(y(0, 1)) > tol * ysize || std::abs(y(1, 0)) > tol * ysize) {
        throw Error(ErrorCode::kNotAWire, "A[0]^-1 A[1] is not diagonal in the computational basis");
    }
    if (std::abs(std::abs(y(0, 0)) - std::abs(y(1, 1))) > tol * ysize) {
        throw Error(ErrorCode::kNotAWire, "A[0]^-1 A[1] has unequal diagonal moduli");
    }
    double alpha = std::arg(y(1, 1) / y(0, 0)) / 2;
    Complex scale1 = y(0, 0) * std::polar(1.0, alpha);
    if (alpha < 0) {
        alpha += std::numbers::pi;
        scale1 = -scale1;
    }
    if (alpha >= std::numbers::pi) {
        alpha -= std::numbers::pi;
        scale1 = -scale1;
    }
    out.alpha = alpha;
    out.scale1 = scale1;
    return out;
}

WireState general_form_wire(const GeneralFormParams &params, int total_sites, const CVec2 &right, const CVec2 &left) {
    return make_wire(params.scale0 * params.w,
                     params.scale1 * params.w * phase_diag(params.alpha),
                     left,
                     right,
                     total_sites);
}

CMat2 Decomposition::phi_to_computational() const {
    CMat2 p;
    p.row(0) = phi0.adjoint();
    p.row(1) = phi1.adjoint();
    return p;
}

Decomposition decompose(const CMat2 &a0, const CMat2 &a1, double tol) {
    Eigen::Matrix<Complex, 2, 2> cols;
    cols.col(0) = a0.col(1);
    cols.col(1) = a1.col(1);
    Eigen::JacobiSVD<CMat2> svd(cols, Eigen::ComputeFullV);
    auto sv = svd.singularValues();
    if (!(sv(0) > tol)) {
        throw Error(ErrorCode::kNotDecomposable, "A[0]|1> and A[1]|1> both vanish");
    }
    if (sv(1) > tol * sv(0)) {
        throw Error(ErrorCode::kNotDecomposable, "A[0]|1> and A[1]|1> are not parallel");
    }
    CVec2 null = svd.matrixV().col(1);
    CVec2 m0 = canonical_phase(CVec2(null.conjugate()));
    CVec2 m1(-std::conj(m0(1)), std::conj(m0(0)));

    CVec2 v1 = site_matrix(a0, a1, m1) * ket(1);
    double s = v1.norm();
    CVec2 v0 = site_matrix(a0, a1, m0) * ket(0);
    double r0s = v0.norm();
    if (!(r0s > tol * s)) {
        throw Error(ErrorCode::kNotDecomposable, "A[m0] vanishes, r0 would be zero");
    }
    CVec2 phi0 = v0 / r0s;
    CVec2 w = site_matrix(a0, a1, m1) * ket(0);
    Complex proj = phi0.dot(w);
    if (std::abs(proj) > tol * s) {
        // A[e^{i b} m] = e^{-i b} A[m]; rotate so <phi0|A[m1]|0> is real positive.
        m1 *= proj / std::abs(proj);
        v1 *= std::conj(proj) / std::abs(proj);
        w *= std::conj(proj) / std::abs(proj);
    } else {
        m1 = canonical_phase(m1);
        v1 = site_matrix(a0, a1, m1) * ket(1);
        w = site_matrix(a0, a1, m1) * ket(0);
    }

    Decomposition d;
    d.m0 = m0;
    d.m1 = m1;
    d.phi0 = phi0;
    d.phi1 = v1 / s;
    d.scale = s;
    d.r0 = r0s / s;
    d.r1 = phi0.dot(w).real() / s;
    if (std::abs(d.phi0.dot(d.phi1)) > tol) {
        throw Error(ErrorCode::kNotDecomposable, "phi0 and phi1 are not orthogonal");
    }
    if ((w - d.r1 * s * phi0).norm() > tol * s) {
        throw Error(ErrorCode::kNotDecomposable, "A[m1]|0> leaves the phi0 direction");
    }
    if (std::abs(d.r0 * d.r0 + d.r1 * d.r1 - 1) > tol) {
        throw Error(ErrorCode::kNotDecomposable, "r0^2 + r1^2 differs from 1");
    }
    // Accepted within tol; make (r0, r1) exactly a unit pair for the filters.
    d.r1 = std::abs(proj) > tol * s ? std::max(d.r1, 0.0) : 0.0;
    double n = std::hypot(d.r0, d.r1);
    d.r0 /= n;
    d.r1 /= n;
    d.m0_prime = d.r0 * d.m0 + d.r1 * d.m1;
    d.m1_prime = d.m1;
    return d;
}

Decomposition decompose(const WireState &wire, double tol) {
    return decompose(wire.a0, wire.a1, tol);
}

Decomposition make_decomposition(const LocalBasis &basis, const CVec2 &phi0, const CVec2 &phi1, double r1, double scale) {
    if (!(r1 >= 0 && r1 < 1)) {
        throw Error(ErrorCode::kInvalidArgument, "r1 must lie in [0, 1)");
    }
    if (std::abs(basis.m0.dot(basis.m1)) > kDefaultTolerance || std::abs(phi0.dot(phi1)) > kDefaultTolerance) {
        throw Error(ErrorCode::kInvalidArgument, "basis and phi pair must be orthonormal");
    }
    Decomposition d;
    d.m0 = basis.m0;
    d.m1 = basis.m1;
    d.phi0 = phi0;
    d.phi1 = phi1;
    d.r1 = r1;
    d.r0 = std::sqrt(1 - r1 * r1);
    d.scale = scale;
    d.m0_prime = d.r0 * d.m0 + d.r1 * d.m1;
    d.m1_prime = d.m1;
    return d;
}

std::pair<CMat2, CMat2> site_matrices_from(const Decomposition &d) {
    CMat2 am0 = d.scale * d.r0 * outer(d.phi0, ket(0));
    CMat2 am1 = d.scale * (d.r1 * outer(d.phi0, ket(0)) + outer(d.phi1, ket(1)));
    CMat2 a0 = d.m0(0) * am0 + d.m1(0) * am1;
    CMat2 a1 = d.m0(1) * am0 + d.m1(1) * am1;
    return {a0, a1};
}

WireState decomposed_wire(const Decomposition &d, int total_sites, const CVec2 &right, const CVec2 &left) {
    auto [a0, a1] = site_matrices_from(d);
    return make_wire(a0, a1, left, right, total_sites);
}

std::array<double, 2> site_probabilities(const WireState &wire, const LocalBasis &basis) {
    if (wire.unconsumed() < 2) {
        throw Error(ErrorCode::kWireExhausted, "measuring the last site would exhaust the wire");
    }
    CMat2 m = tail_gram(wire, wire.first_site + 1);
    auto v = front_vectors(wire);
    std::array<double, 2> p{};
    double total = 0;
    for (int s = 0; s < 2; ++s) {
        CVec2 b = std::conj(basis[s](0)) * v[0] + std::conj(basis[s](1)) * v[1];
        p[s] = b.dot(m * b).real();
        total += p[s];
    }
    if (!(total > 0)) {
        throw Error(ErrorCode::kZeroVector, "wire state has zero norm");
    }
    p[0] /= total;
    p[1] /= total;
    return p;
}

SiteMeasurement measure_site(const WireState &wire, const LocalBasis &basis, int outcome) {
    if (outcome != 0 && outcome != 1) {
        throw Error(ErrorCode::kInvalidArgument, "measurement outcome must be 0 or 1");
    }
    auto p = site_probabilities(wire, basis);
    auto v = front_vectors(wire);
    const CVec2 &m = basis[outcome];
    SiteMeasurement out;
    out.outcome = outcome;
    out.probability = p[outcome];
    out.wire = wire;
    out.wire.right = std::conj(m(0)) * v[0] + std::conj(m(1)) * v[1];
    out.wire.first_site += 1;
    out.wire.front_filter.reset();
    return out;
}

SiteMeasurement measure_site(const WireState &wire, const LocalBasis &basis, BranchPicker &picker) {
    auto p = site_probabilities(wire, basis);
    return measure_site(wire, basis, picker.pick({p[0], p[1]}));
}

Complex wire_overlap(const WireState &wire_a, const WireState &wire_b) {
    if (!same_matrix(wire_a.a0, wire_b.a0) || !same_matrix(wire_a.a1, wire_b.a1) ||
        (wire_a.left - wire_b.left).norm() > kCompletenessTolerance || wire_a.total_sites != wire_b.total_sites ||
        wire_a.first_site != wire_b.first_site) {
        throw Error(ErrorCode::kIncompatibleWires, "overlap needs matching site matrices, left boundary and sites");
    }
    if (wire_a.unconsumed() < 1) {
        throw Error(ErrorCode::kWireExhausted, "wire has no unconsumed sites");
    }
    CMat2 m = tail_gram(wire_a, wire_a.first_site + 1);
    auto fa = front_matrices(wire_a);
    auto fb = front_matrices(wire_b);
    CMat2 rho = transfer_map_apply(fa[0], fa[1], fb[0], fb[1], m);
    return wire_a.right.dot(rho * wire_b.right);
}

Complex normalized_wire_overlap(const WireState &wire_a, const WireState &wire_b) {
    double na = wire_norm2(wire_a);
    double nb = wire_norm2(wire_b);
    if (!(na > 0) || !(nb > 0)) {
        throw Error(ErrorCode::kZeroVector, "overlap of a zero-norm wire");
    }
    return wire_overlap(wire_a, wire_b) / std::sqrt(na * nb);
}

}  // namespace corrspace
