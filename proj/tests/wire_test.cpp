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

#include <gtest/gtest.h>

#include <random>

#include "corrspace/wire.hpp"

namespace corrspace {
namespace {

CVec2 random_qubit(std::mt19937_64 &rng) {
    std::normal_distribution<double> n;
    return CVec2(Complex(n(rng), n(rng)), Complex(n(rng), n(rng))).normalized();
}

CMat2 random_su2(std::mt19937_64 &rng) {
    CVec2 a = random_qubit(rng);
    CMat2 u;
    u << a(0), -std::conj(a(1)), a(1), std::conj(a(0));
    return u;
}

// Brute-force amplitude <L| A[l_N] ... A[l_k] |R>, bit j <-> site k + j.
Eigen::VectorXcd brute_force(const WireState &w) {
    int n = w.unconsumed();
    Eigen::VectorXcd out(1 << n);
    for (int idx = 0; idx < (1 << n); ++idx) {
        CVec2 v = w.right;
        for (int j = 0; j < n; ++j) {
            int l = (idx >> j) & 1;
            CMat2 a = w.a(l);
            if (j == 0 && w.front_filter) {
                const CMat2 &k = *w.front_filter;
                a = k(l, 0) * w.a0 + k(l, 1) * w.a1;
            }
            v = a * v;
        }
        out(idx) = w.left.dot(v);
    }
    return out;
}

ErrorCode code_of(const std::function<void()> &fn) {
    try {
        fn();
    } catch (const Error &e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::kInvalidArgument;
}

TEST(Wire, SiteCountLimits) {
    EXPECT_EQ(code_of([] { cluster_wire(kMaxWireSites + 1); }), ErrorCode::kCapacityExceeded);
    EXPECT_EQ(code_of([] { cluster_wire(0); }), ErrorCode::kCapacityExceeded);
    EXPECT_NO_THROW(cluster_wire(kMaxWireSites));
}

TEST(Wire, ThetaHalfPiIsCluster) {
    WireState a = theta_wire(std::numbers::pi / 2, 3);
    WireState b = cluster_wire(3);
    EXPECT_LT(max_abs((a.a0 - b.a0).eval()), 1e-15);
    EXPECT_LT(max_abs((a.a1 - b.a1).eval()), 1e-15);
}

TEST(Wire, SiteMatrixConjugatesTheBasisVector) {
    CMat2 a0 = pauli_x();
    CMat2 a1 = pauli_z();
    CVec2 m(Complex(0, 1) * M_SQRT1_2, M_SQRT1_2);
    CMat2 expected = Complex(0, -1) * M_SQRT1_2 * a0 + M_SQRT1_2 * a1;
    EXPECT_LT(max_abs((site_matrix(a0, a1, m) - expected).eval()), 1e-15);
}

TEST(Wire, ContractionMatchesBruteForce) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        WireState w = make_wire(random_su2(rng) * 0.7, random_su2(rng) * 0.3, random_qubit(rng), random_qubit(rng), 5);
        w.first_site = 1 + trial % 3;
        if (trial == 4) {
            w.front_filter = random_su2(rng);
        }
        Eigen::VectorXcd bf = brute_force(w);
        StateVector sv = contract_to_statevector(w);
        EXPECT_LT(max_abs((sv.amplitudes() - bf).eval()), 1e-13);
        EXPECT_NEAR(wire_norm2(w), bf.squaredNorm(), 1e-12);
    }
}

TEST(Wire, TailGramMatchesBruteForce) {
    std::mt19937_64 rng(6);
    WireState w = make_wire(random_su2(rng), random_su2(rng) * 0.5, random_qubit(rng), random_qubit(rng), 5);
    for (int site = 2; site <= 6; ++site) {
        CMat2 m = tail_gram(w, site);
        CVec2 x = random_qubit(rng);
        CVec2 y = random_qubit(rng);
        WireState wx = w;
        wx.first_site = site <= w.total_sites ? site : w.total_sites;
        if (site > w.total_sites) {
            EXPECT_NEAR(std::abs(x.dot(m * y) - x.dot(w.left) * w.left.dot(y)), 0, 1e-14);
            continue;
        }
        WireState wy = wx;
        wx.right = x;
        wy.right = y;
        Complex ov = brute_force(wx).dot(brute_force(wy));
        EXPECT_NEAR(std::abs(x.dot(m * y) - ov), 0, 1e-12) << "site " << site;
    }
}

TEST(Wire, OverlapLawAgainstBruteForce) {
    for (double theta : {0.0, 0.4, 1.1, 2.0}) {
        for (int n = 1; n <= 6; ++n) {
            WireState p = theta_wire(theta, n, ket_plus());
            WireState m = theta_wire(theta, n, ket_minus());
            Eigen::VectorXcd a = brute_force(p);
            Eigen::VectorXcd b = brute_force(m);
            Complex expected = a.dot(b) / (a.norm() * b.norm());
            EXPECT_NEAR(std::abs(normalized_wire_overlap(p, m) - expected), 0, 1e-12);
            EXPECT_NEAR(expected.real(), std::pow(std::cos(theta), n), 1e-12);
        }
    }
}

TEST(Wire, OverlapRejectsMismatchedWires) {
    WireState a = cluster_wire(4);
    WireState b = cluster_wire(5);
    EXPECT_EQ(code_of([&] { wire_overlap(a, b); }), ErrorCode::kIncompatibleWires);
    WireState c = theta_wire(0.3, 4);
    EXPECT_EQ(code_of([&] { wire_overlap(a, c); }), ErrorCode::kIncompatibleWires);
}

TEST(GeneralForm, DetectsConstructedParameters) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0, std::numbers::pi);
    for (int i = 0; i < 30; ++i) {
        GeneralFormParams p;
        p.w = random_su2(rng);
        p.alpha = u(rng);
        p.scale0 = std::polar(0.5 + u(rng), 2 * u(rng));
        p.scale1 = std::polar(std::abs(p.scale0), 2 * u(rng));
        WireState w = general_form_wire(p, 3);
        GeneralFormParams q = detect_general_form(w.a0, w.a1);
        EXPECT_GE(q.alpha, 0);
        EXPECT_LT(q.alpha, std::numbers::pi);
        WireState back = general_form_wire(q, 3);
        EXPECT_LT(max_abs((back.a0 - w.a0).eval()), 1e-10);
        EXPECT_LT(max_abs((back.a1 - w.a1).eval()), 1e-10);
        EXPECT_NEAR(std::abs(q.w.determinant() - 1.0), 0, 1e-10);
    }
}

TEST(GeneralForm, RejectsNonDiagonalRelativeRotation) {
    CMat2 a0 = CMat2::Identity();
    CMat2 a1 = hadamard();
    EXPECT_EQ(code_of([&] { detect_general_form(a0, a1); }), ErrorCode::kNotAWire);
    EXPECT_EQ(code_of([&] { detect_general_form(outer(ket_plus(), ket(0)), a1); }), ErrorCode::kNotAWire);
}

TEST(GeneralForm, ZeroSecondMatrix) {
    GeneralFormParams q = detect_general_form(CMat2(CMat2::Identity()), CMat2(CMat2::Zero()));
    EXPECT_EQ(q.alpha, 0);
    EXPECT_EQ(q.scale1, Complex(0));
}

TEST(Decompose, ClusterWireIsOrthogonal) {
    Decomposition d = decompose(cluster_wire(3));
    EXPECT_NEAR(d.r1, 0, 1e-12);
    EXPECT_NEAR(d.r0, 1, 1e-12);
    EXPECT_NEAR(vector_fidelity(d.phi0, CVec2(ket_plus())), 1, 1e-12);
    EXPECT_NEAR(vector_fidelity(d.phi1, CVec2(ket_minus())), 1, 1e-12);
}

TEST(Decompose, DefiningEquationsHold) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.05, std::numbers::pi - 0.05);
    for (int i = 0; i < 30; ++i) {
        GeneralFormParams p{random_su2(rng), u(rng), std::polar(1.3, u(rng)), std::polar(1.3, -u(rng))};
        WireState w = general_form_wire(p, 3);
        Decomposition d = decompose(w);
        double s = d.scale;
        CMat2 am0 = site_matrix(w, d.m0);
        CMat2 am1 = site_matrix(w, d.m1);
        EXPECT_LT(max_abs((am0 - s * d.r0 * outer(d.phi0, CVec2(ket(0)))).eval()), 1e-10);
        EXPECT_LT(max_abs((am1 - s * (d.r1 * outer(d.phi0, CVec2(ket(0))) + outer(d.phi1, CVec2(ket(1))))).eval()),
                  1e-10);
        EXPECT_NEAR(d.r0 * d.r0 + d.r1 * d.r1, 1, 1e-12);
        EXPECT_NEAR(std::abs(d.phi0.dot(d.phi1)), 0, 1e-12);
        EXPECT_NEAR(std::abs(d.m0.dot(d.m1)), 0, 1e-12);
        EXPECT_LT((d.m0_prime - (d.r0 * d.m0 + d.r1 * d.m1)).norm(), 1e-12);
        auto [a0, a1] = site_matrices_from(d);
        EXPECT_LT(max_abs((a0 - w.a0).eval()), 1e-10);
        EXPECT_LT(max_abs((a1 - w.a1).eval()), 1e-10);
        // The non-orthogonality follows the relative phase: r1 = |cos alpha|.
        EXPECT_NEAR(d.r1, std::abs(std::cos(p.alpha)), 1e-10);
    }
}

TEST(Decompose, PrescribedR1RoundTrips) {
    std::mt19937_64 rng(9);
    for (double r1 : {0.0, 0.25, 0.5, 0.9}) {
        LocalBasis basis = LocalBasis::completing(random_qubit(rng));
        CVec2 phi0 = random_qubit(rng);
        CVec2 phi1(-std::conj(phi0(1)), std::conj(phi0(0)));
        WireState w = decomposed_wire(make_decomposition(basis, phi0, phi1, r1), 3);
        Decomposition d = decompose(w);
        EXPECT_NEAR(d.r1, r1, 1e-10);
        EXPECT_NEAR(vector_fidelity(d.phi0, phi0), 1, 1e-10);
        EXPECT_NEAR(vector_fidelity(d.m0, basis.m0), 1, 1e-10);
    }
}

TEST(Decompose, RejectsFullRankColumn) {
    EXPECT_EQ(code_of([] { decompose(CMat2(CMat2::Identity()), CMat2(pauli_x())); }), ErrorCode::kNotDecomposable);
}

TEST(Measurement, ProbabilitiesMatchBruteForce) {
    std::mt19937_64 rng(10);
    WireState w = theta_wire(0.8, 4, random_qubit(rng));
    LocalBasis basis = LocalBasis::completing(random_qubit(rng));
    auto p = site_probabilities(w, basis);
    Eigen::VectorXcd amps = brute_force(w);
    double expected0 = 0;
    for (int idx = 0; idx < amps.size(); idx += 2) {
        Complex a = std::conj(basis.m0(0)) * amps(idx) + std::conj(basis.m0(1)) * amps(idx + 1);
        expected0 += std::norm(a);
    }
    expected0 /= amps.squaredNorm();
    EXPECT_NEAR(p[0], expected0, 1e-12);
    EXPECT_NEAR(p[0] + p[1], 1, 1e-12);

    SiteMeasurement m = measure_site(w, basis, 1);
    EXPECT_EQ(m.wire.first_site, 2);
    EXPECT_NEAR(m.probability, p[1], 1e-12);
    EXPECT_LT((m.wire.right - site_matrix(w, basis.m1) * w.right).norm(), 1e-12);
}

TEST(Measurement, SampledOutcomesFollowTheSeed) {
    WireState w = theta_wire(0.8, 4);
    BranchPicker a = BranchPicker::sampled(42);
    BranchPicker b = BranchPicker::sampled(42);
    for (int i = 0; i < 10; ++i) {
        EXPECT_EQ(measure_site(w, LocalBasis::plus_minus(), a).outcome,
                  measure_site(w, LocalBasis::plus_minus(), b).outcome);
    }
}

TEST(Measurement, NeedsTwoSites) {
    WireState w = cluster_wire(3);
    w.first_site = 3;
    EXPECT_EQ(code_of([&] { site_probabilities(w, LocalBasis::computational()); }), ErrorCode::kWireExhausted);
}

}  // namespace
}  // namespace corrspace
