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

#include <numeric>
#include <random>

#include "corrspace/protocols.hpp"

namespace corrspace {
namespace {

constexpr double kTol = 1e-10;

CVec2 random_qubit(std::mt19937_64 &rng) {
    std::normal_distribution<double> n;
    return CVec2(Complex(n(rng), n(rng)), Complex(n(rng), n(rng))).normalized();
}

CMat2 random_unitary(std::mt19937_64 &rng) {
    CVec2 a = random_qubit(rng);
    CMat2 u;
    u << a(0), -std::conj(a(1)), a(1), std::conj(a(0));
    return std::polar(1.0, std::arg(a(0)) * 3) * u;
}

/// Orthogonal-form wire (r1 = 0) in a random measurement basis.
WireState random_orthogonal_wire(std::mt19937_64 &rng, int sites, double r1 = 0) {
    CVec2 phi0 = random_qubit(rng);
    CVec2 phi1(-std::conj(phi0(1)), std::conj(phi0(0)));
    return decomposed_wire(make_decomposition(LocalBasis::completing(random_qubit(rng)), phi0, phi1, r1), sites);
}

double total(const ProtocolReport &r, const std::string &prefix = "") {
    double t = 0;
    for (const auto &bp : r.branch_probabilities) {
        if (bp.label.rfind(prefix, 0) == 0) {
            t += bp.probability;
        }
    }
    return t;
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

TEST(Bell, StatesAreOrthonormal) {
    Eigen::Matrix4cd states;
    for (int b = 0; b < 4; ++b) {
        auto c = bell_coefficients(static_cast<BellOutcome>(b));
        for (int s = 0; s < 2; ++s) {
            for (int r = 0; r < 2; ++r) {
                states(s + 2 * r, b) = c[s][r];
            }
        }
    }
    EXPECT_LT(max_abs((states.adjoint() * states - Eigen::Matrix4cd::Identity()).eval()), 1e-15);
    EXPECT_NEAR(states(0, 0).real(), M_SQRT1_2, 1e-15);
    EXPECT_NEAR(states(3, 0).real(), M_SQRT1_2, 1e-15);
}

TEST(Bell, LabelsRoundTrip) {
    for (int b = 0; b < 4; ++b) {
        auto o = static_cast<BellOutcome>(b);
        EXPECT_EQ(bell_from_label(bell_label(o)), o);
    }
    EXPECT_THROW(bell_from_label("B5"), Error);
}

TEST(Frame, CorrectionTable) {
    EXPECT_EQ(correction_table(BellOutcome::B1).label(), "I");
    EXPECT_EQ(correction_table(BellOutcome::B2).label(), "Z");
    EXPECT_EQ(correction_table(BellOutcome::B3).label(), "X");
    EXPECT_EQ(correction_table(BellOutcome::B4).label(), "XZ");
    CMat2 c = correction_table(BellOutcome::B4).correction();
    EXPECT_LT(max_abs((c - pauli_z() * pauli_x()).eval()), 1e-15);
}

TEST(Frame, ComposeIsXor) {
    PauliFrame a = correction_table(BellOutcome::B4);
    PauliFrame b = correction_table(BellOutcome::B3);
    PauliFrame c = a.compose(b);
    EXPECT_FALSE(c.bit_flip);
    EXPECT_TRUE(c.phase_flip);
}

class FilterGrid : public ::testing::TestWithParam<double> {};

TEST_P(FilterGrid, Completeness) {
    double r1 = GetParam();
    double r0 = std::sqrt(1 - r1 * r1);
    std::mt19937_64 rng(static_cast<std::uint64_t>(r1 * 1000));
    LocalBasis basis = LocalBasis::completing(random_qubit(rng));
    for (const FilterPair &f : {make_filter_f(r0, r1, basis), make_filter_g(r0, r1, basis)}) {
        EXPECT_LE(f.completeness_error(), kCompletenessTolerance);
        // The failure operator has rank at most one.
        EXPECT_NEAR(std::abs(f.k_bar.determinant()), 0, 1e-14);
    }
}

TEST_P(FilterGrid, FOrthogonalizesAndGUndoesIt) {
    double r1 = GetParam();
    double r0 = std::sqrt(1 - r1 * r1);
    std::mt19937_64 rng(static_cast<std::uint64_t>(r1 * 1000) + 1);
    LocalBasis basis = LocalBasis::completing(random_qubit(rng));
    FilterPair f = make_filter_f(r0, r1, basis);
    FilterPair g = make_filter_g(r0, r1, basis);
    CVec2 m0p = r0 * basis.m0 + r1 * basis.m1;
    double sf = r0 / std::sqrt(1 + r1);
    EXPECT_LT((f.k * m0p - sf * basis.m0).norm(), kTol);
    EXPECT_LT((f.k * basis.m1 - sf * basis.m1).norm(), kTol);
    double sg = 1 / std::sqrt(1 + r1);
    EXPECT_LT((g.k * basis.m0 - sg * m0p).norm(), kTol);
    EXPECT_LT((g.k * basis.m1 - sg * basis.m1).norm(), kTol);
}

INSTANTIATE_TEST_SUITE_P(R1, FilterGrid, ::testing::Values(0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99));

TEST(Filter, RejectsBadParameters) {
    EXPECT_THROW(make_filter_f(0.5, 0.5), Error);
    EXPECT_THROW(make_filter_f(0.0, 1.0), Error);
}

TEST(Orthogonalize, FirstAttemptProbabilityMatchesFilteredNorm) {
    std::mt19937_64 rng(20);
    WireState w = random_orthogonal_wire(rng, 5, 0.6);
    Decomposition d = decompose(w);
    WireState filtered = w;
    filtered.front_filter = make_filter_f(d.r0, d.r1, d.basis()).k;
    double expected = wire_norm2(filtered) / wire_norm2(w);
    BranchPicker pick = BranchPicker::fixed({0});
    ProtocolReport r = orthogonalize_wire(w, pick);
    ASSERT_GE(r.branch_probabilities.size(), 2u);
    EXPECT_EQ(r.branch_probabilities[0].label, "attempt1:F");
    EXPECT_NEAR(r.branch_probabilities[0].probability, expected, 1e-12);
    EXPECT_NEAR(r.fidelity, 1, kTol);
    EXPECT_EQ(r.sites_consumed, 0);
    EXPECT_EQ(r.branch, "F");
}

TEST(Orthogonalize, FrontVectorsBecomeOrthogonal) {
    std::mt19937_64 rng(21);
    WireState w = random_orthogonal_wire(rng, 5, 0.5);
    Decomposition d = decompose(w);
    BranchPicker pick = BranchPicker::fixed({0});
    ProtocolReport r = orthogonalize_wire(w, pick);
    auto e = m_basis_vectors(*r.wire, d.basis());
    auto e_before = m_basis_vectors(w, d.basis());
    EXPECT_GT(std::abs(e_before[0].dot(e_before[1])), 1e-3);
    // Orthogonal in the correlation space: phi-coordinates are diagonal.
    CMat2 p = d.phi_to_computational();
    CVec2 c0 = p * e[0];
    CVec2 c1 = p * e[1];
    EXPECT_NEAR(std::abs(c0(1)), 0, kTol);
    EXPECT_NEAR(std::abs(c1(0)), 0, kTol);
}

TEST(Orthogonalize, FailureThenSuccessSpendsOneSite) {
    std::mt19937_64 rng(22);
    WireState w = random_orthogonal_wire(rng, 6, 0.4);
    BranchPicker pick = BranchPicker::fixed({1, 0});
    ProtocolReport r = orthogonalize_wire(w, pick);
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.sites_consumed, 1);
    EXPECT_EQ(r.branch, "Fbar,F");
    EXPECT_EQ(r.wire->first_site, 2);
    EXPECT_NEAR(r.fidelity, 1, kTol);
    EXPECT_NEAR(total(r, "attempt1:"), 1, 1e-12);
    EXPECT_NEAR(total(r, "attempt2:"), 1, 1e-12);
}

TEST(Orthogonalize, AttemptsRunOut) {
    std::mt19937_64 rng(23);
    WireState w = random_orthogonal_wire(rng, 8, 0.4);
    BranchPicker pick = BranchPicker::fixed({1});
    EXPECT_EQ(code_of([&] { orthogonalize_wire(w, pick, {2, 0}); }), ErrorCode::kAttemptsExhausted);
}

TEST(Upload, ClusterWireUniformOutcomes) {
    std::mt19937_64 rng(24);
    WireState w = cluster_wire(4);
    CVec2 psi = random_qubit(rng);
    for (int b = 0; b < 4; ++b) {
        ProtocolReport r = upload_teleport(w, psi, static_cast<BellOutcome>(b));
        EXPECT_NEAR(r.metrics["probability"], 0.25, 1e-12);
        EXPECT_NEAR(r.fidelity, 1, kTol);
        EXPECT_EQ(r.sites_consumed, 1);
        EXPECT_EQ(r.wire->first_site, 2);
        EXPECT_NEAR(total(r), 1, 1e-12);
    }
}

TEST(Upload, RandomOrthogonalWires) {
    std::mt19937_64 rng(25);
    for (int i = 0; i < 20; ++i) {
        WireState w = random_orthogonal_wire(rng, 4);
        CVec2 psi = random_qubit(rng);
        for (int b = 0; b < 4; ++b) {
            ProtocolReport r = upload_teleport(w, psi, static_cast<BellOutcome>(b));
            EXPECT_NEAR(r.fidelity, 1, kTol);
            EXPECT_NEAR(coordinate_fidelity(r.correlation, psi), 1, kTol);
        }
    }
}

TEST(Upload, NonOrthogonalWireIsDistortedUntilFiltered) {
    std::mt19937_64 rng(26);
    WireState w = random_orthogonal_wire(rng, 5, 0.6);
    CVec2 psi = ket_plus();
    ProtocolReport raw = upload_teleport(w, psi, BellOutcome::B1);
    EXPECT_LT(raw.fidelity, 1 - 1e-6);
    EXPECT_GT(raw.metrics["front_overlap"], 1e-3);
    BranchPicker pick = BranchPicker::fixed({0});
    WireState filtered = *orthogonalize_wire(w, pick).wire;
    ProtocolReport fixed = upload_teleport(filtered, psi, BellOutcome::B1);
    EXPECT_NEAR(fixed.fidelity, 1, kTol);
    EXPECT_NEAR(fixed.metrics["front_overlap"], 0, kTol);
}

TEST(Upload, SampledOutcomeIsDeterministic) {
    WireState w = cluster_wire(4);
    BranchPicker a = BranchPicker::sampled(99);
    BranchPicker b = BranchPicker::sampled(99);
    for (int i = 0; i < 10; ++i) {
        EXPECT_EQ(upload_teleport(w, ket_plus(), a).branch, upload_teleport(w, ket_plus(), b).branch);
    }
}

TEST(Upload, NeedsATail) {
    WireState w = cluster_wire(2);
    w.first_site = 2;
    EXPECT_EQ(code_of([&] { upload_teleport(w, ket_plus(), BellOutcome::B1); }), ErrorCode::kWireExhausted);
}

TEST(Download, FidelityAndProbabilities) {
    std::mt19937_64 rng(27);
    for (int i = 0; i < 10; ++i) {
        WireState w = random_orthogonal_wire(rng, 4);
        w.right = random_qubit(rng);
        CVec2 psi = random_qubit(rng);
        for (int s = 0; s < 2; ++s) {
            ProtocolReport r = download(w, psi, s);
            EXPECT_NEAR(r.fidelity, 1, kTol);
            EXPECT_NEAR(total(r), 1, 1e-12);
            EXPECT_EQ(r.sites_consumed, 2);
            EXPECT_EQ(r.frame.phase_flip, s == 1);
            EXPECT_EQ(r.wire->first_site, 3);
        }
    }
}

TEST(Download, OffsetSpendsMoreSites) {
    WireState w = cluster_wire(6);
    ProtocolReport r = download(w, ket_plus(), 0, {3});
    EXPECT_EQ(r.sites_consumed, 4);
    EXPECT_EQ(code_of([&] { download(w, ket_plus(), 0, {5}); }), ErrorCode::kWireExhausted);
}

TEST(InverseUpload, SucceedsOnNonOrthogonalWire) {
    std::mt19937_64 rng(28);
    for (double r1 : {0.0, 0.3, 0.6}) {
        WireState w = random_orthogonal_wire(rng, 6, r1);
        CVec2 psi = random_qubit(rng);
        BranchPicker pick = BranchPicker::fixed({0});
        ProtocolReport r = inverse_download_upload(w, psi, pick);
        EXPECT_TRUE(r.success);
        EXPECT_NEAR(r.fidelity, 1, kTol) << "r1 " << r1;
        EXPECT_NEAR(total(r, "G(front)") + total(r, "Gbar(front)"), 1, 1e-12);
        EXPECT_NEAR(total(r, "G(ancilla)") + total(r, "Gbar(ancilla)"), 1, 1e-12);
    }
}

TEST(InverseUpload, DephasingReducesFidelity) {
    std::mt19937_64 rng(29);
    WireState w = random_orthogonal_wire(rng, 6, 0.3);
    CVec2 psi = ket_plus();
    InverseUploadOptions opts;
    opts.dephase_ancilla = true;
    BranchPicker pick = BranchPicker::fixed({0});
    ProtocolReport r = inverse_download_upload(w, psi, pick, opts);
    EXPECT_NEAR(total(r, "dephase:"), 1, 1e-12);
    EXPECT_LT(r.fidelity, 1 - 1e-3);
}

TEST(InverseUpload, GFailureIsReported) {
    std::mt19937_64 rng(30);
    WireState w = random_orthogonal_wire(rng, 6, 0.5);
    BranchPicker pick = BranchPicker::fixed({0, 1});
    ProtocolReport r = inverse_download_upload(w, random_qubit(rng), pick);
    EXPECT_FALSE(r.success);
    EXPECT_EQ(r.fidelity, 0);
}

TEST(GateTeleport, RandomUnitaries) {
    std::mt19937_64 rng(31);
    for (int i = 0; i < 10; ++i) {
        WireState w = random_orthogonal_wire(rng, 4);
        CVec2 psi = random_qubit(rng);
        CMat2 u = random_unitary(rng);
        for (int b = 0; b < 4; ++b) {
            ProtocolReport r = gate_teleport_single(w, psi, u, static_cast<BellOutcome>(b));
            EXPECT_NEAR(r.fidelity, 1, kTol);
            EXPECT_NEAR(coordinate_fidelity(r.correlation, u * psi), 1, kTol);
            EXPECT_EQ(r.sites_consumed, 2);
            EXPECT_NEAR(total(r), 1, 1e-12);
        }
    }
}

TEST(GateTeleport, RejectsNonUnitary) {
    CMat2 m = 2 * CMat2::Identity();
    EXPECT_EQ(code_of([&] { gate_teleport_single(cluster_wire(4), ket_plus(), m, BellOutcome::B1); }),
              ErrorCode::kNonUnitary);
}

TEST(Cz, ProjectionAmplitudesAreOrthonormal) {
    // For fixed s the eight choices resolve the identity on (q_first, q_middle).
    for (bool had : {false, true}) {
        for (int s = 0; s < 2; ++s) {
            Eigen::Matrix4cd gram = Eigen::Matrix4cd::Zero();
            Eigen::Matrix<double, 4, 8> vecs;
            for (int c = 0; c < 8; ++c) {
                for (int q1 = 0; q1 < 2; ++q1) {
                    for (int q2 = 0; q2 < 2; ++q2) {
                        vecs(q1 + 2 * q2, c) = cz_projection_amplitude(CzChoice::from_index(c), q1, q2, s, had);
                    }
                }
            }
            Eigen::Matrix4d sum = vecs * vecs.transpose();
            EXPECT_LT((sum - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(), 1e-14);
        }
    }
}

TEST(Cz, RandomInputsAllOutcomes) {
    std::mt19937_64 rng(32);
    std::normal_distribution<double> n;
    Eigen::Vector4cd psi;
    for (int i = 0; i < 4; ++i) {
        psi(i) = Complex(n(rng), n(rng));
    }
    psi.normalize();
    Eigen::Vector4cd target = psi;
    target(3) = -target(3);
    WireState a = random_orthogonal_wire(rng, 3);
    WireState b = random_orthogonal_wire(rng, 3);
    double sum = 0;
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            ProtocolReport r = gate_teleport_cz(psi, a, b, CzChoice::from_index(i), CzChoice::from_index(j));
            EXPECT_NEAR(r.fidelity, 1, kTol);
            EXPECT_NEAR(coordinate_fidelity(r.correlation, target), 1, kTol);
            sum += r.metrics["probability"];
            if (i == 0 && j == 0) {
                EXPECT_NEAR(total(r), 1, 1e-12);
                EXPECT_EQ(r.branch_probabilities.size(), 64u);
            }
        }
    }
    EXPECT_NEAR(sum, 1, 1e-12);
}

TEST(Swap, AllOutcomes) {
    std::mt19937_64 rng(33);
    WireState a = random_orthogonal_wire(rng, 3);
    WireState b = random_orthogonal_wire(rng, 3);
    for (int o = 0; o < 4; ++o) {
        ProtocolReport r = entanglement_swap(a, b, static_cast<BellOutcome>(o));
        EXPECT_NEAR(r.fidelity, 1, kTol);
        EXPECT_NEAR(total(r), 1, 1e-12);
        ASSERT_TRUE(r.physical.has_value());
        EXPECT_EQ(r.physical->num_qubits(), 2);
    }
}

}  // namespace
}  // namespace corrspace
