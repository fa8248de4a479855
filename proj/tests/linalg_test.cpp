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

#include "corrspace/linalg.hpp"

namespace corrspace {
namespace {

CVec2 random_qubit(std::mt19937_64 &rng) {
    std::normal_distribution<double> n;
    return CVec2(Complex(n(rng), n(rng)), Complex(n(rng), n(rng))).normalized();
}

CMat2 random_unitary(std::mt19937_64 &rng) {
    CVec2 a = random_qubit(rng);
    CMat2 u;
    u << a(0), -std::conj(a(1)), a(1), std::conj(a(0));
    std::uniform_real_distribution<double> phase(0, 6.28);
    return std::polar(1.0, phase(rng)) * u;
}

TEST(Linalg, Constants) {
    EXPECT_EQ(ket(0), CVec2(1, 0));
    EXPECT_EQ(ket(1), CVec2(0, 1));
    EXPECT_NEAR((hadamard() * ket(0) - ket_plus()).norm(), 0, 1e-15);
    EXPECT_NEAR((hadamard() * ket(1) - ket_minus()).norm(), 0, 1e-15);
    EXPECT_NEAR(max_abs((pauli_x() * pauli_z() + pauli_z() * pauli_x()).eval()), 0, 1e-15);
    EXPECT_TRUE(is_unitary(hadamard(), 1e-14));
}

TEST(Linalg, PhaseDiagSign) {
    CMat2 d = phase_diag(0.3);
    EXPECT_NEAR(std::abs(d(0, 0) - std::polar(1.0, -0.3)), 0, 1e-15);
    EXPECT_NEAR(std::abs(d(1, 1) - std::polar(1.0, 0.3)), 0, 1e-15);
    EXPECT_NEAR(std::abs(d.determinant() - 1.0), 0, 1e-15);
}

TEST(Linalg, UnitRejectsZero) {
    try {
        unit(CVec2(CVec2::Zero()));
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::kZeroVector);
    }
}

TEST(Linalg, CanonicalPhase) {
    CVec2 v(Complex(0, 0.6), Complex(0.8, 0));
    CVec2 c = canonical_phase(v);
    EXPECT_NEAR(c(0).imag(), 0, 1e-15);
    EXPECT_GT(c(0).real(), 0);
    EXPECT_NEAR(vector_fidelity(c, v), 1, 1e-15);
    CVec2 lead_zero(0, Complex(0, -1));
    EXPECT_NEAR(std::abs(canonical_phase(lead_zero)(1) - 1.0), 0, 1e-15);
}

TEST(Linalg, FidelityIgnoresGlobalPhaseAndScale) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 20; ++i) {
        CVec2 a = random_qubit(rng);
        CVec2 b = random_qubit(rng);
        EXPECT_NEAR(vector_fidelity(a, (std::polar(2.5, 0.7 * i) * a).eval()), 1, 1e-14);
        double f = vector_fidelity(a, b);
        EXPECT_GE(f, 0);
        EXPECT_LE(f, 1 + 1e-15);
        EXPECT_NEAR(f, vector_fidelity(b, a), 1e-15);
    }
}

TEST(Linalg, KronPutsHiOnTheHighIndex) {
    CMat4 k = kron(pauli_x(), CMat2(CMat2::Identity()));
    // |lo=0, hi=0> (index 0) goes to |lo=0, hi=1> (index 2).
    EXPECT_EQ(k(2, 0), Complex(1));
    EXPECT_EQ(k(1, 1), Complex(0));
}

TEST(Linalg, TransferMapMatchesExplicitSum) {
    std::mt19937_64 rng(2);
    CMat2 a0 = random_unitary(rng) * 0.6;
    CMat2 a1 = random_unitary(rng) * 0.8;
    CMat2 rho = outer(random_qubit(rng), random_qubit(rng));
    CMat2 expected = CMat2::Zero();
    for (const CMat2 *a : {&a0, &a1}) {
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                for (int k = 0; k < 2; ++k) {
                    for (int l = 0; l < 2; ++l) {
                        expected(i, l) += std::conj((*a)(j, i)) * rho(j, k) * (*a)(k, l);
                    }
                }
            }
        }
    }
    EXPECT_LT(max_abs((transfer_map_apply(a0, a1, rho) - expected).eval()), 1e-14);
    EXPECT_LT(max_abs((transfer_map_apply(a0, a1, a0, a1, rho) - expected).eval()), 1e-14);
}

TEST(Linalg, TransferMapOfUnitaryPairPreservesIdentity) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) {
        CMat2 a0 = random_unitary(rng) * std::sqrt(0.3);
        CMat2 a1 = random_unitary(rng) * std::sqrt(0.7);
        CMat2 out = transfer_map_apply(a0, a1, CMat2(CMat2::Identity()));
        EXPECT_LT(max_abs((out - CMat2::Identity()).eval()), 1e-14);
    }
}

TEST(StateVector, CapacityLimits) {
    EXPECT_THROW(StateVector(0), Error);
    EXPECT_THROW(StateVector(kMaxStateQubits + 1), Error);
    EXPECT_NO_THROW(StateVector(kMaxStateQubits));
    try {
        StateVector(kMaxStateQubits + 1);
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::kCapacityExceeded);
    }
}

TEST(StateVector, AmplitudeCountMismatch) {
    EXPECT_THROW(StateVector(2, Eigen::VectorXcd::Zero(3)), Error);
}

TEST(StateVector, ApplyActsOnTheNamedBit) {
    StateVector s = StateVector::basis(3, 0);
    StateVector t = s.apply(1, pauli_x());
    EXPECT_EQ(t[2], Complex(1));
    StateVector u = t.apply(0, hadamard());
    EXPECT_NEAR(std::abs(u[2] - Complex(M_SQRT1_2)), 0, 1e-15);
    EXPECT_NEAR(std::abs(u[3] - Complex(M_SQRT1_2)), 0, 1e-15);
    EXPECT_THROW(s.apply(3, pauli_x()), Error);
}

TEST(StateVector, TwoBitApplyUsesLoPlusTwoHi) {
    CMat4 cnot = CMat4::Zero();  // control lo, target hi
    cnot(0, 0) = cnot(2, 2) = 1;
    cnot(3, 1) = cnot(1, 3) = 1;
    StateVector s = StateVector::basis(3, 0b001);  // bit 0 set
    StateVector t = s.apply(0, 2, cnot);
    EXPECT_EQ(t[0b101], Complex(1));
}

TEST(StateVector, TensorProductOrder) {
    StateVector hi = StateVector::qubit(ket(1));
    StateVector lo = StateVector::qubit(ket(0));
    StateVector p = tensor_product(hi, lo);
    EXPECT_EQ(p.num_qubits(), 2);
    EXPECT_EQ(p[2], Complex(1));
}

TEST(StateVector, LocalUnitariesPreserveNorm) {
    std::mt19937_64 rng(4);
    Eigen::VectorXcd amps = Eigen::VectorXcd::Random(16);
    StateVector s(4, amps);
    double n = s.norm();
    for (int i = 0; i < 12; ++i) {
        s = s.apply(i % 4, random_unitary(rng));
        EXPECT_NEAR(s.norm(), n, 1e-12);
    }
    StateVector a = s.normalized();
    EXPECT_NEAR(fidelity(a, s), 1, 1e-14);
    EXPECT_NEAR(fidelity(a, a.scaled(std::polar(1.0, 1.2))), 1, 1e-14);
}

TEST(Linalg, FloatScalarInstantiates) {
    Vec2<float> v = ket_plus<float>();
    Mat2<float> h = hadamard<float>();
    EXPECT_NEAR(std::abs((h * v)(0)), 1.0f, 1e-6f);
    BasicStateVector<float> s(2);
    EXPECT_EQ(s.size(), 4);
}

}  // namespace
}  // namespace corrspace
