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

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

#include "corrspace/error.hpp"

namespace corrspace {

// Small dense types are fixed-size Eigen matrices over std::complex<Scalar>.
template <typename Scalar>
using Vec2 = Eigen::Matrix<std::complex<Scalar>, 2, 1>;
template <typename Scalar>
using Mat2 = Eigen::Matrix<std::complex<Scalar>, 2, 2>;
template <typename Scalar>
using Mat4 = Eigen::Matrix<std::complex<Scalar>, 4, 4>;

using Complex = std::complex<double>;
using CVec2 = Vec2<double>;
using CMat2 = Mat2<double>;
using CMat4 = Mat4<double>;

inline constexpr double kDefaultTolerance = 1e-10;
inline constexpr double kCompletenessTolerance = 1e-12;
inline constexpr int kMaxStateQubits = 16;

template <typename Scalar = double>
Vec2<Scalar> ket(int bit) {
    Vec2<Scalar> v = Vec2<Scalar>::Zero();
    v(bit & 1) = Scalar(1);
    return v;
}

template <typename Scalar = double>
Vec2<Scalar> ket_plus() {
    Scalar h = Scalar(1) / std::sqrt(Scalar(2));
    return Vec2<Scalar>(h, h);
}

template <typename Scalar = double>
Vec2<Scalar> ket_minus() {
    Scalar h = Scalar(1) / std::sqrt(Scalar(2));
    return Vec2<Scalar>(h, -h);
}

template <typename Scalar = double>
Mat2<Scalar> pauli_x() {
    Mat2<Scalar> m;
    m << Scalar(0), Scalar(1), Scalar(1), Scalar(0);
    return m;
}

template <typename Scalar = double>
Mat2<Scalar> pauli_z() {
    Mat2<Scalar> m;
    m << Scalar(1), Scalar(0), Scalar(0), Scalar(-1);
    return m;
}

template <typename Scalar = double>
Mat2<Scalar> hadamard() {
    Scalar h = Scalar(1) / std::sqrt(Scalar(2));
    Mat2<Scalar> m;
    m << h, h, h, -h;
    return m;
}

/// diag(e^{-i angle}, e^{i angle})
template <typename Scalar = double>
Mat2<Scalar> phase_diag(Scalar angle) {
    Mat2<Scalar> m = Mat2<Scalar>::Zero();
    m(0, 0) = std::polar(Scalar(1), -angle);
    m(1, 1) = std::polar(Scalar(1), angle);
    return m;
}

template <typename Derived>
typename Derived::RealScalar max_abs(const Eigen::MatrixBase<Derived> &m) {
    return m.cwiseAbs().maxCoeff();
}

template <typename Scalar>
Mat2<Scalar> outer(const Vec2<Scalar> &a, const Vec2<Scalar> &b) {
    return a * b.adjoint();
}

/// Unit vector along `v`; throws kZeroVector for the zero vector.
template <typename Scalar>
Vec2<Scalar> unit(const Vec2<Scalar> &v) {
    Scalar n = v.norm();
    if (!(n > Scalar(0))) {
        throw Error(ErrorCode::kZeroVector, "cannot normalize the zero vector");
    }
    return v / n;
}

template <typename Scalar>
bool is_unitary(const Mat2<Scalar> &m, Scalar tol) {
    return max_abs((m.adjoint() * m - Mat2<Scalar>::Identity()).eval()) <= tol;
}

/// Rotates the global phase of `v` so its first component with modulus above
/// `tol` is real and positive.
template <typename Scalar>
Vec2<Scalar> canonical_phase(const Vec2<Scalar> &v, Scalar tol = Scalar(1e-12)) {
    for (int i = 0; i < 2; ++i) {
        if (std::abs(v(i)) > tol) {
            return v * (std::abs(v(i)) / v(i));
        }
    }
    return v;
}

/// |<a|b>|^2 / (|a|^2 |b|^2) for any pair of same-shaped vectors or tensors.
template <typename DerivedA, typename DerivedB>
typename DerivedA::RealScalar vector_fidelity(const Eigen::MatrixBase<DerivedA> &a,
                                              const Eigen::MatrixBase<DerivedB> &b) {
    using Real = typename DerivedA::RealScalar;
    Real na = a.squaredNorm();
    Real nb = b.squaredNorm();
    if (!(na > Real(0)) || !(nb > Real(0))) {
        throw Error(ErrorCode::kZeroVector, "fidelity of a zero vector");
    }
    auto ip = (a.array().conjugate() * b.array()).sum();
    return std::norm(ip) / (na * nb);
}

/// The transfer map E(rho) = A[0]^dag rho A[0] + A[1]^dag rho A[1].
template <typename Scalar>
Mat2<Scalar> transfer_map_apply(const Mat2<Scalar> &a0, const Mat2<Scalar> &a1, const Mat2<Scalar> &rho) {
    return a0.adjoint() * rho * a0 + a1.adjoint() * rho * a1;
}

/// Mixed transfer map sum_s A[s]^dag rho B[s], used for overlaps between
/// wires whose front sites carry different filters.
template <typename Scalar>
Mat2<Scalar> transfer_map_apply(const Mat2<Scalar> &a0,
                                const Mat2<Scalar> &a1,
                                const Mat2<Scalar> &b0,
                                const Mat2<Scalar> &b1,
                                const Mat2<Scalar> &rho) {
    return a0.adjoint() * rho * b0 + a1.adjoint() * rho * b1;
}

/// Kronecker product with `hi` on the more significant index.
template <typename Scalar>
Mat4<Scalar> kron(const Mat2<Scalar> &hi, const Mat2<Scalar> &lo) {
    Mat4<Scalar> out;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            out.template block<2, 2>(2 * i, 2 * j) = hi(i, j) * lo;
        }
    }
    return out;
}

/// Dense n-qubit amplitude array.
///
/// Bit ordering is little-endian in site index: the lowest site of a register
/// is bit 0 of the amplitude index. In ket notation |l_N ... l_1> the
/// rightmost label is the least significant bit.
template <typename Scalar>
class BasicStateVector {
   public:
    using Amplitudes = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

    BasicStateVector() : BasicStateVector(1) {
    }

    /// All-zero register of `num_qubits` qubits.
    explicit BasicStateVector(int num_qubits) : num_qubits_(checked_qubits(num_qubits)) {
        amplitudes_ = Amplitudes::Zero(std::int64_t{1} << num_qubits_);
    }

    BasicStateVector(int num_qubits, Amplitudes amplitudes)
        : num_qubits_(checked_qubits(num_qubits)), amplitudes_(std::move(amplitudes)) {
        if (amplitudes_.size() != (std::int64_t{1} << num_qubits_)) {
            throw Error(ErrorCode::kDimensionMismatch, "amplitude count must be 2^n");
        }
    }

    static BasicStateVector basis(int num_qubits, std::uint64_t index) {
        BasicStateVector out(num_qubits);
        out.amplitudes_(static_cast<Eigen::Index>(index)) = Scalar(1);
        return out;
    }

    static BasicStateVector qubit(const Vec2<Scalar> &v) {
        return BasicStateVector(1, Amplitudes(v));
    }

    int num_qubits() const {
        return num_qubits_;
    }
    Eigen::Index size() const {
        return amplitudes_.size();
    }
    const Amplitudes &amplitudes() const {
        return amplitudes_;
    }
    std::complex<Scalar> operator[](Eigen::Index i) const {
        return amplitudes_(i);
    }

    Scalar norm() const {
        return amplitudes_.norm();
    }
    Scalar squared_norm() const {
        return amplitudes_.squaredNorm();
    }

    BasicStateVector normalized() const {
        Scalar n = norm();
        if (!(n > Scalar(0))) {
            throw Error(ErrorCode::kZeroVector, "cannot normalize the zero state");
        }
        return BasicStateVector(num_qubits_, amplitudes_ / n);
    }

    BasicStateVector scaled(std::complex<Scalar> c) const {
        return BasicStateVector(num_qubits_, amplitudes_ * c);
    }

    /// <this|other>
    std::complex<Scalar> inner(const BasicStateVector &other) const {
        if (other.num_qubits_ != num_qubits_) {
            throw Error(ErrorCode::kDimensionMismatch, "inner product of registers of different size");
        }
        return amplitudes_.dot(other.amplitudes_);
    }

    BasicStateVector apply(int bit, const Mat2<Scalar> &op) const {
        check_bit(bit);
        Amplitudes out = amplitudes_;
        const Eigen::Index mask = Eigen::Index{1} << bit;
        for (Eigen::Index i = 0; i < size(); ++i) {
            if (i & mask) {
                continue;
            }
            auto a0 = amplitudes_(i);
            auto a1 = amplitudes_(i | mask);
            out(i) = op(0, 0) * a0 + op(0, 1) * a1;
            out(i | mask) = op(1, 0) * a0 + op(1, 1) * a1;
        }
        return BasicStateVector(num_qubits_, std::move(out));
    }

    /// Applies a two-qubit operator whose 4x4 matrix is indexed as
    /// (value of `bit_lo`) + 2 * (value of `bit_hi`).
    BasicStateVector apply(int bit_lo, int bit_hi, const Mat4<Scalar> &op) const {
        check_bit(bit_lo);
        check_bit(bit_hi);
        if (bit_lo == bit_hi) {
            throw Error(ErrorCode::kInvalidArgument, "two-qubit operator needs distinct qubits");
        }
        Amplitudes out = amplitudes_;
        const Eigen::Index ml = Eigen::Index{1} << bit_lo;
        const Eigen::Index mh = Eigen::Index{1} << bit_hi;
        for (Eigen::Index i = 0; i < size(); ++i) {
            if (i & (ml | mh)) {
                continue;
            }
            const std::array<Eigen::Index, 4> idx{i, i | ml, i | mh, i | ml | mh};
            for (int r = 0; r < 4; ++r) {
                std::complex<Scalar> acc(0);
                for (int c = 0; c < 4; ++c) {
                    acc += op(r, c) * amplitudes_(idx[c]);
                }
                out(idx[r]) = acc;
            }
        }
        return BasicStateVector(num_qubits_, std::move(out));
    }

   private:
    static int checked_qubits(int n) {
        if (n < 1 || n > kMaxStateQubits) {
            throw Error(ErrorCode::kCapacityExceeded,
                        "state vectors hold 1 to " + std::to_string(kMaxStateQubits) + " qubits, got " +
                            std::to_string(n));
        }
        return n;
    }

    void check_bit(int bit) const {
        if (bit < 0 || bit >= num_qubits_) {
            throw Error(ErrorCode::kSiteOutOfRange, "qubit " + std::to_string(bit) + " outside register");
        }
    }

    int num_qubits_;
    Amplitudes amplitudes_;
};

using StateVector = BasicStateVector<double>;

/// hi (x) lo: the qubits of `lo` occupy the low-order bits.
template <typename Scalar>
BasicStateVector<Scalar> tensor_product(const BasicStateVector<Scalar> &hi, const BasicStateVector<Scalar> &lo) {
    int n = hi.num_qubits() + lo.num_qubits();
    if (n > kMaxStateQubits) {
        throw Error(ErrorCode::kCapacityExceeded, "tensor product exceeds " + std::to_string(kMaxStateQubits) + " qubits");
    }
    typename BasicStateVector<Scalar>::Amplitudes out(hi.size() * lo.size());
    for (Eigen::Index h = 0; h < hi.size(); ++h) {
        out.segment(h * lo.size(), lo.size()) = hi[h] * lo.amplitudes();
    }
    return BasicStateVector<Scalar>(n, std::move(out));
}

template <typename Scalar>
Scalar fidelity(const BasicStateVector<Scalar> &a, const BasicStateVector<Scalar> &b) {
    if (a.num_qubits() != b.num_qubits()) {
        throw Error(ErrorCode::kDimensionMismatch, "fidelity between registers of different size");
    }
    return vector_fidelity(a.amplitudes(), b.amplitudes());
}

}  // namespace corrspace
