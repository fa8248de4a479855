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
#include <optional>

#include "corrspace/branch.hpp"
#include "corrspace/linalg.hpp"

namespace corrspace {

inline constexpr int kMaxWireSites = 14;

/// An orthonormal single-qubit measurement basis {|m0>, |m1>}.
struct LocalBasis {
    CVec2 m0;
    CVec2 m1;

    static LocalBasis computational();
    static LocalBasis plus_minus();
    /// Completes `m0` with m1 = (-conj(m0[1]), conj(m0[0])).
    static LocalBasis completing(const CVec2 &m0);

    /// The unitary whose columns are m0 and m1.
    CMat2 matrix() const;
    const CVec2 &operator[](int s) const {
        return s == 0 ? m0 : m1;
    }
};

/// A translation-invariant bond-dimension-2 wire
///
///     Phi(R)_k^N = sum <L| A[l_N] ... A[l_k] |R> |l_N ... l_k>
///
/// with k = first_site. Consumed sites are gone; `right` carries whatever
/// the consumed sites left behind (unnormalized). An optional front filter K
/// is a Kraus operator already applied to physical site k, which turns the
/// front site matrices into B[l] = sum_l' K[l][l'] A[l'].
struct WireState {
    CMat2 a0;
    CMat2 a1;
    CVec2 left;
    CVec2 right;
    int first_site = 1;
    int total_sites = 0;
    std::optional<CMat2> front_filter;

    int unconsumed() const {
        return total_sites - first_site + 1;
    }
    const CMat2 &a(int l) const {
        return l == 0 ? a0 : a1;
    }
};

WireState make_wire(const CMat2 &a0, const CMat2 &a1, const CVec2 &left, const CVec2 &right, int total_sites);

/// A[0] = |+><0|, A[1] = |-><1|.
WireState cluster_wire(int total_sites, const CVec2 &right = ket_plus(), const CVec2 &left = ket(0));

/// A[0] = |phi0><0|, A[1] = |phi1><1| with phi0 = (cos t/2, sin t/2) and
/// phi1 = (sin t/2, -cos t/2). theta = pi/2 is the cluster wire.
WireState theta_wire(double theta, int total_sites, const CVec2 &right = ket_plus(), const CVec2 &left = ket(0));

/// A[m] = conj(m[0]) A[0] + conj(m[1]) A[1], the site matrix seen by a
/// projection onto |m>.
CMat2 site_matrix(const CMat2 &a0, const CMat2 &a1, const CVec2 &m);
CMat2 site_matrix(const WireState &wire, const CVec2 &m);

/// Site matrices of the first unconsumed site, front filter included.
std::array<CMat2, 2> front_matrices(const WireState &wire);

/// B[l] |R> for l = 0, 1: the wire is sum_l |l>_k (x) Phi(B[l]R)_{k+1}.
std::array<CVec2, 2> front_vectors(const WireState &wire);

/// Gram matrix M of the tail starting at site `site`, so that
/// <Phi(x)_site^N | Phi(y)_site^N> = x^dag M y. site = N + 1 gives |L><L|.
CMat2 tail_gram(const WireState &wire, int site);

/// <Phi|Phi> by transfer-map contraction.
double wire_norm2(const WireState &wire);

/// Dense amplitudes over the unconsumed sites, first_site on bit 0.
StateVector contract_to_statevector(const WireState &wire);

struct GeneralFormParams {
    CMat2 w;
    double alpha = 0;
    Complex scale0;
    Complex scale1;
};

/// Recognizes a0 = scale0 W, a1 = scale1 W diag(e^{-i alpha}, e^{i alpha})
/// with W special unitary and alpha in [0, pi).
GeneralFormParams detect_general_form(const CMat2 &a0, const CMat2 &a1, double tol = kDefaultTolerance);

WireState general_form_wire(const GeneralFormParams &params,
                            int total_sites,
                            const CVec2 &right = ket_plus(),
                            const CVec2 &left = ket(0));

/// A[m0] = scale r0 |phi0><0|, A[m1] = scale (r1 |phi0><0| + |phi1><1|).
struct Decomposition {
    CVec2 m0;
    CVec2 m1;
    CVec2 phi0;
    CVec2 phi1;
    double r0 = 1;
    double r1 = 0;
    CVec2 m0_prime;
    CVec2 m1_prime;
    /// Common positive factor carried by both A[m_s]; 1 for the presets.
    double scale = 1;

    LocalBasis basis() const {
        return {m0, m1};
    }
    const CVec2 &phi(int s) const {
        return s == 0 ? phi0 : phi1;
    }
    /// Rows are <phi0| and <phi1|: maps phi_s to |s>.
    CMat2 phi_to_computational() const;
};

Decomposition decompose(const CMat2 &a0, const CMat2 &a1, double tol = kDefaultTolerance);
Decomposition decompose(const WireState &wire, double tol = kDefaultTolerance);

/// Builds the decomposition data from a basis, phi pair and r1, completing
/// the derived fields. Used to construct wires with prescribed r1.
Decomposition make_decomposition(const LocalBasis &basis,
                                 const CVec2 &phi0,
                                 const CVec2 &phi1,
                                 double r1,
                                 double scale = 1);

/// Inverts the defining equations: A[l] = sum_s m_s[l] A[m_s].
std::pair<CMat2, CMat2> site_matrices_from(const Decomposition &d);

WireState decomposed_wire(const Decomposition &d,
                          int total_sites,
                          const CVec2 &right = ket_plus(),
                          const CVec2 &left = ket(0));

struct SiteMeasurement {
    int outcome = 0;
    double probability = 0;
    WireState wire;
};

/// Outcome probabilities for measuring the first unconsumed site in `basis`.
std::array<double, 2> site_probabilities(const WireState &wire, const LocalBasis &basis);

SiteMeasurement measure_site(const WireState &wire, const LocalBasis &basis, int outcome);
SiteMeasurement measure_site(const WireState &wire, const LocalBasis &basis, BranchPicker &picker);

/// <Phi_a|Phi_b>, contracted as R_a^dag [E o ... o E(|L><L|)] R_b.
Complex wire_overlap(const WireState &wire_a, const WireState &wire_b);

/// wire_overlap divided by both norms.
Complex normalized_wire_overlap(const WireState &wire_a, const WireState &wire_b);

}  // namespace corrspace
