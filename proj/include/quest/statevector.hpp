// Copyright 2026 The QUEST Authors
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

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "quest/pauli.hpp"

namespace quest {

using complex_t = std::complex<double>;

namespace detail {

/// i^k for k taken mod 4.
inline complex_t i_pow(size_t k) {
    switch (k & 3) {
        case 0:
            return {1, 0};
        case 1:
            return {0, 1};
        case 2:
            return {-1, 0};
        default:
            return {0, -1};
    }
}

inline double parity_sign(uint64_t v) {
    return (std::popcount(v) & 1) ? -1.0 : 1.0;
}

}  // namespace detail

/// Dense pure state on n qubits; amplitude index b has qubit 0 as its least-significant bit.
class StateVector {
   public:
    static constexpr size_t kMaxQubits = 28;
    static constexpr double kNormDrift = 1e-12;

    StateVector() = default;

    /// |0...0>.
    explicit StateVector(size_t n) : num_qubits_(n) {
        if (n == 0 || n > kMaxQubits) {
            throw std::invalid_argument("StateVector: qubit count must be in [1, 28]");
        }
        amps_.assign(size_t{1} << n, complex_t{0, 0});
        amps_[0] = 1;
    }

    /// Takes ownership of `amplitudes` (length must be a power of two) and normalizes them.
    static StateVector from_amplitudes(std::vector<complex_t> amplitudes) {
        size_t dim = amplitudes.size();
        if (dim < 2 || !std::has_single_bit(dim)) {
            throw std::invalid_argument("StateVector: amplitude count must be a power of two >= 2");
        }
        StateVector out;
        out.num_qubits_ = static_cast<size_t>(std::countr_zero(dim));
        out.amps_ = std::move(amplitudes);
        double norm = out.norm();
        if (!(norm > 0) || !std::isfinite(norm)) {
            throw std::invalid_argument("StateVector: amplitudes have zero or non-finite norm");
        }
        for (auto &a : out.amps_) {
            a /= norm;
        }
        return out;
    }

    size_t num_qubits() const {
        return num_qubits_;
    }
    size_t dim() const {
        return amps_.size();
    }
    std::span<const complex_t> amplitudes() const {
        return amps_;
    }
    std::span<complex_t> mutable_amplitudes() {
        return amps_;
    }
    const complex_t &operator[](size_t b) const {
        return amps_[b];
    }

    double norm() const {
        double s = 0;
        for (const auto &a : amps_) {
            s += std::norm(a);
        }
        return std::sqrt(s);
    }

    /// Rescales to unit norm when drift exceeds kNormDrift.
    void renormalize() {
        double n = norm();
        if (std::abs(n - 1.0) > kNormDrift) {
            for (auto &a : amps_) {
                a /= n;
            }
        }
    }

    /// In-place P|psi>. No renormalization (P is unitary).
    void apply_pauli_inplace(const PauliString &p) {
        check(p);
        const complex_t phase = detail::i_pow(p.num_y());
        const uint64_t x = p.xs;
        const uint64_t z = p.zs;
        if (x == 0) {
            for (size_t b = 0; b < amps_.size(); b++) {
                if (std::popcount(b & z) & 1) {
                    amps_[b] = -amps_[b] * phase;
                } else {
                    amps_[b] *= phase;
                }
            }
            return;
        }
        const uint64_t top = uint64_t{1} << (63 - std::countl_zero(x));
        for (size_t b = 0; b < amps_.size(); b++) {
            if (b & top) {
                continue;
            }
            size_t c = b ^ x;
            // out[b ^ x] = phase * sign(b) * in[b]
            complex_t vb = amps_[b];
            complex_t vc = amps_[c];
            amps_[c] = phase * detail::parity_sign(b & z) * vb;
            amps_[b] = phase * detail::parity_sign(c & z) * vc;
        }
    }

    /// In-place e^{i theta P}|psi> = cos(theta)|psi> + i sin(theta) P|psi>. Unitary; no
    /// renormalization here so long paths can be replayed cheaply.
    void apply_rotation_inplace(const PauliString &p, double theta) {
        check(p);
        if (theta == 0.0) {
            return;
        }
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        // i * i^{#Y}
        const complex_t is = detail::i_pow(p.num_y() + 1) * s;
        const uint64_t x = p.xs;
        const uint64_t z = p.zs;
        if (x == 0) {
            const complex_t plus = c + is;
            const complex_t minus = c - is;
            for (size_t b = 0; b < amps_.size(); b++) {
                amps_[b] *= (std::popcount(b & z) & 1) ? minus : plus;
            }
            return;
        }
        const uint64_t top = uint64_t{1} << (63 - std::countl_zero(x));
        for (size_t b = 0; b < amps_.size(); b++) {
            if (b & top) {
                continue;
            }
            size_t d = b ^ x;
            complex_t vb = amps_[b];
            complex_t vd = amps_[d];
            // (P psi)[b] = i^{#Y} sign(d) psi[d]
            double sd = detail::parity_sign(d & z);
            double sb = detail::parity_sign(b & z);
            amps_[b] = c * vb + is * (sd * vd);
            amps_[d] = c * vd + is * (sb * vb);
        }
    }

    /// <psi|P|psi> as a complex number (the imaginary part vanishes for Hermitian P).
    complex_t pauli_expectation_complex(const PauliString &p) const {
        check(p);
        const uint64_t x = p.xs;
        const uint64_t z = p.zs;
        double re = 0;
        double im = 0;
        if (x == 0) {
            for (size_t b = 0; b < amps_.size(); b++) {
                double w = std::norm(amps_[b]);
                re += (std::popcount(b & z) & 1) ? -w : w;
            }
        } else {
            for (size_t b = 0; b < amps_.size(); b++) {
                // conj(psi[b ^ x]) * sign(b) * psi[b]
                complex_t t = std::conj(amps_[b ^ x]) * amps_[b];
                if (std::popcount(b & z) & 1) {
                    re -= t.real();
                    im -= t.imag();
                } else {
                    re += t.real();
                    im += t.imag();
                }
            }
        }
        return detail::i_pow(p.num_y()) * complex_t{re, im};
    }

    double pauli_expectation(const PauliString &p) const {
        complex_t v = pauli_expectation_complex(p);
        if (std::abs(v.imag()) > 1e-10) {
            throw std::logic_error("pauli_expectation: non-vanishing imaginary part");
        }
        return v.real();
    }

    bool operator==(const StateVector &other) const = default;

   private:
    void check(const PauliString &p) const {
        if (p.num_qubits != num_qubits_) {
            throw std::invalid_argument("StateVector: Pauli string qubit count does not match state");
        }
    }

    size_t num_qubits_ = 0;
    std::vector<complex_t> amps_;
};

inline StateVector basis_state(size_t n, uint64_t index) {
    StateVector s(n);
    if (index >= s.dim()) {
        throw std::out_of_range("basis_state: index out of range");
    }
    auto a = s.mutable_amplitudes();
    a[0] = 0;
    a[index] = 1;
    return s;
}

/// |+>^{(x) n}.
inline StateVector plus_state(size_t n) {
    StateVector s(n);
    double v = std::pow(2.0, -0.5 * static_cast<double>(n));
    for (auto &a : s.mutable_amplitudes()) {
        a = v;
    }
    return s;
}

/// Haar-random pure state: 2^{n+1} standard Gaussians as complex amplitudes, normalized.
inline StateVector haar_random_state(size_t n, uint64_t seed) {
    if (n == 0 || n > StateVector::kMaxQubits) {
        throw std::invalid_argument("haar_random_state: bad qubit count");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<complex_t> amps(size_t{1} << n);
    for (auto &a : amps) {
        double re = gauss(rng);
        double im = gauss(rng);
        a = {re, im};
    }
    return StateVector::from_amplitudes(std::move(amps));
}

inline StateVector apply_pauli(StateVector state, const PauliString &p) {
    state.apply_pauli_inplace(p);
    return state;
}

inline StateVector apply_rotation(StateVector state, const PauliString &p, double theta) {
    state.apply_rotation_inplace(p, theta);
    state.renormalize();
    return state;
}

inline double pauli_expectation(const StateVector &state, const PauliString &p) {
    return state.pauli_expectation(p);
}

inline complex_t inner_product(const StateVector &a, const StateVector &b) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("inner_product: dimension mismatch");
    }
    complex_t s = 0;
    for (size_t k = 0; k < a.dim(); k++) {
        s += std::conj(a[k]) * b[k];
    }
    return s;
}

/// |<a|b>|^2.
inline double fidelity(const StateVector &a, const StateVector &b) {
    return std::norm(inner_product(a, b));
}

}  // namespace quest
