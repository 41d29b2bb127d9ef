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

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace quest {

/// Hermitian n-qubit Pauli operator stored as X/Z bitmasks.
///
/// The operator is i^{#Y} * prod_j X_j^{x_j} Z_j^{z_j}, with #Y = popcount(x & z),
/// so every slot with both bits set is exactly the Pauli Y matrix. Qubit j maps
/// to bit j. Textual labels put qubit 0 rightmost: "IZXY" has Y on qubit 0.
struct PauliString {
    static constexpr size_t kMaxQubits = 63;

    size_t num_qubits = 0;
    uint64_t xs = 0;
    uint64_t zs = 0;

    PauliString() = default;

    PauliString(size_t n, uint64_t x_mask, uint64_t z_mask) : num_qubits(n), xs(x_mask), zs(z_mask) {
        if (n == 0 || n > kMaxQubits) {
            throw std::invalid_argument("PauliString: qubit count must be in [1, 63]");
        }
        uint64_t allowed = (uint64_t{1} << n) - 1;
        if ((xs | zs) & ~allowed) {
            throw std::invalid_argument("PauliString: mask bits set above qubit count");
        }
    }

    static PauliString identity(size_t n) {
        return PauliString(n, 0, 0);
    }

    /// Single-qubit factor `p` ('X', 'Y' or 'Z') on qubit `q`.
    static PauliString single(size_t n, size_t q, char p) {
        return PauliString(n, 0, 0).with(q, p);
    }

    /// Parses a label such as "XIZY" (qubit 0 rightmost).
    static PauliString from_label(std::string_view label) {
        size_t n = label.size();
        PauliString out(n, 0, 0);
        for (size_t i = 0; i < n; i++) {
            char c = label[n - 1 - i];
            if (c == '_') {
                c = 'I';
            }
            out = out.with(i, c);
        }
        return out;
    }

    /// Copy with qubit `q` set to `p`.
    PauliString with(size_t q, char p) const {
        if (q >= num_qubits) {
            throw std::out_of_range("PauliString: qubit index out of range");
        }
        uint64_t bit = uint64_t{1} << q;
        PauliString out = *this;
        out.xs &= ~bit;
        out.zs &= ~bit;
        switch (p) {
            case 'I':
                break;
            case 'X':
                out.xs |= bit;
                break;
            case 'Y':
                out.xs |= bit;
                out.zs |= bit;
                break;
            case 'Z':
                out.zs |= bit;
                break;
            default:
                throw std::invalid_argument(std::string("PauliString: unknown Pauli character '") + p + "'");
        }
        return out;
    }

    char at(size_t q) const {
        bool x = (xs >> q) & 1;
        bool z = (zs >> q) & 1;
        return "IZXY"[2 * x + z];
    }

    std::string label() const {
        std::string s(num_qubits, 'I');
        for (size_t q = 0; q < num_qubits; q++) {
            s[num_qubits - 1 - q] = at(q);
        }
        return s;
    }

    size_t weight() const {
        return static_cast<size_t>(std::popcount(xs | zs));
    }

    size_t num_y() const {
        return static_cast<size_t>(std::popcount(xs & zs));
    }

    bool is_identity() const {
        return xs == 0 && zs == 0;
    }

    bool operator==(const PauliString &other) const = default;

    /// Canonical order: qubit count, then (x_mask, z_mask) lexicographic.
    bool operator<(const PauliString &other) const {
        if (num_qubits != other.num_qubits) {
            return num_qubits < other.num_qubits;
        }
        if (xs != other.xs) {
            return xs < other.xs;
        }
        return zs < other.zs;
    }
};

inline size_t weight(const PauliString &p) {
    return p.weight();
}

/// True iff the symplectic inner product of `p` and `q` is even.
inline bool commutes(const PauliString &p, const PauliString &q) {
    if (p.num_qubits != q.num_qubits) {
        throw std::invalid_argument("commutes: mismatched qubit counts");
    }
    return (std::popcount((p.xs & q.zs) ^ (p.zs & q.xs)) & 1) == 0;
}

/// All non-identity Pauli strings on n qubits of weight <= m, ascending weight then
/// ascending (x_mask, z_mask).
struct PauliPool {
    size_t num_qubits = 0;
    size_t max_weight = 0;
    std::vector<PauliString> members;

    size_t size() const {
        return members.size();
    }
    const PauliString &operator[](size_t k) const {
        return members[k];
    }
    auto begin() const {
        return members.begin();
    }
    auto end() const {
        return members.end();
    }
};

/// Closed-form pool size sum_{k=1..m} C(n,k) 3^k.
inline uint64_t pool_size(size_t n, size_t m) {
    uint64_t total = 0;
    uint64_t binom = 1;
    uint64_t pow3 = 1;
    for (size_t k = 1; k <= m && k <= n; k++) {
        binom = binom * (n - k + 1) / k;
        pow3 *= 3;
        total += binom * pow3;
    }
    return total;
}

inline PauliPool generate_pool(size_t n, size_t m) {
    if (m == 0 || m > n) {
        throw std::invalid_argument("generate_pool: require 1 <= max weight <= qubit count");
    }
    if (n > PauliString::kMaxQubits) {
        throw std::invalid_argument("generate_pool: too many qubits");
    }
    PauliPool pool;
    pool.num_qubits = n;
    pool.max_weight = m;
    pool.members.reserve(pool_size(n, m));

    for (size_t k = 1; k <= m; k++) {
        std::vector<PauliString> level;
        std::vector<size_t> support(k);
        // Walk every k-subset of qubits, then every X/Y/Z assignment on it.
        std::function<void(size_t, size_t)> choose = [&](size_t start, size_t depth) {
            if (depth == k) {
                size_t combos = 1;
                for (size_t i = 0; i < k; i++) {
                    combos *= 3;
                }
                for (size_t code = 0; code < combos; code++) {
                    uint64_t x = 0;
                    uint64_t z = 0;
                    size_t c = code;
                    for (size_t i = 0; i < k; i++) {
                        uint64_t bit = uint64_t{1} << support[i];
                        switch (c % 3) {
                            case 0:
                                x |= bit;
                                break;
                            case 1:
                                x |= bit;
                                z |= bit;
                                break;
                            default:
                                z |= bit;
                                break;
                        }
                        c /= 3;
                    }
                    level.emplace_back(n, x, z);
                }
                return;
            }
            for (size_t q = start; q + (k - depth) <= n; q++) {
                support[depth] = q;
                choose(q + 1, depth + 1);
            }
        };
        choose(0, 0);
        std::sort(level.begin(), level.end());
        pool.members.insert(pool.members.end(), level.begin(), level.end());
    }
    return pool;
}

/// The full pool of every non-identity string (4^n - 1 members).
inline PauliPool full_pool(size_t n) {
    return generate_pool(n, n);
}

}  // namespace quest
