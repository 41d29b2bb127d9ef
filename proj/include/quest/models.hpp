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
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quest/linalg.hpp"
#include "quest/observable.hpp"
#include "quest/pauli.hpp"
#include "quest/statevector.hpp"

namespace quest {

struct ProblemInstance {
    size_t num_qubits = 0;
    ConstraintSet constraints;
    StateVector initial_state{1};
    std::string description;
    /// Set when constraints are [Z_0..Z_{n-1}, Z_iZ_j for i<j]; enables correlation output.
    std::optional<size_t> correlation_qubits;
    /// Hidden state that satisfies the targets exactly, when one is known.
    std::optional<StateVector> reference_state;

    void validate() const {
        if (constraints.num_qubits() != num_qubits || initial_state.num_qubits() != num_qubits) {
            throw std::invalid_argument("ProblemInstance: qubit counts differ");
        }
        if (std::abs(initial_state.norm() - 1.0) > 1e-12) {
            throw std::invalid_argument("ProblemInstance: initial state not normalized");
        }
    }
};

/// -J sum_i Z_i Z_{i+1} - h sum_i X_i. The periodic wrap at n = 2 repeats the single edge.
inline Observable build_tfim(size_t n, double J, double h, bool periodic = true) {
    if (n < 2) {
        throw std::invalid_argument("build_tfim: need at least two qubits");
    }
    std::vector<PauliTerm> terms;
    size_t edges = periodic ? n : n - 1;
    for (size_t i = 0; i < edges; i++) {
        size_t j = (i + 1) % n;
        terms.push_back({-J, PauliString::single(n, i, 'Z').with(j, 'Z')});
    }
    for (size_t i = 0; i < n && h != 0.0; i++) {
        terms.push_back({-h, PauliString::single(n, i, 'X')});
    }
    return Observable(n, std::move(terms));
}

/// (1/n) sum_i X_i.
inline Observable build_magnetization(size_t n) {
    if (n == 0) {
        throw std::invalid_argument("build_magnetization: need at least one qubit");
    }
    std::vector<PauliTerm> terms;
    for (size_t i = 0; i < n; i++) {
        terms.push_back({1.0 / static_cast<double>(n), PauliString::single(n, i, 'X')});
    }
    return Observable(n, std::move(terms));
}

/// Z_0..Z_{n-1} followed by Z_iZ_j (i<j, lexicographic).
inline std::vector<Observable> correlation_observables(size_t n) {
    std::vector<Observable> out;
    for (size_t i = 0; i < n; i++) {
        out.push_back(Observable::from_pauli(PauliString::single(n, i, 'Z')));
    }
    for (size_t i = 0; i < n; i++) {
        for (size_t j = i + 1; j < n; j++) {
            out.push_back(Observable::from_pauli(PauliString::single(n, i, 'Z').with(j, 'Z')));
        }
    }
    return out;
}

/// C(i,j) = <Z_iZ_j> - <Z_i><Z_j> from values laid out as in correlation_observables.
/// Row-major n x n; the diagonal uses <Z_i Z_i> = 1.
inline std::vector<double> correlation_matrix(size_t n, const std::vector<double> &values) {
    if (values.size() != n * (n + 1) / 2) {
        throw std::invalid_argument("correlation_matrix: expected n(n+1)/2 values");
    }
    std::vector<double> c(n * n);
    size_t k = n;
    for (size_t i = 0; i < n; i++) {
        c[i * n + i] = 1.0 - values[i] * values[i];
        for (size_t j = i + 1; j < n; j++) {
            double v = values[k++] - values[i] * values[j];
            c[i * n + j] = v;
            c[j * n + i] = v;
        }
    }
    return c;
}

inline ConstraintSet build_correlation_constraints(const Observable &h, size_t n, double beta) {
    if (h.num_qubits() != n) {
        throw std::invalid_argument("build_correlation_constraints: Hamiltonian qubit count differs");
    }
    auto observables = correlation_observables(n);
    auto targets = gibbs_expectations(h, beta, observables);
    std::vector<Constraint> cs;
    for (size_t i = 0; i < observables.size(); i++) {
        cs.push_back(Constraint{observables[i], targets[i], 1.0, std::nullopt, std::nullopt});
    }
    return ConstraintSet(n, std::move(cs));
}

inline ProblemInstance build_pseudo_thermal_problem(size_t n, double J, double h, double beta) {
    ProblemInstance p;
    p.num_qubits = n;
    p.constraints = build_correlation_constraints(build_tfim(n, J, h, true), n, beta);
    p.initial_state = plus_state(n);
    p.correlation_qubits = n;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "pseudo-thermal TFIM n=%zu J=%g h=%g beta=%g", n, J, h, beta);
    p.description = buf;
    return p;
}

struct HubbardOperators {
    Observable hamiltonian;
    Observable n_up;
    Observable n_down;
};

/// Open-chain Hubbard model on M sites, Jordan-Wigner encoded with qubit 2p = (p, up),
/// qubit 2p+1 = (p, down), occupation n = (1 - Z)/2.
inline HubbardOperators build_hubbard_jw(size_t M, double t, double U) {
    if (M < 2 || M % 2 != 0) {
        throw std::invalid_argument("build_hubbard_jw: M must be even and at least 2");
    }
    const size_t n = 2 * M;
    std::vector<PauliTerm> h;
    // a_i^dag a_j + h.c. = (X_i Z..Z X_j + Y_i Z..Z Y_j) / 2 for i < j.
    for (size_t p = 0; p + 1 < M; p++) {
        for (size_t s = 0; s < 2; s++) {
            size_t i = 2 * p + s;
            size_t j = 2 * (p + 1) + s;
            PauliString zs = PauliString::identity(n);
            for (size_t k = i + 1; k < j; k++) {
                zs = zs.with(k, 'Z');
            }
            h.push_back({-t / 2, zs.with(i, 'X').with(j, 'X')});
            h.push_back({-t / 2, zs.with(i, 'Y').with(j, 'Y')});
        }
    }
    // U n_a n_b = U/4 (I - Z_a - Z_b + Z_a Z_b).
    for (size_t p = 0; p < M; p++) {
        size_t a = 2 * p;
        size_t b = 2 * p + 1;
        h.push_back({U / 4, PauliString::identity(n)});
        h.push_back({-U / 4, PauliString::single(n, a, 'Z')});
        h.push_back({-U / 4, PauliString::single(n, b, 'Z')});
        h.push_back({U / 4, PauliString::single(n, a, 'Z').with(b, 'Z')});
    }
    std::vector<PauliTerm> up, down;
    for (size_t p = 0; p < M; p++) {
        up.push_back({0.5, PauliString::identity(n)});
        up.push_back({-0.5, PauliString::single(n, 2 * p, 'Z')});
        down.push_back({0.5, PauliString::identity(n)});
        down.push_back({-0.5, PauliString::single(n, 2 * p + 1, 'Z')});
    }
    return {Observable(n, std::move(h)), Observable(n, std::move(up)), Observable(n, std::move(down))};
}

inline const std::vector<std::string> &hubbard_initial_names() {
    static const std::vector<std::string> names{"doubly-occupied", "neel", "anti-neel", "cdw", "fully-polarized"};
    return names;
}

/// Computational-basis initial states built from creation-operator products on the vacuum.
inline StateVector build_hubbard_initial(const std::string &name, size_t M) {
    if (M < 2 || M % 2 != 0) {
        throw std::invalid_argument("build_hubbard_initial: M must be even and at least 2");
    }
    auto up = [](size_t p) { return uint64_t{1} << (2 * p); };
    auto down = [](size_t p) { return uint64_t{1} << (2 * p + 1); };
    uint64_t index = 0;
    if (name == "doubly-occupied") {
        for (size_t p = 0; p < M / 2; p++) {
            index |= up(p) | down(p);
        }
    } else if (name == "neel") {
        for (size_t p = 0; p < M; p++) {
            index |= p % 2 == 0 ? up(p) : down(p);
        }
    } else if (name == "anti-neel") {
        for (size_t p = 0; p < M; p++) {
            index |= p % 2 == 0 ? down(p) : up(p);
        }
    } else if (name == "cdw") {
        for (size_t p = 0; p < M / 2; p++) {
            index |= up(2 * p) | down(2 * p);
        }
    } else if (name == "fully-polarized") {
        for (size_t p = 0; p < M; p++) {
            index |= up(p);
        }
    } else {
        throw std::invalid_argument("build_hubbard_initial: unknown initial state '" + name + "'");
    }
    return basis_state(2 * M, index);
}

/// M = 4, t = 1, U = 4 with targets (<H>, <N_up>, <N_down>) = (3, 4, 2) for set 1
/// and (9, 2, 2) for set 2; unit weights.
inline ProblemInstance build_hubbard_problem(int target_set, const std::string &initial) {
    constexpr size_t M = 4;
    std::array<double, 3> targets;
    if (target_set == 1) {
        targets = {3, 4, 2};
    } else if (target_set == 2) {
        targets = {9, 2, 2};
    } else {
        throw std::invalid_argument("build_hubbard_problem: target set must be 1 or 2");
    }
    auto ops = build_hubbard_jw(M, 1.0, 4.0);
    ProblemInstance p;
    p.num_qubits = 2 * M;
    p.constraints = ConstraintSet(2 * M, {
                                             Constraint{ops.hamiltonian, targets[0], 1.0, std::nullopt, std::nullopt},
                                             Constraint{ops.n_up, targets[1], 1.0, std::nullopt, std::nullopt},
                                             Constraint{ops.n_down, targets[2], 1.0, std::nullopt, std::nullopt},
                                         });
    p.initial_state = build_hubbard_initial(initial, M);
    p.description = "hubbard M=4 t=1 U=4 set " + std::to_string(target_set) + " initial " + initial;
    return p;
}

/// N distinct uniformly random non-identity Pauli strings with targets taken from a seeded
/// Haar-random reference state. Noisy targets draw shots uniformly from shots_range.
inline ProblemInstance build_random_pauli_problem(size_t n, size_t N, uint64_t seed, bool noisy = false,
                                                  std::pair<uint64_t, uint64_t> shots_range = {1000, 5000}) {
    if (n == 0 || n > StateVector::kMaxQubits) {
        throw std::invalid_argument("build_random_pauli_problem: bad qubit count");
    }
    if (n < 32 && N > (uint64_t{1} << (2 * n)) - 1) {
        throw std::invalid_argument("build_random_pauli_problem: more constraints than non-identity Pauli strings");
    }
    if (noisy && (shots_range.first == 0 || shots_range.first > shots_range.second)) {
        throw std::invalid_argument("build_random_pauli_problem: bad shot range");
    }
    std::mt19937_64 rng(seed);
    const uint64_t mask = n == 64 ? ~uint64_t{0} : (uint64_t{1} << n) - 1;
    std::set<std::pair<uint64_t, uint64_t>> seen;
    std::vector<PauliString> strings;
    while (strings.size() < N) {
        uint64_t x = rng() & mask;
        uint64_t z = rng() & mask;
        if ((x | z) == 0 || !seen.insert({x, z}).second) {
            continue;
        }
        strings.emplace_back(n, x, z);
    }
    StateVector reference = haar_random_state(n, rng());
    std::vector<double> truth;
    for (const auto &s : strings) {
        truth.push_back(std::clamp(reference.pauli_expectation(s), -1.0, 1.0));
    }

    std::vector<Constraint> cs;
    if (noisy) {
        std::uniform_int_distribution<uint64_t> shot_dist(shots_range.first, shots_range.second);
        std::vector<uint64_t> shots;
        for (size_t i = 0; i < N; i++) {
            shots.push_back(shot_dist(rng));
        }
        auto noisy_targets = make_noisy_targets(truth, shots, rng());
        for (size_t i = 0; i < N; i++) {
            const auto &t = noisy_targets[i];
            cs.push_back(Constraint{Observable::from_pauli(strings[i]), t.tau, t.weight, t.sigma, t.shots});
        }
    } else {
        for (size_t i = 0; i < N; i++) {
            cs.push_back(Constraint{Observable::from_pauli(strings[i]), truth[i], 1.0, std::nullopt, std::nullopt});
        }
    }

    ProblemInstance p;
    p.num_qubits = n;
    p.constraints = ConstraintSet(n, std::move(cs));
    p.initial_state = StateVector(n);
    p.reference_state = std::move(reference);
    p.description = std::string("random pauli ") + (noisy ? "noisy" : "noiseless") + " n=" + std::to_string(n) +
                    " N=" + std::to_string(N) + " seed=" + std::to_string(seed);
    return p;
}

/// Two constraints whose insertion gradients cancel for every Pauli at |0...0>:
/// O1 = -n h M_X with target -delta, O2 = TFIM(J, h) with target -J n + delta.
inline ProblemInstance build_stalling_problem(size_t n, double J, double h, double delta) {
    Observable o1 = build_magnetization(n).scaled(-static_cast<double>(n) * h);
    Observable o2 = build_tfim(n, J, h, true);
    double t1 = -delta;
    double t2 = -J * static_cast<double>(n) + delta;
    if (!std::isfinite(delta) || std::abs(t1) > o1.coefficient_norm() || std::abs(t2) > o2.coefficient_norm()) {
        throw std::invalid_argument("build_stalling_problem: delta puts a target outside the spectral range");
    }
    ProblemInstance p;
    p.num_qubits = n;
    p.constraints = ConstraintSet(n, {
                                         Constraint{o1, t1, 1.0, std::nullopt, std::nullopt},
                                         Constraint{o2, t2, 1.0, std::nullopt, std::nullopt},
                                     });
    p.initial_state = StateVector(n);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "stalling n=%zu J=%g h=%g delta=%g", n, J, h, delta);
    p.description = buf;
    return p;
}

inline constexpr size_t kProjectorMaxQubits = 6;

/// |phi><phi| = 2^-n sum_P <phi|P|phi> P, dropping coefficients below 1e-15.
inline Observable projector_observable(const StateVector &target) {
    const size_t n = target.num_qubits();
    if (n > kProjectorMaxQubits) {
        throw std::invalid_argument("projector_observable: too many qubits for a Pauli decomposition");
    }
    const uint64_t dim = uint64_t{1} << n;
    const double scale = 1.0 / static_cast<double>(dim);
    std::vector<PauliTerm> terms;
    for (uint64_t x = 0; x < dim; x++) {
        for (uint64_t z = 0; z < dim; z++) {
            PauliString p(n, x, z);
            double c = scale * target.pauli_expectation(p);
            if (std::abs(c) > 1e-15) {
                terms.push_back({c, p});
            }
        }
    }
    return Observable(n, std::move(terms));
}

/// Single constraint <phi|.|phi> projector with target 1, initial state |0...0>.
inline ProblemInstance build_projector_problem(const StateVector &target) {
    ProblemInstance p;
    p.num_qubits = target.num_qubits();
    p.constraints = ConstraintSet(
        p.num_qubits, {Constraint{projector_observable(target), 1.0, 1.0, std::nullopt, std::nullopt}});
    p.initial_state = StateVector(p.num_qubits);
    p.reference_state = target;
    p.description = "projector n=" + std::to_string(p.num_qubits);
    return p;
}

}  // namespace quest
