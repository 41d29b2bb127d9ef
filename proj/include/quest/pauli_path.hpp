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

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "quest/pauli.hpp"
#include "quest/statevector.hpp"

namespace quest {

/// Maps an angle into (-pi, pi].
inline double canonical_angle(double theta) {
    constexpr double two_pi = 2 * std::numbers::pi;
    double r = std::remainder(theta, two_pi);
    if (r <= -std::numbers::pi) {
        r += two_pi;
    }
    return r;
}

struct Rotation {
    double theta = 0;
    PauliString pauli;

    bool operator==(const Rotation &) const = default;
};

/// Ordered product e^{i theta_k P_k} ... e^{i theta_1 P_1}; rotations()[0] acts first.
class PauliPath {
   public:
    PauliPath() = default;
    explicit PauliPath(size_t n) : num_qubits_(n) {
    }
    PauliPath(size_t n, std::vector<Rotation> rotations) : num_qubits_(n), rotations_(std::move(rotations)) {
        for (auto &r : rotations_) {
            if (r.pauli.num_qubits != n) {
                throw std::invalid_argument("PauliPath: rotation qubit count does not match");
            }
            r.theta = canonical_angle(r.theta);
        }
    }

    size_t num_qubits() const {
        return num_qubits_;
    }
    size_t size() const {
        return rotations_.size();
    }
    bool empty() const {
        return rotations_.empty();
    }
    const std::vector<Rotation> &rotations() const {
        return rotations_;
    }
    const Rotation &operator[](size_t k) const {
        return rotations_[k];
    }

    std::vector<double> angles() const {
        std::vector<double> out;
        out.reserve(rotations_.size());
        for (const auto &r : rotations_) {
            out.push_back(r.theta);
        }
        return out;
    }

    /// Same Pauli sequence with new angles (canonicalized).
    PauliPath with_angles(const std::vector<double> &angles) const {
        if (angles.size() != rotations_.size()) {
            throw std::invalid_argument("PauliPath::with_angles: angle count does not match path length");
        }
        PauliPath out = *this;
        for (size_t k = 0; k < angles.size(); k++) {
            out.rotations_[k].theta = canonical_angle(angles[k]);
        }
        return out;
    }

    /// Applies rotations [begin, end) to `state` in place, first to last.
    void apply_range(StateVector &state, size_t begin, size_t end) const {
        for (size_t k = begin; k < end; k++) {
            state.apply_rotation_inplace(rotations_[k].pauli, rotations_[k].theta);
        }
    }

    bool operator==(const PauliPath &) const = default;

   private:
    size_t num_qubits_ = 0;
    std::vector<Rotation> rotations_;
};

/// U(theta, P)|initial>.
inline StateVector prepare(const PauliPath &path, const StateVector &initial) {
    if (path.num_qubits() != initial.num_qubits()) {
        throw std::invalid_argument("prepare: path and state qubit counts differ");
    }
    StateVector s = initial;
    path.apply_range(s, 0, path.size());
    s.renormalize();
    return s;
}

/// New path with (theta, p) placed after the first `location` rotations.
/// location == size() appends at the terminal.
inline PauliPath insert(const PauliPath &path, size_t location, double theta, const PauliString &p) {
    if (location > path.size()) {
        throw std::out_of_range("insert: location out of range");
    }
    if (p.num_qubits != path.num_qubits()) {
        throw std::invalid_argument("insert: Pauli qubit count does not match path");
    }
    std::vector<Rotation> r = path.rotations();
    r.insert(r.begin() + static_cast<std::ptrdiff_t>(location), Rotation{theta, p});
    return PauliPath(path.num_qubits(), std::move(r));
}

/// Drops the rotation at `location`.
inline PauliPath remove(const PauliPath &path, size_t location) {
    if (location >= path.size()) {
        throw std::out_of_range("remove: location out of range");
    }
    std::vector<Rotation> r = path.rotations();
    r.erase(r.begin() + static_cast<std::ptrdiff_t>(location));
    return PauliPath(path.num_qubits(), std::move(r));
}

/// Removes every rotation with |theta| < threshold.
inline PauliPath prune(const PauliPath &path, double threshold) {
    if (threshold < 0) {
        throw std::invalid_argument("prune: threshold must be non-negative");
    }
    std::vector<Rotation> kept;
    for (const auto &r : path.rotations()) {
        if (std::abs(r.theta) >= threshold) {
            kept.push_back(r);
        }
    }
    return PauliPath(path.num_qubits(), std::move(kept));
}

inline PauliPath concat(const PauliPath &a, const PauliPath &b) {
    if (a.num_qubits() != b.num_qubits()) {
        throw std::invalid_argument("concat: qubit counts differ");
    }
    std::vector<Rotation> r = a.rotations();
    r.insert(r.end(), b.rotations().begin(), b.rotations().end());
    return PauliPath(a.num_qubits(), std::move(r));
}

/// The inverse path: reversed order, negated angles.
inline PauliPath inverse(const PauliPath &path) {
    std::vector<Rotation> r(path.rotations().rbegin(), path.rotations().rend());
    for (auto &rot : r) {
        rot.theta = -rot.theta;
    }
    return PauliPath(path.num_qubits(), std::move(r));
}

}  // namespace quest
