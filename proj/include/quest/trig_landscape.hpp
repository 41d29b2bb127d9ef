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
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "quest/observable.hpp"
#include "quest/pauli_path.hpp"
#include "quest/statevector.hpp"

namespace quest {

/// O(theta) = a + b cos 2theta + c sin 2theta.
struct ObsTrigCoeffs {
    double a = 0;
    double b = 0;
    double c = 0;

    double operator()(double theta) const {
        return a + b * std::cos(2 * theta) + c * std::sin(2 * theta);
    }
};

/// Coefficients of <psi| e^{-i theta P} O e^{i theta P} |psi> from the pre-rotation state:
/// a = <O + POP>/2, b = <O - POP>/2, c = <i[O, P]>/2.
inline ObsTrigCoeffs conjugation_coefficients(const StateVector &psi, const Observable &o, const PauliString &p) {
    StateVector p_psi = apply_pauli(psi, p);
    double o_mean = o.evaluate(psi);
    double pop_mean = o.evaluate(p_psi);
    // <psi|O P|psi> = m, <psi|P O|psi> = conj(m), so <i[O,P]> = -2 Im m.
    complex_t m = o.matrix_element(psi, p_psi);
    return {0.5 * (o_mean + pop_mean), 0.5 * (o_mean - pop_mean), -m.imag()};
}

/// C(theta) = alpha + beta cos 2t + gamma sin 2t + delta cos 4t + epsilon sin 4t.
struct CostTrigCoeffs {
    double alpha = 0;
    double beta = 0;
    double gamma = 0;
    double delta = 0;
    double epsilon = 0;

    double operator()(double t) const {
        return alpha + beta * std::cos(2 * t) + gamma * std::sin(2 * t) + delta * std::cos(4 * t) +
               epsilon * std::sin(4 * t);
    }

    double derivative(double t) const {
        return -2 * beta * std::sin(2 * t) + 2 * gamma * std::cos(2 * t) - 4 * delta * std::sin(4 * t) +
               4 * epsilon * std::cos(4 * t);
    }

    double second_derivative(double t) const {
        return -4 * beta * std::cos(2 * t) - 4 * gamma * std::sin(2 * t) - 16 * delta * std::cos(4 * t) -
               16 * epsilon * std::sin(4 * t);
    }

    std::array<double, 5> as_array() const {
        return {alpha, beta, gamma, delta, epsilon};
    }
};

/// The five sample angles k*pi/5, k = -2..2.
inline constexpr std::array<double, 5> kSampleAngles = {
    -2 * std::numbers::pi / 5, -std::numbers::pi / 5, 0.0, std::numbers::pi / 5, 2 * std::numbers::pi / 5};

/// Index of the theta = 0 sample in kSampleAngles.
inline constexpr size_t kZeroSample = 2;

using Matrix5 = std::array<std::array<double, 5>, 5>;

/// Rows indexed by the sample angles, columns [1, cos 2t, sin 2t, cos 4t, sin 4t].
inline Matrix5 recovery_matrix() {
    Matrix5 m{};
    for (size_t r = 0; r < 5; r++) {
        double t = kSampleAngles[r];
        m[r] = {1.0, std::cos(2 * t), std::sin(2 * t), std::cos(4 * t), std::sin(4 * t)};
    }
    return m;
}

namespace detail {

/// Inverts a 5x5 matrix by Gauss-Jordan elimination with partial pivoting.
inline Matrix5 invert5(Matrix5 m) {
    Matrix5 inv{};
    for (size_t i = 0; i < 5; i++) {
        inv[i][i] = 1.0;
    }
    for (size_t col = 0; col < 5; col++) {
        size_t piv = col;
        for (size_t r = col + 1; r < 5; r++) {
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) {
                piv = r;
            }
        }
        std::swap(m[col], m[piv]);
        std::swap(inv[col], inv[piv]);
        double d = m[col][col];
        for (size_t c = 0; c < 5; c++) {
            m[col][c] /= d;
            inv[col][c] /= d;
        }
        for (size_t r = 0; r < 5; r++) {
            if (r == col) {
                continue;
            }
            double f = m[r][col];
            for (size_t c = 0; c < 5; c++) {
                m[r][c] -= f * m[col][c];
                inv[r][c] -= f * inv[col][c];
            }
        }
    }
    return inv;
}

struct TrigGrid {
    std::vector<double> theta, c2, s2, c4, s4;
};

inline const TrigGrid &trig_grid(size_t points) {
    thread_local std::map<size_t, std::unique_ptr<TrigGrid>> cache;
    auto &slot = cache[points];
    if (!slot) {
        slot = std::make_unique<TrigGrid>();
        for (size_t k = 0; k < points; k++) {
            double t = -std::numbers::pi + 2 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(points);
            slot->theta.push_back(t);
            slot->c2.push_back(std::cos(2 * t));
            slot->s2.push_back(std::sin(2 * t));
            slot->c4.push_back(std::cos(4 * t));
            slot->s4.push_back(std::sin(4 * t));
        }
    }
    return *slot;
}

}  // namespace detail

inline const Matrix5 &recovery_matrix_inverse() {
    static const Matrix5 inv = detail::invert5(recovery_matrix());
    return inv;
}

/// Recovers the five cost coefficients from C(k pi/5), k = -2..2.
inline CostTrigCoeffs reconstruct_cost(const std::array<double, 5> &samples) {
    for (double s : samples) {
        if (!std::isfinite(s)) {
            throw std::invalid_argument("reconstruct_cost: non-finite sample");
        }
    }
    const Matrix5 &inv = recovery_matrix_inverse();
    std::array<double, 5> x{};
    for (size_t r = 0; r < 5; r++) {
        double s = 0;
        for (size_t c = 0; c < 5; c++) {
            s += inv[r][c] * samples[c];
        }
        x[r] = s;
    }
    return {x[0], x[1], x[2], x[3], x[4]};
}

struct TrigMinimum {
    double theta = 0;
    double cost = 0;
};

inline constexpr size_t kDefaultGridPoints = 4096;

/// Global minimizer of a cost polynomial: dense grid over [-pi, pi), then a safeguarded
/// Newton polish on C' inside the neighbouring grid cells. C has period pi, so the
/// result is reported in (-pi/2, pi/2]. A flat landscape returns theta = 0.
inline TrigMinimum minimize_trig(const CostTrigCoeffs &coeffs, size_t grid_points = kDefaultGridPoints) {
    if (grid_points < 64) {
        throw std::invalid_argument("minimize_trig: need at least 64 grid points");
    }
    const auto &g = detail::trig_grid(grid_points);
    size_t best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    double worst_cost = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < grid_points; k++) {
        double c = coeffs.alpha + coeffs.beta * g.c2[k] + coeffs.gamma * g.s2[k] + coeffs.delta * g.c4[k] +
                   coeffs.epsilon * g.s4[k];
        if (c < best_cost) {
            best_cost = c;
            best = k;
        }
        worst_cost = std::max(worst_cost, c);
    }
    if (worst_cost - best_cost < 1e-12) {
        return {0.0, coeffs(0.0)};
    }

    const double h = 2 * std::numbers::pi / static_cast<double>(grid_points);
    double lo = g.theta[best] - h;
    double hi = g.theta[best] + h;
    double theta = g.theta[best];
    double d_lo = coeffs.derivative(lo);
    double d_hi = coeffs.derivative(hi);
    if (d_lo <= 0 && d_hi >= 0) {
        // Bracketed: Newton steps, falling back to bisection when a step leaves the bracket.
        for (int it = 0; it < 60; it++) {
            double d = coeffs.derivative(theta);
            if (std::abs(d) < 1e-15) {
                break;
            }
            if (d > 0) {
                hi = theta;
            } else {
                lo = theta;
            }
            double dd = coeffs.second_derivative(theta);
            double next = dd > 0 ? theta - d / dd : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) {
                next = 0.5 * (lo + hi);
            }
            if (std::abs(next - theta) < 1e-16) {
                theta = next;
                break;
            }
            theta = next;
        }
    }
    double polished = coeffs(theta);
    if (!(polished <= best_cost)) {
        theta = g.theta[best];
        polished = best_cost;
    }
    if (theta > std::numbers::pi / 2) {
        theta -= std::numbers::pi;
    } else if (theta <= -std::numbers::pi / 2) {
        theta += std::numbers::pi;
    }
    return {theta, polished};
}

enum class CostMode { squared_residuals, raw_expectation };

/// sum_i w_i (v_i - tau_i)^2, or sum_i w_i v_i for raw-expectation mode.
inline double cost_of(const ConstraintSet &set, const std::vector<double> &values, CostMode mode) {
    if (mode == CostMode::squared_residuals) {
        return set.cost(values);
    }
    if (values.size() != set.size()) {
        throw std::invalid_argument("cost_of: value count does not match constraint count");
    }
    double s = 0;
    for (size_t i = 0; i < values.size(); i++) {
        s += set[i].weight * values[i];
    }
    return s;
}

/// dC/dO_i at the given expectation values.
inline std::vector<double> cost_sensitivities(const ConstraintSet &set, const std::vector<double> &values,
                                              CostMode mode) {
    std::vector<double> out(values.size());
    for (size_t i = 0; i < values.size(); i++) {
        out[i] = mode == CostMode::squared_residuals ? 2 * set[i].weight * (values[i] - set[i].target)
                                                     : set[i].weight;
    }
    return out;
}

/// Everything needed to evaluate insertions into a fixed path: cached prefix states
/// |psi_(l)> (state after the first l rotations) plus the current expectations.
class InsertionContext {
   public:
    InsertionContext(const ConstraintSet &constraints, const StateVector &initial, const PauliPath &path,
                     std::vector<double> current_values, CostMode mode)
        : constraints_(&constraints), path_(&path), mode_(mode), current_values_(std::move(current_values)) {
        if (initial.num_qubits() != constraints.num_qubits() || path.num_qubits() != constraints.num_qubits()) {
            throw std::invalid_argument("InsertionContext: qubit counts differ");
        }
        if (current_values_.size() != constraints.size()) {
            throw std::invalid_argument("InsertionContext: expectation count does not match constraints");
        }
        prefix_.reserve(path.size() + 1);
        prefix_.push_back(initial);
        for (size_t k = 0; k < path.size(); k++) {
            StateVector s = prefix_.back();
            s.apply_rotation_inplace(path[k].pauli, path[k].theta);
            prefix_.push_back(std::move(s));
        }
        current_cost_ = cost_of(constraints, current_values_, mode);
        sensitivities_ = cost_sensitivities(constraints, current_values_, mode);
    }

    /// Measures current expectations of `path` on `initial` (N calls) and builds the context.
    static InsertionContext measure(const ConstraintSet &constraints, const StateVector &initial, const PauliPath &path,
                                    CostMode mode, OracleLedger &ledger, OracleLedger::Phase phase) {
        auto values = constraints.expectations(prepare(path, initial), ledger, phase);
        return InsertionContext(constraints, initial, path, std::move(values), mode);
    }

    size_t num_slots() const {
        return path_->size() + 1;
    }
    double current_cost() const {
        return current_cost_;
    }
    const std::vector<double> &current_values() const {
        return current_values_;
    }
    const PauliPath &path() const {
        return *path_;
    }
    const ConstraintSet &constraints() const {
        return *constraints_;
    }
    CostMode mode() const {
        return mode_;
    }

    /// Terminal state of the path with (theta, P) inserted at slot l.
    StateVector inserted_state(size_t l, double theta, const PauliString &p) const {
        check_slot(l);
        StateVector s = prefix_[l];
        s.apply_rotation_inplace(p, theta);
        path_->apply_range(s, l, path_->size());
        return s;
    }

    /// O_i(l; theta, P) for every constraint: N oracle calls.
    std::vector<double> observe(size_t l, double theta, const PauliString &p, OracleLedger &ledger,
                                OracleLedger::Phase phase) const {
        return constraints_->expectations(inserted_state(l, theta, p), ledger, phase);
    }

    /// C(l; theta, P). theta == 0 returns the cached current cost with no oracle calls.
    double cost_at(size_t l, const PauliString &p, double theta, OracleLedger &ledger,
                   OracleLedger::Phase phase = OracleLedger::Phase::insertion) const {
        check_slot(l);
        if (theta == 0.0) {
            return current_cost_;
        }
        return cost_of(*constraints_, observe(l, theta, p, ledger, phase), mode_);
    }

    /// Five-point reconstruction of C(l; theta, P): 4N oracle calls.
    CostTrigCoeffs landscape(size_t l, const PauliString &p, OracleLedger &ledger,
                             OracleLedger::Phase phase = OracleLedger::Phase::insertion) const {
        std::array<double, 5> samples{};
        for (size_t k = 0; k < 5; k++) {
            samples[k] = cost_at(l, p, kSampleAngles[k], ledger, phase);
        }
        return reconstruct_cost(samples);
    }

    /// g(l; P) = dC/dtheta at theta = 0 via O_i(pi/4) - O_i(-pi/4): 2N oracle calls.
    double insertion_gradient(size_t l, const PauliString &p, OracleLedger &ledger,
                              OracleLedger::Phase phase = OracleLedger::Phase::insertion) const {
        auto plus = observe(l, std::numbers::pi / 4, p, ledger, phase);
        auto minus = observe(l, -std::numbers::pi / 4, p, ledger, phase);
        double g = 0;
        for (size_t i = 0; i < plus.size(); i++) {
            g += sensitivities_[i] * (plus[i] - minus[i]);
        }
        return g;
    }

   private:
    void check_slot(size_t l) const {
        if (l > path_->size()) {
            throw std::out_of_range("InsertionContext: insertion location out of range");
        }
    }

    const ConstraintSet *constraints_;
    const PauliPath *path_;
    CostMode mode_;
    std::vector<double> current_values_;
    std::vector<double> sensitivities_;
    double current_cost_ = 0;
    std::vector<StateVector> prefix_;
};

struct CostAndGradient {
    double cost = 0;
    std::vector<double> values;
    std::vector<double> gradient;
};

/// Cost at `path` and dC/dtheta_k for every angle by the pi/4 parameter-shift rule.
/// Charges N + 2 N len(path) oracle calls.
inline CostAndGradient parameter_shift_grad(const PauliPath &path, const StateVector &initial,
                                            const ConstraintSet &constraints, CostMode mode, OracleLedger &ledger,
                                            OracleLedger::Phase phase = OracleLedger::Phase::optimization) {
    if (initial.num_qubits() != constraints.num_qubits() || path.num_qubits() != constraints.num_qubits()) {
        throw std::invalid_argument("parameter_shift_grad: qubit counts differ");
    }
    const size_t len = path.size();
    std::vector<StateVector> before;
    before.reserve(len);
    StateVector s = initial;
    for (size_t k = 0; k < len; k++) {
        before.push_back(s);
        s.apply_rotation_inplace(path[k].pauli, path[k].theta);
    }
    CostAndGradient out;
    out.values = constraints.expectations(s, ledger, phase);
    out.cost = cost_of(constraints, out.values, mode);
    auto sens = cost_sensitivities(constraints, out.values, mode);
    out.gradient.assign(len, 0.0);
    for (size_t k = 0; k < len; k++) {
        double diff_sum = 0;
        for (double shift : {std::numbers::pi / 4, -std::numbers::pi / 4}) {
            StateVector t = before[k];
            t.apply_rotation_inplace(path[k].pauli, path[k].theta + shift);
            path.apply_range(t, k + 1, len);
            auto v = constraints.expectations(t, ledger, phase);
            double sign = shift > 0 ? 1.0 : -1.0;
            for (size_t i = 0; i < v.size(); i++) {
                diff_sum += sign * sens[i] * v[i];
            }
        }
        out.gradient[k] = diff_sum;
    }
    return out;
}

/// Cost of `path` on `initial`: N oracle calls.
inline double path_cost(const PauliPath &path, const StateVector &initial, const ConstraintSet &constraints,
                        CostMode mode, OracleLedger &ledger, OracleLedger::Phase phase) {
    return cost_of(constraints, constraints.expectations(prepare(path, initial), ledger, phase), mode);
}

}  // namespace quest
