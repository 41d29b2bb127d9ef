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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quest/pauli.hpp"
#include "quest/statevector.hpp"

namespace quest {

struct PauliTerm {
    double coeff = 0;
    PauliString pauli;
};

/// Real-weighted sum of Pauli strings. Duplicate strings are merged on construction;
/// identity terms are allowed and contribute their coefficient to every expectation.
class Observable {
   public:
    Observable() = default;

    Observable(size_t n, std::vector<PauliTerm> terms) : num_qubits_(n) {
        if (n == 0 || n > PauliString::kMaxQubits) {
            throw std::invalid_argument("Observable: bad qubit count");
        }
        std::map<std::pair<uint64_t, uint64_t>, size_t> index;
        for (const auto &t : terms) {
            if (!std::isfinite(t.coeff)) {
                throw std::invalid_argument("Observable: non-finite coefficient");
            }
            if (t.pauli.num_qubits != n) {
                throw std::invalid_argument("Observable: term qubit count does not match");
            }
            auto key = std::make_pair(t.pauli.xs, t.pauli.zs);
            auto it = index.find(key);
            if (it == index.end()) {
                index.emplace(key, terms_.size());
                terms_.push_back(t);
            } else {
                terms_[it->second].coeff += t.coeff;
            }
        }
        build_groups();
    }

    static Observable from_pauli(const PauliString &p, double coeff = 1.0) {
        return Observable(p.num_qubits, {{coeff, p}});
    }

    /// Builds from (coefficient, label) pairs, e.g. {{0.5, "XZ"}, {-1, "IY"}}.
    static Observable from_labels(const std::vector<std::pair<double, std::string>> &terms) {
        if (terms.empty()) {
            throw std::invalid_argument("Observable::from_labels: need at least one term to infer qubit count");
        }
        std::vector<PauliTerm> out;
        for (const auto &[c, label] : terms) {
            out.push_back({c, PauliString::from_label(label)});
        }
        const size_t n = out.front().pauli.num_qubits;
        return Observable(n, std::move(out));
    }

    size_t num_qubits() const {
        return num_qubits_;
    }
    const std::vector<PauliTerm> &terms() const {
        return terms_;
    }
    bool empty() const {
        return terms_.empty();
    }

    /// <psi|O|psi> without oracle accounting.
    double evaluate(const StateVector &state) const {
        if (state.num_qubits() != num_qubits_) {
            throw std::invalid_argument("Observable: state qubit count does not match");
        }
        auto amps = state.amplitudes();
        double total = 0;
        for (const auto &g : groups_) {
            if (g.table.empty()) {
                for (size_t k : g.term_indices) {
                    total += terms_[k].coeff * state.pauli_expectation_complex(terms_[k].pauli).real();
                }
                continue;
            }
            const uint64_t x = g.x_mask;
            double re = 0;
            if (x == 0) {
                for (size_t b = 0; b < amps.size(); b++) {
                    re += g.table[b].real() * std::norm(amps[b]);
                }
            } else {
                for (size_t b = 0; b < amps.size(); b++) {
                    complex_t t = std::conj(amps[b ^ x]) * amps[b];
                    re += g.table[b].real() * t.real() - g.table[b].imag() * t.imag();
                }
            }
            total += re;
        }
        return total;
    }

    /// <bra|O|ket> without oracle accounting.
    complex_t matrix_element(const StateVector &bra, const StateVector &ket) const {
        if (bra.num_qubits() != num_qubits_ || ket.num_qubits() != num_qubits_) {
            throw std::invalid_argument("Observable: state qubit count does not match");
        }
        auto a = bra.amplitudes();
        auto k = ket.amplitudes();
        complex_t total = 0;
        for (const auto &t : terms_) {
            // (P ket)[b ^ x] = i^{#Y} sign(b & z) ket[b]
            complex_t s = 0;
            for (size_t b = 0; b < k.size(); b++) {
                complex_t v = std::conj(a[b ^ t.pauli.xs]) * k[b];
                s += (std::popcount(b & t.pauli.zs) & 1) ? -v : v;
            }
            total += t.coeff * detail::i_pow(t.pauli.num_y()) * s;
        }
        return total;
    }

    /// Observable scaled by `s`.
    Observable scaled(double s) const {
        std::vector<PauliTerm> t = terms_;
        for (auto &term : t) {
            term.coeff *= s;
        }
        return Observable(num_qubits_, std::move(t));
    }

    /// Sum of |coefficients| over non-identity terms plus |identity coefficient|; bounds the spectrum.
    double coefficient_norm() const {
        double s = 0;
        for (const auto &t : terms_) {
            s += std::abs(t.coeff);
        }
        return s;
    }

    double identity_coefficient() const {
        double s = 0;
        for (const auto &t : terms_) {
            if (t.pauli.is_identity()) {
                s += t.coeff;
            }
        }
        return s;
    }

    friend Observable operator+(const Observable &a, const Observable &b) {
        if (a.num_qubits_ != b.num_qubits_) {
            throw std::invalid_argument("Observable: qubit count mismatch in sum");
        }
        std::vector<PauliTerm> t = a.terms_;
        t.insert(t.end(), b.terms_.begin(), b.terms_.end());
        return Observable(a.num_qubits_, std::move(t));
    }

   private:
    static constexpr size_t kTableMaxQubits = 16;

    // Terms sharing an X mask touch the same amplitude pairs, so their phases are folded
    // into one diagonal table when the group has more than one member.
    struct Group {
        uint64_t x_mask = 0;
        std::vector<size_t> term_indices;
        std::vector<complex_t> table;
    };

    void build_groups() {
        std::map<uint64_t, size_t> by_x;
        groups_.clear();
        for (size_t k = 0; k < terms_.size(); k++) {
            auto it = by_x.find(terms_[k].pauli.xs);
            if (it == by_x.end()) {
                by_x.emplace(terms_[k].pauli.xs, groups_.size());
                groups_.push_back({terms_[k].pauli.xs, {k}, {}});
            } else {
                groups_[it->second].term_indices.push_back(k);
            }
        }
        if (num_qubits_ > kTableMaxQubits) {
            return;
        }
        size_t dim = size_t{1} << num_qubits_;
        for (auto &g : groups_) {
            if (g.term_indices.size() < 2) {
                continue;
            }
            g.table.assign(dim, complex_t{0, 0});
            for (size_t k : g.term_indices) {
                const auto &t = terms_[k];
                complex_t ph = detail::i_pow(t.pauli.num_y()) * t.coeff;
                for (size_t b = 0; b < dim; b++) {
                    g.table[b] += (std::popcount(b & t.pauli.zs) & 1) ? -ph : ph;
                }
            }
        }
    }

    size_t num_qubits_ = 0;
    std::vector<PauliTerm> terms_;
    std::vector<Group> groups_;
};

/// Counts oracle calls: one call is one observable expectation on one prepared state.
class OracleLedger {
   public:
    enum class Phase { insertion = 0, optimization = 1, evaluation = 2 };

    struct Counts {
        uint64_t insertion = 0;
        uint64_t optimization = 0;
        uint64_t evaluation = 0;
        uint64_t total() const {
            return insertion + optimization + evaluation;
        }
    };

    OracleLedger() = default;
    OracleLedger(const OracleLedger &) = delete;
    OracleLedger &operator=(const OracleLedger &) = delete;

    void add(Phase phase, uint64_t calls = 1) {
        counters_[static_cast<size_t>(phase)].fetch_add(calls, std::memory_order_relaxed);
    }

    uint64_t calls(Phase phase) const {
        return counters_[static_cast<size_t>(phase)].load(std::memory_order_relaxed);
    }

    uint64_t total() const {
        return calls(Phase::insertion) + calls(Phase::optimization) + calls(Phase::evaluation);
    }

    Counts snapshot() const {
        return {calls(Phase::insertion), calls(Phase::optimization), calls(Phase::evaluation)};
    }

   private:
    std::atomic<uint64_t> counters_[3] = {0, 0, 0};
};

/// One oracle call: <psi|O|psi>, charged to `phase`.
inline double expectation(const StateVector &state, const Observable &o, OracleLedger &ledger,
                          OracleLedger::Phase phase = OracleLedger::Phase::evaluation) {
    double v = o.evaluate(state);
    ledger.add(phase);
    return v;
}

struct Constraint {
    Observable observable;
    double target = 0;
    double weight = 1;
    std::optional<double> sigma;
    std::optional<uint64_t> shots;
};

/// Constraints sharing one qubit count.
class ConstraintSet {
   public:
    ConstraintSet() = default;

    ConstraintSet(size_t n, std::vector<Constraint> constraints) : num_qubits_(n), constraints_(std::move(constraints)) {
        for (const auto &c : constraints_) {
            if (c.observable.num_qubits() != n) {
                throw std::invalid_argument("ConstraintSet: constraint qubit count does not match");
            }
            if (!(c.weight >= 0) || !std::isfinite(c.weight)) {
                throw std::invalid_argument("ConstraintSet: weights must be finite and non-negative");
            }
            if (!std::isfinite(c.target)) {
                throw std::invalid_argument("ConstraintSet: non-finite target");
            }
            if (c.sigma && !(*c.sigma > 0)) {
                throw std::invalid_argument("ConstraintSet: sigma must be positive");
            }
        }
    }

    size_t num_qubits() const {
        return num_qubits_;
    }
    size_t size() const {
        return constraints_.size();
    }
    bool empty() const {
        return constraints_.empty();
    }
    const Constraint &operator[](size_t i) const {
        return constraints_[i];
    }
    const std::vector<Constraint> &constraints() const {
        return constraints_;
    }

    std::vector<double> weights() const {
        std::vector<double> w;
        for (const auto &c : constraints_) {
            w.push_back(c.weight);
        }
        return w;
    }

    std::vector<double> targets() const {
        std::vector<double> t;
        for (const auto &c : constraints_) {
            t.push_back(c.target);
        }
        return t;
    }

    /// Rescales weights so their mean is 1 (sum equals the constraint count).
    ConstraintSet normalized() const {
        if (constraints_.empty()) {
            throw std::invalid_argument("ConstraintSet: cannot normalize an empty set");
        }
        double sum = 0;
        for (const auto &c : constraints_) {
            sum += c.weight;
        }
        if (!(sum > 0)) {
            throw std::invalid_argument("ConstraintSet: weights sum to zero");
        }
        double scale = static_cast<double>(constraints_.size()) / sum;
        ConstraintSet out = *this;
        for (auto &c : out.constraints_) {
            c.weight *= scale;
        }
        return out;
    }

    /// Weighted squared residual sum_i w_i (values_i - tau_i)^2.
    double cost(const std::vector<double> &values) const {
        check_size(values);
        double s = 0;
        for (size_t i = 0; i < constraints_.size(); i++) {
            double r = values[i] - constraints_[i].target;
            s += constraints_[i].weight * r * r;
        }
        return s;
    }

    /// Evaluates every constraint observable on `state`: N oracle calls.
    std::vector<double> expectations(const StateVector &state, OracleLedger &ledger, OracleLedger::Phase phase) const {
        std::vector<double> out(constraints_.size());
        for (size_t i = 0; i < constraints_.size(); i++) {
            out[i] = expectation(state, constraints_[i].observable, ledger, phase);
        }
        return out;
    }

    /// Evaluates every constraint observable without accounting.
    std::vector<double> expectations(const StateVector &state) const {
        std::vector<double> out(constraints_.size());
        for (size_t i = 0; i < constraints_.size(); i++) {
            out[i] = constraints_[i].observable.evaluate(state);
        }
        return out;
    }

   private:
    void check_size(const std::vector<double> &values) const {
        if (values.size() != constraints_.size()) {
            throw std::invalid_argument("ConstraintSet: value count does not match constraint count");
        }
    }

    size_t num_qubits_ = 0;
    std::vector<Constraint> constraints_;
};

struct NoisyTarget {
    double tau = 0;
    double sigma = 0;
    double weight = 0;
    uint64_t shots = 0;
};

/// Simulates finite-shot estimates of +/-1-valued observables.
///
/// Each target is 2k/M - 1 with k ~ Binomial(M, (1 + true)/2); sigma = sqrt((1 - tau^2)/M)
/// with sigma^2 floored at 1/(4M); weights 1/sigma^2 rescaled so they sum to N.
inline std::vector<NoisyTarget> make_noisy_targets(const std::vector<double> &true_values,
                                                   const std::vector<uint64_t> &shots, uint64_t seed) {
    if (true_values.size() != shots.size()) {
        throw std::invalid_argument("make_noisy_targets: value and shot counts differ");
    }
    std::mt19937_64 rng(seed);
    std::vector<NoisyTarget> out;
    double weight_sum = 0;
    for (size_t i = 0; i < true_values.size(); i++) {
        double v = true_values[i];
        uint64_t m = shots[i];
        if (!(v >= -1.0 && v <= 1.0)) {
            throw std::invalid_argument("make_noisy_targets: true value outside [-1, 1]");
        }
        if (m == 0) {
            throw std::invalid_argument("make_noisy_targets: shot count must be positive");
        }
        double p = std::clamp((1.0 + v) / 2.0, 0.0, 1.0);
        std::binomial_distribution<uint64_t> binom(m, p);
        uint64_t k = binom(rng);
        double mf = static_cast<double>(m);
        double tau = 2.0 * static_cast<double>(k) / mf - 1.0;
        double var = std::max((1.0 - tau * tau) / mf, 1.0 / (4.0 * mf));
        NoisyTarget t;
        t.tau = tau;
        t.sigma = std::sqrt(var);
        t.weight = 1.0 / var;
        t.shots = m;
        weight_sum += t.weight;
        out.push_back(t);
    }
    if (!out.empty()) {
        double scale = static_cast<double>(out.size()) / weight_sum;
        for (auto &t : out) {
            t.weight *= scale;
        }
    }
    return out;
}

}  // namespace quest
