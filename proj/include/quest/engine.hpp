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
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "quest/lbfgs.hpp"
#include "quest/models.hpp"
#include "quest/observable.hpp"
#include "quest/pauli.hpp"
#include "quest/pauli_path.hpp"
#include "quest/statevector.hpp"
#include "quest/trig_landscape.hpp"

namespace quest {

/// Terminal or full-path insertion, selected by gradient or by exact landscape minimum.
enum class Variant { tG, tE, bG, bE };

inline std::string_view variant_name(Variant v) {
    switch (v) {
        case Variant::tG:
            return "tG";
        case Variant::tE:
            return "tE";
        case Variant::bG:
            return "bG";
        case Variant::bE:
            return "bE";
    }
    return "?";
}

inline Variant parse_variant(std::string_view s) {
    for (Variant v : {Variant::tG, Variant::tE, Variant::bG, Variant::bE}) {
        if (s == variant_name(v)) {
            return v;
        }
    }
    throw std::invalid_argument("unknown variant '" + std::string(s) + "' (expected tG, tE, bG or bE)");
}

inline bool is_exact(Variant v) {
    return v == Variant::tE || v == Variant::bE;
}

inline bool is_terminal_only(Variant v) {
    return v == Variant::tG || v == Variant::tE;
}

inline std::string_view cost_mode_name(CostMode m) {
    return m == CostMode::squared_residuals ? "squared-residuals" : "raw-expectation";
}

inline CostMode parse_cost_mode(std::string_view s) {
    if (s == "squared-residuals") {
        return CostMode::squared_residuals;
    }
    if (s == "raw-expectation") {
        return CostMode::raw_expectation;
    }
    throw std::invalid_argument("unknown cost mode '" + std::string(s) + "'");
}

struct QuestConfig {
    Variant variant = Variant::bE;
    size_t pool_weight = 2;
    double epsilon = 1e-3;
    size_t max_iterations = 200;
    size_t grid_points = kDefaultGridPoints;
    double prune_threshold = 1e-8;
    OptimizerSettings optimizer;
    CostMode cost_mode = CostMode::squared_residuals;
    uint64_t seed = 0;
    /// Raise the pool weight by one, once, when the pool saturates.
    bool augment_pool = false;
    size_t workers = 1;

    void validate() const {
        if (!(epsilon > 0)) {
            throw std::invalid_argument("QuestConfig: epsilon must be positive");
        }
        if (max_iterations == 0) {
            throw std::invalid_argument("QuestConfig: max_iterations must be at least 1");
        }
        if (pool_weight == 0) {
            throw std::invalid_argument("QuestConfig: pool_weight must be at least 1");
        }
        if (grid_points < 64) {
            throw std::invalid_argument("QuestConfig: grid_points must be at least 64");
        }
        if (!(prune_threshold >= 0)) {
            throw std::invalid_argument("QuestConfig: prune_threshold must be non-negative");
        }
        if (workers == 0) {
            throw std::invalid_argument("QuestConfig: workers must be at least 1");
        }
        optimizer.validate();
    }
};

inline constexpr double kSaturationCostGain = 1e-12;
inline constexpr double kSaturationGradient = 1e-10;

enum class Termination { converged, max_iterations, saturated, stalled };

inline std::string_view termination_name(Termination t) {
    switch (t) {
        case Termination::converged:
            return "converged";
        case Termination::max_iterations:
            return "max_iterations";
        case Termination::saturated:
            return "saturated";
        case Termination::stalled:
            return "stalled";
    }
    return "?";
}

inline Termination parse_termination(std::string_view s) {
    for (auto t : {Termination::converged, Termination::max_iterations, Termination::saturated, Termination::stalled}) {
        if (s == termination_name(t)) {
            return t;
        }
    }
    throw std::invalid_argument("unknown termination '" + std::string(s) + "'");
}

struct IterationRecord {
    size_t iteration = 0;
    /// Absent for the iteration-0 row.
    std::optional<PauliString> pauli;
    size_t location = 0;
    double theta = 0;
    /// max |g| for gradient variants, landscape minimum for exact variants.
    double selection_score = 0;
    size_t slots = 0;
    size_t pool_size = 0;
    double cost_before = 0;
    double cost_after_insertion = 0;
    double cost_after_optimization = 0;
    double rms = 0;
    std::vector<double> expectations;
    uint64_t calls_insertion = 0;
    uint64_t calls_optimization = 0;
    uint64_t calls_evaluation = 0;
    size_t path_length = 0;
    size_t optimizer_iterations = 0;
    bool line_search_failed = false;
};

struct RunRecord {
    QuestConfig config;
    std::string description;
    /// Iteration 0 holds the initial state's values; later rows one per insertion.
    std::vector<IterationRecord> iterations;
    Termination termination = Termination::max_iterations;
    PauliPath final_path{1};
    double final_cost = 0;
    double final_rms = 0;
    std::vector<double> final_expectations;
    OracleLedger::Counts oracle_calls;
};

/// sqrt((1/N) sum_i w_i (v_i - tau_i)^2).
inline double rms_cost(const ConstraintSet &set, const std::vector<double> &values) {
    if (set.empty()) {
        throw std::invalid_argument("rms_cost: empty constraint set");
    }
    return std::sqrt(set.cost(values) / static_cast<double>(set.size()));
}

/// Progress metric: C_RMS for squared residuals, the raw cost otherwise.
inline double progress_metric(const ConstraintSet &set, const std::vector<double> &values, CostMode mode) {
    return mode == CostMode::squared_residuals ? rms_cost(set, values) : cost_of(set, values, mode);
}

/// Closed-form insertion-phase oracle calls at iteration t.
inline uint64_t oracle_budget(Variant variant, uint64_t N, uint64_t t, uint64_t pool_size) {
    if (t == 0) {
        throw std::invalid_argument("oracle_budget: t must be at least 1");
    }
    uint64_t per = is_exact(variant) ? 4 : 2;
    uint64_t slots = is_terminal_only(variant) ? 1 : t;
    return per * N * slots * pool_size;
}

struct Selection {
    bool saturated = false;
    PauliString pauli;
    size_t location = 0;
    double theta = 0;
    double score = 0;
};

namespace detail {

template <typename Fn>
void parallel_for(size_t count, size_t workers, Fn &&fn) {
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (size_t k = 0; k < count; k++) {
            fn(k);
        }
        return;
    }
    std::vector<std::thread> threads;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (size_t w = 0; w < workers; w++) {
        threads.emplace_back([&, w] {
            try {
                for (size_t k = w; k < count; k += workers) {
                    fn(k);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        });
    }
    for (auto &t : threads) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace detail

/// Scans (slot, pool member) candidates and picks the next rotation. Candidates are ordered
/// by slot ascending, then pool order; ties go to the first.
inline Selection insertion_phase(const InsertionContext &ctx, const PauliPool &pool, const QuestConfig &config,
                                 OracleLedger &ledger) {
    const bool exact = is_exact(config.variant);
    const size_t first_slot = is_terminal_only(config.variant) ? ctx.num_slots() - 1 : 0;
    const size_t slots = ctx.num_slots() - first_slot;
    const size_t count = slots * pool.size();

    std::vector<double> scores(count);
    std::vector<double> thetas(count, 0.0);
    detail::parallel_for(count, config.workers, [&](size_t k) {
        size_t l = first_slot + k / pool.size();
        const PauliString &p = pool[k % pool.size()];
        if (exact) {
            auto m = minimize_trig(ctx.landscape(l, p, ledger), config.grid_points);
            scores[k] = m.cost;
            thetas[k] = m.theta;
        } else {
            scores[k] = std::abs(ctx.insertion_gradient(l, p, ledger));
        }
    });

    Selection sel;
    size_t best = 0;
    for (size_t k = 1; k < count; k++) {
        if (exact ? scores[k] < scores[best] : scores[k] > scores[best]) {
            best = k;
        }
    }
    sel.location = first_slot + best / pool.size();
    sel.pauli = pool[best % pool.size()];
    sel.theta = thetas[best];
    sel.score = count > 0 ? scores[best] : 0.0;
    if (count == 0) {
        sel.saturated = true;
    } else if (exact) {
        sel.saturated = !(sel.score < ctx.current_cost() - kSaturationCostGain);
    } else {
        sel.saturated = !(sel.score >= kSaturationGradient);
    }
    return sel;
}

struct OptimizationOutcome {
    PauliPath path{1};
    double initial_cost = 0;
    size_t iterations = 0;
    bool line_search_failed = false;
};

/// Jointly refines every angle of `path` with L-BFGS on parameter-shift gradients.
inline OptimizationOutcome optimize_angles(const PauliPath &path, const StateVector &initial,
                                           const ConstraintSet &constraints, const QuestConfig &config,
                                           OracleLedger &ledger) {
    OptimizationOutcome out;
    auto fg = [&](const std::vector<double> &x, std::vector<double> &g) {
        auto r = parameter_shift_grad(path.with_angles(x), initial, constraints, config.cost_mode, ledger,
                                      OracleLedger::Phase::optimization);
        g = std::move(r.gradient);
        return r.cost;
    };
    auto res = minimize(CostGradFn(fg), path.angles(), config.optimizer);
    out.path = path.with_angles(res.x);
    out.iterations = res.iterations;
    out.line_search_failed = res.line_search_failed;
    return out;
}

/// Adaptive rotation-path synthesis: insertion phase, joint angle optimization and pruning
/// per iteration, until converged, saturated, stalled or out of iterations.
inline RunRecord run(const ProblemInstance &problem, const QuestConfig &config) {
    config.validate();
    problem.validate();
    const ConstraintSet &cs = problem.constraints;
    if (cs.empty()) {
        throw std::invalid_argument("run: empty constraint set");
    }
    const size_t n = problem.num_qubits;
    const bool squared = config.cost_mode == CostMode::squared_residuals;

    RunRecord rec;
    rec.config = config;
    rec.description = problem.description;

    OracleLedger ledger;
    size_t pool_weight = std::min(config.pool_weight, n);
    PauliPool pool = generate_pool(n, pool_weight);
    bool augmented = false;

    PauliPath path(n);
    std::vector<double> values = cs.expectations(problem.initial_state, ledger, OracleLedger::Phase::evaluation);
    double cost = cost_of(cs, values, config.cost_mode);

    IterationRecord row0;
    row0.cost_before = row0.cost_after_insertion = row0.cost_after_optimization = cost;
    row0.rms = progress_metric(cs, values, config.cost_mode);
    row0.expectations = values;
    row0.pool_size = pool.size();
    row0.calls_evaluation = ledger.calls(OracleLedger::Phase::evaluation);
    rec.iterations.push_back(row0);

    auto finish = [&](Termination t) {
        rec.termination = t;
        rec.final_path = path;
        rec.final_cost = cost;
        rec.final_rms = progress_metric(cs, values, config.cost_mode);
        rec.final_expectations = values;
        rec.oracle_calls = ledger.snapshot();
        return rec;
    };

    if (squared && row0.rms <= config.epsilon) {
        return finish(Termination::converged);
    }

    for (size_t t = 1; t <= config.max_iterations; t++) {
        auto before = ledger.snapshot();
        IterationRecord it;
        it.iteration = t;
        it.cost_before = cost;

        InsertionContext ctx(cs, problem.initial_state, path, values, config.cost_mode);
        Selection sel = insertion_phase(ctx, pool, config, ledger);
        if (sel.saturated && config.augment_pool && !augmented && pool_weight < n) {
            augmented = true;
            pool_weight++;
            pool = generate_pool(n, pool_weight);
            sel = insertion_phase(ctx, pool, config, ledger);
        }
        if (sel.saturated) {
            return finish(Termination::saturated);
        }
        it.pauli = sel.pauli;
        it.location = sel.location;
        it.theta = sel.theta;
        it.selection_score = sel.score;
        it.slots = ctx.num_slots();
        it.pool_size = pool.size();

        PauliPath inserted = insert(path, sel.location, sel.theta, sel.pauli);
        auto opt = optimize_angles(inserted, problem.initial_state, cs, config, ledger);
        auto after_opt = ledger.snapshot();
        it.cost_after_insertion = is_exact(config.variant) ? sel.score : cost;
        it.optimizer_iterations = opt.iterations;
        it.line_search_failed = opt.line_search_failed;

        PauliPath candidate = prune(opt.path, config.prune_threshold);
        std::vector<double> new_values =
            cs.expectations(prepare(candidate, problem.initial_state), ledger, OracleLedger::Phase::evaluation);
        double new_cost = cost_of(cs, new_values, config.cost_mode);

        if (!(new_cost < cost - kSaturationCostGain)) {
            // Keep the last state whose cost actually improved.
            it.cost_after_optimization = new_cost;
            return finish(Termination::stalled);
        }
        path = std::move(candidate);
        values = std::move(new_values);
        cost = new_cost;

        auto after = ledger.snapshot();
        it.cost_after_optimization = cost;
        it.rms = progress_metric(cs, values, config.cost_mode);
        it.expectations = values;
        it.calls_insertion = after.insertion - before.insertion;
        it.calls_optimization = after_opt.optimization - before.optimization;
        it.calls_evaluation = after.evaluation - before.evaluation;
        it.path_length = path.size();
        rec.iterations.push_back(std::move(it));

        if (squared && rec.iterations.back().rms <= config.epsilon) {
            return finish(Termination::converged);
        }
    }
    return finish(Termination::max_iterations);
}

/// Minimizes <H> directly: the same loop on the raw-expectation cost.
inline RunRecord run_energy_minimization(const Observable &h, const StateVector &initial, QuestConfig config) {
    config.cost_mode = CostMode::raw_expectation;
    ProblemInstance p;
    p.num_qubits = h.num_qubits();
    p.constraints = ConstraintSet(h.num_qubits(), {Constraint{h, 0.0, 1.0, std::nullopt, std::nullopt}});
    p.initial_state = initial;
    p.description = "energy minimization";
    return run(p, config);
}

}  // namespace quest
