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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "quest/engine.hpp"
#include "quest/linalg.hpp"
#include "quest/models.hpp"

namespace quest {

using json = nlohmann::json;

/// Malformed configuration or record document.
class SchemaError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// %.17g, so every double round-trips through text.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace detail {

inline void reject_unknown_keys(const json &j, const std::set<std::string> &allowed, const std::string &where) {
    if (!j.is_object()) {
        throw SchemaError(where + ": expected an object");
    }
    for (const auto &item : j.items()) {
        if (!allowed.count(item.key())) {
            throw SchemaError(where + ": unknown key '" + item.key() + "'");
        }
    }
}

template <typename T>
T get_as(const json &j, const std::string &key, const std::string &where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception &e) {
        throw SchemaError(where + "." + key + ": " + e.what());
    }
}

template <typename T>
T get_or(const json &j, const std::string &key, T fallback, const std::string &where) {
    if (!j.contains(key)) {
        return fallback;
    }
    return get_as<T>(j, key, where);
}

inline double get_number(const json &j, const std::string &key, const std::string &where) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw SchemaError(where + "." + key + ": expected a number");
    }
    return j.at(key).get<double>();
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// Observables, constraints, states, paths.

inline json to_json(const Observable &o) {
    json terms = json::array();
    for (const auto &t : o.terms()) {
        terms.push_back(json::array({t.coeff, t.pauli.label()}));
    }
    return terms;
}

inline Observable observable_from_json(const json &j, size_t n, const std::string &where) {
    if (!j.is_array()) {
        throw SchemaError(where + ": expected a list of [coefficient, label] pairs");
    }
    std::vector<PauliTerm> terms;
    for (const auto &e : j) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_string()) {
            throw SchemaError(where + ": each term must be [coefficient, label]");
        }
        auto label = e[1].get<std::string>();
        if (label.size() != n) {
            throw SchemaError(where + ": label '" + label + "' does not have " + std::to_string(n) + " qubits");
        }
        try {
            terms.push_back({e[0].get<double>(), PauliString::from_label(label)});
        } catch (const std::invalid_argument &ex) {
            throw SchemaError(where + ": " + ex.what());
        }
    }
    return Observable(n, std::move(terms));
}

inline json to_json(const ConstraintSet &set) {
    json out = json::array();
    for (const auto &c : set.constraints()) {
        json e{{"terms", to_json(c.observable)}, {"target", c.target}, {"weight", c.weight}};
        if (c.sigma) {
            e["sigma"] = *c.sigma;
        }
        if (c.shots) {
            e["shots"] = *c.shots;
        }
        out.push_back(std::move(e));
    }
    return out;
}

inline ConstraintSet constraints_from_json(const json &j, size_t n, const std::string &where) {
    if (!j.is_array() || j.empty()) {
        throw SchemaError(where + ": expected a non-empty list of constraints");
    }
    std::vector<Constraint> cs;
    for (size_t i = 0; i < j.size(); i++) {
        std::string w = where + "[" + std::to_string(i) + "]";
        detail::reject_unknown_keys(j[i], {"terms", "target", "weight", "sigma", "shots"}, w);
        Constraint c{observable_from_json(j[i].value("terms", json()), n, w + ".terms"),
                     detail::get_number(j[i], "target", w), 1.0, std::nullopt, std::nullopt};
        if (j[i].contains("weight")) {
            c.weight = detail::get_number(j[i], "weight", w);
        }
        if (j[i].contains("sigma")) {
            c.sigma = detail::get_number(j[i], "sigma", w);
        }
        if (j[i].contains("shots")) {
            c.shots = detail::get_as<uint64_t>(j[i], "shots", w);
        }
        cs.push_back(std::move(c));
    }
    try {
        return ConstraintSet(n, std::move(cs));
    } catch (const std::invalid_argument &e) {
        throw SchemaError(where + ": " + e.what());
    }
}

inline json to_json(const StateVector &s) {
    json amps = json::array();
    for (const auto &a : s.amplitudes()) {
        amps.push_back(json::array({a.real(), a.imag()}));
    }
    return json{{"amplitudes", std::move(amps)}};
}

/// {"basis": k} | {"plus": true} | {"haar_seed": s} | {"amplitudes": [[re, im], ...]}.
inline StateVector state_from_json(const json &j, size_t n, const std::string &where) {
    detail::reject_unknown_keys(j, {"basis", "plus", "haar_seed", "amplitudes"}, where);
    if (j.size() != 1) {
        throw SchemaError(where + ": give exactly one of basis, plus, haar_seed, amplitudes");
    }
    try {
        if (j.contains("basis")) {
            return basis_state(n, detail::get_as<uint64_t>(j, "basis", where));
        }
        if (j.contains("plus")) {
            if (!detail::get_as<bool>(j, "plus", where)) {
                throw SchemaError(where + ".plus: must be true");
            }
            return plus_state(n);
        }
        if (j.contains("haar_seed")) {
            return haar_random_state(n, detail::get_as<uint64_t>(j, "haar_seed", where));
        }
        const json &a = j.at("amplitudes");
        if (!a.is_array() || a.size() != (size_t{1} << n)) {
            throw SchemaError(where + ".amplitudes: expected 2^n entries");
        }
        std::vector<complex_t> amps;
        for (const auto &e : a) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
                throw SchemaError(where + ".amplitudes: each entry must be [re, im]");
            }
            amps.emplace_back(e[0].get<double>(), e[1].get<double>());
        }
        return StateVector::from_amplitudes(std::move(amps));
    } catch (const std::out_of_range &e) {
        throw SchemaError(where + ": " + e.what());
    } catch (const std::invalid_argument &e) {
        throw SchemaError(where + ": " + e.what());
    }
}

inline json to_json(const PauliPath &path) {
    json out = json::array();
    for (const auto &r : path.rotations()) {
        out.push_back(json{{"theta", r.theta}, {"pauli", r.pauli.label()}});
    }
    return out;
}

inline PauliPath path_from_json(const json &j, size_t n, const std::string &where) {
    if (!j.is_array()) {
        throw SchemaError(where + ": expected a list of rotations");
    }
    std::vector<Rotation> rs;
    for (const auto &e : j) {
        detail::reject_unknown_keys(e, {"theta", "pauli"}, where);
        auto label = detail::get_as<std::string>(e, "pauli", where);
        if (label.size() != n) {
            throw SchemaError(where + ": rotation label has the wrong qubit count");
        }
        try {
            rs.push_back({detail::get_number(e, "theta", where), PauliString::from_label(label)});
        } catch (const std::invalid_argument &ex) {
            throw SchemaError(where + ": " + ex.what());
        }
    }
    return PauliPath(n, std::move(rs));
}

inline json to_json(const ProblemInstance &p) {
    json j{{"num_qubits", p.num_qubits},
           {"description", p.description},
           {"initial_state", to_json(p.initial_state)},
           {"constraints", to_json(p.constraints)}};
    if (p.correlation_qubits) {
        j["correlation_qubits"] = *p.correlation_qubits;
    }
    return j;
}

/// Inline problem: {"num_qubits", "initial_state", "constraints", optional "description",
/// "weights": "given" | "spectral" | "normalized", "correlation_qubits"}.
inline ProblemInstance problem_from_json(const json &j, const std::string &where) {
    detail::reject_unknown_keys(
        j, {"num_qubits", "description", "initial_state", "constraints", "weights", "correlation_qubits"}, where);
    ProblemInstance p;
    p.num_qubits = detail::get_as<size_t>(j, "num_qubits", where);
    if (p.num_qubits == 0 || p.num_qubits > StateVector::kMaxQubits) {
        throw SchemaError(where + ".num_qubits: out of range");
    }
    p.description = detail::get_or<std::string>(j, "description", "inline problem", where);
    p.initial_state = j.contains("initial_state") ? state_from_json(j.at("initial_state"), p.num_qubits,
                                                                    where + ".initial_state")
                                                  : StateVector(p.num_qubits);
    if (!j.contains("constraints")) {
        throw SchemaError(where + ": missing constraints");
    }
    p.constraints = constraints_from_json(j.at("constraints"), p.num_qubits, where + ".constraints");
    auto weights = detail::get_or<std::string>(j, "weights", "given", where);
    if (weights == "spectral") {
        p.constraints = assign_spectral_weights(p.constraints);
    } else if (weights == "normalized") {
        p.constraints = p.constraints.normalized();
    } else if (weights != "given") {
        throw SchemaError(where + ".weights: expected given, spectral or normalized");
    }
    if (j.contains("correlation_qubits")) {
        size_t c = detail::get_as<size_t>(j, "correlation_qubits", where);
        if (c != p.num_qubits || p.constraints.size() != c * (c + 1) / 2) {
            throw SchemaError(where + ".correlation_qubits: constraint layout does not match");
        }
        p.correlation_qubits = c;
    }
    return p;
}

// ---------------------------------------------------------------------------------------------
// Engine configuration.

inline json to_json(const QuestConfig &c) {
    return json{{"variant", variant_name(c.variant)},
                {"pool_weight", c.pool_weight},
                {"epsilon", c.epsilon},
                {"max_iterations", c.max_iterations},
                {"grid_points", c.grid_points},
                {"prune_threshold", c.prune_threshold},
                {"cost_mode", cost_mode_name(c.cost_mode)},
                {"seed", c.seed},
                {"augment_pool", c.augment_pool},
                {"workers", c.workers},
                {"optimizer",
                 {{"memory", c.optimizer.memory},
                  {"max_iterations", c.optimizer.max_iterations},
                  {"gradient_tolerance", c.optimizer.gradient_tolerance},
                  {"c1", c.optimizer.c1},
                  {"c2", c.optimizer.c2},
                  {"max_line_search_steps", c.optimizer.max_line_search_steps}}}};
}

/// Missing keys keep the defaults in `base`.
inline QuestConfig quest_config_from_json(const json &j, QuestConfig base = {}, const std::string &where = "quest") {
    detail::reject_unknown_keys(j,
                                {"variant", "pool_weight", "epsilon", "max_iterations", "grid_points",
                                 "prune_threshold", "cost_mode", "seed", "augment_pool", "workers", "optimizer"},
                                where);
    QuestConfig c = base;
    try {
        if (j.contains("variant")) {
            c.variant = parse_variant(detail::get_as<std::string>(j, "variant", where));
        }
        if (j.contains("cost_mode")) {
            c.cost_mode = parse_cost_mode(detail::get_as<std::string>(j, "cost_mode", where));
        }
    } catch (const std::invalid_argument &e) {
        throw SchemaError(where + ": " + e.what());
    }
    c.pool_weight = detail::get_or<size_t>(j, "pool_weight", c.pool_weight, where);
    if (j.contains("epsilon")) {
        c.epsilon = detail::get_number(j, "epsilon", where);
    }
    c.max_iterations = detail::get_or<size_t>(j, "max_iterations", c.max_iterations, where);
    c.grid_points = detail::get_or<size_t>(j, "grid_points", c.grid_points, where);
    if (j.contains("prune_threshold")) {
        c.prune_threshold = detail::get_number(j, "prune_threshold", where);
    }
    c.seed = detail::get_or<uint64_t>(j, "seed", c.seed, where);
    c.augment_pool = detail::get_or<bool>(j, "augment_pool", c.augment_pool, where);
    c.workers = detail::get_or<size_t>(j, "workers", c.workers, where);
    if (j.contains("optimizer")) {
        const json &o = j.at("optimizer");
        std::string w = where + ".optimizer";
        detail::reject_unknown_keys(
            o, {"memory", "max_iterations", "gradient_tolerance", "c1", "c2", "max_line_search_steps"}, w);
        c.optimizer.memory = detail::get_or<size_t>(o, "memory", c.optimizer.memory, w);
        c.optimizer.max_iterations = detail::get_or<size_t>(o, "max_iterations", c.optimizer.max_iterations, w);
        c.optimizer.max_line_search_steps =
            detail::get_or<size_t>(o, "max_line_search_steps", c.optimizer.max_line_search_steps, w);
        if (o.contains("gradient_tolerance")) {
            c.optimizer.gradient_tolerance = detail::get_number(o, "gradient_tolerance", w);
        }
        if (o.contains("c1")) {
            c.optimizer.c1 = detail::get_number(o, "c1", w);
        }
        if (o.contains("c2")) {
            c.optimizer.c2 = detail::get_number(o, "c2", w);
        }
    }
    try {
        c.validate();
    } catch (const std::invalid_argument &e) {
        throw SchemaError(where + ": " + e.what());
    }
    return c;
}

// ---------------------------------------------------------------------------------------------
// Run records.

inline json to_json(const IterationRecord &it) {
    json j{{"iteration", it.iteration},
           {"location", it.location},
           {"theta", it.theta},
           {"selection_score", it.selection_score},
           {"slots", it.slots},
           {"pool_size", it.pool_size},
           {"cost_before", it.cost_before},
           {"cost_after_insertion", it.cost_after_insertion},
           {"cost_after_optimization", it.cost_after_optimization},
           {"rms", it.rms},
           {"expectations", it.expectations},
           {"oracle_calls",
            {{"insertion", it.calls_insertion},
             {"optimization", it.calls_optimization},
             {"evaluation", it.calls_evaluation}}},
           {"path_length", it.path_length},
           {"optimizer_iterations", it.optimizer_iterations},
           {"line_search_failed", it.line_search_failed}};
    j["pauli"] = it.pauli ? json(it.pauli->label()) : json(nullptr);
    return j;
}

inline json to_json(const RunRecord &r, const ProblemInstance &problem) {
    json its = json::array();
    for (const auto &it : r.iterations) {
        its.push_back(to_json(it));
    }
    return json{{"format", "quest-run-record"},
                {"version", 1},
                {"description", r.description},
                {"config", to_json(r.config)},
                {"problem", to_json(problem)},
                {"termination", termination_name(r.termination)},
                {"final",
                 {{"cost", r.final_cost},
                  {"rms", r.final_rms},
                  {"expectations", r.final_expectations},
                  {"path", to_json(r.final_path)}}},
                {"oracle_calls",
                 {{"insertion", r.oracle_calls.insertion},
                  {"optimization", r.oracle_calls.optimization},
                  {"evaluation", r.oracle_calls.evaluation},
                  {"total", r.oracle_calls.total()}}},
                {"iterations", std::move(its)}};
}

inline json read_json_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw SchemaError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

inline void write_text_file(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

// ---------------------------------------------------------------------------------------------
// CSV output.

/// iteration, variant, cost, rms, path_length, oracle_calls_insertion, oracle_calls_optimization,
/// then one expectation column per constraint.
inline std::string iterations_csv(const RunRecord &r) {
    std::ostringstream out;
    out << "iteration,variant,cost,rms,path_length,oracle_calls_insertion,oracle_calls_optimization";
    size_t n_constraints = r.iterations.empty() ? 0 : r.iterations.front().expectations.size();
    for (size_t i = 0; i < n_constraints; i++) {
        out << ",expectation_" << i;
    }
    out << "\r\n";
    for (const auto &it : r.iterations) {
        out << it.iteration << ',' << variant_name(r.config.variant) << ',' << format_double(it.cost_after_optimization)
            << ',' << format_double(it.rms) << ',' << it.path_length << ',' << it.calls_insertion << ','
            << it.calls_optimization;
        for (double v : it.expectations) {
            out << ',' << format_double(v);
        }
        out << "\r\n";
    }
    return out.str();
}

/// Index into r.iterations of the snapshot row: the last row with iteration <= snapshot,
/// or the final row when no snapshot is given.
inline size_t snapshot_row(const RunRecord &r, std::optional<size_t> snapshot) {
    if (r.iterations.empty()) {
        throw std::invalid_argument("snapshot_row: record has no iterations");
    }
    if (!snapshot) {
        return r.iterations.size() - 1;
    }
    size_t row = 0;
    for (size_t k = 0; k < r.iterations.size(); k++) {
        if (r.iterations[k].iteration <= *snapshot) {
            row = k;
        }
    }
    return row;
}

/// constraint, target, achieved, sigma (empty when absent), weight at the snapshot row.
inline std::string scatter_csv(const RunRecord &r, const ConstraintSet &cs, std::optional<size_t> snapshot) {
    const auto &it = r.iterations[snapshot_row(r, snapshot)];
    std::ostringstream out;
    out << "constraint,iteration,target,achieved,sigma,weight\r\n";
    for (size_t i = 0; i < cs.size(); i++) {
        out << i << ',' << it.iteration << ',' << format_double(cs[i].target) << ','
            << format_double(it.expectations[i]) << ',';
        if (cs[i].sigma) {
            out << format_double(*cs[i].sigma);
        }
        out << ',' << format_double(cs[i].weight) << "\r\n";
    }
    return out.str();
}

/// i, j, c_target, c_achieved over the full n x n grid at the snapshot row.
inline std::string correlations_csv(const RunRecord &r, const ProblemInstance &p, std::optional<size_t> snapshot) {
    if (!p.correlation_qubits) {
        throw std::invalid_argument("correlations_csv: problem has no correlation layout");
    }
    size_t n = *p.correlation_qubits;
    const auto &it = r.iterations[snapshot_row(r, snapshot)];
    auto target = correlation_matrix(n, p.constraints.targets());
    auto achieved = correlation_matrix(n, it.expectations);
    std::ostringstream out;
    out << "i,j,c_target,c_achieved\r\n";
    for (size_t i = 0; i < n; i++) {
        for (size_t j = 0; j < n; j++) {
            out << i << ',' << j << ',' << format_double(target[i * n + j]) << ','
                << format_double(achieved[i * n + j]) << "\r\n";
        }
    }
    return out.str();
}

/// Writes record.json, iterations.csv, scatter.csv and (when applicable) correlations.csv.
inline void write_run_outputs(const std::filesystem::path &dir, const RunRecord &r, const ProblemInstance &p,
                              std::optional<size_t> snapshot) {
    std::filesystem::create_directories(dir);
    write_text_file(dir / "record.json", to_json(r, p).dump(1) + "\n");
    write_text_file(dir / "iterations.csv", iterations_csv(r));
    write_text_file(dir / "scatter.csv", scatter_csv(r, p.constraints, snapshot));
    if (p.correlation_qubits) {
        write_text_file(dir / "correlations.csv", correlations_csv(r, p, snapshot));
    }
}

// ---------------------------------------------------------------------------------------------
// Verification.

struct VerifyResult {
    double recorded = 0;
    double recomputed = 0;
    bool matches = false;
};

/// Re-prepares the final path, re-evaluates every constraint and compares the progress metric.
inline VerifyResult verify_record(const json &rec, double tolerance = 1e-9) {
    try {
        detail::reject_unknown_keys(rec,
                                    {"format", "version", "description", "config", "problem", "termination",
                                     "final", "oracle_calls", "iterations"},
                                    "record");
        if (rec.value("format", "") != "quest-run-record") {
            throw SchemaError("record: not a run record");
        }
        QuestConfig cfg = quest_config_from_json(rec.at("config"), {}, "record.config");
        const json &pj = rec.at("problem");
        json inline_problem{{"num_qubits", pj.at("num_qubits")},
                            {"description", pj.value("description", "")},
                            {"initial_state", pj.at("initial_state")},
                            {"constraints", pj.at("constraints")}};
        ProblemInstance p = problem_from_json(inline_problem, "record.problem");
        PauliPath path = path_from_json(rec.at("final").at("path"), p.num_qubits, "record.final.path");
        auto values = p.constraints.expectations(prepare(path, p.initial_state));
        VerifyResult v;
        v.recorded = detail::get_number(rec.at("final"), "rms", "record.final");
        v.recomputed = progress_metric(p.constraints, values, cfg.cost_mode);
        v.matches = std::abs(v.recorded - v.recomputed) <= tolerance;
        return v;
    } catch (const json::exception &e) {
        throw SchemaError(std::string("record: ") + e.what());
    }
}

}  // namespace quest
