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

#include <atomic>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "quest/engine.hpp"
#include "quest/linalg.hpp"
#include "quest/models.hpp"
#include "quest/record_io.hpp"

namespace quest::cli {

enum ExitCode : int {
    kOk = 0,
    kRuntimeFailure = 1,
    kSchemaError = 2,
    kStrictNotConverged = 3,
    kVerifyMismatch = 4,
};

/// Command-line overrides shared by `run` and `preset`.
struct Options {
    std::optional<uint64_t> seed;
    bool strict = false;
    std::optional<std::string> out;
    std::optional<std::string> variant;
    std::optional<double> epsilon;
    std::optional<size_t> max_iters;
    std::optional<size_t> pool_weight;
    std::optional<size_t> snapshot_iter;
    bool augment_pool = false;
    size_t workers = 1;
    std::optional<size_t> n;
    std::optional<size_t> constraints;
    std::optional<double> delta;
    std::optional<double> beta;
    std::optional<double> J;
    std::optional<double> h;
};

/// One problem/variant combination and the sub-directory its outputs go to.
struct Job {
    std::string name;
    ProblemInstance problem;
    QuestConfig config;
};

inline QuestConfig apply_overrides(QuestConfig c, const Options &o) {
    if (o.variant) {
        c.variant = parse_variant(*o.variant);
    }
    if (o.epsilon) {
        c.epsilon = *o.epsilon;
    }
    if (o.max_iters) {
        c.max_iterations = *o.max_iters;
    }
    if (o.pool_weight) {
        c.pool_weight = *o.pool_weight;
    }
    if (o.seed) {
        c.seed = *o.seed;
    }
    if (o.augment_pool) {
        c.augment_pool = true;
    }
    c.workers = o.workers;
    c.validate();
    return c;
}

inline std::vector<Variant> selected_variants(const Options &o, std::vector<Variant> fallback) {
    if (o.variant) {
        return {parse_variant(*o.variant)};
    }
    return fallback;
}

inline const std::vector<Variant> &all_variants() {
    static const std::vector<Variant> v{Variant::tG, Variant::tE, Variant::bG, Variant::bE};
    return v;
}

/// Runs jobs over `workers` threads (each run single-threaded when several run at once),
/// writes outputs and a summary.csv, and returns the records in job order.
inline std::vector<RunRecord> execute_jobs(const std::vector<Job> &jobs, const std::filesystem::path &out_dir,
                                           std::optional<size_t> snapshot, size_t workers, std::ostream &log) {
    std::vector<RunRecord> records(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<size_t> next{0};
    std::mutex log_mutex;
    const size_t threads = std::max<size_t>(1, std::min(workers, jobs.size()));
    auto worker = [&] {
        for (size_t k = next++; k < jobs.size(); k = next++) {
            try {
                QuestConfig cfg = jobs[k].config;
                if (threads > 1) {
                    cfg.workers = 1;
                }
                records[k] = run(jobs[k].problem, cfg);
                write_run_outputs(out_dir / jobs[k].name, records[k], jobs[k].problem, snapshot);
                std::lock_guard<std::mutex> lock(log_mutex);
                log << jobs[k].name << ": " << termination_name(records[k].termination)
                    << " after " << records[k].iterations.size() - 1 << " iterations, rms "
                    << format_double(records[k].final_rms) << "\n";
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (size_t t = 0; t < threads; t++) {
            pool.emplace_back(worker);
        }
        for (auto &t : pool) {
            t.join();
        }
    }
    for (auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    std::ostringstream summary;
    summary << "run,variant,termination,iterations,final_cost,final_rms,path_length,oracle_calls_total\r\n";
    for (size_t k = 0; k < jobs.size(); k++) {
        const auto &r = records[k];
        summary << jobs[k].name << ',' << variant_name(r.config.variant) << ',' << termination_name(r.termination)
                << ',' << r.iterations.size() - 1 << ',' << format_double(r.final_cost) << ','
                << format_double(r.final_rms) << ',' << r.final_path.size() << ',' << r.oracle_calls.total() << "\r\n";
    }
    std::filesystem::create_directories(out_dir);
    write_text_file(out_dir / "summary.csv", summary.str());
    return records;
}

inline int strict_status(const std::vector<RunRecord> &records, const Options &o) {
    if (!o.strict) {
        return kOk;
    }
    for (const auto &r : records) {
        if (r.config.cost_mode == CostMode::squared_residuals && r.termination != Termination::converged) {
            return kStrictNotConverged;
        }
    }
    return kOk;
}

// ---------------------------------------------------------------------------------------------
// Problems named in config files.

/// {"preset": name, ...parameters}. Returns the problem and, for energy problems, forces the
/// raw-expectation cost mode on `config`.
inline ProblemInstance problem_from_preset_json(const json &j, QuestConfig &config) {
    std::string name = detail::get_as<std::string>(j, "preset", "problem");
    auto num = [&](const char *key, double fallback) {
        return j.contains(key) ? detail::get_number(j, key, "problem") : fallback;
    };
    auto count = [&](const char *key, size_t fallback) {
        return detail::get_or<size_t>(j, key, fallback, "problem");
    };
    try {
        if (name == "random-pauli") {
            detail::reject_unknown_keys(j, {"preset", "n", "constraints", "seed", "noisy", "shots_min", "shots_max"},
                                        "problem");
            return build_random_pauli_problem(
                count("n", 6), count("constraints", 30), detail::get_or<uint64_t>(j, "seed", 0, "problem"),
                detail::get_or<bool>(j, "noisy", false, "problem"),
                {detail::get_or<uint64_t>(j, "shots_min", 1000, "problem"),
                 detail::get_or<uint64_t>(j, "shots_max", 5000, "problem")});
        }
        if (name == "hubbard") {
            detail::reject_unknown_keys(j, {"preset", "target_set", "initial"}, "problem");
            return build_hubbard_problem(detail::get_or<int>(j, "target_set", 1, "problem"),
                                         detail::get_or<std::string>(j, "initial", "neel", "problem"));
        }
        if (name == "stalling") {
            detail::reject_unknown_keys(j, {"preset", "n", "J", "h", "delta"}, "problem");
            return build_stalling_problem(count("n", 6), num("J", -1), num("h", 1), num("delta", 0.5));
        }
        if (name == "pseudo-thermal") {
            detail::reject_unknown_keys(j, {"preset", "n", "J", "h", "beta"}, "problem");
            return build_pseudo_thermal_problem(count("n", 10), num("J", -1), num("h", 1), num("beta", 1));
        }
        if (name == "projector") {
            detail::reject_unknown_keys(j, {"preset", "n", "target_seed"}, "problem");
            return build_projector_problem(
                haar_random_state(count("n", 3), detail::get_or<uint64_t>(j, "target_seed", 0, "problem")));
        }
        if (name == "tfim-energy") {
            detail::reject_unknown_keys(j, {"preset", "n", "J", "h", "periodic"}, "problem");
            size_t n = count("n", 4);
            Observable h = build_tfim(n, num("J", 1), num("h", 1), detail::get_or<bool>(j, "periodic", true, "problem"));
            config.cost_mode = CostMode::raw_expectation;
            ProblemInstance p;
            p.num_qubits = n;
            p.constraints = ConstraintSet(n, {Constraint{h, 0.0, 1.0, std::nullopt, std::nullopt}});
            p.initial_state = StateVector(n);
            p.description = "tfim energy minimization n=" + std::to_string(n);
            return p;
        }
    } catch (const std::invalid_argument &e) {
        throw SchemaError(std::string("problem: ") + e.what());
    }
    throw SchemaError("problem: unknown preset '" + name + "'");
}

// ---------------------------------------------------------------------------------------------
// Commands.

/// Runs the single problem described by a JSON config file:
/// {"problem": {...}, "quest": {...}, "output": {"directory", "snapshot_iteration", "formats"}}.
inline int cmd_run(const std::string &config_path, const Options &opts, std::ostream &log) {
    Job job;
    std::filesystem::path out_dir;
    std::optional<size_t> snapshot;
    try {
        if (!std::filesystem::exists(config_path)) {
            log << "error: config file not found: " << config_path << "\n";
            return kSchemaError;
        }
        json cfg = read_json_file(config_path);
        detail::reject_unknown_keys(cfg, {"problem", "quest", "output"}, "config");
        if (!cfg.contains("problem")) {
            throw SchemaError("config: missing problem section");
        }
        job.config = cfg.contains("quest") ? quest_config_from_json(cfg.at("quest")) : QuestConfig{};
        const json &pj = cfg.at("problem");
        job.problem = pj.contains("preset") ? problem_from_preset_json(pj, job.config) : problem_from_json(pj, "problem");
        job.config = apply_overrides(job.config, opts);
        job.name = ".";
        std::string dir = "quest_out";
        if (cfg.contains("output")) {
            const json &o = cfg.at("output");
            detail::reject_unknown_keys(o, {"directory", "snapshot_iteration", "formats"}, "output");
            dir = detail::get_or<std::string>(o, "directory", dir, "output");
            if (o.contains("snapshot_iteration") && !o.at("snapshot_iteration").is_null()) {
                snapshot = detail::get_as<size_t>(o, "snapshot_iteration", "output");
            }
            if (o.contains("formats")) {
                auto formats = detail::get_as<std::vector<std::string>>(o, "formats", "output");
                for (const auto &f : formats) {
                    if (f != "json" && f != "csv") {
                        throw SchemaError("output.formats: unknown format '" + f + "'");
                    }
                }
            }
        }
        if (opts.out) {
            dir = *opts.out;
        }
        if (opts.snapshot_iter) {
            snapshot = opts.snapshot_iter;
        }
        out_dir = dir;
    } catch (const SchemaError &e) {
        log << "error: " << e.what() << "\n";
        return kSchemaError;
    } catch (const std::invalid_argument &e) {
        log << "error: " << e.what() << "\n";
        return kSchemaError;
    }
    try {
        auto records = execute_jobs({job}, out_dir, snapshot, 1, log);
        return strict_status(records, opts);
    } catch (const std::exception &e) {
        log << "error: " << e.what() << "\n";
        return kRuntimeFailure;
    }
}

inline const std::vector<std::string> &preset_names() {
    static const std::vector<std::string> names{"random-pauli-noiseless", "random-pauli-noisy", "pseudo-thermal",
                                                "hubbard-1",              "hubbard-2",          "stalling",
                                                "tfim-energy",            "projector"};
    return names;
}

/// |g(0; P)| for every member of the full Pauli pool at the initial state.
inline json gradient_nullity_report(const ProblemInstance &p, std::ostream &csv) {
    OracleLedger ledger;
    PauliPath empty(p.num_qubits);
    auto ctx = InsertionContext::measure(p.constraints, p.initial_state, empty, CostMode::squared_residuals, ledger,
                                         OracleLedger::Phase::evaluation);
    PauliPool pool = full_pool(p.num_qubits);
    double max_g = 0;
    std::string arg;
    csv << "pauli,gradient\r\n";
    for (const auto &P : pool) {
        double g = ctx.insertion_gradient(0, P, ledger);
        csv << P.label() << ',' << format_double(g) << "\r\n";
        if (std::abs(g) > max_g || arg.empty()) {
            max_g = std::max(max_g, std::abs(g));
            arg = P.label();
        }
    }
    return json{{"description", p.description},
                {"pool_size", pool.size()},
                {"initial_cost", ctx.current_cost()},
                {"max_abs_gradient", max_g},
                {"argmax", arg},
                {"oracle_calls", ledger.total()}};
}

inline std::vector<Job> preset_jobs(const std::string &name, const Options &o, std::ostream &log,
                                    const std::filesystem::path &out_dir) {
    std::vector<Job> jobs;
    const uint64_t seed = o.seed.value_or(0);
    auto add = [&](const std::string &job_name, const ProblemInstance &p, QuestConfig base, Variant v) {
        base.variant = v;
        Job j{job_name, p, apply_overrides(base, o)};
        j.config.variant = v;
        jobs.push_back(std::move(j));
    };

    if (name == "random-pauli-noiseless" || name == "random-pauli-noisy") {
        bool noisy = name == "random-pauli-noisy";
        auto p = build_random_pauli_problem(o.n.value_or(10), o.constraints.value_or(100), seed, noisy);
        QuestConfig c;
        c.epsilon = 1e-3;
        c.pool_weight = 2;
        c.max_iterations = 200;
        for (Variant v : selected_variants(o, all_variants())) {
            add(std::string(variant_name(v)), p, c, v);
        }
    } else if (name == "pseudo-thermal") {
        std::vector<double> betas = o.beta ? std::vector<double>{*o.beta} : std::vector<double>{1.0, 3.0};
        QuestConfig c;
        c.epsilon = 1e-3;
        c.pool_weight = 2;
        c.max_iterations = 150;
        for (double b : betas) {
            auto p = build_pseudo_thermal_problem(o.n.value_or(10), o.J.value_or(-1), o.h.value_or(1), b);
            for (Variant v : selected_variants(o, {Variant::bG})) {
                add("beta" + format_double(b) + "/" + std::string(variant_name(v)), p, c, v);
            }
        }
    } else if (name == "hubbard-1" || name == "hubbard-2") {
        int set = name == "hubbard-1" ? 1 : 2;
        QuestConfig c;
        c.epsilon = 1e-3;
        c.pool_weight = 2;
        c.max_iterations = 60;
        for (const auto &init : hubbard_initial_names()) {
            auto p = build_hubbard_problem(set, init);
            for (Variant v : selected_variants(o, all_variants())) {
                add(init + "/" + std::string(variant_name(v)), p, c, v);
            }
        }
    } else if (name == "stalling") {
        auto p = build_stalling_problem(o.n.value_or(6), o.J.value_or(-1), o.h.value_or(1), o.delta.value_or(0.5));
        std::ostringstream csv;
        json report = gradient_nullity_report(p, csv);
        std::filesystem::create_directories(out_dir);
        write_text_file(out_dir / "gradient_report.csv", csv.str());
        write_text_file(out_dir / "gradient_report.json", report.dump(1) + "\n");
        log << "gradient nullity: max |g| = " << format_double(report["max_abs_gradient"].get<double>())
            << " over " << report["pool_size"].get<size_t>() << " Pauli strings; initial cost "
            << format_double(report["initial_cost"].get<double>()) << "\n";
        QuestConfig c;
        c.epsilon = 1e-6;
        c.pool_weight = 2;
        c.max_iterations = 50;
        for (Variant v : selected_variants(o, all_variants())) {
            add(std::string(variant_name(v)), p, c, v);
        }
    } else if (name == "tfim-energy") {
        size_t n = o.n.value_or(4);
        Observable h = build_tfim(n, o.J.value_or(1), o.h.value_or(1), true);
        double ground = eigvalsh(matrix_of(h)).front();
        log << "exact ground energy: " << format_double(ground) << "\n";
        std::filesystem::create_directories(out_dir);
        write_text_file(out_dir / "ground_energy.json", json{{"ground_energy", ground}}.dump(1) + "\n");
        ProblemInstance p;
        p.num_qubits = n;
        p.constraints = ConstraintSet(n, {Constraint{h, 0.0, 1.0, std::nullopt, std::nullopt}});
        p.initial_state = StateVector(n);
        p.description = "tfim energy minimization n=" + std::to_string(n);
        QuestConfig c;
        c.cost_mode = CostMode::raw_expectation;
        c.pool_weight = 2;
        c.max_iterations = 100;
        for (Variant v : selected_variants(o, all_variants())) {
            add(std::string(variant_name(v)), p, c, v);
        }
    } else if (name == "projector") {
        auto p = build_projector_problem(haar_random_state(o.n.value_or(3), seed));
        QuestConfig c;
        c.epsilon = 1e-6;
        c.pool_weight = std::min<size_t>(2, p.num_qubits);
        c.max_iterations = 100;
        for (Variant v : selected_variants(o, all_variants())) {
            add(std::string(variant_name(v)), p, c, v);
        }
    } else {
        throw SchemaError("unknown preset '" + name + "'");
    }
    return jobs;
}

/// Runs every combination a preset needs; outputs go to <out>/<preset>/<combination>/.
inline int cmd_preset(const std::string &name, const Options &opts, std::ostream &log) {
    std::filesystem::path out_dir = std::filesystem::path(opts.out.value_or("quest_out")) / name;
    std::vector<Job> jobs;
    try {
        jobs = preset_jobs(name, opts, log, out_dir);
    } catch (const SchemaError &e) {
        log << "error: " << e.what() << "\n";
        return kSchemaError;
    } catch (const std::invalid_argument &e) {
        log << "error: " << e.what() << "\n";
        return kSchemaError;
    } catch (const std::exception &e) {
        log << "error: " << e.what() << "\n";
        return kRuntimeFailure;
    }
    try {
        auto records = execute_jobs(jobs, out_dir, opts.snapshot_iter, opts.workers, log);
        return strict_status(records, opts);
    } catch (const std::exception &e) {
        log << "error: " << e.what() << "\n";
        return kRuntimeFailure;
    }
}

/// Exit 0 iff re-preparing the recorded final path reproduces the recorded metric within 1e-9.
inline int cmd_verify(const std::string &record_path, std::ostream &log) {
    try {
        if (!std::filesystem::exists(record_path)) {
            log << "error: record not found: " << record_path << "\n";
            return kSchemaError;
        }
        auto v = verify_record(read_json_file(record_path));
        log << "recorded " << format_double(v.recorded) << ", recomputed " << format_double(v.recomputed) << ": "
            << (v.matches ? "match" : "MISMATCH") << "\n";
        return v.matches ? kOk : kVerifyMismatch;
    } catch (const SchemaError &e) {
        log << "error: " << e.what() << "\n";
        return kSchemaError;
    } catch (const std::exception &e) {
        log << "error: " << e.what() << "\n";
        return kRuntimeFailure;
    }
}

inline void add_common_flags(CLI::App *app, Options &o) {
    app->add_option("--seed", o.seed, "Global seed");
    app->add_flag("--strict", o.strict, "Exit 3 when a run ends without converging");
    app->add_option("--out", o.out, "Output directory");
    app->add_option("--variant", o.variant, "tG, tE, bG or bE")->check(CLI::IsMember({"tG", "tE", "bG", "bE"}));
    app->add_option("--epsilon", o.epsilon, "RMS convergence threshold")->check(CLI::PositiveNumber);
    app->add_option("--max-iters", o.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
    app->add_option("--pool-weight", o.pool_weight, "Maximum Pauli weight in the pool")->check(CLI::PositiveNumber);
    app->add_option("--snapshot-iter", o.snapshot_iter, "Iteration for scatter/correlation output");
    app->add_flag("--augment-pool", o.augment_pool, "Raise the pool weight once on saturation");
    app->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
}

/// Entry point: `quest run CONFIG`, `quest preset NAME`, `quest verify RECORD`.
inline int main(int argc, char **argv, std::ostream &log = std::cerr) {
    CLI::App app{"Expectation-value targeting by adaptive Pauli-rotation paths"};
    app.require_subcommand(1);
    Options opts;
    std::string config_path, preset, record_path;

    auto *run_cmd = app.add_subcommand("run", "Run one problem from a JSON config file");
    run_cmd->add_option("config", config_path, "Config file")->required();
    add_common_flags(run_cmd, opts);

    auto *preset_cmd = app.add_subcommand("preset", "Run a named experiment preset");
    preset_cmd->add_option("name", preset, "Preset name")->required();
    add_common_flags(preset_cmd, opts);
    preset_cmd->add_option("--n", opts.n, "Qubit count");
    preset_cmd->add_option("--constraints", opts.constraints, "Constraint count");
    preset_cmd->add_option("--delta", opts.delta, "Stalling offset");
    preset_cmd->add_option("--beta", opts.beta, "Inverse temperature");
    preset_cmd->add_option("--coupling", opts.J, "Ising coupling J");
    preset_cmd->add_option("--field", opts.h, "Transverse field h");

    auto *verify_cmd = app.add_subcommand("verify", "Re-check a run record's final metric");
    verify_cmd->add_option("record", record_path, "record.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kSchemaError;
    }
    if (*run_cmd) {
        return cmd_run(config_path, opts, log);
    }
    if (*preset_cmd) {
        return cmd_preset(preset, opts, log);
    }
    return cmd_verify(record_path, log);
}

}  // namespace quest::cli
