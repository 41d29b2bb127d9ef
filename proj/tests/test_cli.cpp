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

#include "quest/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace quest;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string &name) {
    auto d = fs::temp_directory_path() / ("quest_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int invoke(std::vector<std::string> args, std::string *log_out = nullptr) {
    args.insert(args.begin(), "quest");
    std::vector<char *> argv;
    for (auto &a : args) {
        argv.push_back(a.data());
    }
    std::ostringstream log;
    int code = cli::main(static_cast<int>(argv.size()), argv.data(), log);
    if (log_out) {
        *log_out = log.str();
    }
    return code;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write(const fs::path &p, const std::string &text) {
    std::ofstream out(p);
    out << text;
}

int spawn(const std::string &args) {
    int status = std::system((std::string(QUEST_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char *kInlineConfig = R"({
  "problem": {
    "num_qubits": 2,
    "initial_state": {"basis": 0},
    "constraints": [
      {"terms": [[1.0, "ZI"]], "target": -1.0},
      {"terms": [[1.0, "IX"]], "target": 0.5}
    ]
  },
  "quest": {"variant": "tE", "pool_weight": 1, "epsilon": 1e-6, "max_iterations": 20},
  "output": {"directory": "OUT", "formats": ["json", "csv"]}
})";

std::string config_with_out(const fs::path &out) {
    std::string s = kInlineConfig;
    s.replace(s.find("OUT"), 3, out.string());
    return s;
}

}  // namespace

TEST(cli, run_then_verify) {
    auto d = scratch_dir("run");
    write(d / "cfg.json", config_with_out(d / "out"));
    std::string log;
    EXPECT_EQ(invoke({"run", (d / "cfg.json").string()}, &log), 0) << log;
    for (const char *f : {"record.json", "iterations.csv", "scatter.csv"}) {
        EXPECT_TRUE(fs::exists(d / "out" / f)) << f;
    }
    EXPECT_TRUE(fs::exists(d / "out" / "summary.csv"));
    EXPECT_EQ(invoke({"verify", (d / "out" / "record.json").string()}), 0);

    auto rec = json::parse(slurp(d / "out" / "record.json"));
    EXPECT_EQ(rec["termination"], "converged");
    ASSERT_FALSE(rec["final"]["path"].empty());
    rec["final"]["path"][0]["theta"] = rec["final"]["path"][0]["theta"].get<double>() + 0.1;
    write(d / "tampered.json", rec.dump());
    EXPECT_EQ(invoke({"verify", (d / "tampered.json").string()}), cli::kVerifyMismatch);
    fs::remove_all(d);
}

TEST(cli, out_flag_overrides_config) {
    auto d = scratch_dir("override");
    write(d / "cfg.json", config_with_out(d / "ignored"));
    EXPECT_EQ(invoke({"run", (d / "cfg.json").string(), "--out", (d / "chosen").string()}), 0);
    EXPECT_TRUE(fs::exists(d / "chosen" / "record.json"));
    EXPECT_FALSE(fs::exists(d / "ignored"));
    fs::remove_all(d);
}

TEST(cli, schema_errors_exit_2) {
    auto d = scratch_dir("schema");
    EXPECT_EQ(invoke({"run", (d / "nope.json").string()}), cli::kSchemaError);
    write(d / "bad.json", "{ not json");
    EXPECT_EQ(invoke({"run", (d / "bad.json").string()}), cli::kSchemaError);
    auto cfg = json::parse(config_with_out(d / "o"));
    cfg["quest"]["turbo"] = true;
    write(d / "unknown.json", cfg.dump());
    EXPECT_EQ(invoke({"run", (d / "unknown.json").string()}), cli::kSchemaError);
    cfg = json::parse(config_with_out(d / "o"));
    cfg["problem"]["constraints"][0]["terms"][0][1] = "ZZZ";
    write(d / "size.json", cfg.dump());
    EXPECT_EQ(invoke({"run", (d / "size.json").string()}), cli::kSchemaError);
    cfg = json::parse(config_with_out(d / "o"));
    cfg["output"]["formats"] = {"xml"};
    write(d / "fmt.json", cfg.dump());
    EXPECT_EQ(invoke({"run", (d / "fmt.json").string()}), cli::kSchemaError);
    EXPECT_EQ(invoke({"preset", "no-such-preset", "--out", d.string()}), cli::kSchemaError);
    EXPECT_EQ(invoke({"verify", (d / "none.json").string()}), cli::kSchemaError);
    EXPECT_EQ(invoke({"frobnicate"}), cli::kSchemaError);
    EXPECT_FALSE(fs::exists(d / "o"));
    fs::remove_all(d);
}

TEST(cli, strict_mode_on_saturated_run) {
    auto d = scratch_dir("strict");
    // <Z> = -1 and <Z> = +1 at once cannot both hold.
    json cfg{{"problem",
              {{"num_qubits", 1},
               {"constraints",
                {{{"terms", {{1.0, "Z"}}}, {"target", -1.0}}, {{"terms", {{1.0, "Z"}}}, {"target", 1.0}}}}}},
             {"quest", {{"variant", "bE"}, {"pool_weight", 1}}},
             {"output", {{"directory", (d / "out").string()}}}};
    write(d / "cfg.json", cfg.dump());
    EXPECT_EQ(invoke({"run", (d / "cfg.json").string()}), 0);
    EXPECT_EQ(invoke({"run", (d / "cfg.json").string(), "--strict"}), cli::kStrictNotConverged);
    auto rec = json::parse(slurp(d / "out" / "record.json"));
    EXPECT_EQ(rec["termination"], "saturated");
    EXPECT_EQ(invoke({"verify", (d / "out" / "record.json").string()}), 0);
    fs::remove_all(d);
}

TEST(cli, preset_config_problem) {
    auto d = scratch_dir("preset_cfg");
    json cfg{{"problem", {{"preset", "hubbard"}, {"target_set", 2}, {"initial", "cdw"}}},
             {"quest", {{"variant", "tE"}, {"max_iterations", 2}}},
             {"output", {{"directory", (d / "out").string()}, {"snapshot_iteration", 1}}}};
    write(d / "cfg.json", cfg.dump());
    EXPECT_EQ(invoke({"run", (d / "cfg.json").string()}), 0);
    auto scatter = slurp(d / "out" / "scatter.csv");
    EXPECT_NE(scatter.find("\r\n0,1,"), std::string::npos);
    cfg["problem"]["preset"] = "moon";
    write(d / "moon.json", cfg.dump());
    EXPECT_EQ(invoke({"run", (d / "moon.json").string()}), cli::kSchemaError);
    fs::remove_all(d);
}

TEST(cli, hubbard_preset_writes_twenty_records) {
    auto d = scratch_dir("hubbard");
    std::string log;
    EXPECT_EQ(invoke({"preset", "hubbard-1", "--max-iters", "2", "--out", d.string()}, &log), 0) << log;
    size_t records = 0;
    for (const auto &e : fs::recursive_directory_iterator(d / "hubbard-1")) {
        if (e.path().filename() == "record.json") {
            records++;
        }
    }
    EXPECT_EQ(records, 20u);
    EXPECT_TRUE(fs::exists(d / "hubbard-1" / "neel" / "bE" / "iterations.csv"));
    auto summary = slurp(d / "hubbard-1" / "summary.csv");
    EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 21);
    fs::remove_all(d);
}

TEST(cli, stalling_preset_reports_gradient_nullity) {
    auto d = scratch_dir("stalling");
    std::string log;
    EXPECT_EQ(invoke({"preset", "stalling", "--n", "4", "--variant", "bG", "--out", d.string()}, &log), 0) << log;
    auto report = json::parse(slurp(d / "stalling" / "gradient_report.json"));
    EXPECT_EQ(report["pool_size"].get<size_t>(), 255u);
    EXPECT_LT(report["max_abs_gradient"].get<double>(), 1e-10);
    EXPECT_NEAR(report["initial_cost"].get<double>(), 0.5, 1e-12);
    auto rec = json::parse(slurp(d / "stalling" / "bG" / "record.json"));
    EXPECT_EQ(rec["termination"], "saturated");
    EXPECT_EQ(invoke({"preset", "stalling", "--n", "4", "--variant", "bG", "--strict", "--out", d.string()}),
              cli::kStrictNotConverged);
    fs::remove_all(d);
}

TEST(cli, tfim_energy_preset) {
    auto d = scratch_dir("tfim");
    EXPECT_EQ(invoke({"preset", "tfim-energy", "--n", "3", "--variant", "tE", "--strict", "--out", d.string()}), 0);
    auto ground = json::parse(slurp(d / "tfim-energy" / "ground_energy.json"))["ground_energy"].get<double>();
    auto rec = json::parse(slurp(d / "tfim-energy" / "tE" / "record.json"));
    EXPECT_NEAR(rec["final"]["cost"].get<double>(), ground, 1e-6);
    EXPECT_EQ(rec["config"]["cost_mode"], "raw-expectation");
    fs::remove_all(d);
}

TEST(cli, preset_csv_identical_across_worker_counts) {
    auto a = scratch_dir("det_a");
    auto b = scratch_dir("det_b");
    std::vector<std::string> common{"preset", "random-pauli-noiseless", "--n", "4", "--constraints", "8",
                                    "--max-iters", "6", "--seed", "11"};
    auto args_a = common;
    args_a.insert(args_a.end(), {"--out", a.string(), "--workers", "1"});
    auto args_b = common;
    args_b.insert(args_b.end(), {"--out", b.string(), "--workers", "4"});
    ASSERT_EQ(invoke(args_a), 0);
    ASSERT_EQ(invoke(args_b), 0);
    for (const char *v : {"tG", "tE", "bG", "bE"}) {
        auto fa = slurp(a / "random-pauli-noiseless" / v / "iterations.csv");
        EXPECT_FALSE(fa.empty());
        EXPECT_EQ(fa, slurp(b / "random-pauli-noiseless" / v / "iterations.csv")) << v;
    }
    EXPECT_EQ(slurp(a / "random-pauli-noiseless" / "summary.csv"), slurp(b / "random-pauli-noiseless" / "summary.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(cli, seed_changes_random_problem) {
    auto a = scratch_dir("seed_a");
    auto b = scratch_dir("seed_b");
    std::vector<std::string> common{"preset", "random-pauli-noisy", "--n", "3", "--constraints", "4",
                                    "--max-iters", "2", "--variant", "tG"};
    auto args_a = common;
    args_a.insert(args_a.end(), {"--out", a.string(), "--seed", "1"});
    auto args_b = common;
    args_b.insert(args_b.end(), {"--out", b.string(), "--seed", "2"});
    ASSERT_EQ(invoke(args_a), 0);
    ASSERT_EQ(invoke(args_b), 0);
    EXPECT_NE(slurp(a / "random-pauli-noisy" / "tG" / "scatter.csv"),
              slurp(b / "random-pauli-noisy" / "tG" / "scatter.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST(cli, binary_exit_codes) {
    auto d = scratch_dir("binary");
    write(d / "cfg.json", config_with_out(d / "out"));
    EXPECT_EQ(spawn("run " + (d / "cfg.json").string()), 0);
    EXPECT_EQ(spawn("verify " + (d / "out" / "record.json").string()), 0);
    EXPECT_EQ(spawn("run " + (d / "missing.json").string()), 2);
    EXPECT_EQ(spawn("preset nothing --out " + d.string()), 2);
    EXPECT_EQ(spawn("--help"), 0);
    fs::remove_all(d);
}
