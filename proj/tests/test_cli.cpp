// Copyright 2026 The hpmrec Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "hpmrec/graphs.hpp"

namespace {

namespace fs = std::filesystem;

const fs::path kCli = HPMREC_CLI_PATH;
const fs::path kFixture = HPMREC_FIXTURE_DIR;

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = kCli.string() + " " + args + " 2>&1";
  Result r{-1, {}};
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    // One directory per test so ctest -j runs do not collide.
    root_ = fs::temp_directory_path() / "hpmrec_test_cli" /
            ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  static std::string prepare_args(const fs::path& out) {
    return "prepare --interactions " + (kFixture / "interactions.tsv").string() + " --visual " +
           (kFixture / "visual.hpmf").string() + " --textual " + (kFixture / "textual.hpmf").string() +
           " --out-dir " + out.string();
  }
  static fs::path root_;
};

fs::path CliTest::root_;

TEST_F(CliTest, HelpListsSubcommands) {
  const auto r = run("--help");
  EXPECT_EQ(r.code, 0);
  for (const char* sub : {"prepare", "build-graph", "train", "evaluate", "grid-search", "gradcheck"}) {
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  }
}

TEST_F(CliTest, MissingInputsExitTwo) {
  EXPECT_EQ(run("prepare --interactions /nonexistent.tsv --out-dir " + (root_ / "x").string()).code, 2);
  EXPECT_EQ(run("train --data-dir /nonexistent").code, 2);
  EXPECT_EQ(run("train").code, 2);
  EXPECT_EQ(run("bogus-subcommand").code, 2);
}

TEST_F(CliTest, ConfigErrorsExitTwo) {
  const auto cfg = root_ / "bad.json";
  std::ofstream(cfg) << R"({"learning_rate": 0.1, "not_a_key": 1})";
  EXPECT_EQ(run("--config " + cfg.string() + " --print-config train").code, 2);
  EXPECT_EQ(run("--n-exp 9 --print-config train").code, 2);
  EXPECT_EQ(run("--layers abc --print-config train").code, 2);
}

TEST_F(CliTest, ConfigEchoAndOverrides) {
  const auto cfg = root_ / "good.json";
  std::ofstream(cfg) << R"({"layers": 3, "dim": 8})";
  const auto r = run("--config " + cfg.string() + " --dim 12 --no-mi --grid-layers 1,2 --print-config train");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["layers"], 3);
  EXPECT_EQ(j["dim"], 12);
  EXPECT_EQ(j["no_mi"], true);
  EXPECT_EQ(j["grid"]["layers"].dump(), "[1,2]");
  EXPECT_EQ(j["learning_rate"], 1e-4);
}

TEST_F(CliTest, ThreadsFromEnvironment) {
  const std::string cmd = "HPMREC_THREADS=3 " + kCli.string() + " --print-config train";
  FILE* pipe = popen(cmd.c_str(), "r");
  ASSERT_NE(pipe, nullptr);
  std::string out;
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  pclose(pipe);
  EXPECT_EQ(nlohmann::json::parse(out)["threads"], 3);
}

TEST_F(CliTest, PrepareIsDeterministicAndSummaryMatches) {
  const auto a = root_ / "prep_a", b = root_ / "prep_b";
  ASSERT_EQ(run(prepare_args(a)).code, 0);
  ASSERT_EQ(run(prepare_args(b)).code, 0);
  for (const char* f : {"train.tsv", "valid.tsv", "test.tsv", "users.tsv", "items.tsv", "summary.json",
                        "visual.hpmf", "textual.hpmf"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  const auto s = read_json(a / "summary.json");
  const double u = s["num_users"], v = s["num_items"], e = s["num_interactions"];
  EXPECT_DOUBLE_EQ(s["sparsity"].get<double>(), 1.0 - e / (u * v));
  // The fixture's sparse extras fall below the 5-core.
  EXPECT_EQ(s["num_users"], 60);
  EXPECT_EQ(s["num_items"], 40);
  EXPECT_EQ(s["duplicates_dropped"], 1);
}

TEST_F(CliTest, BuildGraphDefaultK) {
  const auto prep = root_ / "prep_graph";
  ASSERT_EQ(run(prepare_args(prep)).code, 0);
  const auto r = run("build-graph --data-dir " + prep.string() + " --out-dir " + (root_ / "graph").string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto g = hpmrec::read_sparse(root_ / "graph" / "visual.hpms");
  EXPECT_EQ(g.rows, 40u);
  for (std::size_t i = 0; i < g.rows; ++i) EXPECT_EQ(g.row_nnz(i), 10u);
  // Features with the wrong number of rows.
  fs::copy_file(prep / "visual.hpmf", root_ / "visual_copy.hpmf", fs::copy_options::overwrite_existing);
  fs::copy_file(kFixture / "visual.hpmf", prep / "visual.hpmf", fs::copy_options::overwrite_existing);
  EXPECT_EQ(run("build-graph --data-dir " + prep.string() + " --out-dir " + (root_ / "graph2").string()).code, 2);
}

TEST_F(CliTest, TrainThenEvaluateReproducesLoggedMetrics) {
  const auto prep = root_ / "prep_train";
  ASSERT_EQ(run(prepare_args(prep)).code, 0);
  const auto out = root_ / "run";
  const auto start = std::chrono::steady_clock::now();
  const auto r = run("train --data-dir " + prep.string() + " --out-dir " + out.string() +
                     " --dim 8 --max-epochs 30");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_LT(secs, 60.0);
  const auto report = read_json(out / "report.json");
  const auto ev = run("evaluate --data-dir " + prep.string() + " --checkpoint " + (out / "best.ckpt").string() +
                      " --eval-split valid --out-dir " + (root_ / "eval").string());
  ASSERT_EQ(ev.code, 0) << ev.out;
  const auto metrics = read_json(root_ / "eval" / "metrics_valid.json");
  EXPECT_EQ(metrics.dump(), report["best_valid"].dump());
  const auto test = run("evaluate --data-dir " + prep.string() + " --checkpoint " + (out / "best.ckpt").string() +
                        " --split test --out-dir " + (root_ / "eval").string());
  ASSERT_EQ(test.code, 0);
  EXPECT_EQ(read_json(root_ / "eval" / "metrics_test.json").dump(), report["test"].dump());
}

TEST_F(CliTest, GridSearchAndGradcheck) {
  const auto prep = root_ / "prep_grid";
  ASSERT_EQ(run(prepare_args(prep)).code, 0);
  const auto r = run("grid-search --data-dir " + prep.string() + " --out-dir " + (root_ / "grid").string() +
                     " --dim 4 --max-epochs 2 --grid-layers 1,2 --grid-reg-weight 0.01 --grid-ssl-weight 0.001"
                     " --grid-n-exp 0 --grid-knn-k 5");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = read_json(root_ / "grid" / "grid_report.json");
  EXPECT_EQ(j["num_runs"], 2);
  EXPECT_TRUE(fs::exists(root_ / "grid" / "run_1" / "best.ckpt"));
  const auto g = run("gradcheck --out-dir " + (root_ / "gc").string());
  EXPECT_EQ(g.code, 0) << g.out;
  EXPECT_EQ(read_json(root_ / "gc" / "gradcheck.json")["passed"], true);
}

}  // namespace
