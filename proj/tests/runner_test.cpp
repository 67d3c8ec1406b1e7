// Copyright 2026 The splin Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <splin/runner.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <set>

namespace splin {
namespace {

namespace fs = std::filesystem;

std::string fresh_dir(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("splin_runner_" + name);
  fs::remove_all(p);
  return p.string();
}

// Small but complete settings for every experiment kind.
ExperimentConfig small_config(ExperimentKind kind, const std::string& out, unsigned jobs) {
  ExperimentConfig c;
  c.experiment = kind;
  c.seed = 5;
  c.jobs = jobs;
  c.output_dir = out;
  c.dgp.m = 8;
  c.dgp.n = 12;
  c.dgp.k = 2;
  c.dgp.samples = 256;
  c.solver.lambda = 0.2;
  c.solver.max_iters = 100;
  c.dict.n_atoms = 12;
  c.dict.rounds = 4;
  c.sae.n_atoms = 12;
  c.sae.epochs = 3;
  c.ident.seeds = 3;
  c.ident.epochs = 5;
  c.ident.n_train = 128;
  c.ident.n_test = 64;
  c.ident.pairs = 20;
  c.sweep.n = 32;
  c.sweep.k_values = {1, 2, 3};
  c.sweep.m_values = m_range(1, 25, 4);
  c.sweep.trials = 20;
  c.eval.intrusion_trials = 20;
  c.snapshot_every = 2;
  return c;
}

std::set<std::string> paths(const RunManifest& m) {
  std::set<std::string> out;
  for (const auto& f : m.files) out.insert(f.path);
  return out;
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Run, PipelineManifestListsArtifacts) {
  const std::string dir = fresh_dir("pipeline");
  const RunManifest m = run(small_config(ExperimentKind::kPipeline, dir, 1));
  const std::set<std::string> p = paths(m);
  for (const char* expected : {"config.txt", "learned_dictionary.splb", "recovery_report.json",
                               "interpretability_score.json", "dict_trace.csv", "snapshots/dictionary_round_0002.splb",
                               "snapshots/dictionary_round_0004.splb"})
    EXPECT_EQ(p.count(expected), 1u) << expected;
  EXPECT_EQ(p.count("manifest.json"), 0u);
  EXPECT_TRUE(verify_manifest(m, dir).empty());
  EXPECT_EQ(m.config_hash, sha256_hex(read_file(dir + "/config.txt")));
  EXPECT_EQ(m.experiment, "pipeline");

  const Json disk = Json::parse(read_file(dir + "/manifest.json"));
  EXPECT_EQ(disk["files"].size(), m.files.size());
  EXPECT_EQ(disk["config_hash"], m.config_hash);
  const Json rec = Json::parse(read_file(dir + "/recovery_report.json"));
  EXPECT_TRUE(rec["dictionary"].contains("mcc"));
  EXPECT_EQ(dictionary_from_splb(read_splb(dir + "/learned_dictionary.splb")).n(), 12);
  // The saved config reproduces the run's configuration.
  EXPECT_EQ(parse_config(read_file(dir + "/config.txt")), small_config(ExperimentKind::kPipeline, dir, 1));
}

TEST(Run, TamperedFileFailsVerification) {
  const std::string dir = fresh_dir("tamper");
  const RunManifest m = run(small_config(ExperimentKind::kGen, dir, 1));
  write_file(dir + "/dgp_summary.json", "{}");
  EXPECT_EQ(verify_manifest(m, dir), std::vector<std::string>{"dgp_summary.json"});
}

TEST(Run, ResultsIndependentOfJobCount) {
  for (ExperimentKind kind : config_detail::kKinds) {
    const std::string name(to_string(kind));
    const RunManifest a = run(small_config(kind, fresh_dir(name + "_a"), 1));
    const RunManifest b = run(small_config(kind, fresh_dir(name + "_b"), 4));
    ASSERT_EQ(a.files.size(), b.files.size()) << name;
    for (std::size_t i = 0; i < a.files.size(); ++i) {
      EXPECT_EQ(a.files[i].path, b.files[i].path);
      if (a.files[i].path == "config.txt") continue;  // records jobs and output_dir
      EXPECT_EQ(a.files[i].sha256, b.files[i].sha256) << name << " " << a.files[i].path;
    }
  }
}

TEST(Run, JsonTablesAndTimestamp) {
  const std::string dir = fresh_dir("json");
  ExperimentConfig c = small_config(ExperimentKind::kPhaseSweep, dir, 2);
  c.format = OutputFormat::kJson;
  ::setenv("SOURCE_DATE_EPOCH", "86400", 1);
  const RunManifest m = run(c);
  ::unsetenv("SOURCE_DATE_EPOCH");
  EXPECT_EQ(m.timestamp, "1970-01-02T00:00:00Z");
  const Json grid = Json::parse(read_file(dir + "/phase_grid.json"));
  EXPECT_EQ(grid["columns"][0], "k");
  EXPECT_EQ(grid["rows"].size(), 3u * 7u);
  EXPECT_EQ(paths(m).count("phase_heatmap.svg"), 1u);
  const Json boundary = Json::parse(read_file(dir + "/boundary.json"));
  EXPECT_EQ(boundary["per_k"].size(), 3u);
}

TEST(Run, ErrorsMapToExitCodes) {
  ExperimentConfig c = small_config(ExperimentKind::kGen, "/proc/splin_cannot_write_here", 1);
  try {
    run(c);
    FAIL();
  } catch (const std::exception& e) {
    EXPECT_EQ(exit_code_for(e), 4);
  }
  EXPECT_EQ(exit_code_for(DivergenceError("x", 3)), 3);
  EXPECT_EQ(exit_code_for(ConfigError({{1, "k", "bad"}})), 2);
  EXPECT_EQ(exit_code_for(InvalidArgument("bad")), 2);
  EXPECT_EQ(exit_code_for(DegenerateFit("x")), 1);
}

}  // namespace
}  // namespace splin
