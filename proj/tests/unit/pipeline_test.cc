// Copyright 2026 The tpgd Authors
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

#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "test_support.h"
#include "tpgd/dataset.h"
#include "tpgd/errors.h"
#include "tpgd/pipeline.h"
#include "tpgd/synthetic.h"

namespace tpgd {
namespace {

namespace fs = std::filesystem;

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::size_t CountLines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    testing::shared_tiny_model()->save(dir_ / "tiny.bin");
    SyntheticCorpusOptions opts;
    opts.num_samples = 40;
    opts.seed = 23;
    samples_ = make_synthetic_corpus(opts);
    write_dataset(dir_ / "data.jsonl", samples_);
  }

  RunManifest Manifest(std::string victim = "inproc:local") const {
    RunManifest m;
    m.config.mask_one_token = false;
    m.config.max_iterations = 15;
    m.config.max_queries = 15;
    m.config.use_threshold = 0.5;
    m.dataset = {"syn", 2, DatasetFormat::kSingleText, dir_ / "data.jsonl"};
    m.victim_name = std::move(victim);
    m.local_model_path = dir_ / "tiny.bin";
    m.seed = 5;
    m.num_samples = 8;
    return m;
  }

  // HTTP victim backed by the tiny model; optionally refuses texts that are
  // not in the dataset.
  std::unique_ptr<testing::StubServer> ModelServer(bool refuse_new = false) {
    std::set<std::string> known;
    for (const auto& s : samples_) known.insert(s.text_a);
    return std::make_unique<testing::StubServer>(
        "/classify", [known, refuse_new](const std::string& body) {
          const auto text = nlohmann::json::parse(body).at("text_a").get<std::string>();
          if (refuse_new && !known.count(text)) {
            return std::make_pair(500, std::string("{}"));
          }
          const int label = testing::shared_tiny_model()->predict(text);
          return std::make_pair(200, nlohmann::json{{"label", label}}.dump());
        });
  }

  testing::TempDir dir_;
  std::vector<LabeledSample> samples_;
};

TEST_F(PipelineTest, WritesOneOutcomePerSample) {
  const auto report = run(Manifest(), dir_ / "run");
  const std::string outcomes = Slurp(dir_ / "run" / kOutcomesFile);
  EXPECT_EQ(CountLines(outcomes), 8u);
  EXPECT_EQ(report.n_samples, 8);
  EXPECT_TRUE(fs::exists(dir_ / "run" / kManifestFile));
  EXPECT_TRUE(fs::exists(dir_ / "run" / kReportJsonFile));
  EXPECT_TRUE(fs::exists(dir_ / "run" / kReportTextFile));
  EXPECT_FALSE(fs::exists(dir_ / "run" / kStepsFile));

  const auto manifest =
      nlohmann::json::parse(Slurp(dir_ / "run" / kManifestFile)).get<RunManifest>();
  EXPECT_EQ(manifest.config, Manifest().config);
  EXPECT_EQ(manifest.victim_name, "inproc:local");
  EXPECT_FALSE(manifest.finished_at.empty());

  for (const auto& o : read_outcomes(dir_ / "run" / kOutcomesFile)) {
    EXPECT_LE(o.queries_used, Manifest().config.max_queries);
    EXPECT_EQ(o.success, o.adversarial_text.has_value());
  }
}

TEST_F(PipelineTest, RerunIsByteIdentical) {
  run(Manifest(), dir_ / "a");
  run(Manifest(), dir_ / "b");
  for (const char* file : {kOutcomesFile, kScreenedFile, kReportJsonFile, kReportTextFile}) {
    EXPECT_EQ(Slurp(dir_ / "a" / file), Slurp(dir_ / "b" / file)) << file;
  }
}

TEST_F(PipelineTest, ParallelMatchesSerial) {
  auto verbose = Manifest();
  verbose.verbose = true;
  run(verbose, dir_ / "serial");
  verbose.parallel = 3;
  run(verbose, dir_ / "parallel");
  for (const char* file : {kOutcomesFile, kStepsFile, kReportJsonFile}) {
    EXPECT_EQ(Slurp(dir_ / "serial" / file), Slurp(dir_ / "parallel" / file)) << file;
  }
  EXPECT_GT(CountLines(Slurp(dir_ / "serial" / kStepsFile)), 0u);
}

TEST_F(PipelineTest, ResumeSkipsFinishedSamples) {
  auto server = ModelServer();
  const auto manifest = Manifest("http:" + server->url());
  run(manifest, dir_ / "run");
  const fs::path path = dir_ / "run" / kOutcomesFile;
  const std::string full = Slurp(path);
  const auto outcomes = read_outcomes(path);
  ASSERT_EQ(outcomes.size(), 8u);

  // Nothing left to do.
  long before = server->requests();
  run(manifest, dir_ / "run");
  EXPECT_EQ(server->requests(), before);
  EXPECT_EQ(Slurp(path), full);

  // Drop the last record and cut the one before it mid-line.
  const std::size_t last = full.rfind('\n', full.size() - 2) + 1;
  const std::size_t second = full.rfind('\n', last - 2) + 1;
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << full.substr(0, second + 10);
  }
  before = server->requests();
  run(manifest, dir_ / "run");
  EXPECT_EQ(Slurp(path), full);
  EXPECT_EQ(server->requests() - before,
            outcomes[6].queries_used + outcomes[7].queries_used);
}

TEST_F(PipelineTest, ReadOutcomesRepairsTail) {
  const fs::path path = dir_ / "o.jsonl";
  {
    JsonLinesWriter w(path);
    w.append(R"({"sample_id":"a","success":false,"adversarial_text":null,"queries_used":1,"iterations_used":1,"final_similarity":null})");
  }
  std::ofstream(path, std::ios::app) << R"({"sample_id":"b","succ)";
  EXPECT_EQ(read_outcomes(path).size(), 1u);
  const auto size_before = fs::file_size(path);
  EXPECT_EQ(read_outcomes(path, /*repair=*/true).size(), 1u);
  EXPECT_LT(fs::file_size(path), size_before);
  EXPECT_EQ(CountLines(Slurp(path)), 1u);
  EXPECT_TRUE(read_outcomes(dir_ / "absent.jsonl").empty());

  std::ofstream(dir_ / "bad.jsonl") << "{}\n";
  EXPECT_THROW(read_outcomes(dir_ / "bad.jsonl"), ParseError);
}

TEST_F(PipelineTest, FailingVictimIsRecordedAsFailure) {
  auto server = ModelServer(/*refuse_new=*/true);
  const auto report = run(Manifest("http:" + server->url()), dir_ / "run");
  EXPECT_EQ(report.n_samples, 8);
  EXPECT_EQ(report.n_success, 0);
  EXPECT_EQ(report.asr_percent, 0.0);
  for (const auto& o : read_outcomes(dir_ / "run" / kOutcomesFile)) {
    EXPECT_FALSE(o.success);
    EXPECT_EQ(o.queries_used, 0);
  }
}

TEST_F(PipelineTest, RejectsBadSettings) {
  auto m = Manifest();
  m.parallel = 0;
  EXPECT_THROW(run(m, dir_ / "run"), InvalidConfig);
  m = Manifest();
  m.config.alpha = -1;
  EXPECT_THROW(run(m, dir_ / "run"), InvalidConfig);
  m = Manifest();
  m.num_samples = 1000;
  EXPECT_THROW(run(m, dir_ / "run"), InsufficientCorrect);
}

TEST_F(PipelineTest, ReportFromOutcomesJoinsById) {
  run(Manifest(), dir_ / "run");
  const auto outcomes = read_outcomes(dir_ / "run" / kOutcomesFile);
  const auto again =
      report_from_outcomes(outcomes, samples_, default_quality_scorer(samples_, ""));
  const auto stored = nlohmann::json::parse(Slurp(dir_ / "run" / kReportJsonFile));
  EXPECT_EQ(stored["cells"][0]["asr_percent"].get<double>(), again.asr_percent);
  std::vector<AttackOutcome> orphan = {{"nope", false, std::nullopt, 0, 0, std::nullopt}};
  EXPECT_THROW(report_from_outcomes(orphan, samples_, {}), Error);
}

}  // namespace
}  // namespace tpgd
