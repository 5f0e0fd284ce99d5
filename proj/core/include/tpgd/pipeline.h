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

#ifndef TPGD_PIPELINE_H_
#define TPGD_PIPELINE_H_

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpgd/dataset.h"
#include "tpgd/metrics.h"
#include "tpgd/types.h"

namespace tpgd {

struct RunManifest {
  AttackConfig config;
  DatasetSpec dataset;
  std::string victim_name;          // inproc:NAME | http:URL
  std::string local_model_family = "tiny";
  std::filesystem::path local_model_path;
  std::string started_at;
  std::string finished_at;
  std::int64_t seed = 0;            // screening order
  std::size_t num_samples = 0;      // 0 = every correctly classified sample
  std::string similarity_scorer = "mean-embed-cosine";
  std::string similarity_endpoint;
  std::optional<std::filesystem::path> antonym_lexicon;
  std::string grammar_endpoint;     // LanguageTool URL; empty = no grammar metric
  int parallel = 1;
  bool verbose = false;

  std::string local_model_name() const;
};

void to_json(nlohmann::json& j, const RunManifest& m);
void from_json(const nlohmann::json& j, RunManifest& m);

// File names inside a run directory.
inline constexpr const char* kOutcomesFile = "outcomes.jsonl";
inline constexpr const char* kScreenedFile = "screened.jsonl";
inline constexpr const char* kStepsFile = "steps.jsonl";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kReportJsonFile = "report.json";
inline constexpr const char* kReportTextFile = "report.txt";

// Append-only JSON-lines writer. Each record is flushed as one write, so
// after a crash at most the final line is incomplete; read_outcomes drops it.
class JsonLinesWriter {
 public:
  explicit JsonLinesWriter(const std::filesystem::path& path);
  ~JsonLinesWriter();
  JsonLinesWriter(const JsonLinesWriter&) = delete;
  JsonLinesWriter& operator=(const JsonLinesWriter&) = delete;

  void append(const std::string& line);

 private:
  std::FILE* file_ = nullptr;
};

// Parses an outcome file, ignoring a truncated final line. With `repair`
// the file is cut back to its last complete record.
std::vector<AttackOutcome> read_outcomes(const std::filesystem::path& path,
                                         bool repair = false);

std::string utc_timestamp();

// Loads data, screens correctly classified samples, attacks each one and
// persists every outcome before moving on. A rerun in the same directory
// resumes: finished samples are not attacked again. Writes outcomes,
// manifest and report files into `out_dir`.
MetricsReport run(RunManifest manifest, const std::filesystem::path& out_dir);

// Re-aggregates a finished run: outcomes joined to dataset texts by id.
MetricsReport report_from_outcomes(const std::vector<AttackOutcome>& outcomes,
                                   const std::vector<LabeledSample>& samples,
                                   const QualityScorer& quality);

// Perplexity backend used by the pipeline: unigram model over the dataset.
QualityScorer default_quality_scorer(const std::vector<LabeledSample>& samples,
                                     const std::string& grammar_endpoint);

}  // namespace tpgd

#endif  // TPGD_PIPELINE_H_
