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

#ifndef TPGD_METRICS_H_
#define TPGD_METRICS_H_

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpgd/reconstruct.h"
#include "tpgd/types.h"

namespace tpgd {

class GrammarCounter {
 public:
  virtual ~GrammarCounter() = default;
  virtual std::string name() const = 0;
  virtual int count_errors(std::string_view text) const = 0;
};

class PerplexityModel {
 public:
  virtual ~PerplexityModel() = default;
  virtual std::string name() const = 0;
  virtual double perplexity(std::string_view text) const = 0;
};

// Wraps a plain function, mostly for rule sets and test stubs.
class FunctionGrammarCounter final : public GrammarCounter {
 public:
  FunctionGrammarCounter(std::string name,
                         std::function<int(std::string_view)> count)
      : name_(std::move(name)), count_(std::move(count)) {}
  std::string name() const override { return name_; }
  int count_errors(std::string_view text) const override { return count_(text); }

 private:
  std::string name_;
  std::function<int(std::string_view)> count_;
};

// LanguageTool HTTP API: POST /v2/check with form fields text and
// language; the error count is the length of "matches".
class LanguageToolCounter final : public GrammarCounter {
 public:
  explicit LanguageToolCounter(
      std::string url, std::string language = "en-US",
      std::chrono::milliseconds timeout = std::chrono::milliseconds(10000));
  std::string name() const override { return "languagetool"; }
  int count_errors(std::string_view text) const override;

 private:
  std::string url_;
  std::string language_;
  std::chrono::milliseconds timeout_;
};

// Whitespace-token unigram model with add-one smoothing. Unseen words get
// the probability of a zero count.
class UnigramPerplexity final : public PerplexityModel {
 public:
  static UnigramPerplexity fit(std::span<const std::string> corpus);
  std::string name() const override { return "unigram"; }
  double perplexity(std::string_view text) const override;
  double probability(std::string_view word) const;

 private:
  std::map<std::string, long, std::less<>> counts_;
  long total_ = 0;
};

// Optional backends. A missing backend makes the matching metric none.
struct QualityScorer {
  std::shared_ptr<const GrammarCounter> grammar;
  std::shared_ptr<const PerplexityModel> perplexity;
};

// 100 * successes / attempts. Throws EmptyInput.
double attack_success_rate(std::span<const AttackOutcome> outcomes);

// errors(adversarial) - errors(original); throws ScorerUnavailable.
int delta_grammar(std::string_view original, std::string_view adversarial,
                  const QualityScorer& scorer);

// ppl(adversarial) - ppl(original); throws ScorerUnavailable.
double delta_perplexity(std::string_view original, std::string_view adversarial,
                        const QualityScorer& scorer);

// Correctly rounded sum of doubles (Shewchuk partials), so the result does
// not depend on input order.
double exact_sum(std::span<const double> values);

struct SampleQuality {
  std::string sample_id;
  std::optional<int> delta_grammar;
  std::optional<double> delta_perplexity;
};

struct MetricsReport {
  double asr_percent = 0.0;
  std::optional<double> mean_similarity;
  std::optional<double> delta_grammar_errors;
  std::optional<double> delta_perplexity;
  int n_samples = 0;
  int n_success = 0;
  std::vector<AttackOutcome> per_sample;     // sorted by sample_id
  std::vector<SampleQuality> per_sample_quality;  // successes only
};

// ASR is over all attempts; similarity, grammar and perplexity means are
// over successful attacks only. `originals[i]` is the clean text of
// `outcomes[i]`. Scorer failures leave the affected field empty.
MetricsReport build_report(std::span<const AttackOutcome> outcomes,
                           std::span<const std::string> originals,
                           const QualityScorer& quality,
                           const SimilarityScorer* similarity = nullptr);

inline constexpr const char* kAggregationNote =
    "asr over all attempts; use, delta_i and delta_ppl averaged over "
    "successful attacks only";

struct ReportCell {
  std::string dataset;
  std::string victim;
  std::string local_model;
  MetricsReport report;
};

nlohmann::json report_to_json(const std::vector<ReportCell>& cells);
// Aligned-column text table, one row per cell.
std::string report_table(const std::vector<ReportCell>& cells);

}  // namespace tpgd

#endif  // TPGD_METRICS_H_
