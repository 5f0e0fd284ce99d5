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

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "test_support.h"
#include "tpgd/errors.h"
#include "tpgd/metrics.h"
#include "tpgd/serialization.h"

namespace tpgd {
namespace {

int CountTeh(std::string_view text) {
  int n = 0;
  for (auto pos = text.find("teh"); pos != std::string_view::npos;
       pos = text.find("teh", pos + 1)) {
    ++n;
  }
  return n;
}

QualityScorer TehScorer() {
  QualityScorer q;
  q.grammar = std::make_shared<FunctionGrammarCounter>("teh", CountTeh);
  return q;
}

AttackOutcome Success(std::string id, std::string text, std::optional<double> sim) {
  return {std::move(id), true, std::move(text), 3, 2, sim};
}

AttackOutcome Failure(std::string id) { return {std::move(id), false, std::nullopt, 5, 5, std::nullopt}; }

TEST(AttackSuccessRateTest, Examples) {
  std::vector<AttackOutcome> v = {Success("a", "x", 0.9), Success("b", "x", 0.9),
                                  Success("c", "x", 0.9), Failure("d")};
  EXPECT_DOUBLE_EQ(attack_success_rate(v), 75.0);
  const std::vector<AttackOutcome> none = {Failure("a"), Failure("b")};
  EXPECT_EQ(attack_success_rate(none), 0.0);
  EXPECT_THROW(attack_success_rate({}), EmptyInput);
}

TEST(DeltaGrammarTest, Examples) {
  const QualityScorer q = TehScorer();
  EXPECT_EQ(delta_grammar("a", "teh a", q), 1);
  EXPECT_EQ(delta_grammar("teh a", "teh a", q), 0);
  EXPECT_EQ(delta_grammar("teh teh", "a", q), -2);
  EXPECT_THROW(delta_grammar("a", "b", QualityScorer{}), ScorerUnavailable);
}

TEST(DeltaPerplexityTest, UnigramOracle) {
  const std::vector<std::string> corpus = {"a b", "a"};
  const auto model = UnigramPerplexity::fit(corpus);
  // counts a=2 b=1, denominator 3 + 2 + 1.
  EXPECT_DOUBLE_EQ(model.probability("a"), 0.5);
  EXPECT_DOUBLE_EQ(model.probability("b"), 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(model.probability("zzz"), 1.0 / 6.0);
  EXPECT_NEAR(model.perplexity("a b"), std::sqrt(6.0), 1e-12);
  EXPECT_NEAR(model.perplexity("a zzz"), std::sqrt(12.0), 1e-12);
  EXPECT_THROW(model.perplexity("  "), EmptyInput);

  QualityScorer q;
  q.perplexity = std::make_shared<UnigramPerplexity>(model);
  EXPECT_GT(delta_perplexity("a b", "a zzz", q), 0.0);
  EXPECT_NEAR(delta_perplexity("a b", "a zzz", q), std::sqrt(12.0) - std::sqrt(6.0), 1e-12);
  EXPECT_EQ(delta_perplexity("a b", "a b", q), 0.0);
  EXPECT_THROW(delta_perplexity("a", "b", QualityScorer{}), ScorerUnavailable);
}

TEST(LanguageToolCounterTest, CountsMatches) {
  std::string seen;
  testing::StubServer server("/v2/check", [&](const std::string& body) {
    seen = body;
    return std::make_pair(200, std::string(R"({"matches": [{}, {}]})"));
  });
  EXPECT_EQ(LanguageToolCounter(server.url()).count_errors("teh cat & dog"), 2);
  EXPECT_EQ(seen, "text=teh%20cat%20%26%20dog&language=en-US");

  testing::StubServer down("/v2/check", [](const std::string&) {
    return std::make_pair(500, std::string("{}"));
  });
  EXPECT_THROW(LanguageToolCounter(down.url()).count_errors("x"), ScorerUnavailable);
}

TEST(ExactSumTest, Cancellation) {
  const std::vector<double> v = {1e16, 1.0, -1e16};
  EXPECT_EQ(exact_sum(v), 1.0);
  EXPECT_EQ(exact_sum({}), 0.0);
  const std::vector<double> tenths(10, 0.1);
  EXPECT_EQ(exact_sum(tenths), 1.0);
}

TEST(ExactSumTest, OrderDoesNotMatter) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mag(-30.0, 30.0);
  std::bernoulli_distribution sign(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng() % 40);
    for (auto& x : v) x = (sign(rng) ? 1 : -1) * std::exp(mag(rng));
    const double reference = exact_sum(v);
    for (int k = 0; k < 5; ++k) {
      std::shuffle(v.begin(), v.end(), rng);
      ASSERT_EQ(exact_sum(v), reference);
    }
  }
}

TEST(BuildReportTest, AllFailures) {
  const std::vector<AttackOutcome> outcomes = {Failure("b"), Failure("a")};
  const std::vector<std::string> originals = {"x", "y"};
  const auto r = build_report(outcomes, originals, TehScorer());
  EXPECT_EQ(r.asr_percent, 0.0);
  EXPECT_FALSE(r.mean_similarity);
  EXPECT_FALSE(r.delta_grammar_errors);
  EXPECT_FALSE(r.delta_perplexity);
  EXPECT_EQ(r.n_samples, 2);
  EXPECT_EQ(r.n_success, 0);
  ASSERT_EQ(r.per_sample.size(), 2u);
  EXPECT_EQ(r.per_sample[0].sample_id, "a");
  EXPECT_TRUE(r.per_sample_quality.empty());
}

TEST(BuildReportTest, MeansAreOverSuccessesOnly) {
  const std::vector<AttackOutcome> outcomes = {Success("s1", "teh a", 0.9),
                                               Failure("f1"), Failure("f2"),
                                               Success("s2", "b", 0.7)};
  const std::vector<std::string> originals = {"a", "c", "d", "b"};
  const auto r = build_report(outcomes, originals, TehScorer());
  EXPECT_EQ(r.asr_percent, 50.0);
  ASSERT_TRUE(r.mean_similarity);
  EXPECT_DOUBLE_EQ(*r.mean_similarity, 0.8);
  ASSERT_TRUE(r.delta_grammar_errors);
  EXPECT_EQ(*r.delta_grammar_errors, 0.5);
  EXPECT_FALSE(r.delta_perplexity);
  ASSERT_EQ(r.per_sample_quality.size(), 2u);
  EXPECT_EQ(r.per_sample_quality[0].delta_grammar, 1);
  EXPECT_EQ(r.per_sample_quality[1].delta_grammar, 0);
}

TEST(BuildReportTest, SingleSuccess) {
  const std::vector<AttackOutcome> outcomes = {Success("s", "x", 0.9)};
  const std::vector<std::string> originals = {"y"};
  const auto r = build_report(outcomes, originals, QualityScorer{});
  EXPECT_EQ(r.asr_percent, 100.0);
  EXPECT_EQ(r.mean_similarity, 0.9);
  EXPECT_FALSE(r.delta_grammar_errors);
}

TEST(BuildReportTest, FailingScorerLeavesFieldEmpty) {
  QualityScorer q;
  q.grammar = std::make_shared<FunctionGrammarCounter>(
      "down", [](std::string_view) -> int { throw ScorerUnavailable("down"); });
  const std::vector<AttackOutcome> outcomes = {Success("s", "x", std::nullopt)};
  const std::vector<std::string> originals = {"y"};
  const auto r = build_report(outcomes, originals, q);
  EXPECT_FALSE(r.delta_grammar_errors);
  EXPECT_FALSE(r.mean_similarity);
  ASSERT_EQ(r.per_sample_quality.size(), 1u);
  EXPECT_FALSE(r.per_sample_quality[0].delta_grammar);

  const std::vector<std::string> short_originals;
  EXPECT_THROW(build_report(outcomes, short_originals, q), ShapeError);
}

TEST(ReportOutputTest, JsonAndTable) {
  const std::vector<AttackOutcome> outcomes = {Success("s", "teh x", 0.75), Failure("f")};
  const std::vector<std::string> originals = {"x", "z"};
  const std::vector<ReportCell> cells = {
      {"sst2", "http:v", "tiny", build_report(outcomes, originals, TehScorer())}};

  const auto j = report_to_json(cells);
  EXPECT_EQ(j["aggregation"], kAggregationNote);
  ASSERT_EQ(j["cells"].size(), 1u);
  const auto& cell = j["cells"][0];
  EXPECT_EQ(cell["asr_percent"], 50.0);
  EXPECT_EQ(cell["use"], 0.75);
  EXPECT_EQ(cell["delta_i"], 1.0);
  EXPECT_TRUE(cell["delta_ppl"].is_null());
  EXPECT_EQ(cell["per_sample"].size(), 2u);

  const std::string table = report_table(cells);
  EXPECT_EQ(table,
            "Dataset  Victim   ASR%   USE    dI  dPPL  N\n"
            "-------------------------------------------\n"
            "sst2     http:v  50.00  0.75  1.00     -  2\n");
}

}  // namespace
}  // namespace tpgd
