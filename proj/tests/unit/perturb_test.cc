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

#include <cmath>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "test_support.h"
#include "tpgd/errors.h"
#include "tpgd/perturb.h"
#include "tpgd/synthetic.h"

namespace tpgd {
namespace {

using testing::FunctionVictim;
using testing::shared_tiny_model;

Matrix Gaussian(Eigen::Index r, Eigen::Index c, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

PerturbationState ZeroState(Eigen::Index n, Eigen::Index d,
                            std::vector<bool> prot = {}) {
  PerturbationState s;
  s.delta = Matrix::Zero(n, d);
  s.protected_rows = prot.empty() ? std::vector<bool>(n, false) : prot;
  return s;
}

TEST(CompositeLossTest, Examples) {
  EXPECT_EQ(composite_loss(2.0, 0.5, -1.0), 1.5);
  EXPECT_EQ(composite_loss(3.25, 0.0, -0.4), 3.25);
  EXPECT_EQ(composite_loss(0.0, 1.75, -1.0), -1.75);
}

TEST(PgdStepTest, UnitGradientFromZero) {
  Rng rng(1);
  Matrix g = Matrix::Zero(3, 2);
  g(1, 0) = 0.6;
  g(1, 1) = 0.8;
  bool reinit = true;
  const PerturbationState next = pgd_step(ZeroState(3, 2), g, 0.1, 1.0, rng, &reinit);
  EXPECT_FALSE(reinit);
  EXPECT_EQ(next.step, 1);
  EXPECT_LT((next.delta - 0.1 * g).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PgdStepTest, ScaleInvariance) {
  Rng seed_rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    PerturbationState s = ZeroState(4, 3);
    s.delta = 0.1 * Gaussian(4, 3, seed_rng);
    const Matrix g = Gaussian(4, 3, seed_rng);
    Rng r1(7), r2(7);
    const auto a = pgd_step(s, g, 0.3, 10.0, r1);
    const auto b = pgd_step(s, 42.0 * g, 0.3, 10.0, r2);
    EXPECT_LT((a.delta - b.delta).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(PgdStepTest, ZeroGradientIsDegenerate) {
  Rng rng(3);
  PerturbationState s = ZeroState(3, 2);
  s.delta(0, 0) = 0.2;
  const PerturbationState before = s;
  EXPECT_THROW(pgd_step_inplace(s, Matrix::Zero(3, 2), 0.1, 1.0, rng),
               DegenerateGradient);
  EXPECT_EQ(s.delta, before.delta);
  EXPECT_EQ(s.step, 0);

  // A gradient living only on protected rows is just as degenerate.
  PerturbationState p = ZeroState(3, 2, {true, false, true});
  Matrix g = Matrix::Zero(3, 2);
  g(0, 1) = 5.0;
  EXPECT_THROW(pgd_step_inplace(p, g, 0.1, 1.0, rng), DegenerateGradient);
}

TEST(PgdStepTest, ShapeAndFiniteness) {
  Rng rng(4);
  PerturbationState s = ZeroState(3, 2);
  EXPECT_THROW(pgd_step_inplace(s, Matrix::Ones(2, 2), 0.1, 1.0, rng), ShapeError);
  Matrix g = Matrix::Ones(3, 2);
  g(1, 1) = std::nan("");
  EXPECT_THROW(pgd_step_inplace(s, g, 0.1, 1.0, rng), NonFiniteLoss);
}

TEST(PgdStepTest, ProtectedRowsStayZeroAndStepIsAlpha) {
  Rng rng(5);
  PerturbationState s = ZeroState(5, 4, {true, false, false, true, true});
  for (int step = 0; step < 30; ++step) {
    const Matrix before = s.delta;
    const bool reinit = pgd_step_inplace(s, Gaussian(5, 4, rng), 0.7, 2.0, rng);
    EXPECT_LE(s.delta.norm(), 2.0 * (1 + 1e-12));
    for (int r : {0, 3, 4}) EXPECT_TRUE(s.delta.row(r).isZero(0));
    if (!reinit) {
      EXPECT_NEAR((s.delta - before).norm(), 0.7, 0.7e-6);
    }
    EXPECT_EQ(s.step, step + 1);
  }
}

TEST(ProjectOrReinitTest, InsideBallUnchanged) {
  Rng rng(6);
  Matrix d = Gaussian(3, 4, rng);
  d *= 0.5 * 2.0 / d.norm();
  const auto [out, flag] = project_or_reinit(d, 2.0, {}, rng);
  EXPECT_FALSE(flag);
  EXPECT_EQ(out, d);
}

TEST(ProjectOrReinitTest, OutsideBallReinitializes) {
  Rng rng(7);
  Matrix d = Gaussian(3, 4, rng);
  d *= 2.0 * 2.0 / d.norm();
  const auto [out, flag] = project_or_reinit(d, 2.0, {true, false, false}, rng);
  EXPECT_TRUE(flag);
  EXPECT_LE(out.norm(), 2.0);
  EXPECT_TRUE(out.row(0).isZero(0));
  EXPECT_THROW(project_or_reinit(d, 0.0, {}, rng), InvalidConfig);
}

TEST(ProjectOrReinitTest, MonteCarloDraws) {
  Rng rng(8);
  const double eps = 3.0;
  const Eigen::Index n = 6, d = 5;
  const std::vector<bool> prot = {true, false, false, false, false, true};
  double max_norm = 0.0, sum_norm = 0.0, sum_entry = 0.0, sum_sq = 0.0;
  long entries = 0;
  for (int i = 0; i < 10000; ++i) {
    const Matrix m = draw_reinit(n, d, eps, prot, rng);
    max_norm = std::max(max_norm, m.norm());
    sum_norm += m.norm();
    ASSERT_TRUE(m.row(0).isZero(0));
    ASSERT_TRUE(m.row(5).isZero(0));
    for (Eigen::Index r = 1; r < 5; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) {
        const double v = m(r, c);
        ASSERT_LE(std::abs(v), eps / std::sqrt(double(n * d)) + 1e-15);
        sum_entry += v;
        sum_sq += v * v;
        ++entries;
      }
    }
  }
  EXPECT_LE(max_norm, eps);
  EXPECT_GT(sum_norm / 10000, 0.0);
  // Uniform on [-s, s] has mean 0 and variance s^2 / 3.
  const double s = eps / std::sqrt(double(n * d));
  EXPECT_NEAR(sum_entry / entries, 0.0, 0.01 * s);
  EXPECT_NEAR(sum_sq / entries, s * s / 3.0, 0.02 * s * s);
}

TEST(MaskRandomTokenTest, SingleChoiceForced) {
  const Vocabulary& v = shared_tiny_model()->vocabulary();
  Rng rng(9);
  TokenSequence t{{v.bos_id, 20, v.eos_id}, {true, false, true}, "x"};
  const TokenSequence out = mask_random_token(t, v, rng);
  EXPECT_EQ(out.token_ids, (TokenIds{v.bos_id, v.mask_id, v.eos_id}));
  EXPECT_EQ(out.special_mask, t.special_mask);
  EXPECT_EQ(out.surface, "[MASK]");
}

TEST(MaskRandomTokenTest, UniformOverTenPositions) {
  const Vocabulary& v = shared_tiny_model()->vocabulary();
  Rng rng(10);
  TokenSequence t;
  for (int i = 0; i < 10; ++i) {
    t.token_ids.push_back(30 + i);
    t.special_mask.push_back(false);
  }
  std::map<int, int> hits;
  for (int draw = 0; draw < 10000; ++draw) {
    const TokenSequence out = mask_random_token(t, v, rng);
    int masked = 0;
    for (int i = 0; i < 10; ++i) {
      if (out.token_ids[i] == v.mask_id) {
        ++masked;
        ++hits[i];
      } else {
        ASSERT_EQ(out.token_ids[i], t.token_ids[i]);
      }
    }
    ASSERT_EQ(masked, 1);
  }
  for (int i = 0; i < 10; ++i) {
    EXPECT_NEAR(hits[i] / 10000.0, 0.1, 0.02) << "position " << i;
  }
}

TEST(MaskRandomTokenTest, AllSpecialThrows) {
  const Vocabulary& v = shared_tiny_model()->vocabulary();
  Rng rng(11);
  TokenSequence t{{v.bos_id, v.eos_id}, {true, true}, ""};
  EXPECT_THROW(mask_random_token(t, v, rng), NoMaskablePosition);
}

TEST(SessionSeedTest, DependsOnSeedAndIdOnly) {
  EXPECT_EQ(session_seed(3, "a"), session_seed(3, "a"));
  EXPECT_NE(session_seed(3, "a"), session_seed(3, "b"));
  EXPECT_NE(session_seed(3, "a"), session_seed(4, "a"));
  EXPECT_EQ(similarity_text("x y", std::nullopt), "x y");
  EXPECT_EQ(similarity_text("x", std::string("y")), "x y");
}

class RunAttackTest : public ::testing::Test {
 protected:
  std::shared_ptr<const TinyModel> model_ = shared_tiny_model();
  MeanEmbedCosine scorer_{model_};
  AntonymLexicon lexicon_;
  AttackResources resources_{*model_, scorer_, lexicon_};

  std::vector<LabeledSample> Samples(int n, std::uint64_t seed) {
    SyntheticCorpusOptions opts;
    opts.num_samples = n;
    opts.seed = seed;
    std::vector<LabeledSample> out;
    for (auto& s : make_synthetic_corpus(opts)) {
      if (model_->predict(s.text_a) == s.gold_label) out.push_back(s);
    }
    return out;
  }
};

TEST_F(RunAttackTest, NeverFlippingVictimExhausts) {
  AttackConfig cfg;
  cfg.max_queries = 3;
  cfg.max_iterations = 200;
  for (const auto& s : Samples(20, 31)) {
    const int gold = s.gold_label;
    auto adapter = std::make_shared<FunctionVictim>(
        2, [gold](std::string_view, std::optional<std::string_view>) { return gold; });
    VictimClient client(adapter, cfg.max_queries);
    const AttackOutcome o = run_attack(s, resources_, client, cfg);
    EXPECT_FALSE(o.success);
    EXPECT_FALSE(o.adversarial_text.has_value());
    EXPECT_LE(o.queries_used, cfg.max_queries);
    EXPECT_EQ(o.queries_used, adapter->answered());
    EXPECT_LE(o.iterations_used, cfg.max_iterations);
  }
}

TEST_F(RunAttackTest, QueryProtocolHolds) {
  AttackConfig cfg;
  cfg.use_threshold = 0.5;
  for (bool mask : {false, true}) {
    cfg.mask_one_token = mask;
    for (const auto& s : Samples(40, 32)) {
      auto adapter = std::make_shared<InProcessVictim>("tiny", model_);
      VictimClient client(adapter, cfg.max_queries);
      AttackTrace trace;
      const AttackOutcome o = run_attack(s, resources_, client, cfg, {&trace});

      // adv_0 and the clean input are never queried; queried similarities
      // strictly increase; every query is logged and accounted.
      std::vector<TokenIds> seen = {trace.initial_decoding, trace.original};
      std::optional<double> best;
      std::size_t logged = 0;
      for (const auto& e : trace.entries) {
        const bool novel = std::find(seen.begin(), seen.end(), e.tokens) == seen.end();
        EXPECT_EQ(e.novel, novel);
        seen.push_back(e.tokens);
        if (!e.queried) continue;
        EXPECT_TRUE(e.novel);
        EXPECT_TRUE(e.antonym_ok);
        ASSERT_TRUE(e.similarity.has_value());
        if (best) EXPECT_GT(*e.similarity, *best);
        best = e.similarity;
        ASSERT_LT(logged, client.query_log().size());
        EXPECT_EQ(client.query_log()[logged].decision, *e.decision);
        ++logged;
      }
      EXPECT_EQ(logged, client.query_log().size());
      EXPECT_EQ(o.queries_used, client.queries_made());
      EXPECT_EQ(o.queries_used, adapter->answered());
      if (o.success) {
        ASSERT_TRUE(o.final_similarity.has_value());
        EXPECT_GT(*o.final_similarity, cfg.use_threshold);
        EXPECT_NE(client.query_log().back().decision.predicted_label, s.gold_label);
        EXPECT_EQ(*o.adversarial_text, trace.entries.back().text);
      }
    }
  }
}

TEST_F(RunAttackTest, FindsAdversariesOnSeparableTask) {
  AttackConfig cfg;
  cfg.use_threshold = 0.5;
  cfg.mask_one_token = false;
  int attempted = 0, succeeded = 0;
  for (const auto& s : Samples(60, 33)) {
    auto adapter = std::make_shared<InProcessVictim>("tiny", model_);
    VictimClient client(adapter, cfg.max_queries);
    succeeded += run_attack(s, resources_, client, cfg).success;
    ++attempted;
  }
  EXPECT_GT(2 * succeeded, attempted);
}

TEST_F(RunAttackTest, DeterministicPerSeed) {
  AttackConfig cfg;
  cfg.use_threshold = 0.5;
  cfg.random_seed = 12;
  for (const auto& s : Samples(10, 34)) {
    auto a1 = std::make_shared<InProcessVictim>("tiny", model_);
    auto a2 = std::make_shared<InProcessVictim>("tiny", model_);
    VictimClient c1(a1, cfg.max_queries), c2(a2, cfg.max_queries);
    EXPECT_EQ(run_attack(s, resources_, c1, cfg), run_attack(s, resources_, c2, cfg));
  }
}

TEST_F(RunAttackTest, StepReportsRespectBall) {
  AttackConfig cfg;
  cfg.alpha = 2.0;
  cfg.epsilon = 3.0;
  cfg.max_queries = 1000;
  int steps = 0, reinits = 0;
  AttackHooks hooks;
  hooks.on_step = [&](const StepReport& r) {
    ++steps;
    reinits += r.reinitialized;
    EXPECT_LE(r.delta_norm, cfg.epsilon * (1 + 1e-12));
    EXPECT_EQ(r.step, steps);
    EXPECT_TRUE(std::isfinite(r.loss));
  };
  const LabeledSample s = Samples(5, 35).front();
  auto adapter = std::make_shared<FunctionVictim>(
      2, [&](std::string_view, std::optional<std::string_view>) { return s.gold_label; });
  VictimClient client(adapter, cfg.max_queries);
  run_attack(s, resources_, client, cfg, hooks);
  EXPECT_EQ(steps, cfg.max_iterations);
  EXPECT_GT(reinits, 0);
}

TEST_F(RunAttackTest, ValidatesConfigAndInput) {
  AttackConfig cfg;
  cfg.beta = 1.0;
  auto adapter = std::make_shared<InProcessVictim>("tiny", model_);
  VictimClient client(adapter, 5);
  const LabeledSample s{"x", "good film", std::nullopt, 1, 2};
  EXPECT_THROW(run_attack(s, resources_, client, cfg), InvalidConfig);
  const LabeledSample bad{"y", "zebra", std::nullopt, 1, 2};
  EXPECT_THROW(run_attack(bad, resources_, client, AttackConfig{}), TokenizationError);
  EXPECT_EQ(client.queries_made(), 0);
}

}  // namespace
}  // namespace tpgd
