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

#include "tpgd/selfcheck.h"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <memory>
#include <sstream>

#include "tpgd/perturb.h"
#include "tpgd/reconstruct.h"
#include "tpgd/synthetic.h"
#include "tpgd/victim.h"

namespace tpgd {
namespace {

template <typename Fn>
CheckResult timed(std::string name, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r;
  r.name = std::move(name);
  try {
    fn(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("threw: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                  .count();
  return r;
}

std::vector<LabeledSample> corpus(int n, std::uint64_t seed) {
  SyntheticCorpusOptions opts;
  opts.num_samples = n;
  opts.seed = seed;
  return make_synthetic_corpus(opts);
}

}  // namespace

std::vector<CheckResult> run_selftest(const TinyModel& model, std::uint64_t seed) {
  std::vector<CheckResult> results;
  Rng rng(seed);

  results.push_back(timed("gradient-vs-central-differences", [&](CheckResult& r) {
    const auto samples = corpus(20, seed + 1);
    std::normal_distribution<double> noise(0.0, 0.3);
    double worst = 0.0;
    for (const auto& s : samples) {
      const TokenSequence tokens = model.tokenize(s.text_a);
      const EmbeddedInput base = model.embed(tokens);
      Matrix delta(base.seq_len(), base.dim());
      for (Eigen::Index i = 0; i < delta.size(); ++i) delta.data()[i] = noise(rng);
      const LossAndGrad lg = model.loss_and_grad(tokens, base, delta, s.gold_label, -1.0);
      Matrix numeric(delta.rows(), delta.cols());
      const double h = 1e-4;
      for (Eigen::Index i = 0; i < delta.size(); ++i) {
        Matrix plus = delta, minus = delta;
        plus.data()[i] += h;
        minus.data()[i] -= h;
        numeric.data()[i] =
            (model.loss_and_grad(tokens, base, plus, s.gold_label, -1.0).loss -
             model.loss_and_grad(tokens, base, minus, s.gold_label, -1.0).loss) /
            (2 * h);
      }
      const double rel = (lg.grad - numeric).norm() /
                         std::max({lg.grad.norm(), numeric.norm(), 1e-12});
      worst = std::max(worst, rel);
    }
    r.passed = worst < 1e-4;
    std::ostringstream d;
    d << "max relative error " << std::scientific << std::setprecision(2) << worst;
    r.detail = d.str();
  }));

  results.push_back(timed("pgd-ball-geometry", [&](CheckResult& r) {
    int violations = 0;
    std::uniform_int_distribution<int> rows(3, 8);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
      const int n = rows(rng);
      std::vector<bool> prot(static_cast<std::size_t>(n), false);
      prot.front() = prot.back() = true;
      PerturbationState state;
      state.delta = Matrix::Zero(n, 4);
      state.protected_rows = prot;
      for (int step = 0; step < 10; ++step) {
        Matrix g(n, 4);
        for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
        const Matrix before = state.delta;
        const bool reinit = pgd_step_inplace(state, g, 0.7, 2.0, rng);
        if (state.delta.norm() > 2.0 * (1 + 1e-12)) ++violations;
        if (!reinit && std::abs((state.delta - before).norm() - 0.7) > 0.7e-6) {
          ++violations;
        }
        if (!state.delta.row(0).isZero(0) || !state.delta.row(n - 1).isZero(0)) {
          ++violations;
        }
      }
    }
    r.passed = violations == 0;
    r.detail = std::to_string(violations) + " violations over 5000 steps";
  }));

  results.push_back(timed("clean-reconstruction", [&](CheckResult& r) {
    const auto samples = corpus(200, seed + 2);
    long total = 0, recovered = 0;
    for (const auto& s : samples) {
      const TokenSequence tokens = model.tokenize(s.text_a);
      const TokenSequence decoded = decode_tokens(
          model.mlm_logits(model.forward_hidden(model.embed(tokens))), tokens,
          model.vocabulary());
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens.special_mask[i]) continue;
        ++total;
        recovered += decoded.token_ids[i] == tokens.token_ids[i];
      }
    }
    const double rate = double(recovered) / double(total);
    r.passed = rate >= 0.99;
    r.detail = "recovered " + std::to_string(rate * 100.0) + "% of tokens";
  }));

  results.push_back(timed("end-to-end-attack", [&](CheckResult& r) {
    auto shared = std::make_shared<const TinyModel>(model);
    auto adapter = std::make_shared<InProcessVictim>("inproc:tiny", shared);
    const MeanEmbedCosine scorer(shared);
    const AntonymLexicon lexicon;
    const AttackResources resources{*shared, scorer, lexicon};
    AttackConfig cfg;
    cfg.use_threshold = 0.5;
    cfg.mask_one_token = false;
    int attempted = 0, succeeded = 0, budget_violations = 0;
    for (const auto& s : corpus(40, seed + 3)) {
      if (shared->predict(s.text_a) != s.gold_label) continue;
      VictimClient client(adapter, cfg.max_queries);
      const AttackOutcome o = run_attack(s, resources, client, cfg);
      ++attempted;
      succeeded += o.success;
      budget_violations += o.queries_used > cfg.max_queries ||
                           o.queries_used != client.queries_made();
    }
    const double asr = attempted ? 100.0 * succeeded / attempted : 0.0;
    r.passed = attempted > 0 && budget_violations == 0 && asr >= 50.0;
    std::ostringstream d;
    d << "asr " << asr << "% over " << attempted << " samples, "
      << budget_violations << " budget violations";
    r.detail = d.str();
  }));

  return results;
}

}  // namespace tpgd
