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

#include <memory>

#include <benchmark/benchmark.h>

#include "tpgd/perturb.h"
#include "tpgd/reconstruct.h"
#include "tpgd/synthetic.h"
#include "tpgd/tiny_model.h"
#include "tpgd/victim.h"

namespace {

using namespace tpgd;

std::shared_ptr<const TinyModel> Model() {
  static const auto model = std::make_shared<const TinyModel>(TinyModel::build({}));
  return model;
}

std::vector<LabeledSample> Samples(int n) {
  SyntheticCorpusOptions opts;
  opts.num_samples = n;
  opts.seed = 3;
  return make_synthetic_corpus(opts);
}

void BM_LossAndGrad(benchmark::State& state) {
  const auto model = Model();
  const TokenSequence tokens = model->tokenize("a good film with a nice scene");
  const EmbeddedInput base = model->embed(tokens);
  const Matrix delta = Matrix::Constant(base.seq_len(), base.dim(), 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model->loss_and_grad(tokens, base, delta, 1, -1.0));
  }
}
BENCHMARK(BM_LossAndGrad);

void BM_PgdStep(benchmark::State& state) {
  const auto n = state.range(0);
  Rng rng(1);
  PerturbationState s;
  s.delta = Matrix::Zero(n, 32);
  s.protected_rows.assign(static_cast<std::size_t>(n), false);
  s.protected_rows.front() = s.protected_rows.back() = true;
  const Matrix g = Matrix::Random(n, 32);
  for (auto _ : state) {
    pgd_step_inplace(s, g, 1.0, 5.0, rng);
    benchmark::DoNotOptimize(s.delta.data());
  }
}
BENCHMARK(BM_PgdStep)->Arg(8)->Arg(64)->Arg(512);

void BM_Decode(benchmark::State& state) {
  const auto model = Model();
  const TokenSequence tokens = model->tokenize("a good film with a nice scene");
  const Matrix logits = model->mlm_logits(model->forward_hidden(model->embed(tokens)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(decode_tokens(logits, tokens, model->vocabulary()));
  }
}
BENCHMARK(BM_Decode);

void BM_RunAttack(benchmark::State& state) {
  const auto model = Model();
  const MeanEmbedCosine scorer(model);
  const AntonymLexicon lexicon;
  const AttackResources resources{*model, scorer, lexicon};
  auto adapter = std::make_shared<InProcessVictim>("inproc:tiny", model);
  const auto samples = Samples(32);
  AttackConfig cfg;
  cfg.use_threshold = 0.5;
  cfg.mask_one_token = false;
  std::size_t i = 0;
  for (auto _ : state) {
    VictimClient client(adapter, cfg.max_queries);
    benchmark::DoNotOptimize(run_attack(samples[i++ % samples.size()], resources, client, cfg));
  }
}
BENCHMARK(BM_RunAttack)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
