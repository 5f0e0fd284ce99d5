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

#ifndef TPGD_PERTURB_H_
#define TPGD_PERTURB_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tpgd/local_model.h"
#include "tpgd/reconstruct.h"
#include "tpgd/types.h"
#include "tpgd/victim.h"

namespace tpgd {

using Rng = std::mt19937_64;

struct StepReport {
  int step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double delta_norm = 0.0;
  bool reinitialized = false;
};

// L = task_loss + beta * mlm_loss.
inline double composite_loss(double task_loss, double mlm_loss, double beta) {
  return task_loss + beta * mlm_loss;
}

// Random restart inside the ball: entries uniform in [-eps, eps] scaled by
// 1/sqrt(rows * cols), protected rows zero, norm clipped to epsilon.
Matrix draw_reinit(Eigen::Index rows, Eigen::Index cols, double epsilon,
                   const std::vector<bool>& protected_rows, Rng& rng);

// Keeps delta when ||delta||_F <= epsilon; otherwise replaces it with a
// fresh draw_reinit sample. The flag reports the replacement.
std::pair<Matrix, bool> project_or_reinit(const Matrix& delta, double epsilon,
                                          const std::vector<bool>& protected_rows,
                                          Rng& rng);

// delta <- Proj(delta + alpha * g / ||g||_F), with g's protected rows zeroed
// before normalization so the raw step has norm exactly alpha. Increments
// state.step. Throws DegenerateGradient (state untouched) when ||g|| < 1e-12.
// Returns whether the projection re-initialized.
bool pgd_step_inplace(PerturbationState& state, const Matrix& grad,
                      double alpha, double epsilon, Rng& rng);

PerturbationState pgd_step(const PerturbationState& state, const Matrix& grad,
                           double alpha, double epsilon, Rng& rng,
                           bool* reinitialized = nullptr);

// Replaces one uniformly chosen non-special position with [MASK].
// Throws NoMaskablePosition when every position is special.
TokenSequence mask_random_token(const TokenSequence& tokens,
                                const Vocabulary& vocab, Rng& rng);

// Per-iteration record of what the engine decoded and did with it.
struct TraceEntry {
  int iteration = 0;
  TokenIds tokens;
  std::string text;
  bool novel = false;
  std::optional<double> similarity;  // computed for novel decodings only
  bool improving = false;
  bool antonym_ok = false;
  bool queried = false;
  std::optional<Decision> decision;
};

struct AttackTrace {
  std::string original_text;
  TokenIds original;
  TokenIds initial_decoding;  // adv_0, from the (possibly masked) input
  std::vector<TraceEntry> entries;
};

struct AttackResources {
  const LocalModel& local;
  const SimilarityScorer& scorer;
  const AntonymLexicon& lexicon;
  int decode_layer = LocalModel::kFinalLayer;
};

struct AttackHooks {
  AttackTrace* trace = nullptr;
  std::function<void(const StepReport&)> on_step;
};

// Seed of one session: a mix of the configured seed and the sample id, so
// results do not depend on scheduling order.
std::uint64_t session_seed(std::int64_t random_seed, const std::string& sample_id);

// Joins the segments of a sample the way similarity is measured.
std::string similarity_text(std::string_view text_a,
                            const std::optional<std::string>& text_b);

// Decision-based attack on one sample. Assumes the victim classifies the
// sample correctly. Queries only novel, similarity-improving candidates that
// pass the antonym filter, and stops at the first label flip whose
// similarity exceeds the threshold or when iterations or queries run out.
AttackOutcome run_attack(const LabeledSample& sample,
                         const AttackResources& resources, VictimClient& victim,
                         const AttackConfig& cfg, const AttackHooks& hooks = {});

}  // namespace tpgd

#endif  // TPGD_PERTURB_H_
