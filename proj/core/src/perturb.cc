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

#include "tpgd/perturb.h"

#include <algorithm>
#include <cmath>

#include "tpgd/errors.h"

namespace tpgd {
namespace {

constexpr double kMinGradNorm = 1e-12;

void zero_rows(Matrix& m, const std::vector<bool>& protected_rows) {
  for (std::size_t i = 0; i < protected_rows.size(); ++i) {
    if (protected_rows[i]) m.row(static_cast<Eigen::Index>(i)).setZero();
  }
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

Matrix draw_reinit(Eigen::Index rows, Eigen::Index cols, double epsilon,
                   const std::vector<bool>& protected_rows, Rng& rng) {
  std::uniform_real_distribution<double> uniform(-epsilon, epsilon);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows * cols));
  Matrix delta(rows, cols);
  for (Eigen::Index i = 0; i < delta.size(); ++i) {
    delta.data()[i] = scale * uniform(rng);
  }
  zero_rows(delta, protected_rows);
  const double norm = delta.norm();
  if (norm > epsilon) delta *= epsilon / norm;
  return delta;
}

std::pair<Matrix, bool> project_or_reinit(const Matrix& delta, double epsilon,
                                          const std::vector<bool>& protected_rows,
                                          Rng& rng) {
  if (!(epsilon > 0.0)) throw InvalidConfig("epsilon", "must be positive");
  if (delta.norm() <= epsilon) return {delta, false};
  return {draw_reinit(delta.rows(), delta.cols(), epsilon, protected_rows, rng),
          true};
}

bool pgd_step_inplace(PerturbationState& state, const Matrix& grad,
                      double alpha, double epsilon, Rng& rng) {
  if (grad.rows() != state.delta.rows() || grad.cols() != state.delta.cols()) {
    throw ShapeError("pgd_step: gradient shape differs from delta");
  }
  if (!grad.allFinite()) throw NonFiniteLoss();
  Matrix direction = grad;
  zero_rows(direction, state.protected_rows);
  const double norm = direction.norm();
  if (norm < kMinGradNorm) throw DegenerateGradient(norm);
  Matrix candidate = state.delta + (alpha / norm) * direction;
  auto [projected, reinit] =
      project_or_reinit(candidate, epsilon, state.protected_rows, rng);
  state.delta = std::move(projected);
  ++state.step;
  return reinit;
}

PerturbationState pgd_step(const PerturbationState& state, const Matrix& grad,
                           double alpha, double epsilon, Rng& rng,
                           bool* reinitialized) {
  PerturbationState next = state;
  const bool reinit = pgd_step_inplace(next, grad, alpha, epsilon, rng);
  if (reinitialized) *reinitialized = reinit;
  return next;
}

TokenSequence mask_random_token(const TokenSequence& tokens,
                                const Vocabulary& vocab, Rng& rng) {
  validate_tokens(tokens);
  std::vector<std::size_t> maskable;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!tokens.special_mask[i]) maskable.push_back(i);
  }
  if (maskable.empty()) throw NoMaskablePosition();
  std::uniform_int_distribution<std::size_t> pick(0, maskable.size() - 1);
  TokenSequence out = tokens;
  out.token_ids[maskable[pick(rng)]] = vocab.mask_id;
  std::string surface;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int id = out.token_ids[i];
    if (out.special_mask[i] && id != vocab.sep_id) continue;
    if (!surface.empty()) surface += ' ';
    surface += vocab.pieces[static_cast<std::size_t>(id)];
  }
  out.surface = std::move(surface);
  return out;
}

std::uint64_t session_seed(std::int64_t random_seed,
                           const std::string& sample_id) {
  const auto seed = static_cast<std::uint64_t>(random_seed);
  const std::uint64_t id_hash = fnv1a(sample_id);
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id_hash),
                    static_cast<std::uint32_t>(id_hash >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[1]) << 32) | words[0];
}

std::string similarity_text(std::string_view text_a,
                            const std::optional<std::string>& text_b) {
  std::string out(text_a);
  if (text_b) {
    out += ' ';
    out += *text_b;
  }
  return out;
}

AttackOutcome run_attack(const LabeledSample& sample,
                         const AttackResources& resources, VictimClient& victim,
                         const AttackConfig& cfg, const AttackHooks& hooks) {
  validate_config(cfg);
  const LocalModel& local = resources.local;
  const Vocabulary& vocab = local.vocabulary();
  Rng rng(session_seed(cfg.random_seed, sample.id));

  const TokenSequence original = local.tokenize(
      sample.text_a, sample.text_b ? std::optional<std::string_view>(*sample.text_b)
                                   : std::nullopt);
  TokenSequence working = original;
  if (cfg.mask_one_token) working = mask_random_token(original, vocab, rng);

  const EmbeddedInput base = local.embed(working);
  auto decode = [&](const Matrix& embeddings) {
    const HiddenStates h =
        local.forward_hidden(EmbeddedInput{embeddings}, resources.decode_layer);
    return decode_tokens(local.mlm_logits(h), working, vocab);
  };
  const TokenSequence adv0 = decode(base.embeddings);

  PerturbationState state = make_initial_state(base, working, adv0.token_ids);
  // The clean sentence is already known to the victim; never spend a query on it.
  state.previous_decodings.insert(original.token_ids);

  const std::string original_text = similarity_text(sample.text_a, sample.text_b);
  if (hooks.trace) {
    hooks.trace->original_text = original_text;
    hooks.trace->original = original.token_ids;
    hooks.trace->initial_decoding = adv0.token_ids;
    hooks.trace->entries.clear();
  }

  AttackOutcome outcome;
  outcome.sample_id = sample.id;
  const int queries_at_start = victim.queries_made();
  auto queries_used = [&] { return victim.queries_made() - queries_at_start; };

  for (int iteration = 1; iteration <= cfg.max_iterations; ++iteration) {
    if (queries_used() >= cfg.max_queries || victim.remaining() <= 0) break;
    outcome.iterations_used = iteration;

    const LossAndGrad lg = local.loss_and_grad(working, base, state.delta,
                                               sample.gold_label, cfg.beta);
    StepReport report;
    report.loss = lg.loss;
    report.grad_norm = lg.grad.norm();
    try {
      report.reinitialized =
          pgd_step_inplace(state, lg.grad, cfg.alpha, cfg.epsilon, rng);
    } catch (const DegenerateGradient&) {
      state.delta = draw_reinit(state.delta.rows(), state.delta.cols(),
                                cfg.epsilon, state.protected_rows, rng);
      ++state.step;
      report.reinitialized = true;
    }
    report.step = state.step;
    report.delta_norm = state.delta.norm();
    if (hooks.on_step) hooks.on_step(report);

    const TokenSequence candidate = decode(base.embeddings + state.delta);
    TraceEntry entry;
    entry.iteration = iteration;
    entry.tokens = candidate.token_ids;
    entry.novel = is_novel(candidate.token_ids, state.previous_decodings);
    state.previous_decodings.insert(candidate.token_ids);

    auto record = [&] {
      if (hooks.trace) hooks.trace->entries.push_back(entry);
    };
    if (!entry.novel) {
      record();
      continue;
    }

    const Segments segments = local.detokenize(candidate);
    const std::string candidate_text =
        similarity_text(segments.text_a, segments.text_b);
    entry.text = candidate_text;
    const double similarity = resources.scorer.score(original_text, candidate_text);
    entry.similarity = similarity;
    entry.improving = !state.best_similarity || similarity > *state.best_similarity;
    if (!entry.improving) {
      record();
      continue;
    }
    entry.antonym_ok =
        antonym_filter(original, candidate, resources.lexicon, vocab);
    if (!entry.antonym_ok) {
      record();
      continue;
    }

    const Decision decision = victim.classify(
        segments.text_a, segments.text_b
                             ? std::optional<std::string_view>(*segments.text_b)
                             : std::nullopt);
    entry.queried = true;
    entry.decision = decision;
    record();
    state.best_similarity = similarity;

    const CandidateAdversary adversary{candidate, similarity, true, iteration};
    if (decision.predicted_label != sample.gold_label &&
        accept_adversary(adversary, cfg.use_threshold)) {
      outcome.success = true;
      outcome.adversarial_text = candidate_text;
      outcome.final_similarity = similarity;
      break;
    }
  }
  outcome.queries_used = queries_used();
  return outcome;
}

}  // namespace tpgd
