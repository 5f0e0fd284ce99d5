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

#ifndef TPGD_TINY_MODEL_H_
#define TPGD_TINY_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tpgd/local_model.h"

namespace tpgd {

// Sentiment polarity of a tiny-vocabulary word: +1, -1 or 0.
int tiny_word_polarity(std::string_view word);

// The built-in 64-entry vocabulary: five specials followed by positive,
// negative and neutral words.
const Vocabulary& tiny_vocabulary();

struct TinyModelOptions {
  int dim = 32;
  int num_classes = 2;
  std::uint64_t seed = 7;
  double gamma = 0.5;             // strength of the bilinear context term
  double polarity_scale = 0.6;    // weight of the shared sentiment direction
  double weight_noise = 0.1;      // deviation of W from the identity
  int fit_corpus_size = 2000;
  int fit_epochs = 300;
  double fit_learning_rate = 1.0;
};

struct TinyModelParams {
  int dim = 0;
  int num_classes = 0;
  std::uint64_t seed = 0;
  double gamma = 0.0;
  Matrix embedding;   // [V x d], shared by input layer and MLM head
  Matrix w;           // [d x d]
  Vector b;           // [d]
  Matrix a;           // [d x d]
  Matrix bmix;        // [d x d]
  Vector mlm_bias;    // [V]
  Matrix cls_w;       // [K x d]
  Vector cls_b;       // [K]
};

// Desk-scale reference encoder with closed-form gradients.
//
//   c   = mean_j x_j
//   h_i = W x_i + b + gamma * (A x_i) .* (B c)
//   task logits = C mean_i(h_i) + c_b
//   mlm logits  = h_i Emb^T + m
//
// The MLM head reuses the embedding table, so with W close to the identity
// and a small gamma each clean position decodes back to its own token.
class TinyModel final : public LocalModel {
 public:
  explicit TinyModel(TinyModelParams params);

  // Deterministic construction from a seed; the task head is fitted on the
  // synthetic sentiment corpus when num_classes == 2.
  static TinyModel build(const TinyModelOptions& options);

  static TinyModel load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::string family() const override { return "tiny"; }
  const Vocabulary& vocabulary() const override { return tiny_vocabulary(); }
  int dim() const override { return params_.dim; }
  int num_classes() const override { return params_.num_classes; }
  int num_layers() const override { return 1; }

  TokenSequence tokenize(
      std::string_view text_a,
      std::optional<std::string_view> text_b = std::nullopt) const override;
  Segments detokenize(const TokenSequence& tokens) const override;

  EmbeddedInput embed(const TokenSequence& tokens) const override;
  HiddenStates forward_hidden(const EmbeddedInput& emb,
                              int layer = kFinalLayer) const override;
  Vector task_logits(const HiddenStates& h) const override;
  Matrix mlm_logits(const HiddenStates& h) const override;
  LossAndGrad loss_and_grad(const TokenSequence& tokens,
                            const EmbeddedInput& emb, const Matrix& delta,
                            int gold, double beta) const override;

  const TinyModelParams& params() const { return params_; }

 private:
  TinyModelParams params_;
};

}  // namespace tpgd

#endif  // TPGD_TINY_MODEL_H_
