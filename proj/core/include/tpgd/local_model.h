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

#ifndef TPGD_LOCAL_MODEL_H_
#define TPGD_LOCAL_MODEL_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tpgd/types.h"

namespace tpgd {

// Token inventory of a local model. Ids index `pieces`.
struct Vocabulary {
  std::vector<std::string> pieces;
  std::vector<bool> special;  // delimiters, padding and [MASK]
  int pad_id = 0;
  int bos_id = 1;
  int eos_id = 2;
  int sep_id = 3;
  int mask_id = 4;

  int size() const { return static_cast<int>(pieces.size()); }
  bool is_special(int id) const { return special.at(static_cast<std::size_t>(id)); }
  std::optional<int> find(std::string_view piece) const;

  // WordPiece convention: a piece starting with "##" continues the
  // previous word.
  static bool is_continuation(std::string_view piece);
};

struct HiddenStates {
  Matrix states;  // [seq_len x hidden width]
};

struct Segments {
  std::string text_a;
  std::optional<std::string> text_b;
};

// Composite objective L = L_task + beta * L_mlm at E + delta, with its
// gradient with respect to delta.
struct LossAndGrad {
  double loss = 0.0;
  double task_loss = 0.0;
  double mlm_loss = 0.0;
  Matrix grad;
};

// The attacker-owned encoder. Splits a classifier into embedding layer,
// hidden layers and task head, and exposes an MLM head over the hidden
// states. Implementations are immutable after construction and safe for
// concurrent use.
class LocalModel {
 public:
  static constexpr int kFinalLayer = -1;

  virtual ~LocalModel() = default;

  virtual std::string family() const = 0;
  virtual const Vocabulary& vocabulary() const = 0;
  virtual int dim() const = 0;
  virtual int num_classes() const = 0;
  // Number of hidden layers forward_hidden can stop at (layer 0 is the
  // embedding output itself).
  virtual int num_layers() const = 0;

  virtual TokenSequence tokenize(
      std::string_view text_a,
      std::optional<std::string_view> text_b = std::nullopt) const = 0;
  virtual Segments detokenize(const TokenSequence& tokens) const = 0;

  virtual EmbeddedInput embed(const TokenSequence& tokens) const = 0;
  virtual HiddenStates forward_hidden(const EmbeddedInput& emb,
                                      int layer = kFinalLayer) const = 0;
  virtual Vector task_logits(const HiddenStates& h) const = 0;
  virtual Matrix mlm_logits(const HiddenStates& h) const = 0;

  // `tokens` supplies the reconstruction targets and special positions.
  // Throws NonFiniteLoss if the forward pass is not finite.
  virtual LossAndGrad loss_and_grad(const TokenSequence& tokens,
                                    const EmbeddedInput& emb,
                                    const Matrix& delta, int gold,
                                    double beta) const = 0;

  // Argmax of the task head on the clean input.
  int predict(std::string_view text_a,
              std::optional<std::string_view> text_b = std::nullopt) const;
};

// Loads a local model by family name. "tiny" reads a TinyModel file; other
// families need a checkpoint adapter that satisfies LocalModel and throw
// UnsupportedModel here.
std::shared_ptr<const LocalModel> load_local_model(
    const std::string& family, const std::filesystem::path& path);

}  // namespace tpgd

#endif  // TPGD_LOCAL_MODEL_H_
