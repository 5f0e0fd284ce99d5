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

#include "tpgd/types.h"

#include <cmath>

#include "tpgd/errors.h"

namespace tpgd {

void validate_sample(const LabeledSample& sample, bool pair_task) {
  if (sample.num_classes < 1) {
    throw Error("sample '" + sample.id + "': num_classes must be positive");
  }
  if (sample.gold_label < 0 || sample.gold_label >= sample.num_classes) {
    throw Error("sample '" + sample.id + "': label " +
                std::to_string(sample.gold_label) + " outside [0, " +
                std::to_string(sample.num_classes) + ")");
  }
  if (sample.text_a.empty()) {
    throw Error("sample '" + sample.id + "': text_a is empty");
  }
  if (pair_task != sample.text_b.has_value()) {
    throw Error("sample '" + sample.id + "': text_b " +
                (pair_task ? "missing for a pair task"
                           : "present for a single-text task"));
  }
}

void validate_tokens(const TokenSequence& tokens) {
  if (tokens.token_ids.empty()) {
    throw ShapeError("token sequence is empty");
  }
  if (tokens.token_ids.size() != tokens.special_mask.size()) {
    throw ShapeError("token_ids and special_mask differ in length");
  }
}

AttackConfig validate_config(const AttackConfig& cfg) {
  if (!(cfg.alpha > 0.0) || !std::isfinite(cfg.alpha)) {
    throw InvalidConfig("alpha", "must be a positive finite step size");
  }
  if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon)) {
    throw InvalidConfig("epsilon", "must be a positive finite radius");
  }
  if (!(cfg.beta < 0.0) || !std::isfinite(cfg.beta)) {
    throw InvalidConfig("beta", "must be strictly negative");
  }
  if (!(cfg.use_threshold >= 0.0 && cfg.use_threshold <= 1.0)) {
    throw InvalidConfig("use_threshold", "must lie in [0, 1]");
  }
  if (cfg.max_iterations < 1) {
    throw InvalidConfig("max_iterations", "must be at least 1");
  }
  if (cfg.max_queries < 1) {
    throw InvalidConfig("max_queries", "must be at least 1");
  }
  return cfg;
}

PerturbationState make_initial_state(const EmbeddedInput& base,
                                     const TokenSequence& tokens,
                                     const TokenIds& initial_decoding) {
  validate_tokens(tokens);
  if (static_cast<std::size_t>(base.seq_len()) != tokens.size()) {
    throw ShapeError("embedding rows do not match token count");
  }
  PerturbationState state;
  state.base = base;
  state.delta = Matrix::Zero(base.seq_len(), base.dim());
  state.protected_rows = tokens.special_mask;
  state.previous_decodings.insert(initial_decoding);
  return state;
}

}  // namespace tpgd
