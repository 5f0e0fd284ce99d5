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

#ifndef TPGD_TYPES_H_
#define TPGD_TYPES_H_

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace tpgd {

// Row-major dense matrix; rows are token positions.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using TokenIds = std::vector<int>;

struct LabeledSample {
  std::string id;
  std::string text_a;
  std::optional<std::string> text_b;  // second segment of a pair task
  int gold_label = 0;
  int num_classes = 2;

  bool operator==(const LabeledSample&) const = default;
};

// Throws tpgd::Error when a sample breaks its label or segment invariants.
void validate_sample(const LabeledSample& sample, bool pair_task);

struct TokenSequence {
  TokenIds token_ids;
  std::vector<bool> special_mask;  // true = delimiter/padding, never touched
  std::string surface;

  std::size_t size() const { return token_ids.size(); }
  bool is_special(std::size_t i) const { return special_mask[i]; }
  bool operator==(const TokenSequence&) const = default;
};

void validate_tokens(const TokenSequence& tokens);

// E, or E + delta. Row i is the embedding of token i.
struct EmbeddedInput {
  Matrix embeddings;

  Eigen::Index seq_len() const { return embeddings.rows(); }
  Eigen::Index dim() const { return embeddings.cols(); }
};

// Free parameters of the attack. Defaults are engineering choices.
struct AttackConfig {
  double alpha = 1.0;          // step size
  double epsilon = 5.0;        // L2 radius of the perturbation ball
  double beta = -1.0;          // weight of the MLM reconstruction loss
  double use_threshold = 0.7;  // similarity threshold T
  int max_iterations = 50;
  int max_queries = 30;
  bool mask_one_token = true;
  std::int64_t random_seed = 0;

  bool operator==(const AttackConfig&) const = default;
};

// Returns cfg unchanged or throws InvalidConfig naming the first bad field.
AttackConfig validate_config(const AttackConfig& cfg);

// Mutable search state of a single attack session.
struct PerturbationState {
  Matrix delta;
  int step = 0;
  EmbeddedInput base;
  std::vector<bool> protected_rows;
  std::set<TokenIds> previous_decodings;
  std::optional<double> best_similarity;  // none acts as -infinity
};

PerturbationState make_initial_state(const EmbeddedInput& base,
                                     const TokenSequence& tokens,
                                     const TokenIds& initial_decoding);

struct CandidateAdversary {
  TokenSequence tokens;
  double similarity_to_original = 0.0;
  bool is_novel = false;
  int iteration_found = 0;

  bool operator==(const CandidateAdversary&) const = default;
};

// The victim's answer. Holds a label and nothing else.
struct Decision {
  int predicted_label = 0;

  bool operator==(const Decision&) const = default;
};

struct AttackOutcome {
  std::string sample_id;
  bool success = false;
  std::optional<std::string> adversarial_text;
  int queries_used = 0;
  int iterations_used = 0;
  std::optional<double> final_similarity;

  bool operator==(const AttackOutcome&) const = default;
};

}  // namespace tpgd

#endif  // TPGD_TYPES_H_
