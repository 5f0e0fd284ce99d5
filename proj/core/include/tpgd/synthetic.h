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

#ifndef TPGD_SYNTHETIC_H_
#define TPGD_SYNTHETIC_H_

#include <cstdint>
#include <vector>

#include "tpgd/types.h"

namespace tpgd {

struct SyntheticCorpusOptions {
  int num_samples = 100;
  int min_words = 3;
  int max_words = 6;            // plus BOS/EOS stays within 8 tokens
  double single_margin_rate = 0.9;  // share of sentences with |score| = 1
  std::uint64_t seed = 1;
};

// Linearly separable two-class sentiment corpus over the tiny vocabulary:
// the label is the sign of the summed word polarities, which is never zero.
std::vector<LabeledSample> make_synthetic_corpus(
    const SyntheticCorpusOptions& options);

}  // namespace tpgd

#endif  // TPGD_SYNTHETIC_H_
