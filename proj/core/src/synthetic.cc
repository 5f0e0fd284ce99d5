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

#include "tpgd/synthetic.h"

#include <algorithm>
#include <random>
#include <string>

#include "tpgd/errors.h"
#include "tpgd/tiny_model.h"

namespace tpgd {

std::vector<LabeledSample> make_synthetic_corpus(
    const SyntheticCorpusOptions& options) {
  if (options.min_words < 3 || options.max_words < options.min_words) {
    throw Error("synthetic corpus needs 3 <= min_words <= max_words");
  }
  const Vocabulary& vocab = tiny_vocabulary();
  std::vector<std::string> positive, negative, neutral;
  for (int id = 0; id < vocab.size(); ++id) {
    if (vocab.is_special(id)) continue;
    const std::string& w = vocab.pieces[static_cast<std::size_t>(id)];
    switch (tiny_word_polarity(w)) {
      case 1: positive.push_back(w); break;
      case -1: negative.push_back(w); break;
      default: neutral.push_back(w); break;
    }
  }

  std::mt19937_64 rng(options.seed);
  auto pick = [&](const std::vector<std::string>& pool) {
    return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
  };
  std::bernoulli_distribution single_margin(options.single_margin_rate);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> length(options.min_words, options.max_words);

  std::vector<LabeledSample> out;
  out.reserve(static_cast<std::size_t>(options.num_samples));
  for (int n = 0; n < options.num_samples; ++n) {
    const int label = coin(rng) ? 1 : 0;
    const auto& same = label == 1 ? positive : negative;
    const auto& other = label == 1 ? negative : positive;
    const int words = length(rng);
    std::vector<std::string> sentence;
    if (single_margin(rng)) {
      sentence.push_back(pick(same));
      // Optionally a cancelling pair, keeping |score| = 1.
      if (words >= 5 && coin(rng)) {
        sentence.push_back(pick(same));
        sentence.push_back(pick(other));
      }
    } else {
      sentence.push_back(pick(same));
      sentence.push_back(pick(same));
    }
    while (static_cast<int>(sentence.size()) < words) {
      sentence.push_back(pick(neutral));
    }
    std::shuffle(sentence.begin(), sentence.end(), rng);

    LabeledSample s;
    s.id = "syn-" + std::to_string(n);
    for (const auto& w : sentence) {
      if (!s.text_a.empty()) s.text_a += ' ';
      s.text_a += w;
    }
    s.gold_label = label;
    s.num_classes = 2;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace tpgd
