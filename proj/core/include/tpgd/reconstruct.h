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

#ifndef TPGD_RECONSTRUCT_H_
#define TPGD_RECONSTRUCT_H_

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>

#include "tpgd/local_model.h"
#include "tpgd/types.h"

namespace tpgd {

// Argmax decode of per-position vocabulary logits. Special positions are
// copied from `original`; other positions take the highest-scoring
// non-special vocabulary entry, ties going to the lowest id.
TokenSequence decode_tokens(const Matrix& logits, const TokenSequence& original,
                            const Vocabulary& vocab);

// True iff `candidate` differs position-wise from every stored sequence.
bool is_novel(const TokenIds& candidate, const std::set<TokenIds>& previous);

// Sentence similarity in [-1, 1]; symmetric, score(t, t) = 1.
class SimilarityScorer {
 public:
  virtual ~SimilarityScorer() = default;
  virtual std::string name() const = 0;
  virtual double score(std::string_view a, std::string_view b) const = 0;
};

// Cosine between the mean token embeddings of the local model. Desk-scale
// stand-in for a sentence encoder.
class MeanEmbedCosine final : public SimilarityScorer {
 public:
  explicit MeanEmbedCosine(std::shared_ptr<const LocalModel> model);
  std::string name() const override { return "mean-embed-cosine"; }
  double score(std::string_view a, std::string_view b) const override;

 private:
  Vector mean_embedding(std::string_view text) const;
  std::shared_ptr<const LocalModel> model_;
};

// Sentence-encoder service: POST {"texts": [a, b]} to the endpoint and
// expect {"embeddings": [[...], [...]]}. The cosine is taken locally.
class ExternalSentenceEncoder final : public SimilarityScorer {
 public:
  explicit ExternalSentenceEncoder(
      std::string url,
      std::chrono::milliseconds timeout = std::chrono::milliseconds(10000));
  std::string name() const override { return "external-sentence-encoder"; }
  double score(std::string_view a, std::string_view b) const override;

 private:
  std::string url_;
  std::chrono::milliseconds timeout_;
};

// "mean-embed-cosine" needs `model`; "external-sentence-encoder" needs
// `endpoint`.
std::unique_ptr<SimilarityScorer> make_similarity_scorer(
    const std::string& name, std::shared_ptr<const LocalModel> model,
    const std::string& endpoint = "");

double cosine_similarity(const Vector& a, const Vector& b);

// Case-insensitive word -> antonyms map. Pairs are stored in both
// directions.
class AntonymLexicon {
 public:
  AntonymLexicon() = default;

  // One "word<TAB>antonym" pair per line; blank lines and '#' comments are
  // skipped. Throws ParseError on a malformed line.
  static AntonymLexicon load(const std::filesystem::path& path);
  static AntonymLexicon parse(std::string_view text);

  void add(std::string_view word, std::string_view antonym);
  const std::set<std::string>& antonyms(std::string_view word) const;
  bool are_antonyms(std::string_view a, std::string_view b) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, std::set<std::string>> entries_;
};

// Returns false (reject) iff some changed position turns the word that
// contains it into one of that word's antonyms. Sequences must have equal
// length.
bool antonym_filter(const TokenSequence& original,
                    const TokenSequence& candidate, const AntonymLexicon& lex,
                    const Vocabulary& vocab);

// Final acceptance of a queried, label-flipping candidate.
inline bool accept_adversary(const CandidateAdversary& candidate,
                             double threshold) {
  return candidate.similarity_to_original > threshold;
}

}  // namespace tpgd

#endif  // TPGD_RECONSTRUCT_H_
