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

#include "tpgd/reconstruct.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "http_util.h"
#include "tpgd/errors.h"

namespace tpgd {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Word spans of a token sequence: word_of[i] is the index of the word that
// contains position i, or -1 for special positions.
struct Words {
  std::vector<int> word_of;
  std::vector<std::string> text;
};

Words split_words(const TokenSequence& seq, const Vocabulary& vocab) {
  Words w;
  w.word_of.assign(seq.size(), -1);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (seq.special_mask[i]) continue;
    const std::string& piece =
        vocab.pieces.at(static_cast<std::size_t>(seq.token_ids[i]));
    const bool continues = Vocabulary::is_continuation(piece) && i > 0 &&
                           w.word_of[i - 1] >= 0;
    if (continues) {
      w.word_of[i] = w.word_of[i - 1];
      w.text.back() += piece.substr(2);
    } else {
      w.word_of[i] = static_cast<int>(w.text.size());
      w.text.push_back(piece);
    }
  }
  return w;
}

}  // namespace

TokenSequence decode_tokens(const Matrix& logits, const TokenSequence& original,
                            const Vocabulary& vocab) {
  validate_tokens(original);
  if (logits.rows() != static_cast<Eigen::Index>(original.size()) ||
      logits.cols() != vocab.size()) {
    throw ShapeError("decode_tokens: logits shape does not match sequence");
  }
  TokenSequence out = original;
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (original.special_mask[i]) continue;
    const auto row = static_cast<Eigen::Index>(i);
    int best = -1;
    double best_logit = 0.0;
    for (int v = 0; v < vocab.size(); ++v) {
      if (vocab.is_special(v)) continue;
      if (best < 0 || logits(row, v) > best_logit) {
        best = v;
        best_logit = logits(row, v);
      }
    }
    out.token_ids[i] = best;
  }
  std::string surface;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::string& piece =
        vocab.pieces[static_cast<std::size_t>(out.token_ids[i])];
    if (out.special_mask[i] && out.token_ids[i] != vocab.sep_id) continue;
    if (Vocabulary::is_continuation(piece)) {
      surface += piece.substr(2);
      continue;
    }
    if (!surface.empty()) surface += ' ';
    surface += piece;
  }
  out.surface = std::move(surface);
  return out;
}

bool is_novel(const TokenIds& candidate, const std::set<TokenIds>& previous) {
  return previous.find(candidate) == previous.end();
}

double cosine_similarity(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ShapeError("cosine: length mismatch");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return a == b ? 1.0 : 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

MeanEmbedCosine::MeanEmbedCosine(std::shared_ptr<const LocalModel> model)
    : model_(std::move(model)) {
  if (!model_) throw Error("mean-embed-cosine needs a local model");
}

Vector MeanEmbedCosine::mean_embedding(std::string_view text) const {
  const TokenSequence tokens = model_->tokenize(text);
  const EmbeddedInput emb = model_->embed(tokens);
  Vector sum = Vector::Zero(emb.dim());
  int count = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens.special_mask[i]) continue;
    sum += emb.embeddings.row(static_cast<Eigen::Index>(i)).transpose();
    ++count;
  }
  return count > 0 ? Vector(sum / double(count)) : sum;
}

double MeanEmbedCosine::score(std::string_view a, std::string_view b) const {
  if (a == b) return 1.0;
  return cosine_similarity(mean_embedding(a), mean_embedding(b));
}

ExternalSentenceEncoder::ExternalSentenceEncoder(std::string url,
                                                 std::chrono::milliseconds timeout)
    : url_(std::move(url)), timeout_(timeout) {
  if (url_.empty()) throw Error("external-sentence-encoder needs an endpoint");
}

double ExternalSentenceEncoder::score(std::string_view a,
                                      std::string_view b) const {
  const nlohmann::json request = {{"texts", {std::string(a), std::string(b)}}};
  const auto response = internal::http_post(url_, request.dump(),
                                            "application/json", timeout_);
  if (!response || response->status != 200) {
    throw RemoteUnavailable("sentence encoder at " + url_ + " did not answer");
  }
  try {
    const auto doc = nlohmann::json::parse(response->body);
    const auto rows = doc.at("embeddings").get<std::vector<std::vector<double>>>();
    if (rows.size() != 2 || rows[0].size() != rows[1].size() || rows[0].empty()) {
      throw Error("sentence encoder returned malformed embeddings");
    }
    const Vector va = Eigen::Map<const Vector>(rows[0].data(),
                                               static_cast<Eigen::Index>(rows[0].size()));
    const Vector vb = Eigen::Map<const Vector>(rows[1].data(),
                                               static_cast<Eigen::Index>(rows[1].size()));
    return cosine_similarity(va, vb);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("sentence encoder response: ") + e.what());
  }
}

std::unique_ptr<SimilarityScorer> make_similarity_scorer(
    const std::string& name, std::shared_ptr<const LocalModel> model,
    const std::string& endpoint) {
  if (name == "mean-embed-cosine") {
    return std::make_unique<MeanEmbedCosine>(std::move(model));
  }
  if (name == "external-sentence-encoder") {
    return std::make_unique<ExternalSentenceEncoder>(endpoint);
  }
  throw InvalidConfig("scorer", "unknown similarity scorer '" + name + "'");
}

AntonymLexicon AntonymLexicon::parse(std::string_view text) {
  AntonymLexicon lex;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto tab = body.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError(line_no, "expected 'word<TAB>antonym'");
    }
    const auto word = trim(body.substr(0, tab));
    const auto antonym = trim(body.substr(tab + 1));
    if (word.empty() || antonym.empty() ||
        antonym.find('\t') != std::string_view::npos) {
      throw ParseError(line_no, "expected 'word<TAB>antonym'");
    }
    lex.add(word, antonym);
  }
  return lex;
}

AntonymLexicon AntonymLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile(path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

void AntonymLexicon::add(std::string_view word, std::string_view antonym) {
  const std::string a = lower(word);
  const std::string b = lower(antonym);
  entries_[a].insert(b);
  entries_[b].insert(a);
}

const std::set<std::string>& AntonymLexicon::antonyms(std::string_view word) const {
  static const std::set<std::string> kEmpty;
  auto it = entries_.find(lower(word));
  return it == entries_.end() ? kEmpty : it->second;
}

bool AntonymLexicon::are_antonyms(std::string_view a, std::string_view b) const {
  return antonyms(a).count(lower(b)) > 0;
}

bool antonym_filter(const TokenSequence& original,
                    const TokenSequence& candidate, const AntonymLexicon& lex,
                    const Vocabulary& vocab) {
  if (original.size() != candidate.size()) {
    throw ShapeError("antonym_filter: sequences differ in length");
  }
  if (lex.size() == 0) return true;
  const Words before = split_words(original, vocab);
  const Words after = split_words(candidate, vocab);
  for (std::size_t i = 0; i < original.size(); ++i) {
    if (original.token_ids[i] == candidate.token_ids[i]) continue;
    const int wb = before.word_of[i];
    const int wa = after.word_of[i];
    if (wb < 0 || wa < 0) continue;
    if (lex.are_antonyms(before.text[static_cast<std::size_t>(wb)],
                         after.text[static_cast<std::size_t>(wa)])) {
      return false;
    }
  }
  return true;
}

}  // namespace tpgd
