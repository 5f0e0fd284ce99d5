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

#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "test_support.h"
#include "tpgd/errors.h"
#include "tpgd/reconstruct.h"
#include "tpgd/synthetic.h"

namespace tpgd {
namespace {

using testing::shared_tiny_model;

// Small WordPiece-style vocabulary for subword cases.
Vocabulary PieceVocab() {
  Vocabulary v;
  for (const char* s : {"[PAD]", "[BOS]", "[EOS]", "[SEP]", "[MASK]"}) {
    v.pieces.emplace_back(s);
    v.special.push_back(true);
  }
  for (const char* s : {"good", "bad", "great", "un", "##happy", "happy", "sad",
                        "film", "##s", "movie"}) {
    v.pieces.emplace_back(s);
    v.special.push_back(false);
  }
  return v;
}

int PieceId(const Vocabulary& v, std::string_view p) { return *v.find(p); }

TokenSequence Seq(TokenIds ids, const Vocabulary& v) {
  TokenSequence t;
  t.token_ids = std::move(ids);
  for (int id : t.token_ids) t.special_mask.push_back(v.is_special(id));
  return t;
}

TEST(DecodeTokensTest, OneHotRows) {
  const Vocabulary v = PieceVocab();
  const TokenSequence original = Seq({1, 5, 6, 2}, v);
  Matrix logits = Matrix::Zero(4, v.size());
  logits(1, 12) = 1.0;
  logits(2, 9) = 1.0;
  const TokenSequence d = decode_tokens(logits, original, v);
  EXPECT_EQ(d.token_ids, (TokenIds{1, 12, 9, 2}));
  EXPECT_EQ(d.special_mask, original.special_mask);
}

TEST(DecodeTokensTest, TiesGoToLowestNonSpecialId) {
  const Vocabulary v = PieceVocab();
  const TokenSequence original = Seq({1, 5, 2}, v);
  Matrix logits = Matrix::Zero(3, v.size());
  logits(1, 8) = 2.0;
  logits(1, 11) = 2.0;
  logits(1, 4) = 9.0;  // [MASK] is never a decoding
  EXPECT_EQ(decode_tokens(logits, original, v).token_ids, (TokenIds{1, 8, 2}));

  // All-equal row: lowest non-special id.
  EXPECT_EQ(decode_tokens(Matrix::Zero(3, v.size()), original, v).token_ids,
            (TokenIds{1, 5, 2}));
}

TEST(DecodeTokensTest, SpecialPositionsNeverChange) {
  const Vocabulary v = PieceVocab();
  const TokenSequence original = Seq({1, 5, 3, 6, 2}, v);
  Matrix logits = Matrix::Zero(5, v.size());
  logits.col(7).setConstant(10.0);
  const TokenSequence d = decode_tokens(logits, original, v);
  EXPECT_EQ(d.token_ids, (TokenIds{1, 7, 3, 7, 2}));
  EXPECT_THROW(decode_tokens(Matrix::Zero(4, v.size()), original, v), ShapeError);
  EXPECT_THROW(decode_tokens(Matrix::Zero(5, 3), original, v), ShapeError);
}

TEST(DecodeTokensTest, CleanTinyInputRecovered) {
  const auto& m = *shared_tiny_model();
  SyntheticCorpusOptions opts;
  opts.num_samples = 300;
  opts.seed = 77;
  for (const auto& s : make_synthetic_corpus(opts)) {
    const TokenSequence t = m.tokenize(s.text_a);
    const TokenSequence d =
        decode_tokens(m.mlm_logits(m.forward_hidden(m.embed(t))), t, m.vocabulary());
    EXPECT_EQ(d.token_ids, t.token_ids) << s.text_a;
  }
}

TEST(IsNovelTest, Examples) {
  const std::set<TokenIds> previous = {{1, 5, 6, 2}, {1, 7, 6, 2}};
  EXPECT_FALSE(is_novel({1, 5, 6, 2}, previous));
  EXPECT_TRUE(is_novel({1, 5, 8, 2}, previous));
  EXPECT_TRUE(is_novel({1, 6, 5, 2}, previous));
  EXPECT_TRUE(is_novel({1, 5, 6}, previous));
}

TEST(MeanEmbedCosineTest, IdentitySymmetryOrdering) {
  const MeanEmbedCosine scorer(shared_tiny_model());
  EXPECT_EQ(scorer.name(), "mean-embed-cosine");
  SyntheticCorpusOptions opts;
  opts.num_samples = 50;
  const auto corpus = make_synthetic_corpus(opts);
  for (std::size_t i = 0; i + 1 < corpus.size(); ++i) {
    const auto& a = corpus[i].text_a;
    const auto& b = corpus[i + 1].text_a;
    EXPECT_NEAR(scorer.score(a, a), 1.0, 1e-6);
    EXPECT_NEAR(scorer.score(a, b), scorer.score(b, a), 1e-9);
    EXPECT_LE(std::abs(scorer.score(a, b)), 1.0 + 1e-12);
  }
  // Word order does not matter to a mean; disjoint words score lower.
  EXPECT_NEAR(scorer.score("good film", "film good"), 1.0, 1e-12);
  EXPECT_LT(scorer.score("the good film", "a dull scene"),
            scorer.score("the good film", "the good film"));
  EXPECT_LT(scorer.score("the good film", "a dull scene"),
            scorer.score("the good film", "the good scene"));
  EXPECT_THROW(scorer.score("good", "zebra"), TokenizationError);
}

TEST(MeanEmbedCosineTest, MatchesHandComputedCosine) {
  const auto m = shared_tiny_model();
  const MeanEmbedCosine scorer(m);
  const auto& e = m->params().embedding;
  const Vocabulary& v = m->vocabulary();
  const Vector a = (e.row(*v.find("good")) + e.row(*v.find("film"))).transpose() / 2;
  const Vector b = (e.row(*v.find("bad")) + e.row(*v.find("film"))).transpose() / 2;
  EXPECT_NEAR(scorer.score("good film", "bad film"), a.dot(b) / (a.norm() * b.norm()),
              1e-12);
}

TEST(CosineTest, Basics) {
  Vector a(2), b(2);
  a << 1, 0;
  b << 0, 2;
  EXPECT_EQ(cosine_similarity(a, a), 1.0);
  EXPECT_EQ(cosine_similarity(a, b), 0.0);
  EXPECT_EQ(cosine_similarity(a, -a), -1.0);
  EXPECT_EQ(cosine_similarity(a, Vector::Zero(2)), 0.0);
}

TEST(ScorerFactoryTest, ByName) {
  EXPECT_EQ(make_similarity_scorer("mean-embed-cosine", shared_tiny_model())->name(),
            "mean-embed-cosine");
  EXPECT_EQ(make_similarity_scorer("external-sentence-encoder", nullptr,
                                   "http://127.0.0.1:9/encode")
                ->name(),
            "external-sentence-encoder");
  EXPECT_THROW(make_similarity_scorer("use", shared_tiny_model()), InvalidConfig);
  EXPECT_THROW(make_similarity_scorer("external-sentence-encoder", nullptr, ""), Error);
}

TEST(ExternalSentenceEncoderTest, CosineOfReturnedEmbeddings) {
  nlohmann::json last_request;
  testing::StubServer server("/encode", [&](const std::string& body) {
    last_request = nlohmann::json::parse(body);
    return std::make_pair(200, std::string(R"({"embeddings": [[1, 0, 1], [1, 1, 0]]})"));
  });
  const ExternalSentenceEncoder scorer(server.url());
  EXPECT_NEAR(scorer.score("a b", "c"), 0.5, 1e-12);
  EXPECT_EQ(last_request, (nlohmann::json{{"texts", {"a b", "c"}}}));
}

TEST(ExternalSentenceEncoderTest, Failures) {
  testing::StubServer broken("/encode", [](const std::string&) {
    return std::make_pair(200, std::string(R"({"embeddings": [[1, 0]]})"));
  });
  EXPECT_THROW(ExternalSentenceEncoder(broken.url()).score("a", "b"), Error);
  testing::StubServer down("/encode", [](const std::string&) {
    return std::make_pair(503, std::string("{}"));
  });
  EXPECT_THROW(ExternalSentenceEncoder(down.url()).score("a", "b"), RemoteUnavailable);
}

TEST(AntonymLexiconTest, ParseAndLookup) {
  const AntonymLexicon lex = AntonymLexicon::parse(
      "# fixture\n"
      "good\tbad\n"
      "\n"
      "Happy\tSAD\n"
      "good\tpoor\n");
  EXPECT_EQ(lex.antonyms("good"), (std::set<std::string>{"bad", "poor"}));
  EXPECT_EQ(lex.antonyms("BAD"), (std::set<std::string>{"good"}));
  EXPECT_TRUE(lex.are_antonyms("happy", "sad"));
  EXPECT_TRUE(lex.are_antonyms("Sad", "HAPPY"));
  EXPECT_FALSE(lex.are_antonyms("good", "great"));
  EXPECT_TRUE(lex.antonyms("film").empty());
}

TEST(AntonymLexiconTest, MalformedLineReportsLineNumber) {
  try {
    AntonymLexicon::parse("good\tbad\nonlyoneword\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(AntonymLexicon::parse("a\tb\tc\n"), ParseError);
  EXPECT_THROW(AntonymLexicon::load("/nonexistent/lexicon.tsv"), MissingFile);
}

TEST(AntonymLexiconTest, LoadsFixtureFile) {
  const AntonymLexicon lex =
      AntonymLexicon::load(std::string(TPGD_TEST_DATA_DIR) + "/antonyms.tsv");
  EXPECT_TRUE(lex.are_antonyms("good", "bad"));
  EXPECT_TRUE(lex.are_antonyms("awful", "great"));
}

TEST(AntonymFilterTest, Examples) {
  const Vocabulary v = PieceVocab();
  AntonymLexicon lex;
  lex.add("good", "bad");
  const TokenSequence original = Seq({1, PieceId(v, "good"), PieceId(v, "film"), 2}, v);
  const TokenSequence to_bad = Seq({1, PieceId(v, "bad"), PieceId(v, "film"), 2}, v);
  const TokenSequence to_great = Seq({1, PieceId(v, "great"), PieceId(v, "film"), 2}, v);
  EXPECT_FALSE(antonym_filter(original, to_bad, lex, v));
  EXPECT_TRUE(antonym_filter(original, to_great, lex, v));
  EXPECT_TRUE(antonym_filter(original, original, lex, v));
  EXPECT_TRUE(antonym_filter(original, to_bad, AntonymLexicon{}, v));
  EXPECT_THROW(antonym_filter(original, Seq({1, 2}, v), lex, v), ShapeError);
}

TEST(AntonymFilterTest, WholeWordUnits) {
  const Vocabulary v = PieceVocab();
  AntonymLexicon lex;
  lex.add("happy", "unhappy");
  // Piece by piece this is happy->un and film->##happy, neither an antonym
  // pair; as words it is happy->unhappy.
  const TokenSequence original =
      Seq({1, PieceId(v, "happy"), PieceId(v, "film"), 2}, v);
  const TokenSequence candidate =
      Seq({1, PieceId(v, "un"), PieceId(v, "##happy"), 2}, v);
  EXPECT_FALSE(antonym_filter(original, candidate, lex, v));

  // Changing only the continuation piece still implicates the whole word.
  const TokenSequence unhappy =
      Seq({1, PieceId(v, "un"), PieceId(v, "##happy"), 2}, v);
  const TokenSequence uns = Seq({1, PieceId(v, "un"), PieceId(v, "##s"), 2}, v);
  AntonymLexicon plural;
  plural.add("unhappy", "uns");
  EXPECT_FALSE(antonym_filter(unhappy, uns, plural, v));
  EXPECT_TRUE(antonym_filter(unhappy, uns, lex, v));
}

TEST(AcceptAdversaryTest, StrictThreshold) {
  CandidateAdversary c;
  c.similarity_to_original = 0.91;
  EXPECT_TRUE(accept_adversary(c, 0.7));
  c.similarity_to_original = 0.7;
  EXPECT_FALSE(accept_adversary(c, 0.7));
  c.similarity_to_original = 0.2;
  EXPECT_FALSE(accept_adversary(c, 0.7));
}

}  // namespace
}  // namespace tpgd
