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

#include "tpgd/tiny_model.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "tpgd/errors.h"
#include "tpgd/synthetic.h"

namespace tpgd {
namespace {

constexpr std::array<const char*, 5> kSpecials = {"[PAD]", "[BOS]", "[EOS]",
                                                  "[SEP]", "[MASK]"};
constexpr std::array<const char*, 12> kPositive = {
    "good",     "great",    "excellent", "fine",     "happy",     "nice",
    "superb",   "lovely",   "brilliant", "pleasant", "wonderful", "charming"};
constexpr std::array<const char*, 12> kNegative = {
    "bad",  "awful", "terrible", "poor", "sad",      "nasty",
    "dull", "ugly",  "boring",   "weak", "dreadful", "horrible"};
constexpr std::array<const char*, 35> kNeutral = {
    "the",   "a",      "an",     "movie",  "film",  "plot",     "story",
    "actor", "actress", "scene", "music",  "script", "cast",    "director",
    "camera", "ending", "show",  "was",    "is",    "it",       "this",
    "that",  "and",    "of",     "with",   "very",  "quite",    "rather",
    "about", "its",    "at",     "in",     "on",    "for",      "to"};
static_assert(kSpecials.size() + kPositive.size() + kNegative.size() +
                  kNeutral.size() ==
              64);

constexpr char kMagic[8] = {'T', 'P', 'G', 'D', 'T', 'I', 'N', 'Y'};
constexpr std::uint32_t kFormatVersion = 1;

Vocabulary build_vocabulary() {
  Vocabulary v;
  for (const char* s : kSpecials) {
    v.pieces.emplace_back(s);
    v.special.push_back(true);
  }
  for (const auto* list : {kPositive.data(), kNegative.data()}) {
    for (std::size_t i = 0; i < 12; ++i) {
      v.pieces.emplace_back(list[i]);
      v.special.push_back(false);
    }
  }
  for (const char* s : kNeutral) {
    v.pieces.emplace_back(s);
    v.special.push_back(false);
  }
  return v;
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, double stddev,
                std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

double log_sum_exp(const Eigen::Ref<const Vector>& z) {
  const double top = z.maxCoeff();
  return top + std::log((z.array() - top).exp().sum());
}

Vector softmax(const Eigen::Ref<const Vector>& z) {
  Vector e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

void check_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                 const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream msg;
    msg << what << " has shape " << m.rows() << "x" << m.cols()
        << ", expected " << rows << "x" << cols;
    throw ShapeError(msg.str());
  }
}

// Flat little-endian serialization helpers.
template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error("tiny model file is truncated");
  return value;
}

void write_array(std::ostream& out, const double* data, Eigen::Index n) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(n * sizeof(double)));
}

void read_array(std::istream& in, double* data, Eigen::Index n) {
  in.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw Error("tiny model file is truncated");
}

}  // namespace

const Vocabulary& tiny_vocabulary() {
  static const Vocabulary vocab = build_vocabulary();
  return vocab;
}

int tiny_word_polarity(std::string_view word) {
  for (const char* w : kPositive) {
    if (word == w) return 1;
  }
  for (const char* w : kNegative) {
    if (word == w) return -1;
  }
  return 0;
}

TinyModel::TinyModel(TinyModelParams params) : params_(std::move(params)) {
  const Eigen::Index d = params_.dim;
  const Eigen::Index vocab = tiny_vocabulary().size();
  const Eigen::Index k = params_.num_classes;
  if (d < 1 || k < 1) throw ShapeError("tiny model needs dim and classes > 0");
  check_shape(params_.embedding, vocab, d, "embedding");
  check_shape(params_.w, d, d, "W");
  check_shape(params_.a, d, d, "A");
  check_shape(params_.bmix, d, d, "B");
  check_shape(params_.cls_w, k, d, "classifier");
  if (params_.b.size() != d || params_.mlm_bias.size() != vocab ||
      params_.cls_b.size() != k) {
    throw ShapeError("tiny model bias vector has the wrong length");
  }
}

TinyModel TinyModel::build(const TinyModelOptions& options) {
  if (options.dim < 2 || options.num_classes < 1) {
    throw ShapeError("tiny model needs dim >= 2 and num_classes >= 1");
  }
  const Vocabulary& vocab = tiny_vocabulary();
  const Eigen::Index d = options.dim;
  std::mt19937_64 rng(options.seed);

  TinyModelParams p;
  p.dim = options.dim;
  p.num_classes = options.num_classes;
  p.seed = options.seed;
  p.gamma = options.gamma;

  // Unit-norm embeddings. Polar words are p*u + c with |c| = sqrt(1 - p^2)
  // orthogonal to the sentiment direction u; the k-th positive and k-th
  // negative word share the same context part c.
  Vector direction = gaussian(d, 1, 1.0, rng);
  direction.normalize();
  p.embedding = gaussian(vocab.size(), d, 1.0 / std::sqrt(double(d)), rng);
  const double pol = std::clamp(options.polarity_scale, 0.0, 1.0);
  const int first_polar = static_cast<int>(kSpecials.size());
  const int num_pairs = static_cast<int>(kPositive.size());
  for (int id = 0; id < vocab.size(); ++id) {
    const int polarity = vocab.is_special(id)
                             ? 0
                             : tiny_word_polarity(vocab.pieces[id]);
    if (polarity == 0) {
      p.embedding.row(id).normalize();
      continue;
    }
    const int pair = (id - first_polar) % num_pairs;
    Vector context = p.embedding.row(first_polar + pair).transpose();
    context -= context.dot(direction) * direction;
    context *= std::sqrt(1.0 - pol * pol) / context.norm();
    p.embedding.row(id) = (pol * polarity * direction + context).transpose();
  }

  const double scale = 1.0 / std::sqrt(double(d));
  p.w = Matrix::Identity(d, d) + options.weight_noise * gaussian(d, d, scale, rng);
  p.b = 0.01 * Vector(gaussian(d, 1, 1.0, rng));
  p.a = gaussian(d, d, scale, rng);
  p.bmix = gaussian(d, d, scale, rng);
  p.mlm_bias = Vector::Zero(vocab.size());
  p.cls_w = gaussian(options.num_classes, d, scale, rng);
  p.cls_b = Vector::Zero(options.num_classes);

  if (options.num_classes == 2 && options.fit_corpus_size > 0) {
    // Softmax regression on the pooled hidden states; the encoder is fixed.
    TinyModel encoder(p);
    SyntheticCorpusOptions corpus_opts;
    corpus_opts.num_samples = options.fit_corpus_size;
    corpus_opts.seed = options.seed ^ 0x5eed5eedULL;
    const auto corpus = make_synthetic_corpus(corpus_opts);
    const auto n = static_cast<Eigen::Index>(corpus.size());
    Matrix features(n, d);
    std::vector<int> labels;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& s = corpus[static_cast<std::size_t>(i)];
      features.row(i) = encoder.forward_hidden(encoder.embed(encoder.tokenize(s.text_a)))
                            .states.colwise()
                            .mean()
                            .transpose();
      labels.push_back(s.gold_label);
    }
    Matrix cls_w = Matrix::Zero(2, d);
    Vector cls_b = Vector::Zero(2);
    for (int epoch = 0; epoch < options.fit_epochs; ++epoch) {
      Matrix grad_w = Matrix::Zero(2, d);
      Vector grad_b = Vector::Zero(2);
      for (Eigen::Index i = 0; i < n; ++i) {
        Vector g = softmax(cls_w * features.row(i).transpose() + cls_b);
        g(labels[static_cast<std::size_t>(i)]) -= 1.0;
        grad_w += g * features.row(i);
        grad_b += g;
      }
      cls_w -= options.fit_learning_rate * (grad_w / double(n) + 1e-4 * cls_w);
      cls_b -= options.fit_learning_rate * grad_b / double(n);
    }
    p.cls_w = cls_w;
    p.cls_b = cls_b;
  }
  return TinyModel(std::move(p));
}

TokenSequence TinyModel::tokenize(std::string_view text_a,
                                  std::optional<std::string_view> text_b) const {
  const Vocabulary& vocab = vocabulary();
  TokenSequence out;
  auto push = [&](int id, bool special) {
    out.token_ids.push_back(id);
    out.special_mask.push_back(special);
  };
  auto push_words = [&](std::string_view text) {
    std::istringstream words{std::string(text)};
    std::string word;
    bool any = false;
    while (words >> word) {
      auto id = vocab.find(word);
      if (!id || vocab.is_special(*id)) {
        throw TokenizationError("word '" + word +
                                "' is outside the tiny vocabulary");
      }
      push(*id, false);
      any = true;
    }
    if (!any) throw TokenizationError("segment has no words");
  };
  push(vocab.bos_id, true);
  push_words(text_a);
  if (text_b) {
    push(vocab.sep_id, true);
    push_words(*text_b);
  }
  push(vocab.eos_id, true);
  const Segments seg = detokenize(out);
  out.surface = seg.text_b ? seg.text_a + " [SEP] " + *seg.text_b : seg.text_a;
  return out;
}

Segments TinyModel::detokenize(const TokenSequence& tokens) const {
  const Vocabulary& vocab = vocabulary();
  Segments seg;
  std::string* current = &seg.text_a;
  for (int id : tokens.token_ids) {
    if (id == vocab.sep_id) {
      seg.text_b.emplace();
      current = &*seg.text_b;
      continue;
    }
    if (id == vocab.bos_id || id == vocab.eos_id || id == vocab.pad_id) continue;
    const std::string& piece = vocab.pieces.at(static_cast<std::size_t>(id));
    if (Vocabulary::is_continuation(piece)) {
      *current += piece.substr(2);
      continue;
    }
    if (!current->empty()) *current += ' ';
    *current += piece;
  }
  return seg;
}

EmbeddedInput TinyModel::embed(const TokenSequence& tokens) const {
  validate_tokens(tokens);
  EmbeddedInput out;
  out.embeddings.resize(static_cast<Eigen::Index>(tokens.size()), params_.dim);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const int id = tokens.token_ids[i];
    if (id < 0 || id >= params_.embedding.rows()) {
      throw TokenizationError("token id " + std::to_string(id) +
                              " outside the vocabulary");
    }
    out.embeddings.row(static_cast<Eigen::Index>(i)) = params_.embedding.row(id);
  }
  return out;
}

HiddenStates TinyModel::forward_hidden(const EmbeddedInput& emb,
                                       int layer) const {
  const Matrix& x = emb.embeddings;
  if (x.cols() != params_.dim || x.rows() < 1) {
    throw ShapeError("embedding width does not match the tiny model");
  }
  if (layer == 0) return HiddenStates{x};
  if (layer != kFinalLayer && layer != 1) {
    throw ShapeError("tiny model has a single hidden layer");
  }
  const Vector context = x.colwise().mean().transpose();
  const Vector mix = params_.bmix * context;
  Matrix h = x * params_.w.transpose();
  h.rowwise() += params_.b.transpose();
  const Matrix u = x * params_.a.transpose();
  h += params_.gamma * (u.array().rowwise() * mix.transpose().array()).matrix();
  return HiddenStates{std::move(h)};
}

Vector TinyModel::task_logits(const HiddenStates& h) const {
  const Vector pooled = h.states.colwise().mean().transpose();
  return params_.cls_w * pooled + params_.cls_b;
}

Matrix TinyModel::mlm_logits(const HiddenStates& h) const {
  Matrix z = h.states * params_.embedding.transpose();
  z.rowwise() += params_.mlm_bias.transpose();
  return z;
}

LossAndGrad TinyModel::loss_and_grad(const TokenSequence& tokens,
                                     const EmbeddedInput& emb,
                                     const Matrix& delta, int gold,
                                     double beta) const {
  validate_tokens(tokens);
  const Eigen::Index n = emb.seq_len();
  const Eigen::Index d = params_.dim;
  if (static_cast<std::size_t>(n) != tokens.size() || emb.dim() != d ||
      delta.rows() != n || delta.cols() != d) {
    throw ShapeError("loss_and_grad: token, embedding and delta shapes differ");
  }
  if (gold < 0 || gold >= params_.num_classes) {
    throw ShapeError("loss_and_grad: gold label outside the class range");
  }

  const EmbeddedInput x{emb.embeddings + delta};
  const Vector context = x.embeddings.colwise().mean().transpose();
  const Vector mix = params_.bmix * context;
  const Matrix u = x.embeddings * params_.a.transpose();
  const HiddenStates h = forward_hidden(x);

  // Task cross-entropy on the pooled state.
  const Vector logits = task_logits(h);
  const double task_loss = log_sum_exp(logits) - logits(gold);
  Vector task_grad = softmax(logits);
  task_grad(gold) -= 1.0;
  // dL/dh_i, identical for every row before the MLM term.
  Matrix grad_h(n, d);
  grad_h.rowwise() = (params_.cls_w.transpose() * task_grad).transpose() / double(n);

  // Mean MLM cross-entropy over positions that carry a real token.
  const Vocabulary& vocab = vocabulary();
  const Matrix z = mlm_logits(h);
  std::vector<Eigen::Index> targets;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    if (!tokens.special_mask[idx] && tokens.token_ids[idx] != vocab.mask_id) {
      targets.push_back(i);
    }
  }
  double mlm_loss = 0.0;
  if (!targets.empty()) {
    const double weight = 1.0 / double(targets.size());
    for (Eigen::Index i : targets) {
      const int target = tokens.token_ids[static_cast<std::size_t>(i)];
      const Vector row = z.row(i).transpose();
      mlm_loss += weight * (log_sum_exp(row) - row(target));
      Vector g = softmax(row);
      g(target) -= 1.0;
      grad_h.row(i) += beta * weight * (g.transpose() * params_.embedding);
    }
  }

  const double loss = task_loss + beta * mlm_loss;
  if (!std::isfinite(loss)) throw NonFiniteLoss();

  // Back through h_i = W x_i + b + gamma (A x_i) .* (B c).
  Matrix grad = grad_h * params_.w;
  grad += params_.gamma *
          ((grad_h.array().rowwise() * mix.transpose().array()).matrix() *
           params_.a);
  const Vector through_context =
      params_.gamma * (grad_h.array() * u.array()).colwise().sum().transpose();
  grad.rowwise() += (params_.bmix.transpose() * through_context).transpose() /
                    double(n);
  if (!grad.allFinite()) throw NonFiniteLoss();

  return LossAndGrad{loss, task_loss, mlm_loss, std::move(grad)};
}

void TinyModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write tiny model to " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kFormatVersion);
  write_pod<std::int32_t>(out, params_.dim);
  write_pod<std::int32_t>(out, vocabulary().size());
  write_pod<std::int32_t>(out, params_.num_classes);
  write_pod<std::uint64_t>(out, params_.seed);
  write_pod<double>(out, params_.gamma);
  for (const Matrix* m : {&params_.embedding, &params_.w, &params_.a,
                          &params_.bmix, &params_.cls_w}) {
    write_array(out, m->data(), m->size());
  }
  for (const Vector* v : {&params_.b, &params_.mlm_bias, &params_.cls_b}) {
    write_array(out, v->data(), v->size());
  }
  if (!out) throw Error("failed writing tiny model to " + path.string());
}

TinyModel TinyModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile(path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(path.string() + " is not a tiny model file");
  }
  if (read_pod<std::uint32_t>(in) != kFormatVersion) {
    throw Error(path.string() + ": unsupported tiny model version");
  }
  TinyModelParams p;
  p.dim = read_pod<std::int32_t>(in);
  const auto vocab_size = read_pod<std::int32_t>(in);
  p.num_classes = read_pod<std::int32_t>(in);
  p.seed = read_pod<std::uint64_t>(in);
  p.gamma = read_pod<double>(in);
  if (vocab_size != tiny_vocabulary().size() || p.dim < 1 || p.dim > 4096 ||
      p.num_classes < 1 || p.num_classes > 4096) {
    throw Error(path.string() + ": header does not describe a tiny model");
  }
  const Eigen::Index d = p.dim;
  p.embedding.resize(vocab_size, d);
  p.w.resize(d, d);
  p.a.resize(d, d);
  p.bmix.resize(d, d);
  p.cls_w.resize(p.num_classes, d);
  p.b.resize(d);
  p.mlm_bias.resize(vocab_size);
  p.cls_b.resize(p.num_classes);
  for (Matrix* m : {&p.embedding, &p.w, &p.a, &p.bmix, &p.cls_w}) {
    read_array(in, m->data(), m->size());
  }
  for (Vector* v : {&p.b, &p.mlm_bias, &p.cls_b}) {
    read_array(in, v->data(), v->size());
  }
  return TinyModel(std::move(p));
}

}  // namespace tpgd
