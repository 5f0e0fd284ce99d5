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

#include "tpgd/serialization.h"

#include <fstream>
#include <limits>

#include "tpgd/errors.h"

namespace tpgd {

using nlohmann::json;

namespace {

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> get_optional(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace

void to_json(json& j, const LabeledSample& v) {
  j = json{{"id", v.id},
           {"text_a", v.text_a},
           {"gold_label", v.gold_label},
           {"num_classes", v.num_classes}};
  put_optional(j, "text_b", v.text_b);
}

void from_json(const json& j, LabeledSample& v) {
  j.at("id").get_to(v.id);
  j.at("text_a").get_to(v.text_a);
  v.text_b = get_optional<std::string>(j, "text_b");
  j.at("gold_label").get_to(v.gold_label);
  j.at("num_classes").get_to(v.num_classes);
}

void to_json(json& j, const TokenSequence& v) {
  j = json{{"token_ids", v.token_ids},
           {"special_mask", v.special_mask},
           {"surface", v.surface}};
}

void from_json(const json& j, TokenSequence& v) {
  j.at("token_ids").get_to(v.token_ids);
  v.special_mask = j.at("special_mask").get<std::vector<bool>>();
  j.at("surface").get_to(v.surface);
}

json matrix_to_json(const Matrix& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 ||
      data.size() != static_cast<std::size_t>(rows * cols)) {
    throw ShapeError("matrix payload does not match its shape");
  }
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

void to_json(json& j, const EmbeddedInput& v) {
  j = json{{"embeddings", matrix_to_json(v.embeddings)}};
}

void from_json(const json& j, EmbeddedInput& v) {
  v.embeddings = matrix_from_json(j.at("embeddings"));
}

void to_json(json& j, const AttackConfig& v) {
  j = json{{"alpha", v.alpha},
           {"epsilon", v.epsilon},
           {"beta", v.beta},
           {"use_threshold", v.use_threshold},
           {"max_iterations", v.max_iterations},
           {"max_queries", v.max_queries},
           {"mask_one_token", v.mask_one_token},
           {"random_seed", v.random_seed}};
}

void from_json(const json& j, AttackConfig& v) { v = parse_config(j); }

void to_json(json& j, const PerturbationState& v) {
  j = json{{"delta", matrix_to_json(v.delta)},
           {"step", v.step},
           {"base", v.base},
           {"protected_rows", v.protected_rows},
           {"previous_decodings", v.previous_decodings}};
  put_optional(j, "best_similarity", v.best_similarity);
}

void from_json(const json& j, PerturbationState& v) {
  v.delta = matrix_from_json(j.at("delta"));
  j.at("step").get_to(v.step);
  j.at("base").get_to(v.base);
  v.protected_rows = j.at("protected_rows").get<std::vector<bool>>();
  v.previous_decodings = j.at("previous_decodings").get<std::set<TokenIds>>();
  v.best_similarity = get_optional<double>(j, "best_similarity");
}

void to_json(json& j, const CandidateAdversary& v) {
  j = json{{"tokens", v.tokens},
           {"similarity_to_original", v.similarity_to_original},
           {"is_novel", v.is_novel},
           {"iteration_found", v.iteration_found}};
}

void from_json(const json& j, CandidateAdversary& v) {
  j.at("tokens").get_to(v.tokens);
  j.at("similarity_to_original").get_to(v.similarity_to_original);
  j.at("is_novel").get_to(v.is_novel);
  j.at("iteration_found").get_to(v.iteration_found);
}

void to_json(json& j, const Decision& v) {
  j = json{{"label", v.predicted_label}};
}

void from_json(const json& j, Decision& v) {
  j.at("label").get_to(v.predicted_label);
}

void to_json(json& j, const AttackOutcome& v) {
  j = json{{"sample_id", v.sample_id},
           {"success", v.success},
           {"queries_used", v.queries_used},
           {"iterations_used", v.iterations_used}};
  put_optional(j, "adversarial_text", v.adversarial_text);
  put_optional(j, "final_similarity", v.final_similarity);
}

void from_json(const json& j, AttackOutcome& v) {
  j.at("sample_id").get_to(v.sample_id);
  j.at("success").get_to(v.success);
  v.adversarial_text = get_optional<std::string>(j, "adversarial_text");
  j.at("queries_used").get_to(v.queries_used);
  j.at("iterations_used").get_to(v.iterations_used);
  v.final_similarity = get_optional<double>(j, "final_similarity");
}

AttackConfig parse_config(const json& doc) {
  if (!doc.is_object()) {
    throw InvalidConfig("<document>", "config must be a JSON object");
  }
  AttackConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "alpha") {
        cfg.alpha = value.get<double>();
      } else if (key == "epsilon") {
        cfg.epsilon = value.get<double>();
      } else if (key == "beta") {
        cfg.beta = value.get<double>();
      } else if (key == "use_threshold") {
        cfg.use_threshold = value.get<double>();
      } else if (key == "max_iterations") {
        if (!value.is_number_integer()) throw InvalidConfig(key, "not an integer");
        cfg.max_iterations = value.get<int>();
      } else if (key == "max_queries") {
        if (!value.is_number_integer()) throw InvalidConfig(key, "not an integer");
        cfg.max_queries = value.get<int>();
      } else if (key == "mask_one_token") {
        cfg.mask_one_token = value.get<bool>();
      } else if (key == "random_seed") {
        if (!value.is_number_integer()) throw InvalidConfig(key, "not an integer");
        cfg.random_seed = value.get<std::int64_t>();
      } else {
        throw InvalidConfig(key, "unknown key");
      }
    } catch (const json::exception& e) {
      throw InvalidConfig(key, e.what());
    }
  }
  return validate_config(cfg);
}

AttackConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile(path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InvalidConfig("<document>", e.what());
  }
  return parse_config(doc);
}

std::string outcome_to_line(const AttackOutcome& outcome) {
  return json(outcome).dump();
}

}  // namespace tpgd
