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

#include "tpgd/dataset.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tpgd/errors.h"

namespace tpgd {
namespace {

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

int parse_label(const std::string& text, std::size_t line_no) {
  std::size_t used = 0;
  int label = 0;
  try {
    label = std::stoi(text, &used);
  } catch (const std::exception&) {
    throw ParseError(line_no, "label '" + text + "' is not an integer");
  }
  if (used != text.size()) {
    throw ParseError(line_no, "label '" + text + "' is not an integer");
  }
  return label;
}

LabeledSample parse_json_line(const std::string& line, std::size_t line_no) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line_no, e.what());
  }
  if (!doc.is_object()) throw ParseError(line_no, "expected a JSON object");
  LabeledSample s;
  try {
    s.text_a = doc.at("text_a").get<std::string>();
    if (auto it = doc.find("text_b"); it != doc.end() && !it->is_null()) {
      s.text_b = it->get<std::string>();
    }
    const auto& label = doc.at("label");
    if (!label.is_number_integer()) throw ParseError(line_no, "label is not an integer");
    s.gold_label = label.get<int>();
    if (auto it = doc.find("id"); it != doc.end()) {
      s.id = it->is_string() ? it->get<std::string>() : it->dump();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line_no, e.what());
  }
  return s;
}

LabeledSample parse_tsv_line(const std::string& line, std::size_t line_no,
                             const DatasetSpec& spec) {
  std::vector<std::string> fields;
  std::stringstream in(line);
  std::string field;
  while (std::getline(in, field, '\t')) fields.push_back(field);
  const std::size_t expected =
      spec.format == DatasetFormat::kTextPair ? 3 : 2;
  if (fields.size() != expected) {
    throw ParseError(line_no, "expected " + std::to_string(expected) +
                                  " tab-separated fields, got " +
                                  std::to_string(fields.size()));
  }
  LabeledSample s;
  s.text_a = fields[0];
  if (expected == 3) s.text_b = fields[1];
  std::string label = fields.back();
  if (!label.empty() && label.back() == '\r') label.pop_back();
  s.gold_label = parse_label(label, line_no);
  return s;
}

}  // namespace

std::optional<DatasetSpec> dataset_preset(const std::string& name) {
  if (name == "sst2") return DatasetSpec{name, 2, DatasetFormat::kSingleText, {}};
  if (name == "mnli") return DatasetSpec{name, 3, DatasetFormat::kTextPair, {}};
  if (name == "agnews") return DatasetSpec{name, 4, DatasetFormat::kSingleText, {}};
  return std::nullopt;
}

std::string to_string(DatasetFormat format) {
  return format == DatasetFormat::kTextPair ? "text-pair" : "single-text";
}

DatasetFormat parse_dataset_format(const std::string& text) {
  if (text == "single-text") return DatasetFormat::kSingleText;
  if (text == "text-pair") return DatasetFormat::kTextPair;
  throw InvalidConfig("format", "expected single-text or text-pair");
}

std::vector<LabeledSample> load_dataset(const DatasetSpec& spec) {
  std::ifstream in(spec.source_path);
  if (!in) throw MissingFile(spec.source_path.string());
  const auto ext = spec.source_path.extension().string();
  const bool json_lines = ext == ".jsonl" || ext == ".json" || ext == ".ndjson";
  const bool pair = spec.format == DatasetFormat::kTextPair;

  std::vector<LabeledSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    LabeledSample s = json_lines ? parse_json_line(line, line_no)
                                 : parse_tsv_line(line, line_no, spec);
    if (s.id.empty()) s.id = spec.name + "-" + std::to_string(line_no);
    s.num_classes = spec.num_classes;
    try {
      validate_sample(s, pair);
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_dataset(const std::filesystem::path& path,
                   const std::vector<LabeledSample>& samples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write dataset to " + path.string());
  for (const auto& s : samples) {
    nlohmann::json j = {{"id", s.id}, {"text_a", s.text_a}, {"label", s.gold_label}};
    if (s.text_b) j["text_b"] = *s.text_b;
    out << j.dump() << '\n';
  }
}

std::vector<LabeledSample> sample_correct(const std::vector<LabeledSample>& samples,
                                          VictimClient& victim, std::size_t n,
                                          std::mt19937_64& rng) {
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<LabeledSample> chosen;
  for (std::size_t idx : order) {
    if (chosen.size() == n) break;
    const LabeledSample& s = samples[idx];
    const Decision d = victim.classify(
        s.text_a, s.text_b ? std::optional<std::string_view>(*s.text_b)
                           : std::nullopt);
    if (d.predicted_label == s.gold_label) chosen.push_back(s);
  }
  if (chosen.size() < n) throw InsufficientCorrect(chosen.size(), n);
  return chosen;
}

}  // namespace tpgd
