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

#ifndef TPGD_DATASET_H_
#define TPGD_DATASET_H_

#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tpgd/types.h"
#include "tpgd/victim.h"

namespace tpgd {

enum class DatasetFormat { kSingleText, kTextPair };

struct DatasetSpec {
  std::string name;
  int num_classes = 2;
  DatasetFormat format = DatasetFormat::kSingleText;
  std::filesystem::path source_path;
};

// Known benchmark layouts: sst2 (2 classes), mnli (3, pairs), agnews (4).
std::optional<DatasetSpec> dataset_preset(const std::string& name);

std::string to_string(DatasetFormat format);
DatasetFormat parse_dataset_format(const std::string& text);

// Reads JSON-lines {"text_a", "text_b"?, "label", "id"?} or, for other
// extensions, tab-separated "text_a[<TAB>text_b]<TAB>label". Ids default to
// "<name>-<line>". Throws MissingFile or ParseError(line).
std::vector<LabeledSample> load_dataset(const DatasetSpec& spec);

// Writes samples in the canonical JSON-lines layout.
void write_dataset(const std::filesystem::path& path,
                   const std::vector<LabeledSample>& samples);

// Visits samples in a seeded random order and keeps the first n that the
// victim labels correctly. Every visit costs one query from `victim`, which
// is separate from any attack budget. Throws InsufficientCorrect.
std::vector<LabeledSample> sample_correct(const std::vector<LabeledSample>& samples,
                                          VictimClient& victim, std::size_t n,
                                          std::mt19937_64& rng);

}  // namespace tpgd

#endif  // TPGD_DATASET_H_
