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

#include "tpgd/local_model.h"

#include <algorithm>

#include "tpgd/errors.h"
#include "tpgd/tiny_model.h"

namespace tpgd {

std::optional<int> Vocabulary::find(std::string_view piece) const {
  auto it = std::find(pieces.begin(), pieces.end(), piece);
  if (it == pieces.end()) return std::nullopt;
  return static_cast<int>(it - pieces.begin());
}

bool Vocabulary::is_continuation(std::string_view piece) {
  return piece.size() > 2 && piece.substr(0, 2) == "##";
}

int LocalModel::predict(std::string_view text_a,
                        std::optional<std::string_view> text_b) const {
  const Vector logits =
      task_logits(forward_hidden(embed(tokenize(text_a, text_b))));
  Eigen::Index best = 0;
  logits.maxCoeff(&best);
  return static_cast<int>(best);
}

std::shared_ptr<const LocalModel> load_local_model(
    const std::string& family, const std::filesystem::path& path) {
  if (family == "tiny") {
    return std::make_shared<const TinyModel>(TinyModel::load(path));
  }
  throw UnsupportedModel("model family '" + family +
                         "' has no checkpoint adapter in this build");
}

}  // namespace tpgd
