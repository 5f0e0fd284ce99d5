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

#ifndef TPGD_SERIALIZATION_H_
#define TPGD_SERIALIZATION_H_

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "tpgd/types.h"

namespace tpgd {

// JSON encodings of the core value types. Doubles round-trip exactly.
void to_json(nlohmann::json& j, const LabeledSample& v);
void from_json(const nlohmann::json& j, LabeledSample& v);
void to_json(nlohmann::json& j, const TokenSequence& v);
void from_json(const nlohmann::json& j, TokenSequence& v);
void to_json(nlohmann::json& j, const EmbeddedInput& v);
void from_json(const nlohmann::json& j, EmbeddedInput& v);
void to_json(nlohmann::json& j, const AttackConfig& v);
void from_json(const nlohmann::json& j, AttackConfig& v);
void to_json(nlohmann::json& j, const PerturbationState& v);
void from_json(const nlohmann::json& j, PerturbationState& v);
void to_json(nlohmann::json& j, const CandidateAdversary& v);
void from_json(const nlohmann::json& j, CandidateAdversary& v);
void to_json(nlohmann::json& j, const Decision& v);
void from_json(const nlohmann::json& j, Decision& v);
void to_json(nlohmann::json& j, const AttackOutcome& v);
void from_json(const nlohmann::json& j, AttackOutcome& v);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

// Config documents mirror AttackConfig one-to-one. Missing keys take the
// defaults, unknown keys and wrong types raise InvalidConfig. The result is
// validated.
AttackConfig parse_config(const nlohmann::json& doc);
AttackConfig load_config_file(const std::filesystem::path& path);

// Single-line compact encoding used for JSON-lines outputs.
std::string outcome_to_line(const AttackOutcome& outcome);

}  // namespace tpgd

#endif  // TPGD_SERIALIZATION_H_
