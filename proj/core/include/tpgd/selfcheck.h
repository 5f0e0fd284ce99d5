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

#ifndef TPGD_SELFCHECK_H_
#define TPGD_SELFCHECK_H_

#include <cstdint>
#include <string>
#include <vector>

#include "tpgd/tiny_model.h"

namespace tpgd {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Quick invariant suite on a tiny model: gradient vs central differences,
// PGD ball geometry, clean-input reconstruction, and a short end-to-end
// attack run with the model as its own victim.
std::vector<CheckResult> run_selftest(const TinyModel& model, std::uint64_t seed);

}  // namespace tpgd

#endif  // TPGD_SELFCHECK_H_
