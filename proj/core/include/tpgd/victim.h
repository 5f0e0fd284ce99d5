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

#ifndef TPGD_VICTIM_H_
#define TPGD_VICTIM_H_

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tpgd/local_model.h"
#include "tpgd/types.h"

namespace tpgd {

// Backend that answers with a label and nothing else. Adapters whose
// backend exposes scores drop them before returning.
class VictimAdapter {
 public:
  virtual ~VictimAdapter() = default;
  virtual std::string name() const = 0;
  virtual int num_classes() const = 0;
  // Throws RemoteUnavailable when no answer could be obtained.
  virtual int predict(std::string_view text_a,
                      std::optional<std::string_view> text_b) = 0;
  // Answers this adapter has produced.
  virtual long answered() const = 0;
};

// Argmax of a local model's task head.
class InProcessVictim final : public VictimAdapter {
 public:
  InProcessVictim(std::string name, std::shared_ptr<const LocalModel> model);
  std::string name() const override { return name_; }
  int num_classes() const override { return model_->num_classes(); }
  int predict(std::string_view text_a,
              std::optional<std::string_view> text_b) override;
  long answered() const override { return answered_.load(); }

 private:
  std::string name_;
  std::shared_ptr<const LocalModel> model_;
  std::atomic<long> answered_{0};
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
  double multiplier = 2.0;
};

// One HTTP POST per query: request {"text_a", "text_b"?}, response
// {"label": int}. Any other response field is ignored.
class HttpVictim final : public VictimAdapter {
 public:
  HttpVictim(std::string url, int num_classes,
             std::chrono::milliseconds timeout = std::chrono::milliseconds(10000),
             RetryPolicy retry = {});
  std::string name() const override { return "http:" + url_; }
  int num_classes() const override { return num_classes_; }
  int predict(std::string_view text_a,
              std::optional<std::string_view> text_b) override;
  long answered() const override { return answered_.load(); }
  // Transport attempts including failed ones.
  long attempts() const { return attempts_.load(); }

 private:
  std::string url_;
  int num_classes_;
  std::chrono::milliseconds timeout_;
  RetryPolicy retry_;
  std::atomic<long> answered_{0};
  std::atomic<long> attempts_{0};
};

// Environment overrides for the remote victim.
inline constexpr const char* kVictimUrlEnv = "TPGD_VICTIM_URL";
inline constexpr const char* kVictimTimeoutEnv = "TPGD_VICTIM_TIMEOUT_MS";

// Resolves "inproc:NAME" or "http:URL". `resolve_model` maps NAME to a
// local model. TPGD_VICTIM_URL replaces the URL of an http victim.
std::shared_ptr<VictimAdapter> make_victim_adapter(
    const std::string& spec, int num_classes,
    const std::function<std::shared_ptr<const LocalModel>(const std::string&)>&
        resolve_model);

struct QueryRecord {
  std::string text_a;
  std::optional<std::string> text_b;
  Decision decision;
  std::chrono::system_clock::time_point timestamp;
};

// Budgeted, logged access to a victim for one session.
class VictimClient {
 public:
  VictimClient(std::shared_ptr<VictimAdapter> adapter, int budget);

  // Throws BudgetExhausted once `budget` answers have been returned. A call
  // that fails before an answer leaves the counter unchanged.
  Decision classify(std::string_view text_a,
                    std::optional<std::string_view> text_b = std::nullopt);

  const std::vector<QueryRecord>& query_log() const { return log_; }
  int queries_made() const { return queries_made_; }
  int budget() const { return budget_; }
  int remaining() const { return budget_ - queries_made_; }
  const VictimAdapter& adapter() const { return *adapter_; }

 private:
  std::shared_ptr<VictimAdapter> adapter_;
  int budget_;
  int queries_made_ = 0;
  std::vector<QueryRecord> log_;
};

}  // namespace tpgd

#endif  // TPGD_VICTIM_H_
