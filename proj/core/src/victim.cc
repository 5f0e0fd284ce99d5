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

#include "tpgd/victim.h"

#include <cstdlib>
#include <thread>

#include <nlohmann/json.hpp>

#include "http_util.h"
#include "tpgd/errors.h"

namespace tpgd {

InProcessVictim::InProcessVictim(std::string name,
                                 std::shared_ptr<const LocalModel> model)
    : name_(std::move(name)), model_(std::move(model)) {
  if (!model_) throw Error("in-process victim needs a model");
}

int InProcessVictim::predict(std::string_view text_a,
                             std::optional<std::string_view> text_b) {
  const int label = model_->predict(text_a, text_b);
  answered_.fetch_add(1);
  return label;
}

HttpVictim::HttpVictim(std::string url, int num_classes,
                       std::chrono::milliseconds timeout, RetryPolicy retry)
    : url_(std::move(url)),
      num_classes_(num_classes),
      timeout_(timeout),
      retry_(retry) {
  if (num_classes_ < 1) throw Error("http victim needs num_classes >= 1");
  if (retry_.attempts < 1) throw Error("retry policy needs at least one attempt");
}

int HttpVictim::predict(std::string_view text_a,
                        std::optional<std::string_view> text_b) {
  nlohmann::json request = {{"text_a", std::string(text_a)}};
  if (text_b) request["text_b"] = std::string(*text_b);
  const std::string body = request.dump();

  auto backoff = retry_.initial_backoff;
  std::string last_error = "no attempt made";
  for (int attempt = 1; attempt <= retry_.attempts; ++attempt) {
    attempts_.fetch_add(1);
    const auto response =
        internal::http_post(url_, body, "application/json", timeout_);
    if (response && response->status == 200) {
      int label = -1;
      try {
        const auto doc = nlohmann::json::parse(response->body);
        const auto& field = doc.at("label");
        if (!field.is_number_integer()) throw Error("label is not an integer");
        label = field.get<int>();
      } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("victim response: ") + e.what());
      }
      if (label < 0 || label >= num_classes_) {
        throw Error("victim returned label " + std::to_string(label) +
                    " outside [0, " + std::to_string(num_classes_) + ")");
      }
      answered_.fetch_add(1);
      return label;
    }
    last_error = response ? "HTTP status " + std::to_string(response->status)
                          : std::string("no response");
    if (attempt < retry_.attempts) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(static_cast<long>(
          static_cast<double>(backoff.count()) * retry_.multiplier));
    }
  }
  throw RemoteUnavailable("victim at " + url_ + " unavailable after " +
                          std::to_string(retry_.attempts) +
                          " attempts: " + last_error);
}

std::shared_ptr<VictimAdapter> make_victim_adapter(
    const std::string& spec, int num_classes,
    const std::function<std::shared_ptr<const LocalModel>(const std::string&)>&
        resolve_model) {
  if (spec.rfind("inproc:", 0) == 0) {
    const std::string name = spec.substr(7);
    if (name.empty()) throw InvalidConfig("victim", "inproc: needs a name");
    auto model = resolve_model(name);
    if (model->num_classes() != num_classes) {
      throw InvalidConfig("victim", "model has " +
                                        std::to_string(model->num_classes()) +
                                        " classes, dataset has " +
                                        std::to_string(num_classes));
    }
    return std::make_shared<InProcessVictim>(spec, std::move(model));
  }
  if (spec.rfind("http:", 0) == 0) {
    // Accepts "http://host/p", "http:http://host/p" and "http:host/p".
    std::string url = spec.rfind("http://", 0) == 0 ? spec : spec.substr(5);
    if (url.rfind("http://", 0) != 0 && url.rfind("https://", 0) != 0) {
      url = "http://" + url;
    }
    if (const char* env = std::getenv(kVictimUrlEnv); env && *env) url = env;
    std::chrono::milliseconds timeout(10000);
    if (const char* env = std::getenv(kVictimTimeoutEnv); env && *env) {
      timeout = std::chrono::milliseconds(std::atol(env));
    }
    return std::make_shared<HttpVictim>(url, num_classes, timeout);
  }
  throw InvalidConfig("victim", "expected inproc:NAME or http:URL, got '" +
                                    spec + "'");
}

VictimClient::VictimClient(std::shared_ptr<VictimAdapter> adapter, int budget)
    : adapter_(std::move(adapter)), budget_(budget) {
  if (!adapter_) throw Error("victim client needs an adapter");
  if (budget_ < 0) throw Error("victim budget must be non-negative");
}

Decision VictimClient::classify(std::string_view text_a,
                                std::optional<std::string_view> text_b) {
  if (queries_made_ >= budget_) throw BudgetExhausted(budget_);
  const int label = adapter_->predict(text_a, text_b);
  if (label < 0 || label >= adapter_->num_classes()) {
    throw Error("victim label outside the class range");
  }
  ++queries_made_;
  QueryRecord record;
  record.text_a = std::string(text_a);
  if (text_b) record.text_b = std::string(*text_b);
  record.decision = Decision{label};
  record.timestamp = std::chrono::system_clock::now();
  log_.push_back(std::move(record));
  return Decision{label};
}

}  // namespace tpgd
