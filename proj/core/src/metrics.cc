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

#include "tpgd/metrics.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "http_util.h"
#include "tpgd/errors.h"
#include "tpgd/serialization.h"

namespace tpgd {
namespace {

std::vector<std::string_view> words_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto start = text.find_first_not_of(" \t\r\n", pos);
    if (start == std::string_view::npos) break;
    auto end = text.find_first_of(" \t\r\n", start);
    if (end == std::string_view::npos) end = text.size();
    out.push_back(text.substr(start, end - start));
    pos = end;
  }
  return out;
}

std::string url_encode(std::string_view s) {
  std::ostringstream out;
  out << std::hex << std::uppercase;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out << c;
    } else {
      out << '%' << std::setw(2) << std::setfill('0') << static_cast<int>(c);
    }
  }
  return out.str();
}

std::string format_optional(const std::optional<double>& v, int precision) {
  if (!v) return "-";
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << *v;
  return out.str();
}

}  // namespace

LanguageToolCounter::LanguageToolCounter(std::string url, std::string language,
                                         std::chrono::milliseconds timeout)
    : url_(std::move(url)), language_(std::move(language)), timeout_(timeout) {}

int LanguageToolCounter::count_errors(std::string_view text) const {
  const std::string body =
      "text=" + url_encode(text) + "&language=" + url_encode(language_);
  const auto response = internal::http_post(
      url_, body, "application/x-www-form-urlencoded", timeout_);
  if (!response || response->status != 200) {
    throw ScorerUnavailable("grammar checker at " + url_ + " did not answer");
  }
  try {
    const auto doc = nlohmann::json::parse(response->body);
    return static_cast<int>(doc.at("matches").size());
  } catch (const nlohmann::json::exception& e) {
    throw ScorerUnavailable(std::string("grammar checker response: ") + e.what());
  }
}

UnigramPerplexity UnigramPerplexity::fit(std::span<const std::string> corpus) {
  UnigramPerplexity model;
  for (const auto& text : corpus) {
    for (auto w : words_of(text)) {
      auto it = model.counts_.find(w);
      if (it == model.counts_.end()) {
        model.counts_.emplace(std::string(w), 1);
      } else {
        ++it->second;
      }
      ++model.total_;
    }
  }
  return model;
}

double UnigramPerplexity::probability(std::string_view word) const {
  // One extra slot for the unseen-word class.
  const double denom =
      static_cast<double>(total_) + static_cast<double>(counts_.size()) + 1.0;
  auto it = counts_.find(word);
  const double count = it == counts_.end() ? 0.0 : static_cast<double>(it->second);
  return (count + 1.0) / denom;
}

double UnigramPerplexity::perplexity(std::string_view text) const {
  const auto words = words_of(text);
  if (words.empty()) throw EmptyInput();
  double log_prob = 0.0;
  for (auto w : words) log_prob += std::log(probability(w));
  return std::exp(-log_prob / static_cast<double>(words.size()));
}

double attack_success_rate(std::span<const AttackOutcome> outcomes) {
  if (outcomes.empty()) throw EmptyInput();
  const auto successes = std::count_if(outcomes.begin(), outcomes.end(),
                                       [](const auto& o) { return o.success; });
  return 100.0 * static_cast<double>(successes) /
         static_cast<double>(outcomes.size());
}

int delta_grammar(std::string_view original, std::string_view adversarial,
                  const QualityScorer& scorer) {
  if (!scorer.grammar) throw ScorerUnavailable("no grammar backend configured");
  return scorer.grammar->count_errors(adversarial) -
         scorer.grammar->count_errors(original);
}

double delta_perplexity(std::string_view original, std::string_view adversarial,
                        const QualityScorer& scorer) {
  if (!scorer.perplexity) {
    throw ScorerUnavailable("no perplexity backend configured");
  }
  if (original == adversarial) return 0.0;
  return scorer.perplexity->perplexity(adversarial) -
         scorer.perplexity->perplexity(original);
}

double exact_sum(std::span<const double> values) {
  std::vector<double> partials;
  for (double x : values) {
    if (!std::isfinite(x)) {
      return std::accumulate(values.begin(), values.end(), 0.0);
    }
    std::size_t i = 0;
    for (double y : partials) {
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[i++] = lo;
      x = hi;
    }
    partials.resize(i);
    partials.push_back(x);
  }
  // Add the partials from the top, then fix up round-half-even.
  std::size_t n = partials.size();
  if (n == 0) return 0.0;
  double hi = partials[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials[--n];
    hi = x + y;
    const double yr = hi - x;
    lo = y - yr;
    if (lo != 0.0) break;
  }
  if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) ||
                (lo > 0.0 && partials[n - 1] > 0.0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    const double yr = x - hi;
    if (y == yr) hi = x;
  }
  return hi;
}

MetricsReport build_report(std::span<const AttackOutcome> outcomes,
                           std::span<const std::string> originals,
                           const QualityScorer& quality,
                           const SimilarityScorer* similarity) {
  if (outcomes.size() != originals.size()) {
    throw ShapeError("build_report: outcomes and originals are not aligned");
  }
  MetricsReport report;
  report.asr_percent = attack_success_rate(outcomes);
  report.n_samples = static_cast<int>(outcomes.size());

  std::vector<std::size_t> order(outcomes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return outcomes[a].sample_id < outcomes[b].sample_id;
  });

  std::vector<double> similarities;
  std::vector<double> perplexities;
  long grammar_sum = 0;
  bool similarity_ok = true;
  bool grammar_ok = static_cast<bool>(quality.grammar);
  bool perplexity_ok = static_cast<bool>(quality.perplexity);

  for (std::size_t idx : order) {
    const AttackOutcome& o = outcomes[idx];
    report.per_sample.push_back(o);
    if (!o.success) continue;
    ++report.n_success;
    if (!o.adversarial_text) {
      throw Error("outcome '" + o.sample_id + "' succeeded without a text");
    }
    const std::string& original = originals[idx];
    const std::string& adversarial = *o.adversarial_text;

    if (o.final_similarity) {
      similarities.push_back(*o.final_similarity);
    } else if (similarity) {
      similarities.push_back(similarity->score(original, adversarial));
    } else {
      similarity_ok = false;
    }

    SampleQuality q;
    q.sample_id = o.sample_id;
    if (grammar_ok) {
      try {
        q.delta_grammar = delta_grammar(original, adversarial, quality);
        grammar_sum += *q.delta_grammar;
      } catch (const Error&) {
        grammar_ok = false;
      }
    }
    if (perplexity_ok) {
      try {
        q.delta_perplexity = delta_perplexity(original, adversarial, quality);
        perplexities.push_back(*q.delta_perplexity);
      } catch (const Error&) {
        perplexity_ok = false;
      }
    }
    report.per_sample_quality.push_back(std::move(q));
  }

  if (report.n_success > 0) {
    const double n = static_cast<double>(report.n_success);
    if (similarity_ok) report.mean_similarity = exact_sum(similarities) / n;
    if (grammar_ok) report.delta_grammar_errors = static_cast<double>(grammar_sum) / n;
    if (perplexity_ok) report.delta_perplexity = exact_sum(perplexities) / n;
  }
  if (!grammar_ok || !perplexity_ok) {
    for (auto& q : report.per_sample_quality) {
      if (!grammar_ok) q.delta_grammar.reset();
      if (!perplexity_ok) q.delta_perplexity.reset();
    }
  }
  return report;
}

nlohmann::json report_to_json(const std::vector<ReportCell>& cells) {
  using nlohmann::json;
  auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  json out = json::object();
  out["aggregation"] = kAggregationNote;
  out["cells"] = json::array();
  for (const auto& cell : cells) {
    const MetricsReport& r = cell.report;
    json quality = json::array();
    for (const auto& q : r.per_sample_quality) {
      quality.push_back({{"sample_id", q.sample_id},
                         {"delta_grammar", opt(q.delta_grammar)},
                         {"delta_perplexity", opt(q.delta_perplexity)}});
    }
    out["cells"].push_back({{"dataset", cell.dataset},
                            {"victim", cell.victim},
                            {"local_model", cell.local_model},
                            {"asr_percent", r.asr_percent},
                            {"use", opt(r.mean_similarity)},
                            {"delta_i", opt(r.delta_grammar_errors)},
                            {"delta_ppl", opt(r.delta_perplexity)},
                            {"n_samples", r.n_samples},
                            {"n_success", r.n_success},
                            {"per_sample", r.per_sample},
                            {"per_sample_quality", quality}});
  }
  return out;
}

std::string report_table(const std::vector<ReportCell>& cells) {
  const std::vector<std::string> header = {"Dataset", "Victim", "ASR%", "USE",
                                           "dI",      "dPPL",   "N"};
  std::vector<std::vector<std::string>> rows = {header};
  for (const auto& cell : cells) {
    const MetricsReport& r = cell.report;
    rows.push_back({cell.dataset, cell.victim,
                    format_optional(r.asr_percent, 2),
                    format_optional(r.mean_similarity, 2),
                    format_optional(r.delta_grammar_errors, 2),
                    format_optional(r.delta_perplexity, 2),
                    std::to_string(r.n_samples)});
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      width[c] = std::max(width[c], row[c].size());
    }
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c > 0) out << "  ";
      // Text columns left-aligned, numbers right-aligned.
      if (c < 2) {
        out << std::left << std::setw(static_cast<int>(width[c])) << rows[r][c];
      } else {
        out << std::right << std::setw(static_cast<int>(width[c])) << rows[r][c];
      }
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace tpgd
