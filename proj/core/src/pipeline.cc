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

#include "tpgd/pipeline.h"

#include <atomic>
#include <condition_variable>
#include <ctime>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "tpgd/errors.h"
#include "tpgd/local_model.h"
#include "tpgd/perturb.h"
#include "tpgd/serialization.h"
#include "tpgd/tiny_model.h"

namespace tpgd {

namespace fs = std::filesystem;
using nlohmann::json;

std::string RunManifest::local_model_name() const {
  return local_model_family + ":" + local_model_path.string();
}

void to_json(json& j, const RunManifest& m) {
  j = json{{"config", m.config},
           {"dataset",
            {{"name", m.dataset.name},
             {"num_classes", m.dataset.num_classes},
             {"format", to_string(m.dataset.format)},
             {"source_path", m.dataset.source_path.string()}}},
           {"victim_name", m.victim_name},
           {"local_model_family", m.local_model_family},
           {"local_model_path", m.local_model_path.string()},
           {"local_model_name", m.local_model_name()},
           {"started_at", m.started_at},
           {"finished_at", m.finished_at},
           {"seed", m.seed},
           {"num_samples", m.num_samples},
           {"similarity_scorer", m.similarity_scorer},
           {"similarity_endpoint", m.similarity_endpoint},
           {"antonym_lexicon",
            m.antonym_lexicon ? json(m.antonym_lexicon->string()) : json(nullptr)},
           {"grammar_endpoint", m.grammar_endpoint},
           {"parallel", m.parallel},
           {"verbose", m.verbose}};
}

void from_json(const json& j, RunManifest& m) {
  m.config = parse_config(j.at("config"));
  const auto& d = j.at("dataset");
  m.dataset.name = d.at("name").get<std::string>();
  m.dataset.num_classes = d.at("num_classes").get<int>();
  m.dataset.format = parse_dataset_format(d.at("format").get<std::string>());
  m.dataset.source_path = d.at("source_path").get<std::string>();
  m.victim_name = j.at("victim_name").get<std::string>();
  m.local_model_family = j.at("local_model_family").get<std::string>();
  m.local_model_path = j.at("local_model_path").get<std::string>();
  m.started_at = j.value("started_at", "");
  m.finished_at = j.value("finished_at", "");
  m.seed = j.at("seed").get<std::int64_t>();
  m.num_samples = j.at("num_samples").get<std::size_t>();
  m.similarity_scorer = j.value("similarity_scorer", "mean-embed-cosine");
  m.similarity_endpoint = j.value("similarity_endpoint", "");
  if (auto it = j.find("antonym_lexicon"); it != j.end() && !it->is_null()) {
    m.antonym_lexicon = it->get<std::string>();
  }
  m.grammar_endpoint = j.value("grammar_endpoint", "");
  m.parallel = j.value("parallel", 1);
  m.verbose = j.value("verbose", false);
}

JsonLinesWriter::JsonLinesWriter(const fs::path& path) {
  file_ = std::fopen(path.c_str(), "ab");
  if (!file_) throw Error("cannot open " + path.string() + " for appending");
}

JsonLinesWriter::~JsonLinesWriter() {
  if (file_) std::fclose(file_);
}

void JsonLinesWriter::append(const std::string& line) {
  const std::string record = line + "\n";
  if (std::fwrite(record.data(), 1, record.size(), file_) != record.size() ||
      std::fflush(file_) != 0) {
    throw Error("failed to append a JSON-lines record");
  }
}

std::vector<AttackOutcome> read_outcomes(const fs::path& path, bool repair) {
  std::vector<AttackOutcome> out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  in.close();

  std::size_t pos = 0;
  std::size_t valid_end = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    ++line_no;
    if (nl == std::string::npos) break;  // incomplete tail
    const std::string line = content.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) {
      valid_end = pos;
      continue;
    }
    try {
      out.push_back(json::parse(line).get<AttackOutcome>());
    } catch (const json::exception& e) {
      throw ParseError(line_no, std::string("outcome record: ") + e.what());
    }
    valid_end = pos;
  }
  if (repair && valid_end < content.size()) {
    fs::resize_file(path, valid_end);
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

QualityScorer default_quality_scorer(const std::vector<LabeledSample>& samples,
                                     const std::string& grammar_endpoint) {
  std::vector<std::string> corpus;
  corpus.reserve(samples.size());
  for (const auto& s : samples) corpus.push_back(similarity_text(s.text_a, s.text_b));
  QualityScorer q;
  q.perplexity = std::make_shared<UnigramPerplexity>(UnigramPerplexity::fit(corpus));
  if (!grammar_endpoint.empty()) {
    q.grammar = std::make_shared<LanguageToolCounter>(grammar_endpoint);
  }
  return q;
}

MetricsReport report_from_outcomes(const std::vector<AttackOutcome>& outcomes,
                                   const std::vector<LabeledSample>& samples,
                                   const QualityScorer& quality) {
  std::map<std::string, std::string> text_by_id;
  for (const auto& s : samples) {
    text_by_id.emplace(s.id, similarity_text(s.text_a, s.text_b));
  }
  std::vector<std::string> originals;
  originals.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    auto it = text_by_id.find(o.sample_id);
    if (it == text_by_id.end()) {
      throw Error("outcome for unknown sample '" + o.sample_id + "'");
    }
    originals.push_back(it->second);
  }
  return build_report(outcomes, originals, quality);
}

namespace {

struct SessionResult {
  AttackOutcome outcome;
  std::vector<StepReport> steps;
};

json step_to_json(const std::string& sample_id, const StepReport& r) {
  return json{{"sample_id", sample_id},   {"step", r.step},
              {"loss", r.loss},           {"grad_norm", r.grad_norm},
              {"delta_norm", r.delta_norm}, {"reinitialized", r.reinitialized}};
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

}  // namespace

MetricsReport run(RunManifest manifest, const fs::path& out_dir) {
  validate_config(manifest.config);
  if (manifest.parallel < 1) throw InvalidConfig("parallel", "must be >= 1");
  fs::create_directories(out_dir);
  if (manifest.started_at.empty()) manifest.started_at = utc_timestamp();

  const auto local =
      load_local_model(manifest.local_model_family, manifest.local_model_path);
  const auto samples = load_dataset(manifest.dataset);
  auto resolve = [&](const std::string& name) -> std::shared_ptr<const LocalModel> {
    if (name == "local" || name == local->family()) return local;
    return std::make_shared<const TinyModel>(TinyModel::load(name));
  };
  const auto adapter = make_victim_adapter(
      manifest.victim_name, manifest.dataset.num_classes, resolve);

  // Screening has its own budget; attack sessions never draw from it.
  std::vector<LabeledSample> screened;
  const fs::path screened_path = out_dir / kScreenedFile;
  DatasetSpec screened_spec = manifest.dataset;
  screened_spec.source_path = screened_path;
  if (fs::exists(screened_path)) {
    screened = load_dataset(screened_spec);
  } else {
    VictimClient screening(adapter, static_cast<int>(samples.size()));
    std::mt19937_64 rng(static_cast<std::uint64_t>(manifest.seed));
    if (manifest.num_samples > 0) {
      screened = sample_correct(samples, screening, manifest.num_samples, rng);
    } else {
      std::vector<std::size_t> order(samples.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t idx : order) {
        const auto& s = samples[idx];
        const Decision d = screening.classify(
            s.text_a, s.text_b ? std::optional<std::string_view>(*s.text_b)
                               : std::nullopt);
        if (d.predicted_label == s.gold_label) screened.push_back(s);
      }
    }
    const fs::path tmp = screened_path.string() + ".tmp";
    write_dataset(tmp, screened);
    fs::rename(tmp, screened_path);
  }

  const fs::path outcomes_path = out_dir / kOutcomesFile;
  std::set<std::string> finished;
  for (const auto& o : read_outcomes(outcomes_path, /*repair=*/true)) {
    finished.insert(o.sample_id);
  }
  std::vector<const LabeledSample*> pending;
  for (const auto& s : screened) {
    if (!finished.count(s.id)) pending.push_back(&s);
  }

  const auto scorer = make_similarity_scorer(manifest.similarity_scorer, local,
                                             manifest.similarity_endpoint);
  const AntonymLexicon lexicon = manifest.antonym_lexicon
                                     ? AntonymLexicon::load(*manifest.antonym_lexicon)
                                     : AntonymLexicon{};
  const AttackResources resources{*local, *scorer, lexicon};

  JsonLinesWriter outcome_writer(outcomes_path);
  std::optional<JsonLinesWriter> step_writer;
  if (manifest.verbose) step_writer.emplace(out_dir / kStepsFile);

  std::vector<std::optional<SessionResult>> results(pending.size());
  std::mutex mu;
  std::condition_variable ready;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < pending.size(); i = next++) {
      const LabeledSample& sample = *pending[i];
      SessionResult result;
      VictimClient client(adapter, manifest.config.max_queries);
      AttackHooks hooks;
      if (manifest.verbose) {
        hooks.on_step = [&result](const StepReport& r) { result.steps.push_back(r); };
      }
      try {
        result.outcome = run_attack(sample, resources, client, manifest.config, hooks);
      } catch (const std::exception&) {
        result.outcome = AttackOutcome{};
        result.outcome.sample_id = sample.id;
        result.outcome.queries_used = client.queries_made();
      }
      {
        std::lock_guard lock(mu);
        results[i] = std::move(result);
      }
      ready.notify_all();
    }
  };

  {
    std::vector<std::jthread> pool;
    const auto threads =
        std::min<std::size_t>(static_cast<std::size_t>(manifest.parallel),
                              std::max<std::size_t>(pending.size(), 1));
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);

    // Records go out in screening order regardless of completion order.
    for (std::size_t i = 0; i < pending.size(); ++i) {
      SessionResult result;
      {
        std::unique_lock lock(mu);
        ready.wait(lock, [&] { return results[i].has_value(); });
        result = std::move(*results[i]);
        results[i].reset();
      }
      outcome_writer.append(outcome_to_line(result.outcome));
      if (step_writer) {
        for (const auto& r : result.steps) {
          step_writer->append(step_to_json(result.outcome.sample_id, r).dump());
        }
      }
    }
  }

  const auto outcomes = read_outcomes(outcomes_path);
  const QualityScorer quality =
      default_quality_scorer(samples, manifest.grammar_endpoint);
  MetricsReport report = outcomes.empty()
                             ? MetricsReport{}
                             : report_from_outcomes(outcomes, screened, quality);

  manifest.finished_at = utc_timestamp();
  write_text(out_dir / kManifestFile, json(manifest).dump(2) + "\n");
  const std::vector<ReportCell> cells = {
      {manifest.dataset.name, manifest.victim_name, manifest.local_model_name(),
       report}};
  write_text(out_dir / kReportJsonFile, report_to_json(cells).dump(2) + "\n");
  write_text(out_dir / kReportTextFile, report_table(cells));
  return report;
}

}  // namespace tpgd
