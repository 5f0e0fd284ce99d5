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

// tpgd: command-line entry point.
//
//   tpgd synth    --out DIR                      tiny model + synthetic data
//   tpgd screen   --dataset F --victim V ...     correctly classified subset
//   tpgd attack   --dataset F --victim V --out DIR ...
//   tpgd report   --dataset F --out DIR          re-aggregate outcomes
//   tpgd selftest [--local-model F]              tiny-model invariant suite

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tpgd/dataset.h"
#include "tpgd/errors.h"
#include "tpgd/metrics.h"
#include "tpgd/pipeline.h"
#include "tpgd/selfcheck.h"
#include "tpgd/serialization.h"
#include "tpgd/synthetic.h"
#include "tpgd/tiny_model.h"

namespace fs = std::filesystem;

namespace {

struct DatasetFlags {
  std::string path;
  std::string name;
  int num_classes = 0;
  std::string format;

  void add(CLI::App* app) {
    app->add_option("--dataset", path, "Dataset file (.jsonl or .tsv)")
        ->required()
        ->check(CLI::ExistingFile);
    app->add_option("--dataset-name", name,
                    "Dataset name; sst2, mnli and agnews set classes and format");
    app->add_option("--num-classes", num_classes, "Number of classes");
    app->add_option("--format", format, "single-text | text-pair")
        ->check(CLI::IsMember({"single-text", "text-pair"}));
  }

  tpgd::DatasetSpec resolve() const {
    tpgd::DatasetSpec spec;
    spec.name = name.empty() ? fs::path(path).stem().string() : name;
    if (auto preset = tpgd::dataset_preset(spec.name)) spec = *preset;
    spec.source_path = path;
    if (num_classes > 0) spec.num_classes = num_classes;
    if (!format.empty()) spec.format = tpgd::parse_dataset_format(format);
    return spec;
  }
};

struct ModelFlags {
  std::string path;
  std::string family = "tiny";

  void add(CLI::App* app, bool required) {
    auto* opt = app->add_option("--local-model", path, "Local model checkpoint");
    if (required) opt->required();
    app->add_option("--model-family", family, "Local model family")
        ->capture_default_str();
  }
};

// Command-line overrides applied on top of the config file.
struct ConfigFlags {
  std::string config_path;
  std::optional<double> alpha, epsilon, beta, threshold;
  std::optional<int> max_iterations, max_queries;
  bool no_mask = false;

  void add(CLI::App* app) {
    app->add_option("--config", config_path, "AttackConfig JSON file")
        ->check(CLI::ExistingFile);
    app->add_option("--alpha", alpha, "Step size (default 1.0)");
    app->add_option("--epsilon", epsilon, "L2 radius (default 5.0)");
    app->add_option("--beta", beta, "MLM loss weight, negative (default -1.0)");
    app->add_option("--threshold", threshold, "Similarity threshold T (default 0.7)");
    app->add_option("--max-iterations", max_iterations, "Iteration cap (default 50)");
    app->add_option("--max-queries", max_queries, "Query budget (default 30)");
    app->add_flag("--no-mask", no_mask, "Skip the random [MASK] of one token");
  }

  tpgd::AttackConfig resolve(std::int64_t seed) const {
    tpgd::AttackConfig cfg = config_path.empty()
                                 ? tpgd::AttackConfig{}
                                 : tpgd::load_config_file(config_path);
    if (alpha) cfg.alpha = *alpha;
    if (epsilon) cfg.epsilon = *epsilon;
    if (beta) cfg.beta = *beta;
    if (threshold) cfg.use_threshold = *threshold;
    if (max_iterations) cfg.max_iterations = *max_iterations;
    if (max_queries) cfg.max_queries = *max_queries;
    if (no_mask) cfg.mask_one_token = false;
    cfg.random_seed = seed;
    return tpgd::validate_config(cfg);
  }
};

void write_fixture_lexicon(const fs::path& path) {
  std::ofstream out(path);
  out << "# word<TAB>antonym\n"
         "good\tbad\n"
         "great\tawful\n"
         "happy\tsad\n"
         "excellent\tterrible\n"
         "lovely\tugly\n"
         "nice\tnasty\n";
}

int cmd_synth(const fs::path& out, std::uint64_t seed, int samples, int dim) {
  fs::create_directories(out);
  tpgd::TinyModelOptions opts;
  opts.seed = seed;
  opts.dim = dim;
  const tpgd::TinyModel model = tpgd::TinyModel::build(opts);
  model.save(out / "tiny.bin");

  tpgd::SyntheticCorpusOptions corpus;
  corpus.num_samples = samples;
  corpus.seed = seed + 1;
  tpgd::write_dataset(out / "synthetic.jsonl", tpgd::make_synthetic_corpus(corpus));
  write_fixture_lexicon(out / "antonyms.tsv");
  // Settings the tiny model is calibrated for; the library defaults keep
  // masking on and a 0.7 threshold.
  tpgd::AttackConfig demo;
  demo.use_threshold = 0.5;
  demo.mask_one_token = false;
  std::ofstream(out / "config.json") << nlohmann::json(demo).dump(2) << "\n";
  std::cout << "wrote " << (out / "tiny.bin").string() << ", "
            << (out / "synthetic.jsonl").string() << ", "
            << (out / "antonyms.tsv").string() << ", "
            << (out / "config.json").string() << "\n";
  return 0;
}

int cmd_selftest(const std::string& model_path, std::uint64_t seed) {
  const tpgd::TinyModel model = model_path.empty()
                                    ? tpgd::TinyModel::build({})
                                    : tpgd::TinyModel::load(model_path);
  bool all = true;
  for (const auto& r : tpgd::run_selftest(model, seed)) {
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail
              << " (" << r.seconds << " s)\n";
    all = all && r.passed;
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Embedding-space projected gradient attacks on text classifiers"};
  app.require_subcommand(1);

  std::string out_dir;
  std::int64_t seed = 0;
  int parallel = 1;
  bool verbose = false;
  std::string victim;
  DatasetFlags dataset;
  ModelFlags model;
  ConfigFlags config;

  // synth
  auto* synth = app.add_subcommand("synth", "Write a tiny model, synthetic data and fixtures");
  int synth_samples = 200;
  int synth_dim = 32;
  std::uint64_t synth_seed = 7;
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Model seed")->capture_default_str();
  synth->add_option("--samples", synth_samples, "Corpus size")->capture_default_str();
  synth->add_option("--dim", synth_dim, "Embedding width")->capture_default_str();

  // screen
  auto* screen = app.add_subcommand("screen", "Sample correctly classified examples");
  std::size_t screen_n = 0;
  std::string screen_out;
  dataset.add(screen);
  model.add(screen, false);
  screen->add_option("--victim", victim, "inproc:NAME | http:URL")->required();
  screen->add_option("-n,--num-samples", screen_n, "Samples to keep")->required();
  screen->add_option("--seed", seed, "Sampling seed")->capture_default_str();
  screen->add_option("--output", screen_out, "Output .jsonl")->required();

  // attack
  auto* attack = app.add_subcommand("attack", "Attack a dataset and write outcomes");
  std::size_t attack_n = 0;
  std::string lexicon, scorer = "mean-embed-cosine", scorer_endpoint, grammar_endpoint;
  dataset.add(attack);
  model.add(attack, true);
  config.add(attack);
  attack->add_option("--victim", victim, "inproc:NAME | http:URL")->required();
  attack->add_option("--out", out_dir, "Run directory")->required();
  attack->add_option("--seed", seed, "Seed for screening and sessions")->capture_default_str();
  attack->add_option("--parallel", parallel, "Parallel attack sessions")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  attack->add_flag("--verbose", verbose, "Write per-step reports to steps.jsonl");
  attack->add_option("-n,--num-samples", attack_n,
                     "Samples to attack (0 = every correct one)")
      ->capture_default_str();
  attack->add_option("--lexicon", lexicon, "Antonym lexicon (word<TAB>antonym)")
      ->check(CLI::ExistingFile);
  attack->add_option("--scorer", scorer, "mean-embed-cosine | external-sentence-encoder")
      ->capture_default_str();
  attack->add_option("--scorer-endpoint", scorer_endpoint, "Sentence encoder URL");
  attack->add_option("--grammar-endpoint", grammar_endpoint, "LanguageTool /v2/check URL");

  // report
  auto* report = app.add_subcommand("report", "Re-aggregate an outcome file");
  std::string outcomes_path, report_json;
  std::string report_victim;
  dataset.add(report);
  report->add_option("--out", out_dir, "Run directory holding outcomes.jsonl");
  report->add_option("--outcomes", outcomes_path, "Outcome file (overrides --out)");
  report->add_option("--victim", report_victim, "Victim label for the table (default: from manifest.json)");
  report->add_option("--grammar-endpoint", grammar_endpoint, "LanguageTool /v2/check URL");
  report->add_option("--json", report_json, "Also write the JSON report here");

  // selftest
  auto* selftest = app.add_subcommand("selftest", "Run the tiny-model invariant suite");
  std::string selftest_model;
  std::uint64_t selftest_seed = 11;
  selftest->add_option("--local-model", selftest_model, "Tiny model file (default: built in memory)");
  selftest->add_option("--seed", selftest_seed, "Seed")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return cmd_synth(out_dir, synth_seed, synth_samples, synth_dim);
    if (*selftest) return cmd_selftest(selftest_model, selftest_seed);

    if (*screen) {
      const auto spec = dataset.resolve();
      const auto samples = tpgd::load_dataset(spec);
      std::shared_ptr<const tpgd::LocalModel> local;
      if (!model.path.empty()) local = tpgd::load_local_model(model.family, model.path);
      auto adapter = tpgd::make_victim_adapter(
          victim, spec.num_classes,
          [&](const std::string& name) -> std::shared_ptr<const tpgd::LocalModel> {
            if (local && (name == "local" || name == local->family())) return local;
            return tpgd::load_local_model("tiny", name);
          });
      tpgd::VictimClient client(adapter, static_cast<int>(samples.size()));
      std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
      const auto chosen = tpgd::sample_correct(samples, client, screen_n, rng);
      tpgd::write_dataset(screen_out, chosen);
      std::cout << "kept " << chosen.size() << " of " << samples.size()
                << " samples using " << client.queries_made() << " queries\n";
      return 0;
    }

    if (*attack) {
      tpgd::RunManifest manifest;
      manifest.config = config.resolve(seed);
      manifest.dataset = dataset.resolve();
      manifest.victim_name = victim;
      manifest.local_model_family = model.family;
      manifest.local_model_path = model.path;
      manifest.seed = seed;
      manifest.num_samples = attack_n;
      manifest.similarity_scorer = scorer;
      manifest.similarity_endpoint = scorer_endpoint;
      if (!lexicon.empty()) manifest.antonym_lexicon = lexicon;
      manifest.grammar_endpoint = grammar_endpoint;
      manifest.parallel = parallel;
      manifest.verbose = verbose;
      tpgd::run(manifest, out_dir);
      std::ifstream table(fs::path(out_dir) / tpgd::kReportTextFile);
      std::cout << table.rdbuf();
      return 0;
    }

    if (*report) {
      const auto spec = dataset.resolve();
      const fs::path path = !outcomes_path.empty() ? fs::path(outcomes_path)
                            : !out_dir.empty()     ? fs::path(out_dir) / tpgd::kOutcomesFile
                                                   : fs::path();
      if (path.empty()) throw tpgd::Error("report needs --out or --outcomes");
      if (!fs::exists(path)) throw tpgd::MissingFile(path.string());
      const auto samples = tpgd::load_dataset(spec);
      const auto outcomes = tpgd::read_outcomes(path);
      const auto quality = tpgd::default_quality_scorer(samples, grammar_endpoint);
      std::string local_name = "-";
      if (const fs::path m = path.parent_path() / tpgd::kManifestFile; fs::exists(m)) {
        const auto manifest =
            nlohmann::json::parse(std::ifstream(m)).get<tpgd::RunManifest>();
        if (report_victim.empty()) report_victim = manifest.victim_name;
        local_name = manifest.local_model_name();
      }
      if (report_victim.empty()) report_victim = "-";
      const std::vector<tpgd::ReportCell> cells = {
          {spec.name, report_victim, local_name,
           tpgd::report_from_outcomes(outcomes, samples, quality)}};
      std::cout << tpgd::report_table(cells);
      if (!report_json.empty()) {
        std::ofstream(report_json) << tpgd::report_to_json(cells).dump(2) << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "tpgd: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
