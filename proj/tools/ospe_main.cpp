// Copyright 2026 The OSPE Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// ospe command line: synthetic data generation, open-word sampling, tuning,
// inference, reports and report comparison.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ospe/io.hpp"

namespace fs = std::filesystem;

namespace {

// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
constexpr int kConfigExit = 2;
constexpr int kDataExit = 3;
constexpr int kNumericExit = 4;

ospe::Manifest load_manifest(const std::string& ref) {
  for (const auto& name : ospe::named_manifest_names()) {
    if (ref == name) return ospe::named_manifest(name);
  }
  return ospe::Manifest::load(ref);
}

std::vector<std::string> read_name_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ospe::DataError("cannot read name list '" + path + "'");
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    names.push_back(line);
  }
  return names;
}

struct GenSynthArgs {
  std::string spec_name;
  std::string out_dir;
  uint64_t seed = 0;
  ospe::SynthSpec custom;
  bool has_custom = false;
};

void run_gen_synth(const GenSynthArgs& args) {
  ospe::SynthSpec spec;
  if (!args.spec_name.empty()) {
    if (args.spec_name == "small-osr") {
      spec = ospe::small_osr_spec(args.seed);
    } else if (args.spec_name == "large-osr") {
      spec = ospe::large_osr_spec(args.seed);
    } else {
      throw ospe::ConfigError("unknown synth spec '" + args.spec_name +
                              "' (known: small-osr, large-osr)");
    }
  } else if (args.has_custom) {
    spec = args.custom;
    spec.seed = args.seed;
  } else {
    throw ospe::ConfigError("gen-synth: pass --spec or the custom dimensions");
  }

  const ospe::SynthData data = ospe::generate(spec);
  fs::create_directories(args.out_dir);
  const auto out = [&args](const char* file) {
    return (fs::path(args.out_dir) / file).string();
  };
  ospe::write_embedding_file(out("embeddings.ospe"), data.dataset.embeddings);
  ospe::write_labels_file(out("labels.tsv"), data.dataset);
  ospe::write_embedding_file(out("tokens.ospe"), data.tokens);
  ospe::EmbeddingTable means;
  for (size_t c = 0; c < data.known_means.size(); ++c) {
    means.add(data.dataset.class_names[c], data.known_means[c]);
  }
  for (size_t u = 0; u < data.unknown_means.size(); ++u) {
    means.add(data.unknown_names[u], data.unknown_means[u]);
  }
  ospe::write_embedding_file(out("means.ospe"), means);
  // Effective config with every field expanded; regenerating from it is
  // bit-exact.
  ospe::write_file_atomic(out("synth_spec.json"),
                          ospe::synth_spec_to_json(spec).dump(2) + "\n");
  std::cout << "wrote " << data.dataset.entries.size() << " samples ("
            << data.dataset.n_classes() << " known classes, "
            << data.unknown_names.size() << " unknown clusters) to "
            << args.out_dir << "\n";
}

void run_sample_open_words(const std::string& lexicon_path,
                           const std::string& closed_path,
                           const std::string& exclude_path, int count,
                           uint64_t seed, const std::string& out_path) {
  const auto lexicon = ospe::load_lexicon(lexicon_path);
  const auto closed = read_name_list(closed_path);
  std::vector<std::string> excluded;
  if (!exclude_path.empty()) excluded = read_name_list(exclude_path);
  ospe::Rng rng = ospe::Rng(seed).stream("open-words");
  const auto words =
      ospe::sample_open_words(lexicon, closed, excluded, count, rng);
  std::ostringstream text;
  for (const auto& word : words) text << word << '\n';
  ospe::write_file_atomic(out_path, text.str());
  ospe::Json meta;
  meta["lexicon"] = lexicon_path;
  meta["closed"] = closed_path;
  meta["exclude"] = exclude_path;
  meta["count"] = count;
  meta["seed"] = seed;
  ospe::write_file_atomic(out_path + ".meta.json", meta.dump(2) + "\n");
  std::cout << "sampled " << words.size() << " open words to " << out_path
            << "\n";
}

void run_tune(const std::string& manifest_ref, const std::string& out_dir) {
  const ospe::Manifest manifest = load_manifest(manifest_ref);
  ospe::Workbench bench = ospe::setup_workbench(manifest);
  fs::create_directories(out_dir);
  const auto out = [&out_dir](const char* file) {
    return (fs::path(out_dir) / file).string();
  };

  ospe::Manifest effective = manifest;
  effective.output_dir = out_dir;
  ospe::write_file_atomic(out("manifest_effective.json"),
                          effective.to_json().dump(2) + "\n");
  ospe::write_file_atomic(out("tune_config.txt"), manifest.tune.serialize());
  ospe::write_embedding_file(out("embeddings.ospe"), bench.dataset.embeddings);
  ospe::write_labels_file(out("labels.tsv"), bench.dataset);
  ospe::write_groupspec(out("groups.txt"), bench.groups);
  ospe::write_file_atomic(out("open_words.txt"),
                          ospe::open_words_text(bench));
  ospe::write_embedding_file(out("tokens.ospe"), bench.tokens);

  const auto tuned = ospe::tune_all_groups(bench);
  std::vector<ospe::PromptContext> contexts;
  std::ostringstream trace;
  trace << "group,epoch,loss\n";
  char buf[64];
  for (size_t k = 0; k < tuned.size(); ++k) {
    contexts.push_back(tuned[k].context);
    for (size_t e = 0; e < tuned[k].epoch_losses.size(); ++e) {
      std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g\n", k, e,
                    tuned[k].epoch_losses[e]);
      trace << buf;
    }
    std::cout << "group " << k << ": first-epoch loss "
              << tuned[k].epoch_losses.front() << ", final "
              << tuned[k].epoch_losses.back() << "\n";
  }
  ospe::write_file_atomic(out("loss_trace.csv"), trace.str());
  ospe::write_contexts(out("contexts.ospe"), contexts);
  std::cout << "tuned " << contexts.size() << " group contexts into "
            << out_dir << "\n";
}

void run_infer(const std::string& manifest_ref, const std::string& tuned_dir,
               const std::string& out_dir, double tau_override) {
  ospe::Manifest manifest = load_manifest(manifest_ref);
  if (tau_override >= 0.0) manifest.tau_max = tau_override;
  ospe::Workbench bench = ospe::setup_workbench(manifest);
  // Reuse the tuned artifacts, including any open-word tokens generated
  // during the tune stage.
  bench.tokens = ospe::read_embedding_file(
      (fs::path(tuned_dir) / "tokens.ospe").string());
  bench.groups =
      ospe::read_groupspec((fs::path(tuned_dir) / "groups.txt").string());
  const auto contexts = ospe::read_contexts(
      (fs::path(tuned_dir) / "contexts.ospe").string(),
      manifest.tune.context_length, manifest.tune.class_position);

  const auto models = ospe::build_group_models(bench, contexts);
  const auto records = ospe::infer_all(bench, models);
  fs::create_directories(out_dir);
  ospe::Manifest effective = manifest;
  effective.output_dir = out_dir;
  ospe::write_file_atomic(
      (fs::path(out_dir) / "manifest_effective.json").string(),
      effective.to_json().dump(2) + "\n");
  ospe::write_predictions((fs::path(out_dir) / "predictions.tsv").string(),
                          records, bench.dataset);
  std::cout << "predicted " << records.size() << " test samples into "
            << out_dir << "\n";
}

void run_report(const std::string& manifest_ref,
                const std::string& predictions_dir,
                const std::string& out_dir) {
  const ospe::Manifest manifest = load_manifest(manifest_ref);
  ospe::Workbench bench = ospe::setup_workbench(manifest);
  const auto loaded = ospe::read_predictions(
      (fs::path(predictions_dir) / "predictions.tsv").string(), bench.dataset);
  const ospe::MetricsReport report =
      ospe::report_from_records(bench, loaded.records);
  fs::create_directories(out_dir);
  ospe::Manifest effective = manifest;
  effective.output_dir = out_dir;
  ospe::write_file_atomic(
      (fs::path(out_dir) / "manifest_effective.json").string(),
      effective.to_json().dump(2) + "\n");
  ospe::write_report((fs::path(out_dir) / "metrics.json").string(), report);
  ospe::write_histogram_csv((fs::path(out_dir) / "histogram.csv").string(),
                            report.hist);
  std::cout << "auroc_msp=" << report.auroc_msp;
  if (!report.open_score_degenerate) {
    std::cout << " auroc_open_score=" << report.auroc_open_score;
  } else {
    std::cout << " auroc_open_score=degenerate";
  }
  std::cout << " closed_accuracy=" << report.closed_accuracy << "\n";
  std::cout << "report written to " << out_dir << "\n";
}

void run_compare(const std::string& path_a, const std::string& path_b,
                 const std::string& out_path) {
  const auto report_a = ospe::read_report(path_a);
  const auto report_b = ospe::read_report(path_b);
  const ospe::Json delta = ospe::compare_reports(report_a, report_b);
  const std::string text = delta.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    ospe::write_file_atomic(out_path, text);
    std::cout << "delta written to " << out_path << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ospe: open-set recognition with tuned prompt contexts"};
  app.require_subcommand(1);

  // gen-synth
  GenSynthArgs gen;
  auto* gen_cmd =
      app.add_subcommand("gen-synth", "Generate a synthetic benchmark");
  gen_cmd->add_option("--spec", gen.spec_name,
                      "Named spec: small-osr or large-osr");
  gen_cmd->add_option("--out", gen.out_dir, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->required();
  auto* dim_opt =
      gen_cmd->add_option("--embed-dim", gen.custom.embed_dim, "Embedding dim");
  gen_cmd->add_option("--token-dim", gen.custom.token_dim, "Token dim");
  gen_cmd->add_option("--known", gen.custom.n_known, "Known classes");
  gen_cmd->add_option("--unknown", gen.custom.n_unknown, "Unknown clusters");
  gen_cmd->add_option("--train-per-class", gen.custom.train_per_class,
                      "Training samples per class");
  gen_cmd->add_option("--test-per-class", gen.custom.test_per_class,
                      "Test samples per class");
  gen_cmd->add_option("--mean-scale", gen.custom.cluster_mean_scale,
                      "Cluster mean scale");
  gen_cmd->add_option("--within-std", gen.custom.within_class_std,
                      "Within-class std");
  gen_cmd->add_option("--token-noise-std", gen.custom.token_noise_std,
                      "Class token noise std");

  // sample-open-words
  std::string lexicon_path, closed_path, exclude_path, words_out;
  int word_count = 0;
  uint64_t words_seed = 0;
  auto* words_cmd = app.add_subcommand(
      "sample-open-words", "Sample open words from a lexicon file");
  words_cmd->add_option("--lexicon", lexicon_path, "Lexicon file")->required();
  words_cmd->add_option("--closed", closed_path,
                        "Closed class names, one per line")
      ->required();
  words_cmd->add_option("--exclude", exclude_path,
                        "Extra names to exclude (optional)");
  words_cmd->add_option("--count", word_count, "Number of open words")
      ->required();
  words_cmd->add_option("--seed", words_seed, "Sampling seed")->required();
  words_cmd->add_option("--out", words_out, "Output word list")->required();

  // tune / infer / report
  std::string tune_manifest, tune_out;
  auto* tune_cmd = app.add_subcommand(
      "tune", "Sample open words, group classes and tune all group contexts");
  tune_cmd->add_option("--manifest", tune_manifest,
                       "Manifest path or named manifest")
      ->required();
  tune_cmd->add_option("--out", tune_out, "Output directory")->required();

  std::string infer_manifest, infer_tuned, infer_out;
  double infer_tau = -1.0;
  auto* infer_cmd =
      app.add_subcommand("infer", "Combinatorial inference over test samples");
  infer_cmd->add_option("--manifest", infer_manifest,
                        "Manifest path or named manifest")
      ->required();
  infer_cmd->add_option("--tuned", infer_tuned, "Directory written by tune")
      ->required();
  infer_cmd->add_option("--out", infer_out, "Output directory")->required();
  infer_cmd->add_option("--tau", infer_tau, "Override tau_max");

  std::string report_manifest, report_predictions, report_out;
  auto* report_cmd =
      app.add_subcommand("report", "Compute metrics from predictions");
  report_cmd->add_option("--manifest", report_manifest,
                         "Manifest path or named manifest")
      ->required();
  report_cmd
      ->add_option("--predictions", report_predictions,
                   "Directory written by infer")
      ->required();
  report_cmd->add_option("--out", report_out, "Output directory")->required();

  std::string compare_a, compare_b, compare_out;
  auto* compare_cmd =
      app.add_subcommand("compare", "Diff two metric reports");
  compare_cmd->add_option("--a", compare_a, "First metrics.json")->required();
  compare_cmd->add_option("--b", compare_b, "Second metrics.json")->required();
  compare_cmd->add_option("--out", compare_out, "Delta output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigExit;
  }

  try {
    if (gen_cmd->parsed()) {
      gen.has_custom = dim_opt->count() > 0;
      run_gen_synth(gen);
    } else if (words_cmd->parsed()) {
      run_sample_open_words(lexicon_path, closed_path, exclude_path,
                            word_count, words_seed, words_out);
    } else if (tune_cmd->parsed()) {
      run_tune(tune_manifest, tune_out);
    } else if (infer_cmd->parsed()) {
      run_infer(infer_manifest, infer_tuned, infer_out, infer_tau);
    } else if (report_cmd->parsed()) {
      run_report(report_manifest, report_predictions, report_out);
    } else if (compare_cmd->parsed()) {
      run_compare(compare_a, compare_b, compare_out);
    }
  } catch (const ospe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const ospe::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumericExit;
  } catch (const ospe::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataExit;
  }
  return 0;
}
