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
// Experiment orchestration: lexicon sampling, grouping, per-group tuning,
// combinatorial inference and metric reports, with every intermediate
// artifact persisted.

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "ospe/io.hpp"

namespace ospe {

namespace {

constexpr int kHistogramBins = 20;
constexpr double kEncoderPerturbation = 0.1;

std::string hex64(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

// The config fingerprint covers the semantic configuration plus the engine
// version; the run's name and output location stay out of it.
std::string config_fingerprint(const Manifest& manifest) {
  Json j = manifest.to_json();
  j.erase("name");
  j.erase("output_dir");
  uint64_t h = fnv1a64(j.dump());
  h = fnv1a64(kEngineVersion, h);
  return hex64(h);
}

std::string dataset_fingerprint(const Dataset& data) {
  uint64_t h = fnv1a64(embedding_bytes(data.embeddings));
  h = fnv1a64(labels_to_text(data), h);
  return hex64(h);
}

// Bare class-token embeddings (length-1 sequence, no learned context). Used
// by the semantic ordering, which must run before any tuning.
std::vector<Vec> pretune_class_embeddings(const Dataset& data,
                                          const TokenTable& tokens,
                                          const TextEncoder& encoder) {
  std::vector<Vec> embs;
  embs.reserve(data.class_names.size());
  for (const auto& name : data.class_names) {
    embs.push_back(encoder.encode({tokens.at(name)}));
  }
  return embs;
}

void ensure_open_tokens(Workbench& bench,
                        const std::vector<std::string>& words) {
  const Rng root(bench.manifest.seed);
  for (const auto& word : words) {
    if (!bench.tokens.contains(word)) {
      bench.tokens.add(word, ambient_token(word, bench.tokens.dim,
                                           bench.manifest.open_token_std,
                                           root));
    }
  }
}

std::vector<std::string> open_words_for(const Workbench& bench,
                                        std::string_view stream_tag,
                                        uint64_t stream_index) {
  const Manifest& manifest = bench.manifest;
  if (manifest.tune.n_open == 0) return {};
  const std::vector<std::string> lexicon =
      manifest.lexicon_path.empty() ? builtin_lexicon()
                                    : load_lexicon(manifest.lexicon_path);
  Rng rng = Rng(manifest.seed).stream(stream_tag, stream_index);
  return sample_open_words(lexicon, bench.dataset.class_names, {},
                           manifest.tune.n_open, rng);
}

// Per-group open-word draws: one shared draw (index 0) for every group, or
// an independent draw per group index.
std::vector<std::vector<std::string>> open_words_by_group(
    Workbench& bench, std::string_view stream_tag) {
  const int n_groups = bench.groups.n_groups();
  std::vector<std::vector<std::string>> by_group(n_groups);
  for (int k = 0; k < n_groups; ++k) {
    const bool fresh = !bench.manifest.share_open_words_across_groups;
    if (k == 0 || fresh) {
      by_group[k] =
          open_words_for(bench, stream_tag, fresh ? uint64_t(k) : 0);
      // Each draw must itself be admissible against the closed classes.
      Vocabulary::make(bench.dataset.class_names, by_group[k]);
      ensure_open_tokens(bench, by_group[k]);
    } else {
      by_group[k] = by_group[0];
    }
  }
  return by_group;
}

}  // namespace

Workbench setup_workbench(const Manifest& manifest) {
  manifest.validate();
  Workbench bench;
  bench.manifest = manifest;

  if (manifest.synth.has_value()) {
    SynthData data = generate(*manifest.synth);
    bench.dataset = std::move(data.dataset);
    bench.tokens = std::move(data.tokens);
  } else {
    bench.dataset = read_dataset(manifest.embeddings_path,
                                 manifest.labels_path);
    bench.tokens = read_embedding_file(manifest.tokens_path);
    for (const auto& name : bench.dataset.class_names) {
      if (!bench.tokens.contains(name)) {
        throw DataError("token table has no entry for class '" + name + "'");
      }
    }
  }
  bench.dataset_fingerprint = dataset_fingerprint(bench.dataset);
  bench.config_fingerprint = config_fingerprint(manifest);

  if (manifest.tune.shots_per_class > 0) {
    Rng shot_rng = Rng(manifest.seed).stream("shots");
    bench.dataset =
        select_shots(bench.dataset, manifest.tune.shots_per_class, shot_rng);
  }

  MlpTextEncoder::Options options;
  options.token_dim = bench.tokens.dim;
  options.output_dim = bench.dataset.embeddings.dim;
  options.perturbation = kEncoderPerturbation;
  options.seed = Rng(manifest.seed).stream("encoder").seed();
  bench.encoder = std::make_unique<MlpTextEncoder>(options);

  Rng order_rng = Rng(manifest.grouping.seed).stream("ordering");
  std::vector<int> ordering;
  if (manifest.grouping.strategy == GroupingStrategy::kSemantic) {
    const std::vector<Vec> class_embs =
        pretune_class_embeddings(bench.dataset, bench.tokens, *bench.encoder);
    ordering = order_classes(manifest.grouping.strategy,
                             bench.dataset.class_names, &class_embs,
                             order_rng);
  } else {
    ordering = order_classes(manifest.grouping.strategy,
                             bench.dataset.class_names, nullptr, order_rng);
  }
  bench.groups =
      make_groups(bench.dataset.n_classes(), manifest.grouping.n_c, ordering);
  bench.groups.strategy = manifest.grouping.strategy;
  bench.groups.seed = manifest.grouping.seed;

  bench.tune_opens_by_group = open_words_by_group(bench, "open-words");
  bench.vocab = Vocabulary::make(bench.dataset.class_names,
                                 bench.tune_opens_by_group[0]);
  if (manifest.resample_open_words_for_test && manifest.tune.n_open > 0) {
    bench.test_opens_by_group = open_words_by_group(bench, "open-words-test");
  } else {
    bench.test_opens_by_group = bench.tune_opens_by_group;
  }
  return bench;
}

std::string open_words_text(const Workbench& bench) {
  std::ostringstream out;
  if (bench.manifest.share_open_words_across_groups) {
    for (const auto& word : bench.vocab.open) out << word << '\n';
  } else {
    for (size_t k = 0; k < bench.tune_opens_by_group.size(); ++k) {
      for (const auto& word : bench.tune_opens_by_group[k]) {
        out << 'g' << k << '\t' << word << '\n';
      }
    }
  }
  return out.str();
}

std::vector<TuneResult> tune_all_groups(const Workbench& bench) {
  // Group the training rows by class once.
  std::vector<std::vector<const Vec*>> per_class(bench.dataset.n_classes());
  for (const auto& entry : bench.dataset.entries) {
    if (entry.split == Split::kTrain) {
      per_class[entry.label].push_back(&bench.dataset.embeddings.at(entry.id));
    }
  }

  std::vector<TuneResult> results;
  results.reserve(bench.groups.n_groups());
  for (int k = 0; k < bench.groups.n_groups(); ++k) {
    const std::vector<int>& classes = bench.groups.groups[k];
    GroupSlice slice;
    std::vector<std::string> vocab_slice;
    for (size_t local = 0; local < classes.size(); ++local) {
      vocab_slice.push_back(bench.dataset.class_names[classes[local]]);
      for (const Vec* image : per_class[classes[local]]) {
        slice.images.push_back(image);
        slice.targets.push_back(static_cast<int>(local));
      }
    }
    const auto& opens = bench.tune_opens_by_group[k];
    vocab_slice.insert(vocab_slice.end(), opens.begin(), opens.end());
    results.push_back(tune_group(slice, bench.manifest.tune, vocab_slice,
                                 *bench.encoder, bench.tokens, k));
  }
  return results;
}

std::vector<GroupModel> build_group_models(
    const Workbench& bench, const std::vector<PromptContext>& contexts) {
  if (static_cast<int>(contexts.size()) != bench.groups.n_groups()) {
    throw ConfigError("build_group_models: expected " +
                      std::to_string(bench.groups.n_groups()) +
                      " contexts, got " + std::to_string(contexts.size()));
  }
  std::vector<GroupModel> models;
  for (int k = 0; k < bench.groups.n_groups(); ++k) {
    std::vector<std::string> names;
    for (int c : bench.groups.groups[k]) {
      names.push_back(bench.dataset.class_names[c]);
    }
    models.push_back(build_group_model(contexts[k], *bench.encoder,
                                       bench.tokens, names,
                                       bench.groups.groups[k],
                                       bench.test_opens_by_group[k]));
  }
  return models;
}

std::vector<PredictionRecord> infer_all(
    const Workbench& bench, const std::vector<GroupModel>& models) {
  std::vector<PredictionRecord> records;
  for (const auto& entry : bench.dataset.entries) {
    if (entry.split == Split::kTrain) continue;
    records.push_back(predict(entry.id, models,
                              bench.dataset.embeddings.at(entry.id),
                              bench.manifest.tune.temperature,
                              bench.manifest.tau_max));
  }
  return records;
}

MetricsReport report_from_records(
    const Workbench& bench, const std::vector<PredictionRecord>& records) {
  std::unordered_map<std::string, const Dataset::Entry*> by_id;
  for (const auto& entry : bench.dataset.entries) by_id[entry.id] = &entry;

  std::vector<double> s_open_known, s_open_unknown;
  std::vector<double> msp_known, msp_unknown;
  std::vector<int> argmax_known, truth_known;
  std::vector<int> truth_all;
  std::vector<double> probs;
  std::vector<bool> unknown_tags;

  for (const auto& record : records) {
    auto it = by_id.find(record.sample_id);
    if (it == by_id.end()) {
      throw DataError("report: sample '" + record.sample_id +
                      "' not in dataset");
    }
    const Dataset::Entry& entry = *it->second;
    const bool is_unknown = entry.split == Split::kTestUnknown;
    probs.push_back(record.msp_score);
    unknown_tags.push_back(is_unknown);
    truth_all.push_back(is_unknown ? kUnknownLabel : entry.label);
    if (is_unknown) {
      s_open_unknown.push_back(record.s_open);
      msp_unknown.push_back(record.msp_score);
    } else {
      s_open_known.push_back(record.s_open);
      msp_known.push_back(record.msp_score);
      argmax_known.push_back(record.argmax_class);
      truth_known.push_back(entry.label);
    }
  }

  MetricsReport report;
  report.dataset_fingerprint = bench.dataset_fingerprint;
  report.config_fingerprint = bench.config_fingerprint;
  report.n_train = static_cast<int64_t>(
      bench.dataset.rows_of_split(Split::kTrain).size());
  report.n_test_known = static_cast<int64_t>(msp_known.size());
  report.n_test_unknown = static_cast<int64_t>(msp_unknown.size());

  report.open_score_degenerate = bench.manifest.tune.n_open == 0;
  if (!report.open_score_degenerate) {
    report.auroc_open_score = auroc(s_open_known, s_open_unknown,
                                    ScoreOrientation::kHigherIsUnknown);
  }
  report.auroc_msp =
      auroc(msp_known, msp_unknown, ScoreOrientation::kHigherIsKnown);
  report.closed_accuracy = closed_accuracy(argmax_known, truth_known);

  for (double tau : bench.manifest.tau_sweep) {
    std::vector<int> predicted;
    predicted.reserve(records.size());
    for (const auto& record : records) {
      predicted.push_back(thresholded_label(record, tau));
    }
    report.mf1_by_tau.emplace_back(
        tau, macro_f1(predicted, truth_all, bench.dataset.n_classes()));
  }
  report.hist = histogram(probs, unknown_tags, kHistogramBins);
  return report;
}

ExperimentResult run_experiment(const Manifest& manifest,
                                const std::string& output_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(output_dir);
  const auto out = [&output_dir](const std::string& file) {
    return (fs::path(output_dir) / file).string();
  };

  Workbench bench = setup_workbench(manifest);
  Manifest effective = manifest;
  effective.output_dir = output_dir;
  write_file_atomic(out("manifest_effective.json"),
                    effective.to_json().dump(2) + "\n");
  write_file_atomic(out("tune_config.txt"), manifest.tune.serialize());
  write_embedding_file(out("embeddings.ospe"), bench.dataset.embeddings);
  write_labels_file(out("labels.tsv"), bench.dataset);
  write_groupspec(out("groups.txt"), bench.groups);
  {
    std::ostringstream closed;
    for (const auto& name : bench.vocab.closed) closed << name << '\n';
    write_file_atomic(out("closed_classes.txt"), closed.str());
    write_file_atomic(out("open_words.txt"), open_words_text(bench));
  }

  const std::vector<TuneResult> tuned = tune_all_groups(bench);
  std::vector<PromptContext> contexts;
  {
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
    }
    write_file_atomic(out("loss_trace.csv"), trace.str());
  }
  write_contexts(out("contexts.ospe"), contexts);
  // Token table is written after tuning so resampled test-time open words
  // (when enabled) are included too.
  const std::vector<GroupModel> models = build_group_models(bench, contexts);
  write_embedding_file(out("tokens.ospe"), bench.tokens);

  const std::vector<PredictionRecord> records = infer_all(bench, models);
  write_predictions(out("predictions.tsv"), records, bench.dataset);

  const MetricsReport report = report_from_records(bench, records);
  write_report(out("metrics.json"), report);
  write_histogram_csv(out("histogram.csv"), report.hist);

  ExperimentResult result;
  result.report = report;
  result.groups = bench.groups;
  result.contexts = std::move(contexts);
  result.records = records;
  return result;
}

}  // namespace ospe
