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

#pragma once

#include <iosfwd>
#include <optional>

#include <json.hpp>

#include "ospe/ctt.hpp"
#include "ospe/metrics.hpp"
#include "ospe/synth.hpp"

namespace ospe {

inline constexpr std::string_view kEngineVersion = "0.1.0";

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Binary tensor files: magic "OSPE", version u16 (1 = f32 payload,
// 2 = f64 payload), count u64, dim u32, then per record a u16 id length,
// the UTF-8 id, and dim little-endian floats. Embeddings and token tables
// are written as version 1; tuned contexts use version 2 so reloading them
// is bit-exact.
// ---------------------------------------------------------------------------

void write_embedding_stream(std::ostream& out, const EmbeddingTable& table,
                            bool f64 = false);
EmbeddingTable read_embedding_stream(std::istream& in);

void write_embedding_file(const std::string& path, const EmbeddingTable& table,
                          bool f64 = false);
EmbeddingTable read_embedding_file(const std::string& path);

/// Serialized (version 1) bytes, used for dataset fingerprints.
std::string embedding_bytes(const EmbeddingTable& table);

// ---------------------------------------------------------------------------
// Labels: one line per sample, `id<TAB>label-or-UNKNOWN<TAB>split`. Class
// indices follow first appearance order in the file.
// ---------------------------------------------------------------------------

std::string labels_to_text(const Dataset& data);
void write_labels_file(const std::string& path, const Dataset& data);
/// Merges an embedding table with a labels file into a Dataset.
Dataset read_dataset(const std::string& embeddings_path,
                     const std::string& labels_path);

// ---------------------------------------------------------------------------
// GroupSpec: header lines for strategy, n_c and seed, then one `group` line
// of global class indices per group.
// ---------------------------------------------------------------------------

std::string groupspec_to_text(const GroupSpec& spec);
void write_groupspec(const std::string& path, const GroupSpec& spec);
GroupSpec read_groupspec(const std::string& path);

// Tuned contexts, all groups in one version-2 tensor file.
void write_contexts(const std::string& path,
                    const std::vector<PromptContext>& contexts);
std::vector<PromptContext> read_contexts(const std::string& path,
                                         int context_length,
                                         ClassPosition class_position);

std::string predictions_to_text(const std::vector<PredictionRecord>& records,
                                const Dataset& data);
void write_predictions(const std::string& path,
                       const std::vector<PredictionRecord>& records,
                       const Dataset& data);
/// Reads records plus the per-sample (truth label, split) columns.
struct LoadedPredictions {
  std::vector<PredictionRecord> records;
  std::vector<int> truth;   // global index or kUnknownLabel
  std::vector<Split> splits;
};
LoadedPredictions read_predictions(const std::string& path,
                                   const Dataset& data);

// ---------------------------------------------------------------------------
// Experiment manifest.
// ---------------------------------------------------------------------------

struct Manifest {
  std::string name;
  uint64_t seed = 0;

  // Exactly one of synth / file paths.
  std::optional<SynthSpec> synth;
  std::string embeddings_path;
  std::string labels_path;
  std::string tokens_path;

  std::string lexicon_path;  // empty -> builtin synthetic lexicon
  double open_token_std = 1.0;
  bool resample_open_words_for_test = false;
  // One open-word draw shared by every group (the default reading), or an
  // independent draw per group.
  bool share_open_words_across_groups = true;

  TuneConfig tune;

  struct Grouping {
    int n_c = 20;
    GroupingStrategy strategy = GroupingStrategy::kIdOrder;
    uint64_t seed = 0;
  } grouping;

  std::vector<double> tau_sweep = {0.90, 0.92, 0.94, 0.96, 0.98};
  double tau_max = 0.90;
  std::string output_dir;

  void validate() const;
  Json to_json() const;
  static Manifest from_json(const Json& j);
  static Manifest load(const std::string& path);
};

/// Frozen benchmark manifests: small-osr-n20, small-osr-n0, large-osr-nc20,
/// large-osr-flat.
Manifest named_manifest(const std::string& name);
std::vector<std::string> named_manifest_names();

Json synth_spec_to_json(const SynthSpec& spec);

// ---------------------------------------------------------------------------
// Reports.
// ---------------------------------------------------------------------------

Json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const Json& j);
void write_report(const std::string& path, const MetricsReport& report);
MetricsReport read_report(const std::string& path);
void write_histogram_csv(const std::string& path, const Histogram& hist);

/// Per-metric signed deltas (b - a). Requires matching dataset fingerprints;
/// throws DataError otherwise.
Json compare_reports(const MetricsReport& a, const MetricsReport& b);

// ---------------------------------------------------------------------------
// Orchestration. The pipeline runs lexicon sampling -> grouping -> per-group
// tuning -> combinatorial inference -> metrics, persisting every intermediate
// artifact. Reruns of the same manifest are byte-identical.
// ---------------------------------------------------------------------------

/// Everything the stages share; built once per manifest.
struct Workbench {
  Manifest manifest;
  Dataset dataset;
  TokenTable tokens;  // class tokens plus generated open-word tokens
  std::unique_ptr<MlpTextEncoder> encoder;
  Vocabulary vocab;  // closed classes plus the shared open-word draw
  // Per-group open words for tuning and for inference. All rows alias
  // vocab.open under the default shared draw; they differ when the manifest
  // asks for per-group draws or a fresh test-time draw.
  std::vector<std::vector<std::string>> tune_opens_by_group;
  std::vector<std::vector<std::string>> test_opens_by_group;
  GroupSpec groups;
  std::string dataset_fingerprint;
  std::string config_fingerprint;
};

Workbench setup_workbench(const Manifest& manifest);

/// open_words.txt content: one word per line under the shared draw, or
/// `g<k><TAB>word` lines when every group draws its own.
std::string open_words_text(const Workbench& bench);

std::vector<TuneResult> tune_all_groups(const Workbench& bench);

std::vector<GroupModel> build_group_models(
    const Workbench& bench, const std::vector<PromptContext>& contexts);

std::vector<PredictionRecord> infer_all(const Workbench& bench,
                                        const std::vector<GroupModel>& models);

MetricsReport report_from_records(const Workbench& bench,
                                  const std::vector<PredictionRecord>& records);

struct ExperimentResult {
  MetricsReport report;
  GroupSpec groups;
  std::vector<PromptContext> contexts;
  std::vector<PredictionRecord> records;
};

/// Full pipeline with all artifacts written under output_dir.
ExperimentResult run_experiment(const Manifest& manifest,
                                const std::string& output_dir);

// File helpers (atomic writes via rename).
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace ospe
