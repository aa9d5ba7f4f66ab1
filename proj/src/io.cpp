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
// On-disk formats: binary tensor files, labels, group specs, predictions,
// manifests and metric reports.

#include "ospe/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ospe {

namespace {

constexpr char kMagic[4] = {'O', 'S', 'P', 'E'};
constexpr uint16_t kVersionF32 = 1;
constexpr uint16_t kVersionF64 = 2;

void put_bytes(std::ostream& out, const void* data, size_t len) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
}

void put_u16(std::ostream& out, uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>(v >> 8)};
  put_bytes(out, b, 2);
}

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(out, b, 4);
}

void put_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(out, b, 8);
}

void put_f32(std::ostream& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

void put_f64(std::ostream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

void get_bytes(std::istream& in, void* data, size_t len) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
  if (static_cast<size_t>(in.gcount()) != len) {
    throw DataError("embedding file: truncated");
  }
}

uint16_t get_u16(std::istream& in) {
  unsigned char b[2];
  get_bytes(in, b, 2);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  get_bytes(in, b, 4);
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  get_bytes(in, b, 8);
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

double get_f32(std::istream& in) {
  const uint32_t bits = get_u32(in);
  float v;
  std::memcpy(&v, &bits, 4);
  return static_cast<double>(v);
}

double get_f64(std::istream& in) {
  const uint64_t bits = get_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string format_tau(double tau) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.2f", tau);
  return buf;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  for (;;) {
    const size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

void write_embedding_stream(std::ostream& out, const EmbeddingTable& table,
                            bool f64) {
  if (table.size() == 0 || table.dim == 0) {
    throw DataError("write_embedding_stream: empty table");
  }
  put_bytes(out, kMagic, 4);
  put_u16(out, f64 ? kVersionF64 : kVersionF32);
  put_u64(out, table.size());
  put_u32(out, static_cast<uint32_t>(table.dim));
  for (size_t i = 0; i < table.size(); ++i) {
    const std::string& id = table.ids[i];
    put_u16(out, static_cast<uint16_t>(id.size()));
    put_bytes(out, id.data(), id.size());
    for (double x : table.vectors[i]) {
      if (f64) {
        put_f64(out, x);
      } else {
        put_f32(out, static_cast<float>(x));
      }
    }
  }
}

EmbeddingTable read_embedding_stream(std::istream& in) {
  char magic[4];
  get_bytes(in, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("embedding file: bad magic");
  }
  const uint16_t version = get_u16(in);
  if (version != kVersionF32 && version != kVersionF64) {
    throw DataError("embedding file: unsupported version " +
                    std::to_string(version));
  }
  const uint64_t count = get_u64(in);
  const uint32_t dim = get_u32(in);
  if (dim == 0) throw DataError("embedding file: zero dimension");

  EmbeddingTable table;
  for (uint64_t i = 0; i < count; ++i) {
    const uint16_t id_len = get_u16(in);
    std::string id(id_len, '\0');
    get_bytes(in, id.data(), id_len);
    Vec v(dim);
    for (uint32_t d = 0; d < dim; ++d) {
      v[d] = version == kVersionF64 ? get_f64(in) : get_f32(in);
    }
    table.add(id, std::move(v));
  }
  // Reject trailing garbage so a concatenated or padded file is caught.
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("embedding file: trailing data after last record");
  }
  return table;
}

void write_embedding_file(const std::string& path, const EmbeddingTable& table,
                          bool f64) {
  std::ostringstream buffer(std::ios::binary);
  write_embedding_stream(buffer, table, f64);
  write_file_atomic(path, buffer.str());
}

EmbeddingTable read_embedding_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read embedding file '" + path + "'");
  try {
    return read_embedding_stream(in);
  } catch (const DataError& e) {
    throw DataError(std::string(e.what()) + " ('" + path + "')");
  }
}

std::string embedding_bytes(const EmbeddingTable& table) {
  std::ostringstream buffer(std::ios::binary);
  write_embedding_stream(buffer, table, false);
  return buffer.str();
}

std::string labels_to_text(const Dataset& data) {
  std::ostringstream out;
  for (const auto& entry : data.entries) {
    out << entry.id << '\t'
        << (entry.label < 0 ? std::string("UNKNOWN")
                            : data.class_names[entry.label])
        << '\t' << to_string(entry.split) << '\n';
  }
  return out.str();
}

void write_labels_file(const std::string& path, const Dataset& data) {
  write_file_atomic(path, labels_to_text(data));
}

Dataset read_dataset(const std::string& embeddings_path,
                     const std::string& labels_path) {
  Dataset data;
  data.embeddings = read_embedding_file(embeddings_path);

  std::ifstream in(labels_path);
  if (!in) throw DataError("cannot read labels file '" + labels_path + "'");
  std::unordered_map<std::string, int> class_index;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw DataError("labels file '" + labels_path + "': line " +
                      std::to_string(line_no) + " needs 3 tab-separated fields");
    }
    Dataset::Entry entry;
    entry.id = fields[0];
    entry.split = split_from_string(fields[2]);
    if (fields[1] == "UNKNOWN") {
      if (entry.split != Split::kTestUnknown) {
        throw DataError("labels file: sample '" + entry.id +
                        "' is UNKNOWN but not in the test-unknown split");
      }
      entry.label = -1;
    } else {
      auto [it, inserted] = class_index.try_emplace(
          fields[1], static_cast<int>(data.class_names.size()));
      if (inserted) data.class_names.push_back(fields[1]);
      entry.label = it->second;
    }
    data.entries.push_back(std::move(entry));
  }
  if (data.entries.empty()) {
    throw DataError("labels file '" + labels_path + "' is empty");
  }
  data.validate();
  return data;
}

std::string groupspec_to_text(const GroupSpec& spec) {
  std::ostringstream out;
  out << "strategy\t" << to_string(spec.strategy) << '\n';
  out << "n_c\t" << spec.n_c << '\n';
  out << "seed\t" << spec.seed << '\n';
  for (const auto& group : spec.groups) {
    out << "group\t";
    for (size_t i = 0; i < group.size(); ++i) {
      if (i) out << ' ';
      out << group[i];
    }
    out << '\n';
  }
  return out.str();
}

void write_groupspec(const std::string& path, const GroupSpec& spec) {
  write_file_atomic(path, groupspec_to_text(spec));
}

GroupSpec read_groupspec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read group spec '" + path + "'");
  GroupSpec spec;
  bool have_strategy = false, have_nc = false, have_seed = false;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2) {
      throw DataError("group spec '" + path + "': malformed line '" + line + "'");
    }
    if (fields[0] == "strategy") {
      spec.strategy = grouping_strategy_from_string(fields[1]);
      have_strategy = true;
    } else if (fields[0] == "n_c") {
      spec.n_c = std::stoi(fields[1]);
      have_nc = true;
    } else if (fields[0] == "seed") {
      spec.seed = std::stoull(fields[1]);
      have_seed = true;
    } else if (fields[0] == "group") {
      std::istringstream items(fields[1]);
      std::vector<int> group;
      int idx;
      while (items >> idx) group.push_back(idx);
      if (group.empty()) throw DataError("group spec: empty group line");
      spec.groups.push_back(std::move(group));
    } else {
      throw DataError("group spec: unknown key '" + fields[0] + "'");
    }
  }
  if (!have_strategy || !have_nc || !have_seed || spec.groups.empty()) {
    throw DataError("group spec '" + path + "': incomplete header or no groups");
  }
  return spec;
}

void write_contexts(const std::string& path,
                    const std::vector<PromptContext>& contexts) {
  EmbeddingTable table;
  char id[32];
  for (size_t g = 0; g < contexts.size(); ++g) {
    for (size_t i = 0; i < contexts[g].vectors.size(); ++i) {
      std::snprintf(id, sizeof(id), "g%04zu/v%02zu", g, i);
      table.add(id, contexts[g].vectors[i]);
    }
  }
  write_embedding_file(path, table, /*f64=*/true);
}

std::vector<PromptContext> read_contexts(const std::string& path,
                                         int context_length,
                                         ClassPosition class_position) {
  const EmbeddingTable table = read_embedding_file(path);
  if (context_length < 1 ||
      table.size() % static_cast<size_t>(context_length) != 0) {
    throw DataError("contexts file '" + path + "': row count " +
                    std::to_string(table.size()) +
                    " is not a multiple of the context length");
  }
  const size_t n_groups = table.size() / context_length;
  std::vector<PromptContext> contexts(n_groups);
  char id[32];
  for (size_t g = 0; g < n_groups; ++g) {
    contexts[g].class_position = class_position;
    contexts[g].group_index = static_cast<int>(g);
    for (int i = 0; i < context_length; ++i) {
      std::snprintf(id, sizeof(id), "g%04zu/v%02d", g, i);
      contexts[g].vectors.push_back(table.at(id));
    }
  }
  return contexts;
}

std::string predictions_to_text(const std::vector<PredictionRecord>& records,
                                const Dataset& data) {
  std::ostringstream out;
  out << "sample_id\tsplit\ttruth\ti_opt\tp_max\ts_open\tmsp\targmax\t"
         "predicted\ttau_max\tp_max_per_group\n";
  std::unordered_map<std::string, const Dataset::Entry*> by_id;
  for (const auto& entry : data.entries) by_id[entry.id] = &entry;
  for (const auto& record : records) {
    auto it = by_id.find(record.sample_id);
    if (it == by_id.end()) {
      throw DataError("predictions: sample '" + record.sample_id +
                      "' not in dataset");
    }
    const Dataset::Entry& entry = *it->second;
    out << record.sample_id << '\t' << to_string(entry.split) << '\t'
        << (entry.label < 0 ? std::string("UNKNOWN")
                            : data.class_names[entry.label])
        << '\t' << record.optimal_group << '\t'
        << format_double(record.p_max) << '\t'
        << format_double(record.s_open) << '\t'
        << format_double(record.msp_score) << '\t'
        << data.class_names[record.argmax_class] << '\t'
        << (record.predicted == kUnknownLabel
                ? std::string("UNKNOWN")
                : data.class_names[record.predicted])
        << '\t' << format_double(record.tau_max) << '\t';
    for (size_t k = 0; k < record.p_max_per_group.size(); ++k) {
      if (k) out << ',';
      out << format_double(record.p_max_per_group[k]);
    }
    out << '\n';
  }
  return out.str();
}

void write_predictions(const std::string& path,
                       const std::vector<PredictionRecord>& records,
                       const Dataset& data) {
  write_file_atomic(path, predictions_to_text(records, data));
}

LoadedPredictions read_predictions(const std::string& path,
                                   const Dataset& data) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read predictions file '" + path + "'");
  std::unordered_map<std::string, int> class_index;
  for (int c = 0; c < data.n_classes(); ++c) {
    class_index[data.class_names[c]] = c;
  }
  auto label_of = [&](const std::string& name) {
    if (name == "UNKNOWN") return kUnknownLabel;
    auto it = class_index.find(name);
    if (it == class_index.end()) {
      throw DataError("predictions: unknown class name '" + name + "'");
    }
    return it->second;
  };

  LoadedPredictions out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto fields = split_tabs(line);
    if (fields.size() != 11) {
      throw DataError("predictions file '" + path + "': malformed row");
    }
    PredictionRecord record;
    record.sample_id = fields[0];
    out.splits.push_back(split_from_string(fields[1]));
    out.truth.push_back(label_of(fields[2]));
    record.optimal_group = std::stoi(fields[3]);
    record.p_max = std::stod(fields[4]);
    record.s_open = std::stod(fields[5]);
    record.msp_score = std::stod(fields[6]);
    record.argmax_class = label_of(fields[7]);
    record.predicted = label_of(fields[8]);
    record.tau_max = std::stod(fields[9]);
    std::istringstream pm(fields[10]);
    std::string item;
    while (std::getline(pm, item, ',')) {
      record.p_max_per_group.push_back(std::stod(item));
    }
    out.records.push_back(std::move(record));
  }
  if (out.records.empty()) {
    throw DataError("predictions file '" + path + "' has no rows");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest.
// ---------------------------------------------------------------------------

Json synth_spec_to_json(const SynthSpec& spec) {
  Json j;
  j["embed_dim"] = spec.embed_dim;
  j["token_dim"] = spec.token_dim;
  j["n_known"] = spec.n_known;
  j["n_unknown"] = spec.n_unknown;
  j["train_per_class"] = spec.train_per_class;
  j["test_per_class"] = spec.test_per_class;
  j["cluster_mean_scale"] = spec.cluster_mean_scale;
  j["within_class_std"] = spec.within_class_std;
  j["token_noise_std"] = spec.token_noise_std;
  j["seed"] = spec.seed;
  return j;
}

namespace {

SynthSpec synth_from_json(const Json& j) {
  static const char* kKeys[] = {
      "embed_dim",        "token_dim",         "n_known",
      "n_unknown",        "train_per_class",   "test_per_class",
      "cluster_mean_scale", "within_class_std", "token_noise_std",
      "seed"};
  for (const char* key : kKeys) {
    if (!j.contains(key)) {
      throw ConfigError(std::string("manifest synth spec: missing '") + key +
                        "'");
    }
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : kKeys) known |= it.key() == key;
    if (!known) {
      throw ConfigError("manifest synth spec: unknown key '" + it.key() + "'");
    }
  }
  SynthSpec spec;
  spec.embed_dim = j["embed_dim"].get<int>();
  spec.token_dim = j["token_dim"].get<int>();
  spec.n_known = j["n_known"].get<int>();
  spec.n_unknown = j["n_unknown"].get<int>();
  spec.train_per_class = j["train_per_class"].get<int>();
  spec.test_per_class = j["test_per_class"].get<int>();
  spec.cluster_mean_scale = j["cluster_mean_scale"].get<double>();
  spec.within_class_std = j["within_class_std"].get<double>();
  spec.token_noise_std = j["token_noise_std"].get<double>();
  spec.seed = j["seed"].get<uint64_t>();
  spec.validate();
  return spec;
}

Json tune_to_json(const TuneConfig& config) {
  Json j;
  j["context_length"] = config.context_length;
  j["class_position"] = to_string(config.class_position);
  j["temperature"] = config.temperature;
  j["n_open"] = config.n_open;
  j["epochs"] = config.epochs;
  j["batch_size"] = config.batch_size;
  j["init_std"] = config.init_std;
  j["learning_rate"] = config.learning_rate;
  j["schedule"] = config.linear_decay ? "linear" : "constant";
  j["optimizer"] = to_string(config.optimizer);
  if (config.shots_per_class == 0) {
    j["shots_per_class"] = "all";
  } else {
    j["shots_per_class"] = config.shots_per_class;
  }
  j["seed"] = config.seed;
  return j;
}

TuneConfig tune_from_json(const Json& j) {
  if (!j.contains("seed")) {
    throw ConfigError("manifest tune config: explicit 'seed' is required");
  }
  TuneConfig config;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key == "context_length") {
      config.context_length = it.value().get<int>();
    } else if (key == "class_position") {
      config.class_position =
          class_position_from_string(it.value().get<std::string>());
    } else if (key == "temperature") {
      config.temperature = it.value().get<double>();
    } else if (key == "n_open") {
      config.n_open = it.value().get<int>();
    } else if (key == "epochs") {
      config.epochs = it.value().get<int>();
    } else if (key == "batch_size") {
      config.batch_size = it.value().get<int>();
    } else if (key == "init_std") {
      config.init_std = it.value().get<double>();
    } else if (key == "learning_rate") {
      config.learning_rate = it.value().get<double>();
    } else if (key == "schedule") {
      const std::string schedule = it.value().get<std::string>();
      if (schedule == "linear") {
        config.linear_decay = true;
      } else if (schedule == "constant") {
        config.linear_decay = false;
      } else {
        throw ConfigError("manifest: invalid schedule '" + schedule + "'");
      }
    } else if (key == "optimizer") {
      config.optimizer = optimizer_from_string(it.value().get<std::string>());
    } else if (key == "shots_per_class") {
      if (it.value().is_string()) {
        if (it.value().get<std::string>() != "all") {
          throw ConfigError("manifest: shots_per_class must be 'all' or int");
        }
        config.shots_per_class = 0;
      } else {
        config.shots_per_class = it.value().get<int>();
      }
    } else if (key == "seed") {
      config.seed = it.value().get<uint64_t>();
    } else {
      throw ConfigError("manifest tune config: unknown key '" + key + "'");
    }
  }
  config.validate();
  return config;
}

}  // namespace

void Manifest::validate() const {
  if (synth.has_value()) {
    synth->validate();
    if (!embeddings_path.empty() || !labels_path.empty() ||
        !tokens_path.empty()) {
      throw ConfigError("manifest: synth spec and dataset paths are exclusive");
    }
  } else if (embeddings_path.empty() || labels_path.empty() ||
             tokens_path.empty()) {
    throw ConfigError(
        "manifest: need either a synth spec or embeddings/labels/tokens paths");
  }
  tune.validate();
  if (grouping.n_c < 1) throw ConfigError("manifest: grouping.n_c < 1");
  if (!(tau_max >= 0.0 && tau_max <= 1.0)) {
    throw ConfigError("manifest: tau_max outside [0,1]");
  }
  for (double tau : tau_sweep) {
    if (!(tau >= 0.0 && tau <= 1.0)) {
      throw ConfigError("manifest: tau sweep value outside [0,1]");
    }
  }
  if (!(open_token_std > 0.0)) {
    throw ConfigError("manifest: open_token_std <= 0");
  }
}

Json Manifest::to_json() const {
  Json j;
  j["name"] = name;
  j["seed"] = seed;
  Json dataset;
  if (synth.has_value()) {
    dataset["synth"] = synth_spec_to_json(*synth);
  } else {
    dataset["embeddings"] = embeddings_path;
    dataset["labels"] = labels_path;
    dataset["tokens"] = tokens_path;
  }
  j["dataset"] = dataset;
  j["lexicon"] = lexicon_path;
  j["open_token_std"] = open_token_std;
  j["resample_open_words_for_test"] = resample_open_words_for_test;
  j["share_open_words_across_groups"] = share_open_words_across_groups;
  j["tune"] = tune_to_json(tune);
  Json grouping_json;
  grouping_json["n_c"] = grouping.n_c;
  grouping_json["strategy"] = to_string(grouping.strategy);
  grouping_json["seed"] = grouping.seed;
  j["grouping"] = grouping_json;
  j["tau_sweep"] = tau_sweep;
  j["tau_max"] = tau_max;
  j["output_dir"] = output_dir;
  return j;
}

Manifest Manifest::from_json(const Json& j) {
  static const char* kKnown[] = {"name",
                                 "seed",
                                 "dataset",
                                 "lexicon",
                                 "open_token_std",
                                 "resample_open_words_for_test",
                                 "share_open_words_across_groups",
                                 "tune",
                                 "grouping",
                                 "tau_sweep",
                                 "tau_max",
                                 "output_dir"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : kKnown) known |= it.key() == key;
    if (!known) throw ConfigError("manifest: unknown key '" + it.key() + "'");
  }
  if (!j.contains("seed")) {
    throw ConfigError("manifest: explicit 'seed' is required");
  }
  if (!j.contains("dataset")) throw ConfigError("manifest: missing 'dataset'");
  if (!j.contains("tune")) throw ConfigError("manifest: missing 'tune'");
  if (!j.contains("grouping")) {
    throw ConfigError("manifest: missing 'grouping'");
  }

  Manifest m;
  m.name = j.value("name", std::string());
  m.seed = j["seed"].get<uint64_t>();

  const Json& dataset = j["dataset"];
  if (dataset.contains("synth")) {
    if (dataset.size() != 1) {
      throw ConfigError("manifest: dataset.synth excludes other dataset keys");
    }
    m.synth = synth_from_json(dataset["synth"]);
  } else {
    for (const char* key : {"embeddings", "labels", "tokens"}) {
      if (!dataset.contains(key)) {
        throw ConfigError(std::string("manifest dataset: missing '") + key +
                          "'");
      }
    }
    m.embeddings_path = dataset["embeddings"].get<std::string>();
    m.labels_path = dataset["labels"].get<std::string>();
    m.tokens_path = dataset["tokens"].get<std::string>();
  }

  m.lexicon_path = j.value("lexicon", std::string());
  m.open_token_std = j.value("open_token_std", 1.0);
  m.resample_open_words_for_test =
      j.value("resample_open_words_for_test", false);
  m.share_open_words_across_groups =
      j.value("share_open_words_across_groups", true);
  m.tune = tune_from_json(j["tune"]);

  const Json& grouping = j["grouping"];
  for (const char* key : {"n_c", "strategy", "seed"}) {
    if (!grouping.contains(key)) {
      throw ConfigError(std::string("manifest grouping: missing '") + key + "'");
    }
  }
  m.grouping.n_c = grouping["n_c"].get<int>();
  m.grouping.strategy =
      grouping_strategy_from_string(grouping["strategy"].get<std::string>());
  m.grouping.seed = grouping["seed"].get<uint64_t>();

  if (j.contains("tau_sweep")) {
    m.tau_sweep = j["tau_sweep"].get<std::vector<double>>();
  }
  m.tau_max = j.value("tau_max", 0.90);
  m.output_dir = j.value("output_dir", std::string());
  m.validate();
  return m;
}

Manifest Manifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read manifest '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest '" + path + "': " + e.what());
  }
  return from_json(j);
}

Manifest named_manifest(const std::string& name) {
  Manifest m;
  m.name = name;
  m.seed = 0;
  m.tune.seed = 0;
  m.grouping.seed = 0;
  if (name == "small-osr-n20" || name == "small-osr-n0") {
    m.synth = small_osr_spec(0);
    m.tune.n_open = name == "small-osr-n20" ? 20 : 0;
    m.grouping.n_c = m.synth->n_known;  // one group: plain M-Tuning
  } else if (name == "large-osr-nc20" || name == "large-osr-flat") {
    m.synth = large_osr_spec(0);
    m.tune.n_open = 20;
    m.grouping.n_c = name == "large-osr-nc20" ? 20 : m.synth->n_known;
  } else {
    throw ConfigError("unknown named manifest '" + name +
                      "' (known: small-osr-n20, small-osr-n0, large-osr-nc20, "
                      "large-osr-flat)");
  }
  m.validate();
  return m;
}

std::vector<std::string> named_manifest_names() {
  return {"small-osr-n20", "small-osr-n0", "large-osr-nc20", "large-osr-flat"};
}

// ---------------------------------------------------------------------------
// Reports.
// ---------------------------------------------------------------------------

Json report_to_json(const MetricsReport& report) {
  Json j;
  j["engine_version"] = std::string(kEngineVersion);
  j["dataset_fingerprint"] = report.dataset_fingerprint;
  j["config_fingerprint"] = report.config_fingerprint;
  Json counts;
  counts["train"] = report.n_train;
  counts["test_known"] = report.n_test_known;
  counts["test_unknown"] = report.n_test_unknown;
  j["counts"] = counts;
  j["open_score_degenerate"] = report.open_score_degenerate;
  if (report.open_score_degenerate) {
    j["auroc_open_score"] = nullptr;
  } else {
    j["auroc_open_score"] = report.auroc_open_score;
  }
  j["auroc_msp"] = report.auroc_msp;
  j["closed_accuracy"] = report.closed_accuracy;
  Json mf1;
  for (const auto& [tau, value] : report.mf1_by_tau) {
    mf1[format_tau(tau)] = value;
  }
  j["mf1_by_tau"] = mf1;
  Json hist;
  hist["bins"] = report.hist.bins();
  hist["edges"] = report.hist.edges;
  hist["known_counts"] = report.hist.known_counts;
  hist["unknown_counts"] = report.hist.unknown_counts;
  j["histogram"] = hist;
  return j;
}

MetricsReport report_from_json(const Json& j) {
  MetricsReport report;
  report.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
  report.config_fingerprint = j.at("config_fingerprint").get<std::string>();
  report.n_train = j.at("counts").at("train").get<int64_t>();
  report.n_test_known = j.at("counts").at("test_known").get<int64_t>();
  report.n_test_unknown = j.at("counts").at("test_unknown").get<int64_t>();
  report.open_score_degenerate = j.at("open_score_degenerate").get<bool>();
  if (!report.open_score_degenerate) {
    report.auroc_open_score = j.at("auroc_open_score").get<double>();
  }
  report.auroc_msp = j.at("auroc_msp").get<double>();
  report.closed_accuracy = j.at("closed_accuracy").get<double>();
  for (auto it = j.at("mf1_by_tau").begin(); it != j.at("mf1_by_tau").end();
       ++it) {
    report.mf1_by_tau.emplace_back(std::stod(it.key()),
                                   it.value().get<double>());
  }
  const Json& hist = j.at("histogram");
  report.hist.edges = hist.at("edges").get<std::vector<double>>();
  report.hist.known_counts =
      hist.at("known_counts").get<std::vector<int64_t>>();
  report.hist.unknown_counts =
      hist.at("unknown_counts").get<std::vector<int64_t>>();
  return report;
}

void write_report(const std::string& path, const MetricsReport& report) {
  write_file_atomic(path, report_to_json(report).dump(2) + "\n");
}

MetricsReport read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read report '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("report '" + path + "': " + e.what());
  }
  return report_from_json(j);
}

void write_histogram_csv(const std::string& path, const Histogram& hist) {
  std::ostringstream out;
  out << "bin_low,bin_high,known_count,unknown_count\n";
  for (int b = 0; b < hist.bins(); ++b) {
    out << format_double(hist.edges[b]) << ',' << format_double(hist.edges[b + 1])
        << ',' << hist.known_counts[b] << ',' << hist.unknown_counts[b] << '\n';
  }
  write_file_atomic(path, out.str());
}

Json compare_reports(const MetricsReport& a, const MetricsReport& b) {
  if (a.dataset_fingerprint != b.dataset_fingerprint) {
    throw DataError("compare_reports: dataset fingerprints differ (" +
                    a.dataset_fingerprint + " vs " + b.dataset_fingerprint +
                    ")");
  }
  Json j;
  j["engine_version"] = std::string(kEngineVersion);
  j["dataset_fingerprint"] = a.dataset_fingerprint;
  j["a_config_fingerprint"] = a.config_fingerprint;
  j["b_config_fingerprint"] = b.config_fingerprint;

  Json metrics;
  auto entry = [](double va, double vb) {
    Json e;
    e["a"] = va;
    e["b"] = vb;
    e["delta"] = vb - va;
    return e;
  };
  metrics["closed_accuracy"] = entry(a.closed_accuracy, b.closed_accuracy);
  metrics["auroc_msp"] = entry(a.auroc_msp, b.auroc_msp);
  if (a.open_score_degenerate || b.open_score_degenerate) {
    Json e;
    e["a"] = a.open_score_degenerate ? Json(nullptr) : Json(a.auroc_open_score);
    e["b"] = b.open_score_degenerate ? Json(nullptr) : Json(b.auroc_open_score);
    e["delta"] = nullptr;
    e["note"] = "open score degenerate on one side (no open words)";
    metrics["auroc_open_score"] = e;
  } else {
    metrics["auroc_open_score"] = entry(a.auroc_open_score, b.auroc_open_score);
  }
  Json mf1;
  for (const auto& [tau_a, value_a] : a.mf1_by_tau) {
    for (const auto& [tau_b, value_b] : b.mf1_by_tau) {
      if (format_tau(tau_a) == format_tau(tau_b)) {
        mf1[format_tau(tau_a)] = entry(value_a, value_b);
      }
    }
  }
  metrics["mf1_by_tau"] = mf1;
  j["metrics"] = metrics;
  return j;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path());
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace ospe
