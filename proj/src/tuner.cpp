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

#include "ospe/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

namespace ospe {

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kAdamW:
      return "adamw";
    case OptimizerKind::kSgd:
      return "sgd";
  }
  throw std::invalid_argument("unknown OptimizerKind");
}

OptimizerKind optimizer_from_string(const std::string& text) {
  if (text == "adamw") return OptimizerKind::kAdamW;
  if (text == "sgd") return OptimizerKind::kSgd;
  throw ConfigError("invalid optimizer: '" + text + "' (expected adamw|sgd)");
}

void TuneConfig::validate() const {
  if (context_length < 1) throw ConfigError("TuneConfig: context_length < 1");
  if (n_open < 0) throw ConfigError("TuneConfig: n_open < 0");
  if (epochs < 1) throw ConfigError("TuneConfig: epochs < 1");
  if (batch_size < 1) throw ConfigError("TuneConfig: batch_size < 1");
  if (!(init_std > 0.0)) throw ConfigError("TuneConfig: init_std <= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("TuneConfig: learning_rate <= 0");
  if (!(temperature > 0.0)) throw ConfigError("TuneConfig: temperature <= 0");
  if (shots_per_class < 0) throw ConfigError("TuneConfig: shots_per_class < 0");
}

namespace {

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace

std::string TuneConfig::serialize() const {
  std::ostringstream out;
  out << "context_length=" << context_length << "\n";
  out << "class_position=" << to_string(class_position) << "\n";
  out << "temperature=" << format_double(temperature) << "\n";
  out << "n_open=" << n_open << "\n";
  out << "epochs=" << epochs << "\n";
  out << "batch_size=" << batch_size << "\n";
  out << "init_std=" << format_double(init_std) << "\n";
  out << "learning_rate=" << format_double(learning_rate) << "\n";
  out << "schedule=" << (linear_decay ? "linear" : "constant") << "\n";
  out << "optimizer=" << to_string(optimizer) << "\n";
  out << "shots_per_class="
      << (shots_per_class == 0 ? std::string("all")
                               : std::to_string(shots_per_class))
      << "\n";
  out << "seed=" << seed << "\n";
  return out.str();
}

TuneConfig TuneConfig::deserialize(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("TuneConfig: malformed line '" + line + "'");
    }
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto require = [&kv](const std::string& key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("TuneConfig: missing key '" + key + "'");
    return it->second;
  };
  TuneConfig config;
  config.context_length = std::stoi(require("context_length"));
  config.class_position = class_position_from_string(require("class_position"));
  config.temperature = std::stod(require("temperature"));
  config.n_open = std::stoi(require("n_open"));
  config.epochs = std::stoi(require("epochs"));
  config.batch_size = std::stoi(require("batch_size"));
  config.init_std = std::stod(require("init_std"));
  config.learning_rate = std::stod(require("learning_rate"));
  const std::string schedule = require("schedule");
  if (schedule == "linear") {
    config.linear_decay = true;
  } else if (schedule == "constant") {
    config.linear_decay = false;
  } else {
    throw ConfigError("TuneConfig: invalid schedule '" + schedule + "'");
  }
  config.optimizer = optimizer_from_string(require("optimizer"));
  const std::string shots = require("shots_per_class");
  config.shots_per_class = (shots == "all") ? 0 : std::stoi(shots);
  config.seed = std::stoull(require("seed"));
  config.validate();
  return config;
}

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kTestKnown:
      return "test-known";
    case Split::kTestUnknown:
      return "test-unknown";
  }
  throw std::invalid_argument("unknown Split");
}

Split split_from_string(const std::string& text) {
  if (text == "train") return Split::kTrain;
  if (text == "test-known") return Split::kTestKnown;
  if (text == "test-unknown") return Split::kTestUnknown;
  throw DataError("invalid split tag: '" + text + "'");
}

std::vector<size_t> Dataset::rows_of_split(Split split) const {
  std::vector<size_t> rows;
  for (size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].split == split) rows.push_back(i);
  }
  return rows;
}

void Dataset::validate() const {
  const int n = n_classes();
  for (const Entry& entry : entries) {
    if (!embeddings.contains(entry.id)) {
      throw DataError("Dataset: no embedding for sample '" + entry.id + "'");
    }
    if (entry.split == Split::kTestUnknown) {
      if (entry.label != -1) {
        throw DataError("Dataset: test-unknown sample '" + entry.id +
                        "' carries a closed label");
      }
    } else if (entry.label < 0 || entry.label >= n) {
      throw DataError("Dataset: sample '" + entry.id +
                      "' has label out of range");
    }
  }
}

std::vector<double> class_logits(const PromptContext& ctx,
                                 const TextEncoder& encoder,
                                 const TokenTable& tokens,
                                 const std::vector<std::string>& vocab_slice,
                                 const Vec& image_embedding,
                                 double temperature) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("class_logits: temperature must be positive");
  }
  std::vector<double> logits;
  logits.reserve(vocab_slice.size());
  for (const std::string& word : vocab_slice) {
    const Vec text = encoder.encode(assemble_sequence(ctx, tokens.at(word)));
    logits.push_back(cosine(image_embedding, text) / temperature);
  }
  return logits;
}

double cross_entropy_loss(const std::vector<ProbDist>& dists,
                          const std::vector<int>& targets) {
  if (dists.size() != targets.size() || dists.empty()) {
    throw std::invalid_argument("cross_entropy_loss: batch size mismatch");
  }
  double total = 0.0;
  for (size_t s = 0; s < dists.size(); ++s) {
    const int t = targets[s];
    if (t < 0 || t >= static_cast<int>(dists[s].probs.size())) {
      throw std::invalid_argument("cross_entropy_loss: target out of range");
    }
    total += -std::log(dists[s].probs[t]);
  }
  return total / static_cast<double>(dists.size());
}

BatchGrad batch_loss_and_grad(const PromptContext& ctx,
                              const TextEncoder& encoder,
                              const TokenTable& tokens,
                              const std::vector<std::string>& vocab_slice,
                              const std::vector<const Vec*>& images,
                              const std::vector<int>& targets,
                              double temperature) {
  if (images.size() != targets.size() || images.empty()) {
    throw std::invalid_argument("batch_loss_and_grad: batch size mismatch");
  }
  const size_t n_words = vocab_slice.size();
  const size_t batch = images.size();
  const size_t L = ctx.vectors.size();
  const size_t class_at = class_token_index(L, ctx.class_position);

  // Text embeddings depend on the context only, not the sample: encode each
  // word once per batch.
  std::vector<std::vector<Vec>> sequences(n_words);
  std::vector<Vec> texts(n_words);
  std::vector<double> text_norms(n_words);
  for (size_t j = 0; j < n_words; ++j) {
    sequences[j] = assemble_sequence(ctx, tokens.at(vocab_slice[j]));
    texts[j] = encoder.encode(sequences[j]);
    text_norms[j] = norm(texts[j]);
    if (text_norms[j] == 0.0) {
      throw NumericError("batch_loss_and_grad: zero-norm text embedding for '" +
                         vocab_slice[j] + "'");
    }
  }

  double loss = 0.0;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  // upstream[j] accumulates dL/d text_j across the batch.
  std::vector<Vec> upstream(n_words, Vec(texts[0].size(), 0.0));

  std::vector<double> logits(n_words);
  for (size_t s = 0; s < batch; ++s) {
    const Vec& image = *images[s];
    const double image_norm = norm(image);
    if (image_norm == 0.0) {
      throw std::invalid_argument("batch_loss_and_grad: zero-norm image");
    }
    const int target = targets[s];
    if (target < 0 || target >= static_cast<int>(n_words)) {
      throw std::invalid_argument("batch_loss_and_grad: target out of range");
    }
    std::vector<double> cosines(n_words);
    for (size_t j = 0; j < n_words; ++j) {
      cosines[j] = dot(image, texts[j]) / (image_norm * text_norms[j]);
      logits[j] = cosines[j] / temperature;
    }
    const std::vector<double> logp = log_softmax(logits, 1.0);
    loss += -logp[target] * inv_batch;

    for (size_t j = 0; j < n_words; ++j) {
      // dL/dlogit, then through the cosine: d cos(x,t)/dt =
      // x/(|x||t|) - cos * t/|t|^2.
      const double dlogit =
          (std::exp(logp[j]) - (static_cast<int>(j) == target ? 1.0 : 0.0)) *
          inv_batch / temperature;
      if (dlogit == 0.0) continue;
      const double a = dlogit / (image_norm * text_norms[j]);
      const double b = dlogit * cosines[j] / (text_norms[j] * text_norms[j]);
      Vec& up = upstream[j];
      const Vec& text = texts[j];
      for (size_t d = 0; d < up.size(); ++d) {
        up[d] += a * image[d] - b * text[d];
      }
    }
  }

  BatchGrad result;
  result.loss = loss;
  result.dcontext.assign(L, Vec(ctx.token_dim(), 0.0));
  for (size_t j = 0; j < n_words; ++j) {
    const std::vector<Vec> token_grads =
        encoder.encode_backward(sequences[j], upstream[j]);
    for (size_t p = 0; p < token_grads.size(); ++p) {
      if (p == class_at) continue;  // class token is not learnable
      const size_t slot = p < class_at ? p : p - 1;
      Vec& acc = result.dcontext[slot];
      for (size_t d = 0; d < acc.size(); ++d) acc[d] += token_grads[p][d];
    }
  }
  return result;
}

TuneResult tune_group(const GroupSlice& slice, const TuneConfig& config,
                      const std::vector<std::string>& vocab_slice,
                      const TextEncoder& encoder, const TokenTable& tokens,
                      int group_index) {
  if (slice.images.empty()) {
    throw DataError("tune_group: empty training slice for group " +
                    std::to_string(group_index));
  }
  if (slice.images.size() != slice.targets.size()) {
    throw std::invalid_argument("tune_group: images/targets size mismatch");
  }

  const Rng root(config.seed);
  Rng init_rng = root.stream("ctx-init", static_cast<uint64_t>(group_index));

  TuneResult result;
  PromptContext& ctx = result.context;
  ctx.class_position = config.class_position;
  ctx.group_index = group_index;
  ctx.vectors.assign(config.context_length, Vec(encoder.token_dim(), 0.0));
  for (Vec& v : ctx.vectors) {
    for (double& x : v) x = config.init_std * init_rng.next_gaussian();
  }
  if (config.epochs == 0) return result;  // context equals initialization

  const size_t n = slice.images.size();
  const size_t steps_per_epoch =
      (n + config.batch_size - 1) / config.batch_size;
  const size_t total_steps = steps_per_epoch * config.epochs;

  // AdamW state (decoupled weight decay is fixed at 0 here).
  std::vector<Vec> m(ctx.vectors.size(), Vec(encoder.token_dim(), 0.0));
  std::vector<Vec> v(ctx.vectors.size(), Vec(encoder.token_dim(), 0.0));
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  Rng shuffle_rng =
      root.stream("shuffle", static_cast<uint64_t>(group_index));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});

  size_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;  // per-sample mean over the epoch
    for (size_t start = 0; start < n; start += config.batch_size) {
      const size_t stop = std::min(n, start + config.batch_size);
      std::vector<const Vec*> images;
      std::vector<int> targets;
      images.reserve(stop - start);
      targets.reserve(stop - start);
      for (size_t i = start; i < stop; ++i) {
        images.push_back(slice.images[order[i]]);
        targets.push_back(slice.targets[order[i]]);
      }
      const BatchGrad grad = batch_loss_and_grad(
          ctx, encoder, tokens, vocab_slice, images, targets,
          config.temperature);
      if (!std::isfinite(grad.loss)) {
        throw NumericError("tune_group: non-finite loss at group " +
                           std::to_string(group_index) + ", epoch " +
                           std::to_string(epoch) + ", step " +
                           std::to_string(step));
      }
      epoch_loss += grad.loss * static_cast<double>(stop - start);

      // lr(t) = lr0 * (1 - t/total_steps) with 0-based t, floored at 0.
      double lr = config.learning_rate;
      if (config.linear_decay) {
        lr *= std::max(0.0, 1.0 - static_cast<double>(step) /
                                      static_cast<double>(total_steps));
      }
      ++step;

      if (config.optimizer == OptimizerKind::kSgd) {
        for (size_t i = 0; i < ctx.vectors.size(); ++i) {
          for (size_t d = 0; d < ctx.vectors[i].size(); ++d) {
            ctx.vectors[i][d] -= lr * grad.dcontext[i][d];
          }
        }
      } else {
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        for (size_t i = 0; i < ctx.vectors.size(); ++i) {
          for (size_t d = 0; d < ctx.vectors[i].size(); ++d) {
            const double g = grad.dcontext[i][d];
            if (!std::isfinite(g)) {
              throw NumericError("tune_group: non-finite gradient at group " +
                                 std::to_string(group_index));
            }
            m[i][d] = beta1 * m[i][d] + (1.0 - beta1) * g;
            v[i][d] = beta2 * v[i][d] + (1.0 - beta2) * g * g;
            const double mhat = m[i][d] / bc1;
            const double vhat = v[i][d] / bc2;
            ctx.vectors[i][d] -= lr * mhat / (std::sqrt(vhat) + eps);
          }
        }
      }
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
  }
  return result;
}

Dataset select_shots(const Dataset& data, int shots, Rng& rng) {
  if (shots <= 0) throw std::invalid_argument("select_shots: shots <= 0");
  // Per-class row lists in entry order.
  std::vector<std::vector<size_t>> per_class(data.n_classes());
  std::vector<size_t> keep;
  for (size_t i = 0; i < data.entries.size(); ++i) {
    const auto& entry = data.entries[i];
    if (entry.split == Split::kTrain) {
      per_class[entry.label].push_back(i);
    } else {
      keep.push_back(i);
    }
  }
  std::vector<size_t> chosen;
  for (int c = 0; c < data.n_classes(); ++c) {
    auto& rows = per_class[c];
    const size_t take = std::min<size_t>(shots, rows.size());
    for (size_t i = 0; i < take; ++i) {
      const size_t j = i + rng.next_below(rows.size() - i);
      std::swap(rows[i], rows[j]);
    }
    rows.resize(take);
    std::sort(rows.begin(), rows.end());
    chosen.insert(chosen.end(), rows.begin(), rows.end());
  }
  chosen.insert(chosen.end(), keep.begin(), keep.end());
  std::sort(chosen.begin(), chosen.end());

  Dataset out;
  out.class_names = data.class_names;
  for (size_t row : chosen) {
    const auto& entry = data.entries[row];
    out.entries.push_back(entry);
    out.embeddings.add(entry.id, data.embeddings.at(entry.id));
  }
  return out;
}

MTuningModel build_mtuning_model(const PromptContext& ctx,
                                 const TextEncoder& encoder,
                                 const TokenTable& tokens,
                                 const Vocabulary& vocab, double temperature) {
  MTuningModel model;
  model.n_closed = vocab.n_closed();
  model.temperature = temperature;
  for (const std::string& word : vocab.all_words()) {
    model.text_embeddings.push_back(
        encoder.encode(assemble_sequence(ctx, tokens.at(word))));
  }
  return model;
}

MTuningScores mtuning_score(const MTuningModel& model, const Vec& image) {
  std::vector<double> logits(model.text_embeddings.size());
  for (size_t j = 0; j < logits.size(); ++j) {
    logits[j] = cosine(image, model.text_embeddings[j]) / model.temperature;
  }
  MTuningScores scores;
  scores.dist = softmax(logits, 1.0);
  scores.dist.temperature = model.temperature;
  scores.argmax_class = 0;
  scores.p_max = scores.dist.probs[0];
  for (int j = 1; j < model.n_closed; ++j) {
    if (scores.dist.probs[j] > scores.p_max) {
      scores.p_max = scores.dist.probs[j];
      scores.argmax_class = j;
    }
  }
  double open_mass = 0.0;
  for (size_t j = model.n_closed; j < scores.dist.probs.size(); ++j) {
    open_mass += scores.dist.probs[j];
  }
  scores.s_open = open_mass;
  return scores;
}

}  // namespace ospe
