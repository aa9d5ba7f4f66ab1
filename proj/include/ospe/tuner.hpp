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

#include "ospe/encoder.hpp"
#include "ospe/lexicon.hpp"

namespace ospe {

// Default softmax temperature for cosine logits. Raw cosines live in [-1, 1],
// so the temperature sets the effective logit scale the same way CLIP's
// learned logit multiplier does (CLIP ships with roughly 1/100); 0.05 gives
// class-separated data a peaked closed-set distribution without collapsing
// every sample to a one-hot.
inline constexpr double kDefaultTemperature = 0.05;

enum class OptimizerKind { kAdamW, kSgd };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& text);

struct TuneConfig {
  int context_length = 10;
  ClassPosition class_position = ClassPosition::kMid;
  double temperature = kDefaultTemperature;
  int n_open = 20;
  int epochs = 30;
  int batch_size = 64;
  double init_std = 0.02;
  double learning_rate = 1e-5;
  bool linear_decay = true;
  OptimizerKind optimizer = OptimizerKind::kAdamW;
  int shots_per_class = 0;  // 0 = use all training data
  uint64_t seed = 0;

  /// Throws ConfigError when a field is out of range.
  void validate() const;

  /// Flat key=value document; every field is written, none may be omitted
  /// when parsing back.
  std::string serialize() const;
  static TuneConfig deserialize(const std::string& text);
};

enum class Split { kTrain, kTestKnown, kTestUnknown };

std::string to_string(Split split);
Split split_from_string(const std::string& text);

/// Embeddings plus per-sample labels and split tags. Unknown test samples
/// carry no closed-class label (label == -1).
struct Dataset {
  struct Entry {
    std::string id;
    int label = -1;  // index into class_names; -1 for test-unknown
    Split split = Split::kTrain;
  };

  EmbeddingTable embeddings;
  std::vector<Entry> entries;
  std::vector<std::string> class_names;

  int n_classes() const { return static_cast<int>(class_names.size()); }
  std::vector<size_t> rows_of_split(Split split) const;
  void validate() const;
};

/// logits[j] = cosine(image, E_T(assemble(ctx, token(word_j)))) / T, over the
/// vocab slice in its fixed closed-first order.
std::vector<double> class_logits(const PromptContext& ctx,
                                 const TextEncoder& encoder,
                                 const TokenTable& tokens,
                                 const std::vector<std::string>& vocab_slice,
                                 const Vec& image_embedding,
                                 double temperature);

/// Mean over the batch of -log p(target). Targets must index closed classes;
/// training data never carries an open-word target.
double cross_entropy_loss(const std::vector<ProbDist>& dists,
                          const std::vector<int>& targets);

/// One group's training view: image embeddings plus group-local targets
/// (indices into the closed prefix of the vocab slice).
struct GroupSlice {
  std::vector<const Vec*> images;
  std::vector<int> targets;
};

struct BatchGrad {
  double loss = 0.0;
  std::vector<Vec> dcontext;  // same shape as ctx.vectors
};

/// Mean cross-entropy over a batch and its exact gradient with respect to
/// the context vectors, chained through softmax, cosine and the encoder's
/// adjoint. The class-token gradient is computed and discarded.
BatchGrad batch_loss_and_grad(const PromptContext& ctx,
                              const TextEncoder& encoder,
                              const TokenTable& tokens,
                              const std::vector<std::string>& vocab_slice,
                              const std::vector<const Vec*>& images,
                              const std::vector<int>& targets,
                              double temperature);

struct TuneResult {
  PromptContext context;
  std::vector<double> epoch_losses;  // mean step loss per epoch
};

/// Optimize one group's context by cross-entropy over its closed classes plus
/// the open words. The encoder and token table are never touched. Fully
/// deterministic under (config.seed, group_index): initialization and batch
/// shuffling use substreams keyed by the group, so groups can be tuned in any
/// order with bit-identical results. A non-finite loss aborts with
/// NumericError instead of being clamped.
TuneResult tune_group(const GroupSlice& slice, const TuneConfig& config,
                      const std::vector<std::string>& vocab_slice,
                      const TextEncoder& encoder, const TokenTable& tokens,
                      int group_index);

/// Per-class subsample of the training split: min(shots, available) samples
/// per class, uniform without replacement, deterministic per rng stream.
/// Test splits pass through unchanged.
Dataset select_shots(const Dataset& data, int shots, Rng& rng);

/// Plain single-prompt M-Tuning inference (the non-grouped path). Kept
/// deliberately separate from the combinatorial machinery so the two can be
/// checked against each other.
struct MTuningModel {
  std::vector<Vec> text_embeddings;  // closed classes then open words
  int n_closed = 0;
  double temperature = kDefaultTemperature;
};

MTuningModel build_mtuning_model(const PromptContext& ctx,
                                 const TextEncoder& encoder,
                                 const TokenTable& tokens,
                                 const Vocabulary& vocab, double temperature);

struct MTuningScores {
  ProbDist dist;
  double p_max = 0.0;
  int argmax_class = 0;
  double s_open = 0.0;
};

MTuningScores mtuning_score(const MTuningModel& model, const Vec& image);

}  // namespace ospe
