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

#include "ospe/tuner.hpp"

namespace ospe {

/// Gaussian-cluster benchmark description. Known and unknown clusters are
/// drawn from the same ambient distribution, so unknown detection cannot fall
/// out of a distribution shift; it has to come from the open-word mechanism.
struct SynthSpec {
  int embed_dim = 32;
  int token_dim = 32;
  int n_known = 10;
  int n_unknown = 10;
  int train_per_class = 40;
  int test_per_class = 25;
  double cluster_mean_scale = 1.0;
  double within_class_std = 0.1;
  double token_noise_std = 0.1;
  uint64_t seed = 0;

  void validate() const;
};

struct SynthData {
  Dataset dataset;  // train + test-known + test-unknown entries, in order
  TokenTable tokens;  // one token per known class name
  std::vector<Vec> known_means;
  std::vector<Vec> unknown_means;
  std::vector<std::string> unknown_names;

  /// True class of each entry (index into known_means for known classes,
  /// n_known + u for unknown cluster u). Generator ground truth; the engine
  /// under test never sees it.
  std::vector<int> true_cluster;
};

/// Deterministic generation: every class mean, sample and token comes from a
/// substream keyed by its own identity, so changing one count never perturbs
/// the rest. All stored vectors are rounded to 32-bit float precision to
/// match the on-disk representation exactly.
SynthData generate(const SynthSpec& spec);

/// Open-word tokens are drawn from the ambient token distribution, one
/// substream per word, so the token depends only on (seed, word).
Vec ambient_token(const std::string& word, int token_dim, double scale,
                  const Rng& root);

/// Index of the closest mean by Euclidean distance, ties to the lowest index.
int nearest_mean(const std::vector<Vec>& means, const Vec& x);

/// Independent oracle for accuracy and group-selection checks: classify every
/// dataset entry against the known class means.
std::vector<int> nearest_mean_oracle(const SynthData& data);

/// Frozen named benchmarks. small-osr is calibrated to be noisy enough that
/// unknown rejection is genuinely hard; large-osr sits in the separable
/// regime (within_class_std <= 0.1 * cluster_mean_scale, dim >= 32).
SynthSpec small_osr_spec(uint64_t seed);
SynthSpec large_osr_spec(uint64_t seed);

}  // namespace ospe
