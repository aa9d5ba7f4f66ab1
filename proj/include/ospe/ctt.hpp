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

/// Sentinel for "predicted/true unknown" wherever a global class index is
/// expected.
inline constexpr int kUnknownLabel = -1;

enum class GroupingStrategy { kIdOrder, kRandom, kSemantic };

std::string to_string(GroupingStrategy strategy);
GroupingStrategy grouping_strategy_from_string(const std::string& text);

/// Partition of the global class indices into contiguous segments of an
/// ordering: the first G-1 groups have exactly n_c classes, the last has the
/// remainder.
struct GroupSpec {
  std::vector<std::vector<int>> groups;
  int n_c = 0;
  GroupingStrategy strategy = GroupingStrategy::kIdOrder;
  uint64_t seed = 0;

  int n_groups() const { return static_cast<int>(groups.size()); }
  int n_classes() const;
  /// Group that holds a global class index; throws on out-of-range.
  int group_of(int class_index) const;
};

/// Cut the ordering into segments obeying (G-1)*n_c < n_classes <= G*n_c with
/// equal-size leading groups. The ordering must be a permutation of
/// [0, n_classes).
GroupSpec make_groups(int n_classes, int n_c, const std::vector<int>& ordering);

/// Class orderings: id_order sorts lexicographically by class name, random
/// shuffles, semantic starts from class 0 and greedily appends the unvisited
/// class whose embedding has the highest cosine to the previous one (ties to
/// the lowest index). class_embeddings may be null except for semantic.
std::vector<int> order_classes(GroupingStrategy strategy,
                               const std::vector<std::string>& class_names,
                               const std::vector<Vec>* class_embeddings,
                               Rng& rng);

/// Softmax over one group's closed classes plus the shared open words
/// (group_vocab is closed-first).
ProbDist group_probabilities(const PromptContext& ctx,
                             const TextEncoder& encoder,
                             const TokenTable& tokens,
                             const std::vector<std::string>& group_vocab,
                             const Vec& image_embedding, double temperature);

struct OptimalChoice {
  int group_index = 0;
  double p_max = 0.0;
};

/// p_max per group is the maximum over that group's closed entries only;
/// returns the argmax group, lowest index on ties.
OptimalChoice select_optimal(const std::vector<ProbDist>& dists,
                             const std::vector<int>& n_closed);

/// 1 minus the closed-set probability mass of the given dist; computed as the
/// open-word mass so it is exactly 0 when there are no open words.
double open_score(const ProbDist& dist, int n_closed);

/// Maximum closed-set probability as a known-ness score (the MSP baseline
/// indicator used when no open words exist).
double msp_known_score(const ProbDist& dist, int n_closed);

struct PredictionRecord {
  std::string sample_id;
  std::vector<double> p_max_per_group;
  int optimal_group = 0;
  double p_max = 0.0;
  double s_open = 0.0;
  double msp_score = 0.0;
  int argmax_class = 0;            // global index of the un-thresholded argmax
  int predicted = kUnknownLabel;   // global index or kUnknownLabel
  double tau_max = 0.0;
};

/// Re-threshold a record at a different tau without recomputing anything.
int thresholded_label(const PredictionRecord& record, double tau);

/// Per-group inference state: tuned text embeddings cached once, then reused
/// for every sample.
struct GroupModel {
  std::vector<Vec> text_embeddings;  // group classes then open words
  int n_closed = 0;
  std::vector<int> global_classes;   // size n_closed
};

GroupModel build_group_model(const PromptContext& ctx,
                             const TextEncoder& encoder,
                             const TokenTable& tokens,
                             const std::vector<std::string>& group_class_names,
                             const std::vector<int>& global_classes,
                             const std::vector<std::string>& open_words);

ProbDist model_probabilities(const GroupModel& model, const Vec& image,
                             double temperature);

/// Full combinatorial inference for one sample: score all groups, pick the
/// optimal prompt, derive the open score, MSP and the thresholded label
/// (boundary inclusive: p_max >= tau keeps the closed prediction).
PredictionRecord predict(const std::string& sample_id,
                         const std::vector<GroupModel>& models,
                         const Vec& image, double temperature, double tau_max);

}  // namespace ospe
