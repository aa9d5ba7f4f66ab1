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

#include "ospe/ctt.hpp"

#include <algorithm>
#include <numeric>

namespace ospe {

std::string to_string(GroupingStrategy strategy) {
  switch (strategy) {
    case GroupingStrategy::kIdOrder:
      return "id_order";
    case GroupingStrategy::kRandom:
      return "random";
    case GroupingStrategy::kSemantic:
      return "semantic";
  }
  throw std::invalid_argument("unknown GroupingStrategy");
}

GroupingStrategy grouping_strategy_from_string(const std::string& text) {
  if (text == "id_order") return GroupingStrategy::kIdOrder;
  if (text == "random") return GroupingStrategy::kRandom;
  if (text == "semantic") return GroupingStrategy::kSemantic;
  throw ConfigError("invalid grouping strategy: '" + text +
                    "' (expected id_order|random|semantic)");
}

int GroupSpec::n_classes() const {
  int n = 0;
  for (const auto& group : groups) n += static_cast<int>(group.size());
  return n;
}

int GroupSpec::group_of(int class_index) const {
  for (int k = 0; k < n_groups(); ++k) {
    for (int c : groups[k]) {
      if (c == class_index) return k;
    }
  }
  throw std::invalid_argument("GroupSpec: class index " +
                              std::to_string(class_index) +
                              " not in any group");
}

GroupSpec make_groups(int n_classes, int n_c,
                      const std::vector<int>& ordering) {
  if (n_classes < 1) throw std::invalid_argument("make_groups: n_classes < 1");
  if (n_c < 1) throw std::invalid_argument("make_groups: n_c < 1");
  if (static_cast<int>(ordering.size()) != n_classes) {
    throw std::invalid_argument("make_groups: ordering size mismatch");
  }
  std::vector<bool> seen(n_classes, false);
  for (int c : ordering) {
    if (c < 0 || c >= n_classes || seen[c]) {
      throw std::invalid_argument("make_groups: ordering is not a permutation");
    }
    seen[c] = true;
  }

  const int n_groups = (n_classes + n_c - 1) / n_c;
  GroupSpec spec;
  spec.n_c = n_c;
  spec.groups.resize(n_groups);
  for (int i = 0; i < n_classes; ++i) {
    spec.groups[i / n_c].push_back(ordering[i]);
  }
  return spec;
}

std::vector<int> order_classes(GroupingStrategy strategy,
                               const std::vector<std::string>& class_names,
                               const std::vector<Vec>* class_embeddings,
                               Rng& rng) {
  const int n = static_cast<int>(class_names.size());
  if (n < 1) throw std::invalid_argument("order_classes: no classes");
  {
    std::vector<std::string> sorted_names = class_names;
    std::sort(sorted_names.begin(), sorted_names.end());
    if (std::adjacent_find(sorted_names.begin(), sorted_names.end()) !=
        sorted_names.end()) {
      throw std::invalid_argument("order_classes: class names not unique");
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  switch (strategy) {
    case GroupingStrategy::kIdOrder:
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return class_names[a] < class_names[b];
      });
      return order;
    case GroupingStrategy::kRandom:
      rng.shuffle(order);
      return order;
    case GroupingStrategy::kSemantic:
      break;
  }

  if (class_embeddings == nullptr ||
      static_cast<int>(class_embeddings->size()) != n) {
    throw std::invalid_argument(
        "order_classes: semantic strategy needs one embedding per class");
  }
  // Greedy chain: start at class 0, append the unvisited class most similar
  // to the previously appended one, ties to the lowest index.
  std::vector<int> chain;
  std::vector<bool> visited(n, false);
  chain.push_back(0);
  visited[0] = true;
  while (static_cast<int>(chain.size()) < n) {
    const Vec& prev = (*class_embeddings)[chain.back()];
    int best = -1;
    double best_sim = 0.0;
    for (int c = 0; c < n; ++c) {
      if (visited[c]) continue;
      const double sim = cosine(prev, (*class_embeddings)[c]);
      if (best < 0 || sim > best_sim) {
        best = c;
        best_sim = sim;
      }
    }
    visited[best] = true;
    chain.push_back(best);
  }
  return chain;
}

ProbDist group_probabilities(const PromptContext& ctx,
                             const TextEncoder& encoder,
                             const TokenTable& tokens,
                             const std::vector<std::string>& group_vocab,
                             const Vec& image_embedding, double temperature) {
  const std::vector<double> logits = class_logits(
      ctx, encoder, tokens, group_vocab, image_embedding, temperature);
  ProbDist dist = softmax(logits, 1.0);
  dist.temperature = temperature;
  return dist;
}

OptimalChoice select_optimal(const std::vector<ProbDist>& dists,
                             const std::vector<int>& n_closed) {
  if (dists.empty()) throw std::invalid_argument("select_optimal: no groups");
  if (dists.size() != n_closed.size()) {
    throw std::invalid_argument("select_optimal: closed-size list mismatch");
  }
  OptimalChoice choice;
  choice.group_index = -1;
  for (size_t k = 0; k < dists.size(); ++k) {
    if (n_closed[k] < 1 ||
        n_closed[k] > static_cast<int>(dists[k].probs.size())) {
      throw std::invalid_argument("select_optimal: bad closed prefix length");
    }
    double p_max = dists[k].probs[0];
    for (int j = 1; j < n_closed[k]; ++j) {
      p_max = std::max(p_max, dists[k].probs[j]);
    }
    // Strict > keeps the lowest group index on ties.
    if (choice.group_index < 0 || p_max > choice.p_max) {
      choice.group_index = static_cast<int>(k);
      choice.p_max = p_max;
    }
  }
  return choice;
}

double open_score(const ProbDist& dist, int n_closed) {
  if (n_closed < 0 || n_closed > static_cast<int>(dist.probs.size())) {
    throw std::invalid_argument("open_score: bad closed prefix length");
  }
  double open_mass = 0.0;
  for (size_t j = n_closed; j < dist.probs.size(); ++j) {
    open_mass += dist.probs[j];
  }
  return open_mass;
}

double msp_known_score(const ProbDist& dist, int n_closed) {
  if (n_closed < 1 || n_closed > static_cast<int>(dist.probs.size())) {
    throw std::invalid_argument("msp_known_score: bad closed prefix length");
  }
  double p_max = dist.probs[0];
  for (int j = 1; j < n_closed; ++j) p_max = std::max(p_max, dist.probs[j]);
  return p_max;
}

int thresholded_label(const PredictionRecord& record, double tau) {
  return record.p_max >= tau ? record.argmax_class : kUnknownLabel;
}

GroupModel build_group_model(const PromptContext& ctx,
                             const TextEncoder& encoder,
                             const TokenTable& tokens,
                             const std::vector<std::string>& group_class_names,
                             const std::vector<int>& global_classes,
                             const std::vector<std::string>& open_words) {
  if (group_class_names.size() != global_classes.size()) {
    throw std::invalid_argument("build_group_model: class list mismatch");
  }
  GroupModel model;
  model.n_closed = static_cast<int>(group_class_names.size());
  model.global_classes = global_classes;
  for (const std::string& name : group_class_names) {
    model.text_embeddings.push_back(
        encoder.encode(assemble_sequence(ctx, tokens.at(name))));
  }
  for (const std::string& word : open_words) {
    model.text_embeddings.push_back(
        encoder.encode(assemble_sequence(ctx, tokens.at(word))));
  }
  return model;
}

ProbDist model_probabilities(const GroupModel& model, const Vec& image,
                             double temperature) {
  std::vector<double> logits(model.text_embeddings.size());
  for (size_t j = 0; j < logits.size(); ++j) {
    logits[j] = cosine(image, model.text_embeddings[j]) / temperature;
  }
  ProbDist dist = softmax(logits, 1.0);
  dist.temperature = temperature;
  return dist;
}

PredictionRecord predict(const std::string& sample_id,
                         const std::vector<GroupModel>& models,
                         const Vec& image, double temperature,
                         double tau_max) {
  if (models.empty()) throw std::invalid_argument("predict: no group models");
  if (!(tau_max >= 0.0 && tau_max <= 1.0)) {
    throw std::invalid_argument("predict: tau_max outside [0,1]");
  }

  std::vector<ProbDist> dists;
  std::vector<int> n_closed;
  dists.reserve(models.size());
  for (const GroupModel& model : models) {
    dists.push_back(model_probabilities(model, image, temperature));
    n_closed.push_back(model.n_closed);
  }

  PredictionRecord record;
  record.sample_id = sample_id;
  record.tau_max = tau_max;
  for (size_t k = 0; k < dists.size(); ++k) {
    record.p_max_per_group.push_back(msp_known_score(dists[k], n_closed[k]));
  }
  const OptimalChoice choice = select_optimal(dists, n_closed);
  record.optimal_group = choice.group_index;
  record.p_max = choice.p_max;
  record.msp_score = choice.p_max;
  record.s_open = open_score(dists[choice.group_index],
                             n_closed[choice.group_index]);

  const GroupModel& optimal = models[choice.group_index];
  const ProbDist& dist = dists[choice.group_index];
  int local_argmax = 0;
  for (int j = 1; j < optimal.n_closed; ++j) {
    if (dist.probs[j] > dist.probs[local_argmax]) local_argmax = j;
  }
  record.argmax_class = optimal.global_classes[local_argmax];
  record.predicted =
      record.p_max >= tau_max ? record.argmax_class : kUnknownLabel;
  return record;
}

}  // namespace ospe
