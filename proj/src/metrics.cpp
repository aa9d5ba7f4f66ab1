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

#include "ospe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ospe {

double auroc(const std::vector<double>& known_scores,
             const std::vector<double>& unknown_scores,
             ScoreOrientation orientation) {
  if (known_scores.empty() || unknown_scores.empty()) {
    throw std::invalid_argument("auroc: empty score list");
  }
  const double flip =
      orientation == ScoreOrientation::kHigherIsUnknown ? 1.0 : -1.0;

  struct Item {
    double score;
    bool unknown;
  };
  std::vector<Item> items;
  items.reserve(known_scores.size() + unknown_scores.size());
  for (double s : known_scores) items.push_back({flip * s, false});
  for (double s : unknown_scores) items.push_back({flip * s, true});
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.score < b.score; });

  // Average ranks over tie runs, then the Mann-Whitney U statistic.
  const size_t n = items.size();
  double unknown_rank_sum = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && items[j].score == items[i].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (size_t k = i; k < j; ++k) {
      if (items[k].unknown) unknown_rank_sum += avg_rank;
    }
    i = j;
  }
  const double n_unknown = static_cast<double>(unknown_scores.size());
  const double n_known = static_cast<double>(known_scores.size());
  const double u = unknown_rank_sum - n_unknown * (n_unknown + 1.0) / 2.0;
  return u / (n_unknown * n_known);
}

double closed_accuracy(const std::vector<int>& argmax_labels,
                       const std::vector<int>& truth) {
  if (argmax_labels.size() != truth.size() || truth.empty()) {
    throw std::invalid_argument("closed_accuracy: size mismatch or empty");
  }
  size_t correct = 0;
  for (size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0) {
      throw DataError("closed_accuracy: sample " + std::to_string(i) +
                      " has no closed label");
    }
    if (argmax_labels[i] == truth[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

double macro_f1(const std::vector<int>& predicted,
                const std::vector<int>& truth, int n_classes,
                bool include_absent_classes) {
  if (predicted.size() != truth.size() || truth.empty()) {
    throw std::invalid_argument("macro_f1: size mismatch or empty");
  }
  if (n_classes < 1) throw std::invalid_argument("macro_f1: n_classes < 1");

  // Slot n_classes is the unknown class.
  auto slot = [n_classes](int label) {
    if (label == -1) return n_classes;
    if (label < 0 || label >= n_classes) {
      throw std::invalid_argument("macro_f1: label out of range");
    }
    return label;
  };
  std::vector<int64_t> tp(n_classes + 1, 0), fp(n_classes + 1, 0),
      fn(n_classes + 1, 0);
  for (size_t i = 0; i < truth.size(); ++i) {
    const int t = slot(truth[i]);
    const int p = slot(predicted[i]);
    if (t == p) {
      ++tp[t];
    } else {
      ++fn[t];
      ++fp[p];
    }
  }
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c <= n_classes; ++c) {
    const int64_t support = tp[c] + fp[c] + fn[c];
    if (support == 0 && !include_absent_classes) continue;
    const double f1 =
        support == 0 ? 0.0
                     : 2.0 * static_cast<double>(tp[c]) /
                           static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
    sum += f1;
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

Histogram histogram(const std::vector<double>& closed_max_probs,
                    const std::vector<bool>& is_unknown, int bins) {
  if (bins < 1) throw std::invalid_argument("histogram: bins < 1");
  if (closed_max_probs.size() != is_unknown.size()) {
    throw std::invalid_argument("histogram: split tag size mismatch");
  }
  Histogram h;
  h.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b) {
    h.edges[b] = static_cast<double>(b) / static_cast<double>(bins);
  }
  h.known_counts.assign(bins, 0);
  h.unknown_counts.assign(bins, 0);
  for (size_t i = 0; i < closed_max_probs.size(); ++i) {
    const double p = closed_max_probs[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("histogram: probability out of [0,1]");
    }
    // Right-inclusive last bin.
    int b = static_cast<int>(p * bins);
    if (b >= bins) b = bins - 1;
    if (is_unknown[i]) {
      ++h.unknown_counts[b];
    } else {
      ++h.known_counts[b];
    }
  }
  return h;
}

}  // namespace ospe
