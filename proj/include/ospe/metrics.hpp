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

#include <cstdint>

#include "ospe/core.hpp"

namespace ospe {

/// Declares whether a larger score means "more unknown" (open score) or
/// "more known" (MSP).
enum class ScoreOrientation { kHigherIsUnknown, kHigherIsKnown };

/// Area under the ROC curve for separating unknown from known samples,
/// computed by rank summation with average ranks for ties (exactly the
/// Mann-Whitney pair statistic, ties counted 0.5). Unknown is the positive
/// class after orientation normalization. Throws std::invalid_argument when
/// either side is empty.
double auroc(const std::vector<double>& known_scores,
             const std::vector<double>& unknown_scores,
             ScoreOrientation orientation);

/// Fraction of samples whose un-thresholded argmax matches the ground truth.
/// Both vectors use global class indices; a missing label (-1) in truth is a
/// DataError.
double closed_accuracy(const std::vector<int>& argmax_labels,
                       const std::vector<int>& truth);

/// Macro-averaged F1 over the n_classes known classes plus the unknown class
/// (predicted/truth use kUnknownLabel = -1 for unknown). A class absent from
/// both truth and prediction contributes F1 = 0 unless
/// include_absent_classes is false, in which case it is dropped from the
/// average.
double macro_f1(const std::vector<int>& predicted,
                const std::vector<int>& truth, int n_classes,
                bool include_absent_classes = true);

/// Uniform bins over [0,1], right-inclusive last bin, counts split by
/// known/unknown.
struct Histogram {
  std::vector<double> edges;  // size bins+1
  std::vector<int64_t> known_counts;
  std::vector<int64_t> unknown_counts;

  int bins() const { return static_cast<int>(known_counts.size()); }
};

Histogram histogram(const std::vector<double>& closed_max_probs,
                    const std::vector<bool>& is_unknown, int bins);

struct MetricsReport {
  bool open_score_degenerate = false;  // no open words: S_open is exactly 0
  double auroc_open_score = 0.0;       // meaningless when degenerate
  double auroc_msp = 0.0;
  double closed_accuracy = 0.0;
  std::vector<std::pair<double, double>> mf1_by_tau;  // (tau, macro-F1)
  Histogram hist;
  int64_t n_train = 0;
  int64_t n_test_known = 0;
  int64_t n_test_unknown = 0;
  std::string dataset_fingerprint;
  std::string config_fingerprint;
};

}  // namespace ospe
