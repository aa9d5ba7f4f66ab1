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

#include "ospe/core.hpp"

namespace ospe {

/// Canonical label form: ASCII-lowercased, runs of whitespace/underscores/
/// hyphens collapsed to a single underscore, leading/trailing separators
/// stripped. Idempotent. Throws std::invalid_argument on empty input.
std::string normalize_label(const std::string& name);

/// One lemma per line, UTF-8, '#'-prefixed comment lines ignored. Entries are
/// normalized and deduplicated, keeping first-occurrence order. Throws
/// DataError if the file is unreadable or holds no words.
std::vector<std::string> load_lexicon(const std::string& path);

/// Draw exactly n_open distinct words, uniformly without replacement, from
/// the lexicon after removing every normalized closed or excluded name.
/// closed_names are the downstream training classes; excluded_names is an
/// optional extra stop list (an evaluation harness may pass test labels here,
/// the tuner itself never knows them). Throws DataError when the filtered
/// pool is too small and std::invalid_argument for n_open < 0.
std::vector<std::string> sample_open_words(
    const std::vector<std::string>& lexicon,
    const std::vector<std::string>& closed_names,
    const std::vector<std::string>& excluded_names, int n_open, Rng& rng);

/// Ordered closed-set class names plus sampled open words, disjoint after
/// normalization.
struct Vocabulary {
  std::vector<std::string> closed;
  std::vector<std::string> open;

  int n_closed() const { return static_cast<int>(closed.size()); }
  int n_open() const { return static_cast<int>(open.size()); }
  /// All words, closed first. The fixed logits order used everywhere.
  std::vector<std::string> all_words() const;

  /// Validates the disjointness and no-duplicates invariants.
  static Vocabulary make(std::vector<std::string> closed,
                         std::vector<std::string> open);
};

/// Deterministic built-in lexicon for synthetic experiments that do not ship
/// a word list of their own.
std::vector<std::string> builtin_lexicon();

}  // namespace ospe
