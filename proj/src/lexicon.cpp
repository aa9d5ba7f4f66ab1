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

#include "ospe/lexicon.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <unordered_set>

namespace ospe {

std::string normalize_label(const std::string& name) {
  if (name.empty()) {
    throw std::invalid_argument("normalize_label: empty name");
  }
  std::string out;
  out.reserve(name.size());
  bool pending_separator = false;
  for (unsigned char c : name) {
    const bool separator = c == ' ' || c == '\t' || c == '\r' || c == '\n' ||
                           c == '\f' || c == '\v' || c == '_' || c == '-';
    if (separator) {
      if (!out.empty()) pending_separator = true;
      continue;
    }
    if (pending_separator) {
      out.push_back('_');
      pending_separator = false;
    }
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

std::vector<std::string> load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("load_lexicon: cannot read '" + path + "'");
  std::vector<std::string> words;
  std::unordered_set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::string word = normalize_label(line);
    if (word.empty()) continue;
    if (seen.insert(word).second) words.push_back(word);
  }
  if (words.empty()) throw DataError("load_lexicon: empty lexicon '" + path + "'");
  return words;
}

std::vector<std::string> sample_open_words(
    const std::vector<std::string>& lexicon,
    const std::vector<std::string>& closed_names,
    const std::vector<std::string>& excluded_names, int n_open, Rng& rng) {
  if (n_open < 0) {
    throw std::invalid_argument("sample_open_words: n_open < 0");
  }
  std::unordered_set<std::string> stop;
  for (const auto& name : closed_names) stop.insert(normalize_label(name));
  for (const auto& name : excluded_names) stop.insert(normalize_label(name));

  // Filter first so the draw is uniform over the admissible pool.
  std::vector<std::string> pool;
  std::unordered_set<std::string> seen;
  pool.reserve(lexicon.size());
  for (const auto& entry : lexicon) {
    const std::string word = normalize_label(entry);
    if (word.empty() || stop.count(word) || !seen.insert(word).second) continue;
    pool.push_back(word);
  }
  if (static_cast<int>(pool.size()) < n_open) {
    throw DataError("sample_open_words: pool of " +
                    std::to_string(pool.size()) +
                    " words after filtering cannot supply " +
                    std::to_string(n_open));
  }
  // Partial Fisher-Yates: the first n_open slots are a uniform sample
  // without replacement.
  for (int i = 0; i < n_open; ++i) {
    const size_t j = i + rng.next_below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n_open);
  return pool;
}

std::vector<std::string> Vocabulary::all_words() const {
  std::vector<std::string> words = closed;
  words.insert(words.end(), open.begin(), open.end());
  return words;
}

Vocabulary Vocabulary::make(std::vector<std::string> closed,
                            std::vector<std::string> open) {
  if (closed.empty()) throw ConfigError("Vocabulary: no closed classes");
  std::unordered_set<std::string> closed_set;
  for (const auto& name : closed) {
    if (!closed_set.insert(normalize_label(name)).second) {
      throw ConfigError("Vocabulary: duplicate closed name '" + name + "'");
    }
  }
  std::unordered_set<std::string> open_set;
  for (const auto& word : open) {
    const std::string norm = normalize_label(word);
    if (closed_set.count(norm)) {
      throw ConfigError("Vocabulary: open word '" + word +
                        "' collides with a closed class");
    }
    if (!open_set.insert(norm).second) {
      throw ConfigError("Vocabulary: duplicate open word '" + word + "'");
    }
  }
  Vocabulary vocab;
  vocab.closed = std::move(closed);
  vocab.open = std::move(open);
  return vocab;
}

std::vector<std::string> builtin_lexicon() {
  std::vector<std::string> words;
  words.reserve(512);
  char buf[16];
  for (int i = 0; i < 512; ++i) {
    std::snprintf(buf, sizeof(buf), "lex_%04d", i);
    words.emplace_back(buf);
  }
  return words;
}

}  // namespace ospe
