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

#include "ospe/encoder.hpp"

#include <cmath>

namespace ospe {

std::string to_string(ClassPosition pos) {
  switch (pos) {
    case ClassPosition::kFront:
      return "front";
    case ClassPosition::kMid:
      return "mid";
    case ClassPosition::kEnd:
      return "end";
  }
  throw std::invalid_argument("unknown ClassPosition");
}

ClassPosition class_position_from_string(const std::string& text) {
  if (text == "front") return ClassPosition::kFront;
  if (text == "mid") return ClassPosition::kMid;
  if (text == "end") return ClassPosition::kEnd;
  throw ConfigError("invalid class position: '" + text +
                    "' (expected front|mid|end)");
}

size_t class_token_index(size_t context_length, ClassPosition pos) {
  switch (pos) {
    case ClassPosition::kFront:
      return 0;
    case ClassPosition::kMid:
      return context_length / 2;
    case ClassPosition::kEnd:
      return context_length;
  }
  throw std::invalid_argument("unknown ClassPosition");
}

std::vector<Vec> assemble_sequence(const PromptContext& ctx,
                                   const Vec& class_token) {
  if (ctx.vectors.empty()) {
    throw std::invalid_argument("assemble_sequence: empty context");
  }
  if (static_cast<int>(class_token.size()) != ctx.token_dim()) {
    throw std::invalid_argument(
        "assemble_sequence: class token dim " +
        std::to_string(class_token.size()) + " != context token dim " +
        std::to_string(ctx.token_dim()));
  }
  const size_t L = ctx.vectors.size();
  const size_t at = class_token_index(L, ctx.class_position);
  std::vector<Vec> seq;
  seq.reserve(L + 1);
  for (size_t i = 0; i < at; ++i) seq.push_back(ctx.vectors[i]);
  seq.push_back(class_token);
  for (size_t i = at; i < L; ++i) seq.push_back(ctx.vectors[i]);
  return seq;
}

namespace {

// Identity-anchored random matrix: rectangular identity plus scaled Gaussian
// noise. rows x cols, noise std perturbation/sqrt(cols).
std::vector<Vec> anchored_matrix(int rows, int cols, double perturbation,
                                 Rng rng) {
  std::vector<Vec> m(rows, Vec(cols, 0.0));
  const double scale = perturbation / std::sqrt(static_cast<double>(cols));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      m[r][c] = (r == c ? 1.0 : 0.0) + scale * rng.next_gaussian();
    }
  }
  return m;
}

Vec small_bias(int n, Rng rng) {
  Vec b(n);
  for (int i = 0; i < n; ++i) b[i] = 0.01 * rng.next_gaussian();
  return b;
}

}  // namespace

MlpTextEncoder::MlpTextEncoder(const Options& options)
    : token_dim_(options.token_dim),
      hidden_dim_(options.hidden_dim > 0 ? options.hidden_dim
                                         : options.token_dim),
      output_dim_(options.output_dim > 0 ? options.output_dim
                                         : options.token_dim),
      seed_(options.seed) {
  if (token_dim_ < 1) {
    throw ConfigError("MlpTextEncoder: token_dim must be >= 1");
  }
  if (!(options.perturbation >= 0.0)) {
    throw ConfigError("MlpTextEncoder: perturbation must be >= 0");
  }
  const Rng root(seed_);
  w1_ = anchored_matrix(hidden_dim_, token_dim_, options.perturbation,
                        root.stream("encoder-w1"));
  b1_ = small_bias(hidden_dim_, root.stream("encoder-b1"));
  w2_ = anchored_matrix(output_dim_, hidden_dim_, options.perturbation,
                        root.stream("encoder-w2"));
  b2_ = small_bias(output_dim_, root.stream("encoder-b2"));
}

Vec MlpTextEncoder::mean_pool(const std::vector<Vec>& sequence) const {
  if (sequence.empty()) {
    throw std::invalid_argument("MlpTextEncoder: empty sequence");
  }
  Vec pooled(token_dim_, 0.0);
  for (const Vec& token : sequence) {
    if (static_cast<int>(token.size()) != token_dim_) {
      throw std::invalid_argument("MlpTextEncoder: token dim " +
                                  std::to_string(token.size()) +
                                  " != " + std::to_string(token_dim_));
    }
    for (int d = 0; d < token_dim_; ++d) pooled[d] += token[d];
  }
  const double inv = 1.0 / static_cast<double>(sequence.size());
  for (double& x : pooled) x *= inv;
  return pooled;
}

Vec MlpTextEncoder::encode(const std::vector<Vec>& sequence) const {
  const Vec pooled = mean_pool(sequence);
  Vec hidden(hidden_dim_);
  for (int h = 0; h < hidden_dim_; ++h) {
    hidden[h] = std::tanh(dot(w1_[h], pooled) + b1_[h]);
  }
  Vec out(output_dim_);
  for (int o = 0; o < output_dim_; ++o) {
    out[o] = dot(w2_[o], hidden) + b2_[o];
  }
  return out;
}

std::vector<Vec> MlpTextEncoder::encode_backward(
    const std::vector<Vec>& sequence, const Vec& upstream) const {
  if (static_cast<int>(upstream.size()) != output_dim_) {
    throw std::invalid_argument("MlpTextEncoder: upstream dim " +
                                std::to_string(upstream.size()) +
                                " != output dim " +
                                std::to_string(output_dim_));
  }
  const Vec pooled = mean_pool(sequence);
  Vec hidden(hidden_dim_);
  for (int h = 0; h < hidden_dim_; ++h) {
    hidden[h] = std::tanh(dot(w1_[h], pooled) + b1_[h]);
  }

  // d/dh of dot(upstream, W2 h + b2) = W2^T upstream, then through tanh.
  Vec dpre(hidden_dim_, 0.0);
  for (int h = 0; h < hidden_dim_; ++h) {
    double acc = 0.0;
    for (int o = 0; o < output_dim_; ++o) acc += w2_[o][h] * upstream[o];
    dpre[h] = acc * (1.0 - hidden[h] * hidden[h]);
  }
  Vec dpooled(token_dim_, 0.0);
  for (int h = 0; h < hidden_dim_; ++h) {
    for (int d = 0; d < token_dim_; ++d) dpooled[d] += w1_[h][d] * dpre[h];
  }
  const double inv = 1.0 / static_cast<double>(sequence.size());
  Vec per_token(token_dim_);
  for (int d = 0; d < token_dim_; ++d) per_token[d] = dpooled[d] * inv;
  // Mean pooling gives every position the same gradient.
  return std::vector<Vec>(sequence.size(), per_token);
}

uint64_t MlpTextEncoder::parameter_checksum() const {
  uint64_t h = fnv1a64(&token_dim_, sizeof(token_dim_));
  h = fnv1a64(&hidden_dim_, sizeof(hidden_dim_), h);
  h = fnv1a64(&output_dim_, sizeof(output_dim_), h);
  auto absorb = [&h](const Vec& v) {
    h = fnv1a64(v.data(), v.size() * sizeof(double), h);
  };
  for (const Vec& row : w1_) absorb(row);
  absorb(b1_);
  for (const Vec& row : w2_) absorb(row);
  absorb(b2_);
  return h;
}

bool EmbeddingTable::contains(const std::string& id) const {
  return index_.find(id) != index_.end();
}

void EmbeddingTable::add(const std::string& id, Vec v) {
  if (id.empty()) throw DataError("EmbeddingTable: empty id");
  if (id.size() > 65535) throw DataError("EmbeddingTable: id too long");
  if (contains(id)) throw DataError("EmbeddingTable: duplicate id '" + id + "'");
  if (v.empty()) throw DataError("EmbeddingTable: empty vector for '" + id + "'");
  if (dim == 0) dim = static_cast<int>(v.size());
  if (static_cast<int>(v.size()) != dim) {
    throw DataError("EmbeddingTable: vector for '" + id + "' has dim " +
                    std::to_string(v.size()) + ", table dim is " +
                    std::to_string(dim));
  }
  index_.emplace(id, ids.size());
  ids.push_back(id);
  vectors.push_back(std::move(v));
}

const Vec& EmbeddingTable::at(const std::string& id) const {
  return vectors[row_of(id)];
}

size_t EmbeddingTable::row_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw DataError("EmbeddingTable: unknown id '" + id + "'");
  }
  return it->second;
}

}  // namespace ospe
