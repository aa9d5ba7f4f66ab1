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

#include <memory>
#include <unordered_map>

#include "ospe/core.hpp"

namespace ospe {

enum class ClassPosition { kFront, kMid, kEnd };

std::string to_string(ClassPosition pos);
ClassPosition class_position_from_string(const std::string& text);

/// L learnable context vectors plus the class-token placement rule. Owned by
/// exactly one tuning job at a time; everything else in the pipeline is
/// immutable.
struct PromptContext {
  std::vector<Vec> vectors;
  ClassPosition class_position = ClassPosition::kMid;
  int group_index = 0;

  int length() const { return static_cast<int>(vectors.size()); }
  int token_dim() const {
    return vectors.empty() ? 0 : static_cast<int>(vectors[0].size());
  }
};

/// Index the class token occupies in the assembled sequence of length L+1:
/// 0 (front), floor(L/2) (mid) or L (end).
size_t class_token_index(size_t context_length, ClassPosition pos);

/// Interleave the context vectors with the class token. Context vectors keep
/// their relative order; total length is L+1.
std::vector<Vec> assemble_sequence(const PromptContext& ctx,
                                   const Vec& class_token);

/// Frozen text encoder interface. Implementations must be deterministic,
/// immutable after construction, and must supply the exact adjoint of their
/// forward map (a forward-only plug-in is not acceptable here).
class TextEncoder {
 public:
  virtual ~TextEncoder() = default;

  virtual int token_dim() const = 0;
  virtual int output_dim() const = 0;

  virtual Vec encode(const std::vector<Vec>& sequence) const = 0;

  /// Per-token gradients of dot(upstream, encode(sequence)). The caller
  /// discards the class-token entry; only context vectors are learnable.
  virtual std::vector<Vec> encode_backward(const std::vector<Vec>& sequence,
                                           const Vec& upstream) const = 0;

  /// Checksum over all parameters; constant for the encoder's lifetime.
  virtual uint64_t parameter_checksum() const = 0;
};

/// Default encoder: token mean-pool, then affine -> tanh -> affine. The
/// weight matrices are identity-anchored with a seeded Gaussian perturbation,
/// which keeps the map close to angle-preserving (so image/text alignment
/// carries through) while remaining a genuine nonlinear mix that context
/// vectors can steer.
class MlpTextEncoder final : public TextEncoder {
 public:
  struct Options {
    int token_dim = 0;
    int hidden_dim = 0;  // 0 -> token_dim
    int output_dim = 0;  // 0 -> token_dim
    double perturbation = 0.1;
    uint64_t seed = 0;
  };

  explicit MlpTextEncoder(const Options& options);

  int token_dim() const override { return token_dim_; }
  int output_dim() const override { return output_dim_; }
  uint64_t seed() const { return seed_; }

  Vec encode(const std::vector<Vec>& sequence) const override;
  std::vector<Vec> encode_backward(const std::vector<Vec>& sequence,
                                   const Vec& upstream) const override;
  uint64_t parameter_checksum() const override;

 private:
  Vec mean_pool(const std::vector<Vec>& sequence) const;

  int token_dim_ = 0;
  int hidden_dim_ = 0;
  int output_dim_ = 0;
  uint64_t seed_ = 0;
  std::vector<Vec> w1_;  // hidden_dim rows of token_dim
  std::vector<Vec> w2_;  // output_dim rows of hidden_dim
  Vec b1_;
  Vec b2_;
};

/// Named rows of equal dimension with id lookup. Holds image embeddings
/// (sample id -> vector) and token tables (word -> vector) alike; both use
/// the same on-disk format.
struct EmbeddingTable {
  int dim = 0;
  std::vector<std::string> ids;  // insertion order, preserved on disk
  std::vector<Vec> vectors;

  size_t size() const { return ids.size(); }
  bool contains(const std::string& id) const;
  /// Throws DataError on duplicate id or dimension mismatch.
  void add(const std::string& id, Vec v);
  /// Throws DataError on unknown id.
  const Vec& at(const std::string& id) const;
  size_t row_of(const std::string& id) const;

 private:
  std::unordered_map<std::string, size_t> index_;
};

using TokenTable = EmbeddingTable;

/// The image encoder is embedding lookup: returns the stored vector
/// unchanged. Throws DataError for unknown ids.
inline const Vec& encode_image(const EmbeddingTable& table,
                               const std::string& sample_id) {
  return table.at(sample_id);
}

}  // namespace ospe
