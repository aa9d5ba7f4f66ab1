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

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ospe {

using Vec = std::vector<double>;

// CLI exit code 2: malformed configuration or arguments.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// CLI exit code 3: unreadable or inconsistent data artifacts.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// CLI exit code 4: an optimization or metric produced non-finite values.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double dot(const Vec& u, const Vec& v);
double norm(const Vec& v);

/// Cosine similarity in [-1, 1]. Throws std::invalid_argument on dimension
/// mismatch or a zero-norm argument.
double cosine(const Vec& u, const Vec& v);

struct ProbDist {
  std::vector<double> probs;
  double temperature = 1.0;
};

/// Temperature softmax over finite logits, max-shifted so no exponential
/// overflows. Throws std::invalid_argument on empty input or T <= 0.
ProbDist softmax(const std::vector<double>& logits, double temperature);

/// log(softmax(logits, T)) computed without forming the raw exponentials;
/// safe for |logit| up to DBL_MAX-ish magnitudes.
std::vector<double> log_softmax(const std::vector<double>& logits,
                                double temperature);

/// Deterministic PRNG: splitmix64 seeding feeding xoshiro256++, with derived
/// substreams keyed by (tag, index). Substreams depend only on the parent's
/// seed, never on how many draws the parent has made, so open-word sampling,
/// context init and batch shuffling are independently reproducible.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "splitmix64+xoshiro256++";

  explicit Rng(uint64_t seed);

  uint64_t seed() const { return seed_; }
  static std::string algorithm() { return std::string(kAlgorithm); }

  uint64_t next_u64();
  /// Uniform in [0, 1) with 53-bit resolution.
  double next_double();
  /// Unbiased uniform integer in [0, bound); bound must be positive.
  uint64_t next_below(uint64_t bound);
  /// Standard normal draw (Box-Muller; consumes exactly two uniforms).
  double next_gaussian();

  /// Child stream keyed by (tag, index), derived from this Rng's seed only.
  Rng stream(std::string_view tag, uint64_t index = 0) const;

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  uint64_t seed_ = 0;
  std::array<uint64_t, 4> state_{};
};

/// FNV-1a over raw bytes; used for parameter checksums and report
/// fingerprints.
uint64_t fnv1a64(const void* data, size_t len,
                 uint64_t basis = 1469598103934665603ull);
uint64_t fnv1a64(std::string_view text,
                 uint64_t basis = 1469598103934665603ull);

}  // namespace ospe
