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

#include "ospe/core.hpp"

#include <algorithm>
#include <cmath>

namespace ospe {

double dot(const Vec& u, const Vec& v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("dot: dimension mismatch (" +
                                std::to_string(u.size()) + " vs " +
                                std::to_string(v.size()) + ")");
  }
  double acc = 0.0;
  for (size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

double norm(const Vec& v) { return std::sqrt(dot(v, v)); }

double cosine(const Vec& u, const Vec& v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine: dimension mismatch (" +
                                std::to_string(u.size()) + " vs " +
                                std::to_string(v.size()) + ")");
  }
  if (u.empty()) throw std::invalid_argument("cosine: empty vectors");
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) {
    throw std::invalid_argument("cosine: zero-norm vector");
  }
  return dot(u, v) / (nu * nv);
}

namespace {

void check_softmax_args(const std::vector<double>& logits, double temperature) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty logits");
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("softmax: temperature must be positive");
  }
}

}  // namespace

ProbDist softmax(const std::vector<double>& logits, double temperature) {
  check_softmax_args(logits, temperature);
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  ProbDist dist;
  dist.temperature = temperature;
  dist.probs.resize(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    dist.probs[i] = std::exp((logits[i] - max_logit) / temperature);
    sum += dist.probs[i];
  }
  for (double& p : dist.probs) p /= sum;
  return dist;
}

std::vector<double> log_softmax(const std::vector<double>& logits,
                                double temperature) {
  check_softmax_args(logits, temperature);
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp((z - max_logit) / temperature);
  const double lse = std::log(sum);
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    out[i] = (logits[i] - max_logit) / temperature - lse;
  }
  return out;
}

namespace {

// splitmix64 finalizer; also the mixing function for substream derivation.
uint64_t mix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

uint64_t rotl64(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(uint64_t seed) : seed_(seed) {
  uint64_t s = seed;
  for (auto& word : state_) {
    s = mix64(s);
    word = s;
  }
}

uint64_t Rng::next_u64() {
  const uint64_t result = rotl64(state_[0] + state_[3], 23) + state_[0];
  const uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl64(state_[3], 45);
  return result;
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::next_below(uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::next_below: zero bound");
  const uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
  for (;;) {
    const uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

double Rng::next_gaussian() {
  // 1 - u keeps the argument of log strictly positive.
  const double u1 = 1.0 - next_double();
  const double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
}

Rng Rng::stream(std::string_view tag, uint64_t index) const {
  uint64_t child = mix64(seed_ ^ 0x5851F42D4C957F2Dull);
  child = mix64(child ^ fnv1a64(tag));
  child = mix64(child ^ index);
  return Rng(child);
}

uint64_t fnv1a64(const void* data, size_t len, uint64_t basis) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  uint64_t hash = basis;
  for (size_t i = 0; i < len; ++i) {
    hash ^= bytes[i];
    hash *= 1099511628211ull;
  }
  return hash;
}

uint64_t fnv1a64(std::string_view text, uint64_t basis) {
  return fnv1a64(text.data(), text.size(), basis);
}

}  // namespace ospe
