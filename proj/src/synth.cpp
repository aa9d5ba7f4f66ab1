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

#include "ospe/synth.hpp"

#include <cmath>
#include <cstdio>

namespace ospe {

void SynthSpec::validate() const {
  if (embed_dim < 1) throw ConfigError("SynthSpec: embed_dim < 1");
  if (token_dim < 1) throw ConfigError("SynthSpec: token_dim < 1");
  if (n_known < 1) throw ConfigError("SynthSpec: n_known < 1");
  if (n_unknown < 1) throw ConfigError("SynthSpec: n_unknown < 1");
  if (train_per_class < 1) throw ConfigError("SynthSpec: train_per_class < 1");
  if (test_per_class < 1) throw ConfigError("SynthSpec: test_per_class < 1");
  if (!(cluster_mean_scale > 0.0)) {
    throw ConfigError("SynthSpec: cluster_mean_scale <= 0");
  }
  if (!(within_class_std > 0.0)) {
    throw ConfigError("SynthSpec: within_class_std <= 0");
  }
  if (!(token_noise_std > 0.0)) {
    throw ConfigError("SynthSpec: token_noise_std <= 0");
  }
}

namespace {

std::string format_name(const char* prefix, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%03d", prefix, index);
  return buf;
}

// Round every coordinate to 32-bit float precision; the serialized form is
// then bit-identical to the in-memory one, so file-based and in-memory runs
// agree exactly.
void quantize_f32(Vec& v) {
  for (double& x : v) x = static_cast<double>(static_cast<float>(x));
}

Vec gaussian_vec(Rng& rng, int dim, double scale) {
  Vec v(dim);
  for (double& x : v) x = scale * rng.next_gaussian();
  return v;
}

// Class tokens are derived from the cluster mean. When token and embedding
// dimensions differ, a fixed seeded projection carries the mean into token
// space first.
Vec mean_to_token_space(const Vec& mean, int token_dim, const Rng& root) {
  if (static_cast<int>(mean.size()) == token_dim) return mean;
  Rng proj_rng = root.stream("token-projection");
  const double scale = 1.0 / std::sqrt(static_cast<double>(mean.size()));
  Vec out(token_dim, 0.0);
  for (int r = 0; r < token_dim; ++r) {
    double acc = 0.0;
    for (double m : mean) acc += scale * proj_rng.next_gaussian() * m;
    out[r] = acc;
  }
  return out;
}

}  // namespace

SynthData generate(const SynthSpec& spec) {
  spec.validate();
  const Rng root(spec.seed);
  SynthData data;

  for (int c = 0; c < spec.n_known; ++c) {
    Rng mean_rng = root.stream("class-mean", c);
    Vec mean = gaussian_vec(mean_rng, spec.embed_dim, spec.cluster_mean_scale);
    quantize_f32(mean);
    data.known_means.push_back(mean);
    data.dataset.class_names.push_back(format_name("class", c));
  }
  for (int u = 0; u < spec.n_unknown; ++u) {
    Rng mean_rng = root.stream("unknown-mean", u);
    Vec mean = gaussian_vec(mean_rng, spec.embed_dim, spec.cluster_mean_scale);
    quantize_f32(mean);
    data.unknown_means.push_back(mean);
    data.unknown_names.push_back(format_name("unknown", u));
  }

  auto add_samples = [&](const Vec& mean, const std::string& name,
                         const char* tag, int count, int label, Split split,
                         int cluster, Rng& rng) {
    for (int i = 0; i < count; ++i) {
      Vec x(spec.embed_dim);
      for (int d = 0; d < spec.embed_dim; ++d) {
        x[d] = mean[d] + spec.within_class_std * rng.next_gaussian();
      }
      quantize_f32(x);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%s/%s%03d", name.c_str(), tag, i);
      data.dataset.embeddings.add(buf, std::move(x));
      data.dataset.entries.push_back({buf, label, split});
      data.true_cluster.push_back(cluster);
    }
  };

  for (int c = 0; c < spec.n_known; ++c) {
    Rng sample_rng = root.stream("known-samples", c);
    add_samples(data.known_means[c], data.dataset.class_names[c], "tr",
                spec.train_per_class, c, Split::kTrain, c, sample_rng);
  }
  for (int c = 0; c < spec.n_known; ++c) {
    Rng sample_rng = root.stream("known-test-samples", c);
    add_samples(data.known_means[c], data.dataset.class_names[c], "te",
                spec.test_per_class, c, Split::kTestKnown, c, sample_rng);
  }
  for (int u = 0; u < spec.n_unknown; ++u) {
    Rng sample_rng = root.stream("unknown-test-samples", u);
    add_samples(data.unknown_means[u], data.unknown_names[u], "te",
                spec.test_per_class, -1, Split::kTestUnknown,
                spec.n_known + u, sample_rng);
  }

  for (int c = 0; c < spec.n_known; ++c) {
    Rng token_rng = root.stream("class-token", c);
    Vec token = mean_to_token_space(data.known_means[c], spec.token_dim, root);
    for (int d = 0; d < spec.token_dim; ++d) {
      token[d] += spec.token_noise_std * token_rng.next_gaussian();
    }
    quantize_f32(token);
    data.tokens.add(data.dataset.class_names[c], std::move(token));
  }

  data.dataset.validate();
  return data;
}

Vec ambient_token(const std::string& word, int token_dim, double scale,
                  const Rng& root) {
  Rng rng = root.stream("open-token/" + word);
  Vec token = gaussian_vec(rng, token_dim, scale);
  for (double& x : token) x = static_cast<double>(static_cast<float>(x));
  return token;
}

int nearest_mean(const std::vector<Vec>& means, const Vec& x) {
  if (means.empty()) throw std::invalid_argument("nearest_mean: no means");
  int best = 0;
  double best_dist = 0.0;
  for (int c = 0; c < static_cast<int>(means.size()); ++c) {
    const Vec& mean = means[c];
    if (mean.size() != x.size()) {
      throw std::invalid_argument("nearest_mean: dimension mismatch");
    }
    double dist = 0.0;
    for (size_t d = 0; d < x.size(); ++d) {
      const double diff = x[d] - mean[d];
      dist += diff * diff;
    }
    // Strict < keeps the lowest index on exact ties.
    if (c == 0 || dist < best_dist) {
      best = c;
      best_dist = dist;
    }
  }
  return best;
}

std::vector<int> nearest_mean_oracle(const SynthData& data) {
  std::vector<int> out;
  out.reserve(data.dataset.entries.size());
  for (const auto& entry : data.dataset.entries) {
    out.push_back(
        nearest_mean(data.known_means, data.dataset.embeddings.at(entry.id)));
  }
  return out;
}

SynthSpec small_osr_spec(uint64_t seed) {
  SynthSpec spec;
  spec.embed_dim = 32;
  spec.token_dim = 32;
  spec.n_known = 10;
  spec.n_unknown = 10;
  spec.train_per_class = 40;
  spec.test_per_class = 40;
  spec.cluster_mean_scale = 1.0;
  spec.within_class_std = 0.9;
  spec.token_noise_std = 1.0;
  spec.seed = seed;
  return spec;
}

SynthSpec large_osr_spec(uint64_t seed) {
  SynthSpec spec;
  spec.embed_dim = 64;
  spec.token_dim = 64;
  spec.n_known = 100;
  spec.n_unknown = 100;
  spec.train_per_class = 16;
  spec.test_per_class = 20;
  spec.cluster_mean_scale = 1.0;
  spec.within_class_std = 0.1;
  spec.token_noise_std = 0.1;
  spec.seed = seed;
  return spec;
}

}  // namespace ospe
