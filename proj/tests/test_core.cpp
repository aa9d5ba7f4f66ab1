#include <cmath>

#include <doctest.h>

#include "ospe/core.hpp"

using namespace ospe;

TEST_CASE("cosine matches direct arithmetic") {
  CHECK(cosine({1, 0}, {0, 1}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cosine({2, 0}, {1, 0}) == doctest::Approx(1.0).epsilon(1e-12));
  // 11 / (sqrt(5) * 5), worked out by hand.
  const double expected = 11.0 / (std::sqrt(5.0) * 5.0);
  CHECK(std::abs(cosine({1, 2}, {3, 4}) - expected) < 1e-12);
  CHECK(std::abs(cosine({1, 2}, {3, 4}) - 0.98387) < 1e-5);
}

TEST_CASE("cosine rejects bad input") {
  CHECK_THROWS_AS(cosine({1, 2}, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(cosine({0, 0}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(cosine({1, 2}, {0, 0}), std::invalid_argument);
}

TEST_CASE("cosine symmetry and scale invariance") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = 1 + static_cast<int>(rng.next_below(8));
    Vec u(dim), v(dim);
    for (double& x : u) x = rng.next_gaussian();
    for (double& x : v) x = rng.next_gaussian();
    if (norm(u) == 0.0 || norm(v) == 0.0) continue;
    const double base = cosine(u, v);
    CHECK(base >= -1.0 - 1e-12);
    CHECK(base <= 1.0 + 1e-12);
    CHECK(cosine(v, u) == doctest::Approx(base).epsilon(1e-12));
    const double a = 0.01 + rng.next_double() * 10.0;
    const double b = 0.01 + rng.next_double() * 10.0;
    Vec su = u, sv = v;
    for (double& x : su) x *= a;
    for (double& x : sv) x *= b;
    CHECK(std::abs(cosine(su, sv) - base) < 1e-12);
  }
}

TEST_CASE("softmax hand values") {
  const auto uniform = softmax({3.5, 3.5, 3.5, 3.5, 3.5}, 1.0);
  for (double p : uniform.probs) CHECK(p == doctest::Approx(0.2).epsilon(1e-15));

  const auto two_thirds = softmax({std::log(2.0), 0.0}, 1.0);
  CHECK(std::abs(two_thirds.probs[0] - 2.0 / 3.0) < 1e-12);
  CHECK(std::abs(two_thirds.probs[1] - 1.0 / 3.0) < 1e-12);

  // T = 0.5 sharpens: e^2/(e^2+1).
  const auto sharp = softmax({1.0, 0.0}, 0.5);
  const double expected = std::exp(2.0) / (std::exp(2.0) + 1.0);
  CHECK(std::abs(sharp.probs[0] - expected) < 1e-12);
  CHECK(std::abs(sharp.probs[0] - 0.88080) < 1e-5);
  CHECK(std::abs(sharp.probs[1] - 0.11920) < 1e-5);
}

TEST_CASE("softmax errors") {
  CHECK_THROWS_AS(softmax({}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(softmax({1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(softmax({1.0}, -1.0), std::invalid_argument);
}

TEST_CASE("softmax normalization, positivity and shift invariance") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_below(40));
    const double T = 0.05 + rng.next_double() * 3.0;
    std::vector<double> logits(n);
    for (double& z : logits) z = 20.0 * (rng.next_double() - 0.5);
    const auto dist = softmax(logits, T);
    double sum = 0.0;
    for (double p : dist.probs) {
      CHECK(p > 0.0);
      CHECK(p <= 1.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);

    const double shift = 100.0 * (rng.next_double() - 0.5);
    std::vector<double> shifted = logits;
    for (double& z : shifted) z += shift;
    const auto dist2 = softmax(shifted, T);
    for (int i = 0; i < n; ++i) {
      CHECK(std::abs(dist.probs[i] - dist2.probs[i]) < 1e-12);
    }
  }
}

TEST_CASE("softmax is monotone in its logits") {
  Rng rng(13);
  std::vector<double> logits = {0.3, -0.2, 1.1, 0.0};
  const auto before = softmax(logits, 1.0);
  logits[1] += 0.5;
  const auto after = softmax(logits, 1.0);
  CHECK(after.probs[1] > before.probs[1]);
  CHECK(after.probs[0] < before.probs[0]);
}

TEST_CASE("log_softmax agrees with log of softmax") {
  Rng rng(17);
  std::vector<double> logits(40);
  for (double& z : logits) z = 10.0 * (rng.next_double() - 0.5);
  const auto dist = softmax(logits, 1.3);
  const auto logp = log_softmax(logits, 1.3);
  for (size_t i = 0; i < logits.size(); ++i) {
    CHECK(std::abs(std::exp(logp[i]) - dist.probs[i]) < 1e-12);
    CHECK(std::abs(logp[i] - std::log(dist.probs[i])) < 1e-12);
  }
}

TEST_CASE("log_softmax survives extreme logits") {
  const auto logp = log_softmax({1000.0, 0.0}, 1.0);
  CHECK(std::isfinite(logp[0]));
  CHECK(std::isfinite(logp[1]));
  CHECK(std::abs(logp[0]) < 1e-12);
  CHECK(logp[1] == doctest::Approx(-1000.0));

  const auto even = log_softmax({0.0, 0.0}, 1.0);
  CHECK(std::abs(even[0] + std::log(2.0)) < 1e-12);
  CHECK(std::abs(even[1] + std::log(2.0)) < 1e-12);
}

TEST_CASE("rng streams are reproducible") {
  Rng a(12345), b(12345);
  for (int i = 0; i < 1000000; ++i) {
    REQUIRE(a.next_u64() == b.next_u64());
  }
}

TEST_CASE("rng substreams depend on tag and index, not parent position") {
  Rng parent(99);
  Rng child1 = parent.stream("alpha", 0);
  // Burn some parent draws; substream derivation must not care.
  for (int i = 0; i < 100; ++i) parent.next_u64();
  Rng child2 = parent.stream("alpha", 0);
  for (int i = 0; i < 100; ++i) CHECK(child1.next_u64() == child2.next_u64());

  Rng other_tag = parent.stream("beta", 0);
  Rng other_index = parent.stream("alpha", 1);
  Rng base = parent.stream("alpha", 0);
  CHECK(other_tag.next_u64() != base.next_u64());
  CHECK(other_index.next_u64() != Rng(99).stream("alpha", 0).next_u64());
}

TEST_CASE("rng gaussian and bounded draws behave") {
  Rng rng(4);
  double sum = 0.0, sum_sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.next_gaussian();
    sum += g;
    sum_sq += g * g;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sum_sq / n - 1.0) < 0.05);

  for (int i = 0; i < 1000; ++i) {
    CHECK(rng.next_below(7) < 7);
  }
  CHECK_THROWS_AS(rng.next_below(0), std::invalid_argument);
}

TEST_CASE("fnv1a64 is stable and order sensitive") {
  CHECK(fnv1a64("") == 1469598103934665603ull);
  CHECK(fnv1a64("ab") != fnv1a64("ba"));
  const double xs[2] = {1.0, 2.0};
  CHECK(fnv1a64(xs, sizeof(xs)) == fnv1a64(xs, sizeof(xs)));
}
