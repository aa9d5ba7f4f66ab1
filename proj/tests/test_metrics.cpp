#include <cmath>

#include <doctest.h>

#include "ospe/ctt.hpp"
#include "ospe/metrics.hpp"

using namespace ospe;

namespace {

// O(n^2) pairwise oracle: fraction of (known, unknown) pairs ordered
// correctly, ties worth one half. Kept brutally simple on purpose.
double auroc_pairwise(const std::vector<double>& known,
                      const std::vector<double>& unknown,
                      ScoreOrientation orientation) {
  const double flip =
      orientation == ScoreOrientation::kHigherIsUnknown ? 1.0 : -1.0;
  double wins = 0.0;
  for (double k : known) {
    for (double u : unknown) {
      const double ks = flip * k;
      const double us = flip * u;
      if (us > ks) {
        wins += 1.0;
      } else if (us == ks) {
        wins += 0.5;
      }
    }
  }
  return wins / (static_cast<double>(known.size()) *
                 static_cast<double>(unknown.size()));
}

}  // namespace

TEST_CASE("auroc hand cases") {
  CHECK(auroc({0.1, 0.2}, {0.8, 0.9}, ScoreOrientation::kHigherIsUnknown) ==
        1.0);
  CHECK(auroc({0.5, 0.5}, {0.5, 0.5}, ScoreOrientation::kHigherIsUnknown) ==
        0.5);
  // 3 of 4 pairs ordered correctly.
  CHECK(auroc({0.1, 0.6}, {0.4, 0.8}, ScoreOrientation::kHigherIsUnknown) ==
        0.75);
  // MSP orientation: higher means known.
  CHECK(auroc({0.9, 0.8}, {0.1, 0.2}, ScoreOrientation::kHigherIsKnown) ==
        1.0);
  CHECK_THROWS_AS(auroc({}, {0.5}, ScoreOrientation::kHigherIsUnknown),
                  std::invalid_argument);
  CHECK_THROWS_AS(auroc({0.5}, {}, ScoreOrientation::kHigherIsUnknown),
                  std::invalid_argument);
}

TEST_CASE("rank-based auroc equals the pairwise oracle") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t nk = 1 + rng.next_below(200);
    const size_t nu = 1 + rng.next_below(200);
    std::vector<double> known(nk), unknown(nu);
    // Coarse grid of values forces plenty of ties.
    for (double& s : known) s = rng.next_below(20) / 10.0 - 0.5;
    for (double& s : unknown) s = rng.next_below(20) / 10.0 - 0.2;
    const auto orientation = trial % 2 == 0
                                 ? ScoreOrientation::kHigherIsUnknown
                                 : ScoreOrientation::kHigherIsKnown;
    const double fast = auroc(known, unknown, orientation);
    const double slow = auroc_pairwise(known, unknown, orientation);
    REQUIRE(std::abs(fast - slow) < 1e-12);
  }
}

TEST_CASE("auroc orientation coherence") {
  Rng rng(29);
  std::vector<double> known(40), unknown(35);
  for (double& s : known) s = rng.next_gaussian();
  for (double& s : unknown) s = rng.next_gaussian() + 0.3;
  std::vector<double> neg_known = known, neg_unknown = unknown;
  for (double& s : neg_known) s = -s;
  for (double& s : neg_unknown) s = -s;
  CHECK(auroc(known, unknown, ScoreOrientation::kHigherIsUnknown) ==
        auroc(neg_known, neg_unknown, ScoreOrientation::kHigherIsKnown));
}

TEST_CASE("closed accuracy") {
  CHECK(closed_accuracy({0, 1, 2}, {0, 1, 2}) == 1.0);
  CHECK(closed_accuracy({1, 0, 1}, {0, 1, 2}) == 0.0);
  CHECK(closed_accuracy({0, 1, 2, 9}, {0, 1, 2, 3}) == 0.75);
  CHECK_THROWS_AS(closed_accuracy({0}, {-1}), DataError);
  CHECK_THROWS_AS(closed_accuracy({0, 1}, {0}), std::invalid_argument);
}

TEST_CASE("macro f1 perfect predictions") {
  // Truth covers both classes and the unknown, all correct.
  const std::vector<int> truth = {0, 1, kUnknownLabel};
  CHECK(macro_f1(truth, truth, 2) == 1.0);
}

TEST_CASE("macro f1 hand confusion matrix") {
  // Classes A, B; A: 2/2 correct; B: 1 correct, 1 -> UNKNOWN; no true
  // unknowns. Hand-computed: F1(A) = 1, F1(B) = 2/3, F1(UNKNOWN) = 0.
  const std::vector<int> truth = {0, 0, 1, 1};
  const std::vector<int> predicted = {0, 0, 1, kUnknownLabel};
  const double expected = (1.0 + 2.0 / 3.0 + 0.0) / 3.0;
  CHECK(std::abs(macro_f1(predicted, truth, 2) - expected) < 1e-12);

  // Excluding absent classes drops nothing here (all three have support).
  CHECK(std::abs(macro_f1(predicted, truth, 2, false) - expected) < 1e-12);
}

TEST_CASE("macro f1 when everything is predicted unknown") {
  // Half the samples truly unknown: known F1s are all 0, unknown F1 is
  // 2 * (0.5 * 1) / (0.5 + 1) = 2/3, macro = (2/3) / (n_classes + 1).
  const int n_classes = 3;
  std::vector<int> truth, predicted;
  for (int c = 0; c < n_classes; ++c) {
    truth.push_back(c);
    predicted.push_back(kUnknownLabel);
  }
  for (int i = 0; i < n_classes; ++i) {
    truth.push_back(kUnknownLabel);
    predicted.push_back(kUnknownLabel);
  }
  const double expected = (2.0 / 3.0) / (n_classes + 1);
  CHECK(std::abs(macro_f1(predicted, truth, n_classes) - expected) < 1e-12);
}

TEST_CASE("macro f1 absent class handling") {
  // Class 2 never appears in truth or prediction.
  const std::vector<int> truth = {0, 1};
  const std::vector<int> predicted = {0, 1};
  // Included: (1 + 1 + 0 + 0) / 4; excluded: (1 + 1) / 2.
  CHECK(std::abs(macro_f1(predicted, truth, 3, true) - 0.5) < 1e-12);
  CHECK(macro_f1(predicted, truth, 3, false) == 1.0);
}

TEST_CASE("macro f1 at tau zero equals closed-set macro f1") {
  Rng rng(31);
  const int n_classes = 5;
  std::vector<int> truth, argmax;
  for (int i = 0; i < 200; ++i) {
    truth.push_back(static_cast<int>(rng.next_below(n_classes)));
    argmax.push_back(static_cast<int>(rng.next_below(n_classes)));
  }
  // At tau = 0 every prediction keeps its argmax (p_max >= 0 always).
  const double via_engine = macro_f1(argmax, truth, n_classes);

  // Independent closed-set computation with no unknown slot ever predicted:
  // unknown has no support on either side, contributing F1 = 0.
  std::vector<double> f1(n_classes + 1, 0.0);
  for (int c = 0; c < n_classes; ++c) {
    int tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
      if (truth[i] == c && argmax[i] == c) ++tp;
      if (truth[i] != c && argmax[i] == c) ++fp;
      if (truth[i] == c && argmax[i] != c) ++fn;
    }
    f1[c] = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
  }
  double expected = 0.0;
  for (double value : f1) expected += value;
  expected /= (n_classes + 1);
  CHECK(std::abs(via_engine - expected) < 1e-12);
}

TEST_CASE("macro f1 input validation") {
  CHECK_THROWS_AS(macro_f1({0}, {}, 1), std::invalid_argument);
  CHECK_THROWS_AS(macro_f1({5}, {0}, 2), std::invalid_argument);
  CHECK_THROWS_AS(macro_f1({0}, {0}, 0), std::invalid_argument);
}

TEST_CASE("histogram hand cases") {
  const Histogram all_ones = histogram({1.0, 1.0, 1.0}, {false, false, true}, 10);
  CHECK(all_ones.known_counts[9] == 2);
  CHECK(all_ones.unknown_counts[9] == 1);
  for (int b = 0; b < 9; ++b) {
    CHECK(all_ones.known_counts[b] == 0);
    CHECK(all_ones.unknown_counts[b] == 0);
  }

  // Sums are preserved per split.
  Rng rng(37);
  std::vector<double> probs;
  std::vector<bool> tags;
  for (int i = 0; i < 1000; ++i) {
    probs.push_back(rng.next_double());
    tags.push_back(i % 3 == 0);
  }
  const Histogram h = histogram(probs, tags, 10);
  int64_t known_total = 0, unknown_total = 0;
  for (int b = 0; b < 10; ++b) {
    known_total += h.known_counts[b];
    unknown_total += h.unknown_counts[b];
  }
  CHECK(known_total + unknown_total == 1000);
  CHECK(unknown_total == 334);
  CHECK(h.edges.front() == 0.0);
  CHECK(h.edges.back() == 1.0);
}

TEST_CASE("histogram rejects bad input") {
  CHECK_THROWS_AS(histogram({0.5}, {false}, 0), std::invalid_argument);
  CHECK_THROWS_AS(histogram({1.5}, {false}, 10), std::invalid_argument);
  CHECK_THROWS_AS(histogram({-0.1}, {false}, 10), std::invalid_argument);
  CHECK_THROWS_AS(histogram({0.5, 0.5}, {false}, 10), std::invalid_argument);
}
