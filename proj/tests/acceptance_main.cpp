// Acceptance suite: runs every release criterion against the frozen synthetic
// benchmarks and prints one PASS/FAIL line per criterion. Exit code is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "ospe/io.hpp"

using namespace ospe;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  std::string name;
  std::function<std::string()> body;  // returns detail text, throws on failure
};

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(bool condition, const std::string& message) {
  if (!condition) throw Failure(message);
}

std::string fmt(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", value);
  return buf;
}

const fs::path kOutRoot = "acceptance_out";

// Shared experiment runs, executed lazily and cached.
std::map<std::string, ExperimentResult>& run_cache() {
  static std::map<std::string, ExperimentResult> cache;
  return cache;
}

const ExperimentResult& run_named(const std::string& name) {
  auto& cache = run_cache();
  auto it = cache.find(name);
  if (it != cache.end()) return it->second;
  const Manifest manifest = named_manifest(name);
  ExperimentResult result =
      run_experiment(manifest, (kOutRoot / name).string());
  return cache.emplace(name, std::move(result)).first->second;
}

// --------------------------------------------------------------------------
// 1. Gradient correctness: analytic chained gradients vs central finite
//    differences on random small configurations.
// --------------------------------------------------------------------------
std::string criterion_gradients() {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int token_dim = 2 + static_cast<int>(rng.next_below(7));  // <= 8
    const int embed_dim = 2 + static_cast<int>(rng.next_below(7));

    TokenTable tokens;
    std::vector<std::string> vocab;
    for (int i = 0; i < 5; ++i) {  // N_D = 3 closed + N_O = 2 open
      Vec token(token_dim);
      for (double& x : token) x = rng.next_gaussian();
      const std::string word =
          (i < 3 ? "class_" : "open_") + std::to_string(i);
      tokens.add(word, token);
      vocab.push_back(word);
    }
    MlpTextEncoder::Options options;
    options.token_dim = token_dim;
    options.output_dim = embed_dim;
    options.perturbation = 0.4;
    options.seed = rng.next_u64();
    const MlpTextEncoder encoder(options);

    PromptContext ctx;
    ctx.class_position = ClassPosition::kMid;
    ctx.vectors.assign(2, Vec(token_dim));  // L = 2
    for (Vec& v : ctx.vectors) {
      for (double& x : v) x = 0.05 * rng.next_gaussian();
    }
    std::vector<Vec> image_storage(5, Vec(embed_dim));
    std::vector<const Vec*> images;
    std::vector<int> targets;
    for (auto& image : image_storage) {
      for (double& x : image) x = rng.next_gaussian();
      images.push_back(&image);
      targets.push_back(static_cast<int>(rng.next_below(3)));
    }
    const double T = 0.2 + rng.next_double();
    const BatchGrad grad = batch_loss_and_grad(ctx, encoder, tokens, vocab,
                                               images, targets, T);
    const double delta = 1e-5;
    for (size_t i = 0; i < ctx.vectors.size(); ++i) {
      for (size_t d = 0; d < ctx.vectors[i].size(); ++d) {
        const double saved = ctx.vectors[i][d];
        ctx.vectors[i][d] = saved + delta;
        const double up = batch_loss_and_grad(ctx, encoder, tokens, vocab,
                                              images, targets, T)
                              .loss;
        ctx.vectors[i][d] = saved - delta;
        const double down = batch_loss_and_grad(ctx, encoder, tokens, vocab,
                                                images, targets, T)
                                .loss;
        ctx.vectors[i][d] = saved;
        const double fd = (up - down) / (2.0 * delta);
        const double a = grad.dcontext[i][d];
        if (std::abs(a - fd) < 1e-9) continue;
        worst = std::max(worst, std::abs(a - fd) / std::max({std::abs(a),
                                                             std::abs(fd),
                                                             1e-8}));
      }
    }
  }
  check(worst <= 1e-4, "max relative error " + fmt(worst) + " > 1e-4");
  return "max rel err " + fmt(worst) + " over 10 configs";
}

// --------------------------------------------------------------------------
// 2. AUROC oracle equivalence: rank-based vs O(n^2) pairwise, with ties.
// --------------------------------------------------------------------------
std::string criterion_auroc_oracle() {
  Rng rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const size_t nk = 1 + rng.next_below(200);
    const size_t nu = 1 + rng.next_below(200);
    std::vector<double> known(nk), unknown(nu);
    for (double& s : known) s = rng.next_below(25) / 12.0;
    for (double& s : unknown) s = rng.next_below(25) / 12.0 + 0.25;
    const auto orientation = trial % 2 == 0
                                 ? ScoreOrientation::kHigherIsUnknown
                                 : ScoreOrientation::kHigherIsKnown;
    const double fast = auroc(known, unknown, orientation);
    const double flip =
        orientation == ScoreOrientation::kHigherIsUnknown ? 1.0 : -1.0;
    double wins = 0.0;
    for (double k : known) {
      for (double u : unknown) {
        if (flip * u > flip * k) {
          wins += 1.0;
        } else if (flip * u == flip * k) {
          wins += 0.5;
        }
      }
    }
    const double slow = wins / (static_cast<double>(nk) * nu);
    worst = std::max(worst, std::abs(fast - slow));
  }
  check(worst <= 1e-12, "max |rank - pairwise| = " + fmt(worst));
  return "max abs diff " + fmt(worst) + " over 100 score sets";
}

// --------------------------------------------------------------------------
// 3. Grouping-rule exhaustiveness over N_D in [1, 2000].
// --------------------------------------------------------------------------
std::string criterion_grouping() {
  size_t cases = 0;
  for (int n_c : {10, 20, 30, 40}) {
    for (int n_d = 1; n_d <= 2000; ++n_d) {
      std::vector<int> ordering(n_d);
      std::iota(ordering.begin(), ordering.end(), 0);
      const GroupSpec spec = make_groups(n_d, n_c, ordering);
      const int g = spec.n_groups();
      check((g - 1) * n_c < n_d && n_d <= g * n_c,
            "group-count rule violated at N_D=" + std::to_string(n_d) +
                ", N_C=" + std::to_string(n_c));
      std::vector<char> seen(n_d, 0);
      for (int k = 0; k < g; ++k) {
        check(k == g - 1 || static_cast<int>(spec.groups[k].size()) == n_c,
              "leading group size mismatch");
        for (int c : spec.groups[k]) seen[c] = 1;
      }
      check(static_cast<int>(spec.groups[g - 1].size()) <= n_c,
            "last group too large");
      for (char s : seen) check(s == 1, "partition misses a class");
      ++cases;
    }
  }
  // The anchor case: 100 classes at N_C = 20 -> 5 groups of 20.
  std::vector<int> ordering(100);
  std::iota(ordering.begin(), ordering.end(), 0);
  const GroupSpec anchor = make_groups(100, 20, ordering);
  check(anchor.n_groups() == 5, "anchor 100/20 did not give 5 groups");
  for (const auto& group : anchor.groups) {
    check(group.size() == 20, "anchor group size != 20");
  }
  return std::to_string(cases) + " (N_D, N_C) cases plus the 100/20 anchor";
}

// --------------------------------------------------------------------------
// 4. G=1 degeneracy: grouped inference with N_C >= N_D equals the plain
//    single-prompt path.
// --------------------------------------------------------------------------
std::string criterion_degeneracy() {
  const ExperimentResult& run = run_named("small-osr-n20");
  check(run.groups.n_groups() == 1, "small-osr manifest must give one group");

  const Manifest manifest = named_manifest("small-osr-n20");
  Workbench bench = setup_workbench(manifest);
  const MTuningModel plain =
      build_mtuning_model(run.contexts[0], *bench.encoder, bench.tokens,
                          bench.vocab, manifest.tune.temperature);

  double worst = 0.0;
  size_t mismatched_labels = 0;
  std::map<std::string, const PredictionRecord*> by_id;
  for (const auto& record : run.records) by_id[record.sample_id] = &record;
  for (const auto& entry : bench.dataset.entries) {
    if (entry.split == Split::kTrain) continue;
    const MTuningScores scores =
        mtuning_score(plain, bench.dataset.embeddings.at(entry.id));
    const PredictionRecord& record = *by_id.at(entry.id);
    worst = std::max(worst, std::abs(scores.s_open - record.s_open));
    worst = std::max(worst, std::abs(scores.p_max - record.p_max));
    const int plain_label =
        scores.p_max >= manifest.tau_max ? scores.argmax_class : kUnknownLabel;
    if (plain_label != record.predicted) ++mismatched_labels;
  }
  check(worst <= 1e-12, "max |grouped - plain| = " + fmt(worst));
  check(mismatched_labels == 0,
        std::to_string(mismatched_labels) + " label mismatches");
  return "max score diff " + fmt(worst) + ", all labels equal";
}

// --------------------------------------------------------------------------
// 5. Open-word effect: S_open AUROC with N_O=20 beats MSP AUROC with N_O=0
//    by at least +0.02.
// --------------------------------------------------------------------------
std::string criterion_open_word_effect() {
  const ExperimentResult& with_opens = run_named("small-osr-n20");
  const ExperimentResult& without = run_named("small-osr-n0");
  check(!with_opens.report.open_score_degenerate,
        "open-word run reported degenerate S_open");
  check(without.report.open_score_degenerate,
        "N_O=0 run must mark S_open degenerate");
  const double margin =
      with_opens.report.auroc_open_score - without.report.auroc_msp;
  check(margin >= 0.02, "margin " + fmt(margin) + " < +0.02 (S_open " +
                            fmt(with_opens.report.auroc_open_score) +
                            " vs MSP " + fmt(without.report.auroc_msp) + ")");
  return "S_open AUROC " + fmt(with_opens.report.auroc_open_score) +
         " vs MSP AUROC " + fmt(without.report.auroc_msp) + " (margin +" +
         fmt(margin) + ")";
}

// --------------------------------------------------------------------------
// 6. Optimal-group selection on the separable large benchmark.
// --------------------------------------------------------------------------
std::string criterion_optimal_group() {
  const ExperimentResult& run = run_named("large-osr-nc20");
  const Manifest manifest = named_manifest("large-osr-nc20");
  const SynthData data = generate(*manifest.synth);

  std::map<std::string, int> true_label;
  for (const auto& entry : data.dataset.entries) {
    if (entry.split == Split::kTestKnown) true_label[entry.id] = entry.label;
  }
  size_t total = 0, correct = 0;
  for (const auto& record : run.records) {
    auto it = true_label.find(record.sample_id);
    if (it == true_label.end()) continue;  // unknown sample
    ++total;
    if (run.groups.group_of(it->second) == record.optimal_group) ++correct;
  }
  check(total > 0, "no test-known records");
  const double rate = static_cast<double>(correct) / total;
  check(rate >= 0.95, "I_opt accuracy " + fmt(rate) + " < 0.95");
  return "I_opt matches the true group for " + fmt(100.0 * rate) + "% of " +
         std::to_string(total) + " samples";
}

// --------------------------------------------------------------------------
// 7. CTT benefit direction: grouped accuracy within 0.01 of (or above) the
//    ungrouped accuracy, both read from the comparison artifact.
// --------------------------------------------------------------------------
std::string criterion_ctt_benefit() {
  const ExperimentResult& grouped = run_named("large-osr-nc20");
  const ExperimentResult& flat = run_named("large-osr-flat");
  const Json delta = compare_reports(flat.report, grouped.report);
  write_file_atomic((kOutRoot / "compare_nc20_vs_flat.json").string(),
                    delta.dump(2) + "\n");
  const double acc_flat =
      delta["metrics"]["closed_accuracy"]["a"].get<double>();
  const double acc_grouped =
      delta["metrics"]["closed_accuracy"]["b"].get<double>();
  check(acc_grouped >= acc_flat - 0.01,
        "grouped accuracy " + fmt(acc_grouped) + " below flat " +
            fmt(acc_flat) + " - 0.01");
  return "accuracy grouped " + fmt(acc_grouped) + " vs flat " + fmt(acc_flat) +
         " (delta " + fmt(acc_grouped - acc_flat) + ", artifact written)";
}

// --------------------------------------------------------------------------
// 8. Freeze and independence: encoder checksum constant, and tuning order
//    permutation changes nothing.
// --------------------------------------------------------------------------
std::string criterion_freeze_independence() {
  const Manifest manifest = named_manifest("large-osr-nc20");
  Workbench bench = setup_workbench(manifest);
  const uint64_t checksum_before = bench.encoder->parameter_checksum();

  // Tune groups forward and in reverse; contexts must be bit-identical.
  std::vector<std::vector<const Vec*>> per_class(bench.dataset.n_classes());
  for (const auto& entry : bench.dataset.entries) {
    if (entry.split == Split::kTrain) {
      per_class[entry.label].push_back(&bench.dataset.embeddings.at(entry.id));
    }
  }
  auto tune_one = [&](int k) {
    const std::vector<int>& classes = bench.groups.groups[k];
    GroupSlice slice;
    std::vector<std::string> vocab_slice;
    for (size_t local = 0; local < classes.size(); ++local) {
      vocab_slice.push_back(bench.dataset.class_names[classes[local]]);
      for (const Vec* image : per_class[classes[local]]) {
        slice.images.push_back(image);
        slice.targets.push_back(static_cast<int>(local));
      }
    }
    const auto& opens = bench.tune_opens_by_group[k];
    vocab_slice.insert(vocab_slice.end(), opens.begin(), opens.end());
    return tune_group(slice, manifest.tune, vocab_slice, *bench.encoder,
                      bench.tokens, k);
  };

  const int n_groups = bench.groups.n_groups();
  std::vector<PromptContext> forward(n_groups), reversed(n_groups);
  for (int k = 0; k < n_groups; ++k) forward[k] = tune_one(k).context;
  for (int k = n_groups - 1; k >= 0; --k) reversed[k] = tune_one(k).context;
  for (int k = 0; k < n_groups; ++k) {
    check(forward[k].vectors == reversed[k].vectors,
          "group " + std::to_string(k) + " context depends on tuning order");
  }
  check(bench.encoder->parameter_checksum() == checksum_before,
        "encoder parameters changed during tuning");

  // Reports built from both context sets must serialize identically.
  const auto records_fwd =
      infer_all(bench, build_group_models(bench, forward));
  const auto records_rev =
      infer_all(bench, build_group_models(bench, reversed));
  const std::string report_fwd =
      report_to_json(report_from_records(bench, records_fwd)).dump(2);
  const std::string report_rev =
      report_to_json(report_from_records(bench, records_rev)).dump(2);
  check(report_fwd == report_rev, "reports differ across tuning orders");
  return std::to_string(n_groups) +
         " groups tuned in two orders: contexts and reports bit-identical";
}

// --------------------------------------------------------------------------
// 9. Metric hand-oracles and the mF1 sweep grid.
// --------------------------------------------------------------------------
std::string criterion_metric_oracles() {
  // AUROC: known {0.1, 0.6}, unknown {0.4, 0.8} -> 3 of 4 pairs.
  check(auroc({0.1, 0.6}, {0.4, 0.8}, ScoreOrientation::kHigherIsUnknown) ==
            0.75,
        "auroc hand case != 0.75");

  // mF1 hand confusion matrix: A 2/2, B 1/2 with one UNKNOWN, no true
  // unknowns -> (1 + 2/3 + 0) / 3.
  {
    const std::vector<int> truth = {0, 0, 1, 1};
    const std::vector<int> predicted = {0, 0, 1, kUnknownLabel};
    const double expected = (1.0 + 2.0 / 3.0) / 3.0;
    check(std::abs(macro_f1(predicted, truth, 2) - expected) < 1e-15,
          "mF1 confusion-matrix case mismatch");
  }
  // All predicted unknown, half truly unknown -> (2/3) / (N_D + 1).
  {
    std::vector<int> truth, predicted;
    for (int c = 0; c < 4; ++c) {
      truth.push_back(c);
      predicted.push_back(kUnknownLabel);
      truth.push_back(kUnknownLabel);
      predicted.push_back(kUnknownLabel);
    }
    const double expected = (2.0 / 3.0) / 5.0;
    check(std::abs(macro_f1(predicted, truth, 4) - expected) < 1e-15,
          "mF1 all-unknown case mismatch");
  }
  // The report sweep uses tau in {0.90, ..., 0.98}.
  const ExperimentResult& run = run_named("small-osr-n20");
  const std::vector<double> expected_taus = {0.90, 0.92, 0.94, 0.96, 0.98};
  check(run.report.mf1_by_tau.size() == expected_taus.size(),
        "mF1 sweep has the wrong size");
  for (size_t i = 0; i < expected_taus.size(); ++i) {
    check(std::abs(run.report.mf1_by_tau[i].first - expected_taus[i]) < 1e-12,
          "mF1 sweep tau grid mismatch");
  }
  return "three hand oracles exact; sweep grid {0.90..0.98} present";
}

// --------------------------------------------------------------------------
// 10. End-to-end determinism: byte-identical reports on a rerun.
// --------------------------------------------------------------------------
std::string criterion_determinism() {
  size_t checked = 0;
  for (const std::string name : {"small-osr-n20", "small-osr-n0"}) {
    run_named(name);  // first run (possibly cached from earlier criteria)
    const std::string first =
        read_file((kOutRoot / name / "metrics.json").string());
    const fs::path rerun_dir = kOutRoot / (name + "-rerun");
    run_experiment(named_manifest(name), rerun_dir.string());
    const std::string second =
        read_file((rerun_dir / "metrics.json").string());
    check(first == second, name + ": reports differ between runs");
    const std::string predictions_a =
        read_file((kOutRoot / name / "predictions.tsv").string());
    const std::string predictions_b =
        read_file((rerun_dir / "predictions.tsv").string());
    check(predictions_a == predictions_b,
          name + ": predictions differ between runs");
    ++checked;
  }
  return std::to_string(checked) + " manifests rerun byte-identically";
}

}  // namespace

int main() {
  std::error_code ec;
  fs::remove_all(kOutRoot, ec);

  const std::vector<Criterion> criteria = {
      {"gradient-correctness", criterion_gradients},
      {"auroc-oracle-equivalence", criterion_auroc_oracle},
      {"grouping-rule-exhaustiveness", criterion_grouping},
      {"g1-degeneracy", criterion_degeneracy},
      {"open-word-effect", criterion_open_word_effect},
      {"optimal-group-selection", criterion_optimal_group},
      {"ctt-benefit-direction", criterion_ctt_benefit},
      {"freeze-and-independence", criterion_freeze_independence},
      {"metric-hand-oracles", criterion_metric_oracles},
      {"end-to-end-determinism", criterion_determinism},
  };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      detail = criteria[i].body();
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[%s] %2zu %-28s %s (%.1fs)\n", ok ? "PASS" : "FAIL", i + 1,
                criteria[i].name.c_str(), detail.c_str(), seconds);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  std::printf("ACCEPTANCE: %zu/%zu criteria passed\n",
              criteria.size() - failures, criteria.size());
  return failures;
}
