// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <map>

#include "icdnet/experiment.hpp"
#include "icdnet/metrics.hpp"
#include "icdnet/synthetic.hpp"
#include "icdnet/training.hpp"
#include "support.hpp"

using namespace icdnet;
using icdnet::testing::TempDir;

namespace {

BinaryMatrix random_binary(std::size_t n, std::size_t c, double p, Rng& rng) {
  BinaryMatrix m(n, c);
  for (auto& v : m.cells) v = rng.bernoulli(p) ? 1 : 0;
  return m;
}

/// Independent recount: loops note by note over explicit (pred, truth) pairs.
std::array<std::size_t, 3> recount(const BinaryMatrix& pred, const BinaryMatrix& truth) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t r = 0; r < truth.rows; ++r) {
    for (std::size_t c = 0; c < truth.cols; ++c) {
      int p = pred.cells[r * pred.cols + c], t = truth.cells[r * truth.cols + c];
      tp += static_cast<std::size_t>(p == 1 && t == 1);
      fp += static_cast<std::size_t>(p == 1 && t == 0);
      fn += static_cast<std::size_t>(p == 0 && t == 1);
    }
  }
  return {tp, fp, fn};
}

/// Exhaustive grid search with long-double F1 values; first maximum wins.
double brute_force_tau(const Tensor& scores, const BinaryMatrix& truth) {
  double best_tau = 0.01;
  long double best = -1;
  for (int k = 1; k <= 99; ++k) {
    double tau = k / 100.0;
    BinaryMatrix pred(truth.rows, truth.cols);
    for (std::size_t i = 0; i < scores.size(); ++i) pred.cells[i] = scores[i] >= tau;
    auto [tp, fp, fn] = recount(pred, truth);
    long double f1 = tp == 0 ? 0.0L : 2.0L * tp / (2.0L * tp + fp + fn);
    if (f1 > best) {
      best = f1;
      best_tau = tau;
    }
  }
  return best_tau;
}

Tensor random_scores(std::size_t n, std::size_t c, Rng& rng) {
  Tensor s({n, c});
  // Coarse values make ties between thresholds common.
  for (double& v : s.values()) v = rng.bernoulli(0.5) ? static_cast<double>(rng.below(101)) / 100.0 : rng.uniform();
  return s;
}

SyntheticCorpus small_corpus(std::size_t notes, std::size_t classes, double noise, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.num_notes = notes;
  spec.num_classes = classes;
  spec.noise_fraction = noise;
  spec.min_length = 12;
  spec.max_length = 30;
  spec.cardinality = {0.6, 0.4};
  spec.seed = seed;
  return generate_synthetic(spec, standard_chapter_table());
}

Manifest tiny_manifest(std::vector<Variant> variants) {
  Manifest m;
  m.data = "unused";
  m.variants = std::move(variants);
  m.epochs = 2;
  m.seed = 4;
  m.max_len = 40;
  m.batch_size = 8;
  m.learning_rate = 0.01;
  m.model = {{"embedding_dim", 8}, {"cnn_filters_per_window", 6}, {"cnn_window_sizes", {2, 3}},
             {"lstm_hidden_dim", 6}, {"attention_dim", 5}};
  return m;
}

}  // namespace

TEST(Metrics, HandCountedExample) {
  auto truth = BinaryMatrix::from_rows({{1, 0, 1}, {0, 1, 0}});
  auto pred = BinaryMatrix::from_rows({{1, 0, 0}, {0, 1, 1}});
  MetricsReport r = micro_f1(pred, truth);
  EXPECT_EQ(r.tp, 2u);
  EXPECT_EQ(r.fp, 1u);
  EXPECT_EQ(r.fn, 1u);
  EXPECT_DOUBLE_EQ(r.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.f1, 2.0 / 3.0);
  EXPECT_EQ(micro_f1(truth, truth).f1, 1.0);
  EXPECT_THROW(micro_f1(pred, BinaryMatrix(2, 2)), DimensionError);
}

TEST(Metrics, ZeroDenominatorConventions) {
  BinaryMatrix zeros(3, 4);
  MetricsReport r = micro_f1(zeros, zeros);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_EQ(r.f1, 0.0);
  auto truth = BinaryMatrix::from_rows({{1, 0}});
  r = micro_f1(BinaryMatrix(1, 2), truth);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.f1, 0.0);
}

TEST(Metrics, MatchesRecountOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 1 + rng.below(60), c = 1 + rng.below(20);
    auto truth = random_binary(n, c, rng.uniform(), rng);
    auto pred = random_binary(n, c, rng.uniform(), rng);
    MetricsReport r = micro_f1(pred, truth);
    auto [tp, fp, fn] = recount(pred, truth);
    ASSERT_EQ(r.tp, tp);
    ASSERT_EQ(r.fp, fp);
    ASSERT_EQ(r.fn, fn);
  }
}

TEST(Metrics, PermutationInvariance) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 2 + rng.below(20), c = 2 + rng.below(8);
    auto truth = random_binary(n, c, 0.3, rng), pred = random_binary(n, c, 0.4, rng);
    std::vector<std::size_t> rows(n), cols(c);
    std::iota(rows.begin(), rows.end(), 0);
    std::iota(cols.begin(), cols.end(), 0);
    rng.shuffle(std::span<std::size_t>(rows));
    rng.shuffle(std::span<std::size_t>(cols));
    BinaryMatrix pt(n, c), tt(n, c);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        pt.at(i, j) = pred.at(rows[i], cols[j]);
        tt.at(i, j) = truth.at(rows[i], cols[j]);
      }
    ASSERT_EQ(micro_f1(pt, tt).f1, micro_f1(pred, truth).f1);
  }
}

TEST(Threshold, GridAndBinarize) {
  auto grid = threshold_grid();
  ASSERT_EQ(grid.size(), 99u);
  EXPECT_EQ(grid.front(), 0.01);
  EXPECT_EQ(grid[49], 0.5);
  EXPECT_EQ(grid.back(), 0.99);
  Tensor s = Tensor::matrix({{0.5, 0.49999}});
  EXPECT_EQ(binarize(s, 0.5).cells, (std::vector<std::uint8_t>{1, 0}));
}

TEST(Threshold, CalibrationMatchesBruteForce) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 1 + rng.below(50), c = 1 + rng.below(10);
    Tensor scores = random_scores(n, c, rng);
    auto truth = random_binary(n, c, rng.uniform(0.05, 0.6), rng);
    ASSERT_EQ(calibrate_threshold(scores, truth).tau, brute_force_tau(scores, truth)) << trial;
  }
}

TEST(Threshold, CalibratedF1AtLeastHalfThreshold) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 1 + rng.below(30), c = 1 + rng.below(6);
    Tensor scores = random_scores(n, c, rng);
    auto truth = random_binary(n, c, 0.3, rng);
    double tau = calibrate_threshold(scores, truth).tau;
    ASSERT_GE(micro_f1(binarize(scores, tau), truth).f1, micro_f1(binarize(scores, 0.5), truth).f1);
  }
}

TEST(Threshold, TieGoesToSmallestAndDefaults) {
  // tau <= 0.05: TP 2, FP 2 (F1 2/3); (0.05, 0.10]: TP 2, FP 1 (F1 0.8);
  // (0.10, 0.12]: TP 1, FP 1, FN 1 (F1 0.5). The plateau starts at 0.06.
  Tensor s = Tensor::matrix({{0.1, 0.12}, {0.9, 0.05}});
  auto y = BinaryMatrix::from_rows({{1, 0}, {1, 0}});
  EXPECT_EQ(calibrate_threshold(s, y).tau, 0.06);
  Tensor s2 = Tensor::matrix({{0.3, 0.12}, {0.9, 0.05}});
  EXPECT_EQ(calibrate_threshold(s2, y).tau, 0.13);
  EXPECT_EQ(calibrate_threshold(s2, BinaryMatrix(2, 2)).tau, 0.01);
  EXPECT_THROW(calibrate_threshold(s2, BinaryMatrix(1, 2)), DimensionError);
}

TEST(Split, SizesAndPartition) {
  EXPECT_EQ(split_sizes(100, {}), (std::array<std::size_t, 3>{70, 15, 15}));
  EXPECT_EQ(split_sizes(5000, {}), (std::array<std::size_t, 3>{3500, 750, 750}));
  EXPECT_EQ(split_sizes(7, {}), (std::array<std::size_t, 3>{4, 1, 2}));
  EXPECT_EQ(split_sizes(3, {}), (std::array<std::size_t, 3>{1, 1, 1}));
  EXPECT_THROW(split_sizes(2, {}), ValidationError);
  EXPECT_THROW(split_sizes(10, SplitSpec{0.5, 0.2, 0.2, 0}), ConfigError);

  std::vector<int> items(101);
  std::iota(items.begin(), items.end(), 0);
  auto s1 = split_dataset(items, SplitSpec{.seed = 9});
  auto s2 = split_dataset(items, SplitSpec{.seed = 9});
  auto s3 = split_dataset(items, SplitSpec{.seed = 10});
  EXPECT_EQ(s1.train, s2.train);
  EXPECT_NE(s1.train, s3.train);
  std::vector<int> all = s1.train;
  all.insert(all.end(), s1.val.begin(), s1.val.end());
  all.insert(all.end(), s1.test.begin(), s1.test.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, items);
}

TEST(Evaluate, TauAboveAllScoresGivesZero) {
  ModelConfig c;
  c.variant = Variant::Baseline;
  c.num_classes = 3;
  Model m(c);
  m.param("baseline.scores").value = Tensor::vector({0.9, 0.2, 0.0});
  EncodedNote n;
  n.ids.assign(c.max_len, 0);
  Dataset d{{n, {1, 1, 0}}, {n, {1, 0, 1}}};
  MetricsReport r = evaluate(m, Threshold{0.99}, d, "test");
  EXPECT_EQ(r.tp, 0u);
  EXPECT_EQ(r.f1, 0.0);
  EXPECT_EQ(r.partition, "test");
  r = evaluate(m, Threshold{0.5}, d, "test");
  EXPECT_EQ(r.tp, 2u);
  EXPECT_EQ(r.fn, 2u);
}

TEST(Baseline, TopFourCoveringAllLabelsScoresOne) {
  ModelConfig c;
  c.variant = Variant::Baseline;
  c.num_classes = 6;
  Model m(c);
  EncodedNote n;
  n.ids.assign(c.max_len, 0);
  Dataset d;
  for (int i = 0; i < 5; ++i) d.push_back({n, {1, 1, 1, 1, 0, 0}});
  train(m, d, d, TrainConfig{});
  EXPECT_EQ(evaluate(m, Threshold{0.5}, d, "train").f1, 1.0);
}

TEST(Baseline, ClosedFormOnSyntheticCorpus) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto syn = small_corpus(300, 9, 0.2, seed);
    Manifest man = tiny_manifest({Variant::Baseline});
    man.seed = seed;
    PreparedData d = prepare_data(syn.notes, man);
    Model m(model_config_for(man, Variant::Baseline, d));
    VariantRun run = run_variant(m, d, train_config_for(man));

    const std::size_t C = d.space.size();
    std::vector<std::size_t> train_freq(C, 0), test_freq(C, 0);
    for (const auto& ex : d.train)
      for (std::size_t c = 0; c < C; ++c) train_freq[c] += ex.labels[c];
    for (const auto& ex : d.test)
      for (std::size_t c = 0; c < C; ++c) test_freq[c] += ex.labels[c];
    std::vector<std::size_t> order(C);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return train_freq[a] > train_freq[b]; });
    const double N = static_cast<double>(d.test.size());
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < C; ++i) {
      const double n = static_cast<double>(test_freq[order[i]]);
      if (i < 4) {
        tp += n;
        fp += N - n;
      } else {
        fn += n;
      }
    }
    EXPECT_NEAR(run.test.f1, 2 * tp / (2 * tp + fp + fn), 1e-12);
  }
}

TEST(Train, DeterministicHistoryAndParameters) {
  auto syn = small_corpus(60, 4, 0.2, 5);
  Manifest man = tiny_manifest({Variant::LstmAttention});
  PreparedData d = prepare_data(syn.notes, man);
  Model a(model_config_for(man, Variant::LstmAttention, d)), b(a.config());
  TrainConfig tc = train_config_for(man);
  auto ra = train(a, d.train, d.val, tc);
  auto rb = train(b, d.train, d.val, tc);
  EXPECT_EQ(ra.history, rb.history);
  EXPECT_EQ(a.params(), b.params());
  ASSERT_EQ(ra.history.size(), 2u);
  for (const auto& h : ra.history) EXPECT_TRUE(std::isfinite(h.train_loss));
  EXPECT_EQ(ra.steps, 2 * ((d.train.size() + 7) / 8));
}

TEST(Train, ZeroStepsKeepsInitialParameters) {
  auto syn = small_corpus(40, 3, 0.0, 6);
  Manifest man = tiny_manifest({Variant::Cnn});
  PreparedData d = prepare_data(syn.notes, man);
  Model a(model_config_for(man, Variant::Cnn, d)), init(a.config());
  TrainConfig tc = train_config_for(man);
  tc.max_steps = 0;
  auto r = train(a, d.train, d.val, tc);
  Rng rng = Rng::stream(tc.seed, "init");
  init.initialize(rng);
  EXPECT_EQ(r.steps, 0u);
  EXPECT_TRUE(r.history.empty());
  EXPECT_EQ(a.params(), init.params());
}

TEST(Train, FixedEpochsKeepsFinalParameters) {
  auto syn = small_corpus(40, 3, 0.0, 7);
  Manifest man = tiny_manifest({Variant::Cnn});
  man.epochs = 3;
  PreparedData d = prepare_data(syn.notes, man);
  Model a(model_config_for(man, Variant::Cnn, d)), b(a.config());
  TrainConfig tc = train_config_for(man);
  tc.fixed_epochs = true;
  auto ra = train(a, d.train, d.val, tc);
  EXPECT_EQ(ra.best_epoch, 3u);
  tc.fixed_epochs = false;
  tc.epochs = 3;
  tc.patience = 1;
  auto rb = train(b, d.train, d.val, tc);
  EXPECT_LE(rb.history.size(), 3u);
  EXPECT_GE(rb.best_epoch, 1u);
}

TEST(Train, DivergenceIsReported) {
  auto syn = small_corpus(30, 3, 0.0, 8);
  Manifest man = tiny_manifest({Variant::Cnn});
  PreparedData d = prepare_data(syn.notes, man);
  Model a(model_config_for(man, Variant::Cnn, d));
  TrainConfig tc = train_config_for(man);
  tc.learning_rate = 1e300;
  tc.epochs = 5;
  EXPECT_THROW(train(a, d.train, d.val, tc), TrainingDiverged);
}

TEST(Train, LabelWidthMismatchRejected) {
  auto syn = small_corpus(30, 3, 0.0, 9);
  Manifest man = tiny_manifest({Variant::Cnn});
  PreparedData d = prepare_data(syn.notes, man);
  ModelConfig cfg = model_config_for(man, Variant::Cnn, d);
  cfg.num_classes = 4;
  Model a(cfg);
  EXPECT_THROW(train(a, d.train, d.val, train_config_for(man)), ValidationError);
}

TEST(Train, TestLabelsNeverInfluenceTraining) {
  auto syn = small_corpus(80, 5, 0.2, 10);
  for (LabelMode mode : {LabelMode::Level1Chapters, LabelMode::TopKCodes}) {
    Manifest man = tiny_manifest({Variant::Cnn});
    man.label_mode = mode;
    man.top_k = 4;
    PreparedData d1 = prepare_data(syn.notes, man);
    std::set<std::string> test_ids;
    for (const auto& ex : d1.test) test_ids.insert(ex.note.note_id);

    auto perturbed = syn.notes;
    for (auto& n : perturbed) {
      if (!test_ids.contains(n.note_id)) continue;
      if (mode == LabelMode::TopKCodes) n.codes = {d1.space.classes().back(), "V3000"};
      else n.codes = {"0389", "4280", "V3000"};
      n.text += " canary words only in test.";
    }
    PreparedData d2 = prepare_data(perturbed, man);
    EXPECT_EQ(d1.vocab, d2.vocab);
    EXPECT_EQ(d1.space, d2.space);
    Model a(model_config_for(man, Variant::Cnn, d1)), b(model_config_for(man, Variant::Cnn, d2));
    VariantRun ra = run_variant(a, d1, train_config_for(man));
    VariantRun rb = run_variant(b, d2, train_config_for(man));
    EXPECT_EQ(a.params(), b.params());
    EXPECT_EQ(ra.tau.tau, rb.tau.tau);
  }
}

TEST(Experiment, PrepareDropsUnlabeledAndSplitsFromTrain) {
  auto syn = small_corpus(100, 4, 0.1, 11);
  syn.notes[0].codes = {"V3000"};
  syn.notes[1].codes = {"7982"};
  Manifest man = tiny_manifest({Variant::Baseline});
  std::ostringstream log;
  PreparedData d = prepare_data(syn.notes, man, &log);
  EXPECT_EQ(d.dropped, 2u);
  EXPECT_EQ(d.records(), 98u);
  EXPECT_NE(log.str().find("dropped 2"), std::string::npos);
  for (const Dataset* part : {&d.train, &d.val, &d.test})
    for (const auto& ex : *part) {
      ASSERT_EQ(ex.note.ids.size(), man.max_len);
      ASSERT_EQ(std::count(ex.labels.begin(), ex.labels.end(), 1) > 0, true);
    }
  EXPECT_THROW(prepare_data({}, man), ValidationError);
  man.max_records = 50;
  PreparedData capped = prepare_data(syn.notes, man);
  EXPECT_LE(capped.records(), 50u);
}

TEST(Experiment, ResultsCsvDeterministicWithFailedRow) {
  TempDir dir("exp");
  auto syn = small_corpus(90, 4, 0.2, 12);
  write_text_file(dir / "corpus.jsonl", corpus_to_jsonl(syn.notes));
  nlohmann::json j = {{"data", "corpus.jsonl"},
                      {"variants", {"baseline", "cnn", "lstm_attention", "han"}},
                      {"epochs", 2},
                      {"seed", 3},
                      {"max_len", 40},
                      {"batch_size", 8},
                      {"learning_rate", 0.01},
                      {"model", {{"embedding_dim", 8}, {"cnn_filters_per_window", 6}, {"cnn_window_sizes", {2, 3}},
                                 {"lstm_hidden_dim", 6}, {"attention_dim", 5}}}};
  write_text_file(dir / "manifest.json", j.dump(2));
  Manifest man = Manifest::load(dir / "manifest.json");
  EXPECT_EQ(man.data, dir / "corpus.jsonl");

  auto r1 = run_experiment(man);
  write_experiment(dir / "run1", man, r1);
  auto r2 = run_experiment(man);
  write_experiment(dir / "run2", man, r2);
  const std::string csv1 = detail::read_file(dir / "run1" / "results.csv");
  EXPECT_EQ(csv1, detail::read_file(dir / "run2" / "results.csv"));
  EXPECT_EQ(detail::read_file(dir / "run1" / "history_cnn.csv"), detail::read_file(dir / "run2" / "history_cnn.csv"));
  EXPECT_EQ(csv1.substr(0, csv1.find('\n')), "variant,label_mode,records,epochs,threshold,precision,recall,f1");
  ASSERT_EQ(r1.test_rows.size(), 4u);
  for (const auto& row : r1.test_rows) {
    ASSERT_TRUE(row.metrics.has_value()) << row.error;
    EXPECT_GE(row.metrics->f1, 0.0);
    EXPECT_LE(row.metrics->f1, 1.0);
  }
  EXPECT_EQ(r1.val_rows[1].metrics->partition, "validation");
  EXPECT_FALSE(std::filesystem::exists(dir / "run1" / "history_baseline.csv"));

  // A variant whose configuration cannot be built yields a failed row only.
  Manifest broken = man;
  broken.max_len = 2;
  broken.variants = {Variant::Baseline, Variant::Cnn};
  broken.model["cnn_window_sizes"] = {3};
  auto r3 = run_experiment(broken);
  EXPECT_TRUE(r3.test_rows[0].metrics.has_value());
  EXPECT_FALSE(r3.test_rows[1].metrics.has_value());
  EXPECT_NE(results_csv(r3.test_rows).find("cnn,level1,"), std::string::npos);
  EXPECT_NE(results_csv(r3.test_rows).find(",nan,nan,nan,nan"), std::string::npos);
}

TEST(Experiment, ManifestValidation) {
  EXPECT_THROW(Manifest::from_json({{"variants", {"cnn"}}}), ConfigError);
  EXPECT_THROW(Manifest::from_json({{"data", "x"}, {"variants", nlohmann::json::array()}}), ConfigError);
  EXPECT_THROW(Manifest::from_json({{"data", "x"}, {"variants", {"cnn"}}, {"bogus", 1}}), ConfigError);
  EXPECT_THROW(Manifest::from_json({{"data", "x"}, {"variants", {"cnn"}}, {"split", {{"train", 0.9}}}}), ConfigError);
  EXPECT_THROW(Manifest::from_json({{"data", "x"}, {"variants", {"cnn"}}, {"model", {{"nope", 1}}}}), ConfigError);
  Manifest m = Manifest::from_json({{"data", "/abs/c.jsonl"}, {"variants", {"cnn", "han"}}, {"label_mode", "topk"},
                                    {"top_k", 20}, {"max_records", 5000}, {"excluded_roots", nlohmann::json::array()}},
                                   "/base");
  EXPECT_EQ(m.data, "/abs/c.jsonl");
  EXPECT_EQ(m.label_mode, LabelMode::TopKCodes);
  EXPECT_EQ(*m.max_records, 5000u);
  EXPECT_TRUE(m.excluded_roots.empty());
}

TEST(Experiment, BaselineOnlyIsFast) {
  auto syn = small_corpus(500, 8, 0.3, 13);
  Manifest man = tiny_manifest({Variant::Baseline});
  auto t0 = std::chrono::steady_clock::now();
  auto r = run_experiment(man, prepare_data(syn.notes, man));
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ASSERT_EQ(r.test_rows.size(), 1u);
  EXPECT_TRUE(r.test_rows[0].metrics.has_value());
  EXPECT_LT(secs, 1.0);
}

TEST(History, CsvFormat) {
  EXPECT_EQ(history_csv({{1, 0.5, 0.25}, {2, 0.125, 1.0}}),
            "epoch,train_loss,val_f1\n1,0.50000000,0.250000\n2,0.12500000,1.000000\n");
}

TEST(Synthetic, DeterministicPerSeed) {
  auto a = small_corpus(50, 5, 0.3, 21), b = small_corpus(50, 5, 0.3, 21), c = small_corpus(50, 5, 0.3, 22);
  EXPECT_EQ(corpus_to_jsonl(a.notes), corpus_to_jsonl(b.notes));
  EXPECT_NE(corpus_to_jsonl(a.notes), corpus_to_jsonl(c.notes));
}

TEST(Synthetic, LabelsRecoverableFromKeywords) {
  SyntheticSpec spec;
  spec.num_notes = 300;
  spec.num_classes = 17;
  spec.keywords_per_class = 2;
  spec.cardinality = {0.4, 0.3, 0.2, 0.1};
  spec.noise_fraction = 0.0;
  spec.seed = 5;
  auto syn = generate_synthetic(spec, standard_chapter_table());
  LabelSpace l1 = LabelSpace::level1(standard_chapter_table());
  auto all_codes = parse_corpus_codes(syn.notes);
  for (std::size_t i = 0; i < syn.notes.size(); ++i) {
    auto toks = tokenize(normalize_text(syn.notes[i].text));
    std::set<std::string> present(toks.begin(), toks.end());
    LabelVector inferred(17, 0);
    for (std::size_t c = 0; c < 17; ++c) {
      bool all = true;
      for (const auto& kw : syn.class_keywords[c]) all = all && present.contains(kw);
      inferred[c] = all;
    }
    ASSERT_EQ(inferred, encode_labels(all_codes[i], l1)) << syn.notes[i].text;
  }
}

TEST(Synthetic, CardinalityMatchesSpecChiSquare) {
  SyntheticSpec spec;
  spec.num_notes = 5000;
  spec.num_classes = 8;
  spec.cardinality = {0.5, 0.3, 0.2};
  spec.seed = 77;
  spec.min_length = 10;
  spec.max_length = 20;
  auto syn = generate_synthetic(spec, standard_chapter_table());
  LabelSpace l1 = LabelSpace::level1(standard_chapter_table());
  std::vector<double> observed(3, 0);
  for (const auto& codes : parse_corpus_codes(syn.notes)) {
    auto y = encode_labels(codes, l1);
    ++observed[static_cast<std::size_t>(std::count(y.begin(), y.end(), 1)) - 1];
  }
  double chi2 = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    double expect = 5000 * spec.cardinality[k];
    chi2 += (observed[k] - expect) * (observed[k] - expect) / expect;
  }
  EXPECT_LT(chi2, 13.82);  // chi-square, 2 degrees of freedom, p = 0.001
}

TEST(Synthetic, SpecValidation) {
  SyntheticSpec spec;
  spec.num_classes = 18;
  EXPECT_THROW(generate_synthetic(spec, standard_chapter_table()), ConfigError);
  spec.num_classes = 2;
  spec.cardinality = {0.2, 0.3, 0.5};
  EXPECT_THROW(generate_synthetic(spec, standard_chapter_table()), ConfigError);
  spec = {};
  spec.noise_fraction = 1.5;
  EXPECT_THROW(generate_synthetic(spec, standard_chapter_table()), ConfigError);
}
