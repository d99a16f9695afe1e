#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "pda/report.hpp"
#include "pda/trainer.hpp"

namespace pda {
namespace {

template <class T>
concept ExposesTargetLabels = requires(T t) { t.target_labels; } || requires(T t) { t.target_y; };
static_assert(!ExposesTargetLabels<TrainingView>, "the training view must not carry target labels");
static_assert(ExposesTargetLabels<PdaDataset>);

PdaDataset small_dataset(std::size_t shared = 3, double shift = 2.0) {
  return generate_synthetic_pda(
      {.classes = 6, .shared = shared, .dim = 8, .per_class = 40, .shift = shift, .seed = 4});
}

TrainConfig small_config(TrainMode mode, std::uint64_t seed = 1) {
  TrainConfig cfg;
  cfg.iterations = 100;
  cfg.interval = 10;
  cfg.batch = 12;
  cfg.mode = mode;
  cfg.seed = seed;
  cfg.feature_widths = {16, 8};
  cfg.discriminator_hidden = 8;
  return cfg;
}

ObjectiveBatch small_batch(const TrainingView& v) {
  ObjectiveBatch b;
  const std::vector<std::size_t> s{0, 45, 90, 130, 170, 210}, t{0, 50, 100, 119}, a{7, 200};
  b.source_x = v.source_x.gather_rows(s);
  for (std::size_t i : s) b.source_y.push_back(v.source_y[i]);
  b.target_x = v.target_x.gather_rows(t);
  b.augment_x = v.source_x.gather_rows(a);
  for (std::size_t i : a) b.augment_y.push_back(v.source_y[i]);
  return b;
}

TEST(Config, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.iterations = 2001;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.rho0 = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.batch = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_EQ(parse_mode("baa"), TrainMode::kBaa);
  EXPECT_STREQ(mode_name(TrainMode::kSourceOnly), "source-only");
  EXPECT_THROW(parse_mode("dann"), std::invalid_argument);
  EXPECT_EQ(default_beta(10), 5.0);
  EXPECT_EQ(default_beta(65), 1.0);
}

TEST(Config, ModeTermResolution) {
  TrainConfig cfg;
  cfg.mode = TrainMode::kSourceOnly;
  const ResolvedTerms so = resolve_terms(cfg, 10);
  EXPECT_EQ(so.alpha, 0.0);
  EXPECT_EQ(so.beta, 0.0);
  EXPECT_EQ(so.rho0, 0.0);
  EXPECT_FALSE(so.adversarial);
  EXPECT_FALSE(so.update_class_weights);
  cfg.mode = TrainMode::kEdann;
  EXPECT_EQ(resolve_terms(cfg, 10).beta, 0.0);
  EXPECT_EQ(resolve_terms(cfg, 10).rho0, 0.0);
  cfg.mode = TrainMode::kBaa;
  EXPECT_EQ(resolve_terms(cfg, 10).rho0, 0.25);
  EXPECT_EQ(resolve_terms(cfg, 10).beta, 0.0);
  cfg.mode = TrainMode::kFull;
  EXPECT_EQ(resolve_terms(cfg, 10).beta, 5.0);
}

TEST(Train, EdannEqualsFullWithoutNewTerms) {
  const PdaDataset ds = small_dataset();
  const TrainConfig edann = small_config(TrainMode::kEdann, 3);
  TrainConfig full = small_config(TrainMode::kFull, 3);
  full.beta = 0.0;
  full.rho0 = 0.0;
  const AccuracyProbe probe = accuracy_probe(ds);
  const TrainResult a = train(ds.view, edann, probe);
  const TrainResult b = train(ds.view, full, probe);
  ASSERT_EQ(a.record.intervals.size(), 10u);
  EXPECT_EQ(intervals_jsonl(a.record), intervals_jsonl(b.record));
  EXPECT_EQ(a.final_model, b.final_model);
  EXPECT_EQ(a.checkpoints, b.checkpoints);
}

TEST(Train, SameSeedIsBitIdentical) {
  const PdaDataset ds = small_dataset();
  const TrainConfig cfg = small_config(TrainMode::kFull, 9);
  const TrainResult a = train(ds.view, cfg);
  const TrainResult b = train(ds.view, cfg);
  EXPECT_EQ(intervals_jsonl(a.record), intervals_jsonl(b.record));
  EXPECT_EQ(a.final_model, b.final_model);
  const TrainResult c = train(ds.view, small_config(TrainMode::kFull, 10));
  EXPECT_NE(a.final_model, c.final_model);
}

TEST(Train, ParallelBatchMatchesSequentialRuns) {
  const PdaDataset ds = small_dataset();
  std::vector<TrainConfig> configs;
  for (TrainMode mode : {TrainMode::kSourceOnly, TrainMode::kBaa, TrainMode::kFull}) {
    for (std::uint64_t seed : {1u, 2u}) configs.push_back(small_config(mode, seed));
  }
  const auto many = train_many(ds.view, configs);
  ASSERT_EQ(many.size(), configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const TrainResult one = train(ds.view, configs[i]);
    EXPECT_EQ(one.final_model, many[i].final_model) << i;
    EXPECT_EQ(intervals_jsonl(one.record), intervals_jsonl(many[i].record)) << i;
  }
}

TEST(Train, ParallelBatchPropagatesErrors) {
  const PdaDataset ds = small_dataset();
  std::vector<TrainConfig> configs{small_config(TrainMode::kFull), small_config(TrainMode::kFull)};
  configs[1].iterations = 15;
  EXPECT_THROW(train_many(ds.view, configs), std::invalid_argument);
}

TEST(Train, SingleIntervalUpdatesWeightsOnceAtTheEnd) {
  const PdaDataset ds = small_dataset();
  TrainConfig cfg = small_config(TrainMode::kFull);
  cfg.iterations = 30;
  cfg.interval = 30;
  const TrainResult r = train(ds.view, cfg);
  ASSERT_EQ(r.record.intervals.size(), 1u);
  EXPECT_EQ(r.record.intervals[0].iteration, 30u);
  EXPECT_EQ(r.record.intervals[0].rho, 0.25);
  EXPECT_EQ(r.record.best_interval, 0u);
  EXPECT_EQ(r.selected_model, r.final_model);
  EXPECT_EQ(r.final_model.step_count, 30u);
}

TEST(Train, RecordsFollowSchedules) {
  const PdaDataset ds = small_dataset();
  TrainConfig cfg = small_config(TrainMode::kFull);
  cfg.batch = 36;
  const TrainResult r = train(ds.view, cfg, accuracy_probe(ds));
  ASSERT_EQ(r.record.intervals.size(), 10u);
  for (std::size_t k = 0; k < 10; ++k) {
    const IntervalRecord& rec = r.record.intervals[k];
    EXPECT_EQ(rec.iteration, (k + 1) * 10);
    EXPECT_DOUBLE_EQ(rec.rho, 0.25 * (1.0 - k / 10.0));
    EXPECT_EQ(rec.augment_count, (9 * (10 - k)) / 10);
    EXPECT_DOUBLE_EQ(rec.lr, lr_schedule(static_cast<double>(rec.iteration - 1) / 100.0));
    EXPECT_DOUBLE_EQ(rec.lambda, lambda_schedule(static_cast<double>(rec.iteration - 1) / 100.0));
    ASSERT_TRUE(rec.accuracy.has_value());
    EXPECT_GE(*rec.accuracy, 0.0);
    EXPECT_LE(*rec.accuracy, 1.0);
    EXPECT_EQ(*std::max_element(rec.class_weights.begin(), rec.class_weights.end()), 1.0);
    EXPECT_LE(rec.losses.wce, 0.0);
  }
}

TEST(Train, SelectionPicksMinimalTargetEntropy) {
  const PdaDataset ds = small_dataset();
  const TrainResult r = train(ds.view, small_config(TrainMode::kFull, 5));
  const auto& iv = r.record.intervals;
  for (const auto& rec : iv) EXPECT_LE(iv[r.record.best_interval].target_entropy, rec.target_entropy);
  for (std::size_t i = 0; i < r.record.best_interval; ++i) {
    EXPECT_GT(iv[i].target_entropy, iv[r.record.best_interval].target_entropy);
  }
  EXPECT_EQ(r.selected_model, r.checkpoints[r.record.best_interval]);
  EXPECT_EQ(r.final_model, r.checkpoints.back());
  EXPECT_DOUBLE_EQ(conditional_entropy_loss(classify(r.selected_model, ds.view.target_x)),
                   iv[r.record.best_interval].target_entropy);
}

TEST(Train, SourceOnlyKeepsUniformWeightsAndNoReversal) {
  const PdaDataset ds = small_dataset();
  const TrainResult r = train(ds.view, small_config(TrainMode::kSourceOnly));
  for (const auto& rec : r.record.intervals) {
    EXPECT_EQ(rec.class_weights, std::vector<double>(6, 1.0));
    EXPECT_EQ(rec.lambda, 0.0);
    EXPECT_EQ(rec.rho, 0.0);
    EXPECT_EQ(rec.augment_count, 0u);
  }
}

TEST(Train, NoProbeMeansNoAccuracy) {
  const PdaDataset ds = small_dataset();
  const TrainResult r = train(ds.view, small_config(TrainMode::kEdann));
  for (const auto& rec : r.record.intervals) EXPECT_FALSE(rec.accuracy.has_value());
}

TEST(Train, DivergenceIsReported) {
  const PdaDataset ds = small_dataset();
  TrainingView view = ds.view;
  view.source_x.fill(std::nan(""));
  try {
    train(view, small_config(TrainMode::kFull));
    FAIL() << "expected TrainingDiverged";
  } catch (const TrainingDiverged& e) {
    EXPECT_NE(std::string(e.what()).find("iteration 1"), std::string::npos) << e.what();
  }
}

TEST(Train, ClosedSetKeepsAllClassWeightsHigh) {
  const PdaDataset ds = generate_synthetic_pda({.shared = 10});
  TrainConfig cfg;
  cfg.mode = TrainMode::kFull;
  const TrainResult r = train(standardize(ds.view), cfg);
  const auto& m = r.record.intervals.back().class_weights;
  EXPECT_GT(*std::min_element(m.begin(), m.end()), 0.5);
}

TEST(Objective, ZeroLambdaCutsAdversaryFromFeatures) {
  const PdaDataset ds = small_dataset();
  const ObjectiveBatch batch = small_batch(ds.view);
  auto model_with_d = [&](std::uint64_t d_seed) {
    ModelState m = init_model({{8, 16, 8}, HiddenActivation::kRelu, OutputActivation::kNone},
                              {{8, 6}, HiddenActivation::kRelu, OutputActivation::kSoftmax},
                              {{8, 8, 1}, HiddenActivation::kRelu, OutputActivation::kSigmoid}, 1);
    m.discriminator = init_model(m.feature.spec, m.classifier.spec, m.discriminator.spec, d_seed).discriminator;
    return m;
  };
  ObjectiveSettings s;
  s.lambda = 0.0;
  s.beta = 5.0;
  const ClassWeights m = ClassWeights::uniform(6);
  ObjectiveGraph a = build_objective(model_with_d(1), batch, m, s);
  ObjectiveGraph b = build_objective(model_with_d(2), batch, m, s);
  a.graph.forward();
  b.graph.forward();
  const GradientMap ga = a.graph.backward(), gb = b.graph.backward();
  for (const auto& [name, grad] : ga) {
    if (name[0] == 'F' || name[0] == 'G') {
      EXPECT_EQ(grad, gb.at(name)) << name;
    }
  }
  double d_norm = 0.0;
  for (const auto& [name, grad] : ga) {
    if (name[0] == 'D') {
      for (double v : grad.flat()) d_norm += v * v;
    }
  }
  EXPECT_GT(d_norm, 0.0);
  EXPECT_NE(a.graph.value(a.adv).item(), b.graph.value(b.adv).item());

  s.lambda = 0.5;
  ObjectiveGraph c = build_objective(model_with_d(1), batch, m, s);
  ObjectiveGraph e = build_objective(model_with_d(2), batch, m, s);
  c.graph.forward();
  e.graph.forward();
  EXPECT_NE(c.graph.backward().at("F.0.weight"), e.graph.backward().at("F.0.weight"));
}

TEST(Objective, DiscriminatorAscendsWhileFeaturesDescendAdversary) {
  const PdaDataset ds = small_dataset();
  const ObjectiveBatch batch = small_batch(ds.view);
  const ModelState model = init_model({{8, 16, 8}, HiddenActivation::kRelu, OutputActivation::kNone},
                                      {{8, 6}, HiddenActivation::kRelu, OutputActivation::kSoftmax},
                                      {{8, 8, 1}, HiddenActivation::kRelu, OutputActivation::kSigmoid}, 3);
  ObjectiveSettings s;
  s.lambda = 0.6;
  const ClassWeights m = ClassWeights::uniform(6);
  ObjectiveGraph og = build_objective(model, batch, m, s);
  og.graph.forward();
  const double before = og.graph.value(og.adv).item();
  const ModelState next = sgd_step(model, og.graph.backward(), {1e-4, 0.0, 1.0});
  ModelState d_only = model;
  d_only.discriminator = next.discriminator;
  ObjectiveGraph after = build_objective(d_only, batch, m, s);
  after.graph.forward();
  EXPECT_GE(after.graph.value(after.adv).item(), before);
}

TEST(Evaluate, TieBreakAndPerfectClassifier) {
  PdaDataset ds = generate_synthetic_pda({.classes = 5, .shared = 5, .dim = 5, .per_class = 20});
  ModelState model = init_model({{5, 4}, HiddenActivation::kRelu, OutputActivation::kNone},
                                {{4, 5}, HiddenActivation::kRelu, OutputActivation::kSoftmax},
                                {{4, 1}, HiddenActivation::kRelu, OutputActivation::kSigmoid}, 1);
  for (auto& l : model.classifier.layers) {
    l.weight.fill(0.0);
    l.bias.fill(0.0);
  }
  EXPECT_DOUBLE_EQ(evaluate(model, ds), 0.2);
  ds.target_labels.reset();
  EXPECT_THROW(evaluate(model, ds), std::invalid_argument);
}

TEST(GradCheck, RandomSmallModelsPass) {
  const GradCheckConfig cfg;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (std::size_t classes : {3u, 6u}) {
      const GradCheckReport r = grad_check(cfg, seed, classes);
      EXPECT_TRUE(r.passed()) << "seed " << seed << " C=" << classes << " worst " << r.worst().name << " "
                              << r.worst().max_rel_error;
      EXPECT_GE(r.terms.size(), 5u);
    }
  }
  EXPECT_THROW(grad_check(cfg, 1, 2), std::invalid_argument);
}

TEST(GradCheck, RelativeErrorDefinition) {
  EXPECT_EQ(relative_error(Tensor2(2, 2), Tensor2(2, 2)), 0.0);
  EXPECT_DOUBLE_EQ(relative_error(Tensor2::from_rows({{3.0, 4.0}}), Tensor2::from_rows({{0.0, 0.0}})), 1.0);
  EXPECT_THROW(relative_error(Tensor2(1, 2), Tensor2(2, 1)), std::invalid_argument);
}

TEST(Ablation, ZeroGapModesAgree) {
  const PdaDataset ds = generate_synthetic_pda({.shift = 0.0});
  PdaDataset z = ds;
  z.view = standardize(ds.view);
  const AblationTable t = ablation_suite(z, TrainConfig{}, {1});
  double lo = 1.0, hi = 0.0;
  for (const auto& row : t.rows) {
    lo = std::min(lo, row.mean);
    hi = std::max(hi, row.mean);
  }
  EXPECT_LE(hi - lo, 0.05);
  EXPECT_EQ(t.rows.size(), 4u);
}

TEST(Ablation, Statistics) {
  EXPECT_DOUBLE_EQ(mean_of({1.0, 2.0, 6.0}), 3.0);
  EXPECT_DOUBLE_EQ(sample_stddev({1.0, 2.0, 6.0}), std::sqrt(7.0));
  EXPECT_EQ(sample_stddev({4.0}), 0.0);
}

}  // namespace
}  // namespace pda
