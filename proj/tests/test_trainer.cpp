//
// Copyright 2026 The UMICLab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "umiclab/negatives.hpp"
#include "umiclab/random.hpp"
#include "umiclab/trainer.hpp"
#include "umiclab/vocabulary.hpp"

using namespace umiclab;

namespace {

struct Fixture {
  SyntheticCorpus corpus;
  std::vector<NegativeBundle> train;
  std::vector<NegativeBundle> valid;
  ScorerConfig scorer;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture f;
    f.corpus = umiclab::testing::small_corpus(24, 8, 5);
    auto [train, valid] = split_by_image(f.corpus.captions, 18);
    const auto lex = build_pos_lexicon(train, RuleTagger());
    f.train = make_bundles(train, f.corpus.features, lex, {}, 1);
    f.valid = make_bundles(valid, f.corpus.features, lex, {}, 2);
    f.scorer.layers = 1;
    f.scorer.hidden_dim = 8;
    f.scorer.heads = 2;
    f.scorer.ffn_dim = 16;
    f.scorer.feature_dim = 8;
    f.scorer.max_regions = 8;
    f.scorer.max_tokens = 16;
    f.scorer.vocab = build_vocabulary(train);
    return f;
  }();
  return f;
}

TrainConfig quick_config() {
  TrainConfig c;
  c.learning_rate = 1e-2;
  c.max_steps = 6;
  c.eval_every = 2;
  c.batch_bundles = 8;
  return c;
}

}  // namespace

TEST(RankingLoss, HandExamples) {
  EXPECT_EQ(ranking_loss(0.9, {0.5}, 0.2), 0.0);
  EXPECT_NEAR(ranking_loss(0.6, {0.55}, 0.2), 0.15, 1e-15);
  EXPECT_NEAR(ranking_loss(0.5, {0.5, 0.9}, 0.2), 0.4, 1e-15);
  EXPECT_NEAR(ranking_loss(0.6, {0.5, 0.7, 0.3, 0.3}, 0.2), (0.1 + 0.3) / 4, 1e-15);
}

TEST(RankingLoss, NanPropagates) {
  EXPECT_TRUE(std::isnan(ranking_loss(std::nan(""), {0.5}, 0.2)));
}

TEST(RankingLoss, EmptyNegativesAreRejected) {
  EXPECT_THROW(ranking_loss(0.5, {}, 0.2), InvariantError);
}

TEST(RankingLoss, Properties) {
  Rng rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const double pos = u(rng);
    std::vector<double> negs(4);
    for (auto& n : negs) n = u(rng);
    const double loss = ranking_loss<double>(pos, negs, 0.2);
    EXPECT_GE(loss, 0.0);

    // Shifting every score by the same amount changes nothing.
    const double shift = u(rng) - 0.5;
    std::vector<double> shifted = negs;
    for (auto& n : shifted) n += shift;
    EXPECT_NEAR(ranking_loss<double>(pos + shift, shifted, 0.2), loss, 1e-12);

    // Raising the positive never increases the loss.
    EXPECT_LE(ranking_loss<double>(pos + 0.05, negs, 0.2), loss + 1e-15);

    bool all_clear = true;
    for (double n : negs) all_clear = all_clear && pos - n >= 0.2;
    EXPECT_EQ(loss == 0.0, all_clear);
  }
}

TEST(Trainer, ZeroLearningRateLeavesParametersUnchanged) {
  const auto& f = fixture();
  auto model = init_model<double>(f.scorer, 1);
  const auto before = model.parameters();
  TrainConfig c = quick_config();
  c.learning_rate = 0.0;
  Trainer<double> trainer(model, f.corpus.features, c);
  trainer.train_step(std::span(f.train).first(4));
  EXPECT_EQ(model.parameters(), before);
}

TEST(Trainer, SingleBundleStepReducesItsLoss) {
  const auto& f = fixture();
  auto model = init_model<double>(f.scorer, 2);
  TrainConfig c = quick_config();
  c.learning_rate = 1e-3;
  // Find a bundle with positive loss so the gradient is nonzero.
  for (std::size_t i = 0; i < f.train.size(); ++i) {
    const auto one = std::span(f.train).subspan(i, 1);
    const double before = batch_loss<double>(model, one, f.corpus.features, 0.2);
    if (before <= 0.0) continue;
    Trainer<double> trainer(model, f.corpus.features, c);
    EXPECT_DOUBLE_EQ(trainer.train_step(one), before);
    EXPECT_LT(batch_loss<double>(model, one, f.corpus.features, 0.2), before);
    return;
  }
  FAIL() << "no bundle with positive loss";
}

TEST(Trainer, BatchLossIsMeanOfBundleLosses) {
  const auto& f = fixture();
  const auto model = init_model<double>(f.scorer, 3);
  const auto batch = std::span(f.train).first(10);
  const auto lg = batch_loss_and_gradient<double>(model, batch, f.corpus.features, 0.2);
  double sum = 0.0;
  for (const auto& b : batch) {
    const auto& image = f.corpus.features.at(b.positive.image_id);
    std::vector<double> negs;
    for (const auto& n : b.negatives) negs.push_back(model.score(image, n.caption));
    sum += ranking_loss<double>(model.score(image, b.positive), negs, 0.2);
  }
  EXPECT_NEAR(lg.loss, sum / 10.0, 1e-12);
  EXPECT_NEAR(batch_loss<double>(model, batch, f.corpus.features, 0.2), sum / 10.0, 1e-12);
}

TEST(Trainer, BatchGradientMatchesCentralDifferences) {
  const auto& f = fixture();
  auto model = init_model<double>(f.scorer, 4);
  // Large margin keeps every hinge active, so the loss is smooth.
  const double margin = 5.0;
  const auto batch = std::span(f.train).first(3);
  const auto lg = batch_loss_and_gradient<double>(model, batch, f.corpus.features, margin);
  Vector<double> numeric(model.num_parameters());
  const double h = 1e-5;
  for (Index i = 0; i < model.num_parameters(); ++i) {
    const double keep = model.parameters()(i);
    model.parameters()(i) = keep + h;
    const double up = batch_loss<double>(model, batch, f.corpus.features, margin);
    model.parameters()(i) = keep - h;
    const double down = batch_loss<double>(model, batch, f.corpus.features, margin);
    model.parameters()(i) = keep;
    numeric(i) = (up - down) / (2 * h);
  }
  EXPECT_LT((lg.gradient - numeric).norm() / std::max(lg.gradient.norm(), numeric.norm()), 1e-6);
}

TEST(Trainer, ThreadCountOnlyAffectsRounding) {
  const auto& f = fixture();
  const auto model = init_model<double>(f.scorer, 5);
  const auto batch = std::span(f.train).first(16);
  const auto a = batch_loss_and_gradient<double>(model, batch, f.corpus.features, 0.2, 1);
  const auto b = batch_loss_and_gradient<double>(model, batch, f.corpus.features, 0.2, 4);
  EXPECT_NEAR(a.loss, b.loss, 1e-12);
  EXPECT_LT((a.gradient - b.gradient).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Trainer, FreezingZeroesThePrefixUpdate) {
  const auto& f = fixture();
  auto model = init_model<double>(f.scorer, 6);
  const auto before = model.parameters();
  TrainConfig c = quick_config();
  c.freeze_prefix = 1;
  Trainer<double> trainer(model, f.corpus.features, c);
  trainer.train_step(std::span(f.train).first(8));
  const Index frozen = model.prefix_size(1);
  EXPECT_EQ(model.parameters().head(frozen), before.head(frozen));
  EXPECT_NE(model.parameters().tail(model.num_parameters() - frozen),
            before.tail(model.num_parameters() - frozen));
}

TEST(Trainer, NonFiniteParametersRaiseDivergence) {
  const auto& f = fixture();
  auto model = init_model<double>(f.scorer, 7);
  model.tensor("head.bias")(0, 0) = std::numeric_limits<double>::quiet_NaN();
  Trainer<double> trainer(model, f.corpus.features, quick_config());
  try {
    trainer.train_step(std::span(f.train).first(2));
    FAIL() << "expected divergence";
  } catch (const TrainingDivergedError& e) {
    EXPECT_EQ(e.bundle_ids().size(), 2u);
  }
}

TEST(Adam, FirstStepMovesEachCoordinateByTheLearningRate) {
  AdamOptimizer<double> adam(3, 0.1, 0.9, 0.999, 1e-12);
  Vector<double> p = Vector<double>::Zero(3);
  Vector<double> g(3);
  g << 2.0, -0.5, 1e-3;
  adam.step(p, g);
  EXPECT_NEAR(p(0), -0.1, 1e-9);
  EXPECT_NEAR(p(1), 0.1, 1e-9);
  EXPECT_NEAR(p(2), -0.1, 1e-6);
  EXPECT_EQ(adam.steps(), 1);
}

TEST(Fit, RejectsBadConfigAndOverlappingSplits) {
  const auto& f = fixture();
  const auto model = init_model<double>(f.scorer, 1);
  TrainConfig c = quick_config();
  c.max_steps = 0;
  EXPECT_THROW(fit(model, f.train, f.valid, f.corpus.features, c), InvariantError);
  EXPECT_THROW(fit(model, f.train, f.train, f.corpus.features, quick_config()), InvariantError);
  c = quick_config();
  c.margin = 0;
  EXPECT_THROW(fit(model, f.train, f.valid, f.corpus.features, c), InvariantError);
}

TEST(Fit, OneStepMeansOneUpdate) {
  const auto& f = fixture();
  const auto model = init_model<double>(f.scorer, 1);
  TrainConfig c = quick_config();
  c.max_steps = 1;
  const auto r = fit(model, f.train, f.valid, f.corpus.features, c);
  EXPECT_EQ(r.report.step_losses.size(), 1u);
  ASSERT_EQ(r.report.validation.size(), 2u);
  EXPECT_EQ(r.report.validation[0].step, 0);
  EXPECT_EQ(r.report.validation[1].step, 1);
}

TEST(Fit, BestStepIsTheValidationArgmin) {
  const auto& f = fixture();
  const auto model = init_model<double>(f.scorer, 2);
  TrainConfig c = quick_config();
  c.max_steps = 7;
  const auto r = fit(model, f.train, f.valid, f.corpus.features, c);
  EXPECT_EQ(r.report.step_losses.size(), 7u);
  std::vector<int> steps;
  for (const auto& p : r.report.validation) steps.push_back(p.step);
  EXPECT_EQ(steps, (std::vector<int>{0, 2, 4, 6, 7}));
  auto best = r.report.validation.front();
  for (const auto& p : r.report.validation) {
    if (p.loss < best.loss) best = p;
  }
  EXPECT_EQ(r.report.best_step, best.step);
  EXPECT_EQ(r.report.best_validation_loss, best.loss);
  EXPECT_LE(r.report.best_validation_loss, r.report.validation.front().loss);
  EXPECT_NEAR(batch_loss<double>(r.best_model, f.valid, f.corpus.features, 0.2), best.loss, 1e-12);
}

TEST(Fit, IsDeterministic) {
  const auto& f = fixture();
  const auto model = init_model<float>(f.scorer, 3);
  const auto a = fit(model, f.train, f.valid, f.corpus.features, quick_config());
  const auto b = fit(model, f.train, f.valid, f.corpus.features, quick_config());
  EXPECT_EQ(a.report.step_losses, b.report.step_losses);
  EXPECT_EQ(a.best_model.parameters(), b.best_model.parameters());
}

TEST(FitRepeated, UsesConsecutiveSeeds) {
  const auto& f = fixture();
  TrainConfig c = quick_config();
  c.max_steps = 2;
  c.repetitions = 2;
  c.seed = 10;
  int calls = 0;
  const auto summary = fit_repeated<float>(f.scorer, f.train, f.valid, f.corpus.features, c,
                                           [&](int, FitResult<float>&) { ++calls; });
  EXPECT_EQ(calls, 2);
  ASSERT_EQ(summary.runs.size(), 2u);
  EXPECT_EQ(summary.runs[0].seed, 10u);
  EXPECT_EQ(summary.runs[1].seed, 11u);
  EXPECT_LE(summary.min_accuracy, summary.mean_accuracy);
  EXPECT_GE(summary.max_accuracy, summary.mean_accuracy);
}

TEST(Discrimination, CountsStrictWins) {
  std::vector<BundleScores> scores(2);
  scores[0].positive = 0.9;
  scores[0].negatives = {0.1, 0.2, 0.95, 0.9};
  scores[1].positive = 0.5;
  scores[1].negatives = {0.4, 0.6, 0.3, 0.5};
  const auto r = discrimination_accuracy(scores);
  EXPECT_EQ(r.pairs, 8u);
  EXPECT_DOUBLE_EQ(r.overall, 4.0 / 8.0);
  EXPECT_DOUBLE_EQ(r.per_tag[0], 1.0);
  EXPECT_DOUBLE_EQ(r.per_tag[1], 0.5);
  EXPECT_DOUBLE_EQ(r.per_tag[2], 0.5);
  EXPECT_DOUBLE_EQ(r.per_tag[3], 0.0);
}

TEST(TrainConfigJson, RoundTripsAndKeepsDefaults) {
  TrainConfig c;
  c.learning_rate = 3e-3;
  c.freeze_prefix = 1;
  const auto back = TrainConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(TrainConfig::from_json(nlohmann::json::object()).to_json(), TrainConfig{}.to_json());
}
