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

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "umiclab/corpus.hpp"
#include "umiclab/errors.hpp"
#include "umiclab/negatives.hpp"
#include "umiclab/scorer.hpp"

namespace umiclab {

class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(const std::string& what, std::vector<std::string> bundle_ids)
      : Error(what), bundle_ids_(std::move(bundle_ids)) {}
  const std::vector<std::string>& bundle_ids() const { return bundle_ids_; }

 private:
  std::vector<std::string> bundle_ids_;
};

struct TrainConfig {
  double margin = 0.2;
  int batch_bundles = 32;
  double learning_rate = 1e-4;
  int max_steps = 2000;
  int eval_every = 100;
  std::uint64_t seed = 0;
  int repetitions = 1;

  // Adam.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  // Freeze the embedding block plus this many bottom layers; -1 trains
  // everything.
  int freeze_prefix = -1;
  // Worker threads for gradient and validation passes. Results depend on
  // the thread count only through floating-point summation order.
  int threads = 1;

  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults.
  static TrainConfig from_json(const nlohmann::json& j);
};

// Mean over negatives of max(0, margin - (s_pos - s_neg)). Throws
// InvariantError on an empty negative list.
template <typename Scalar>
Scalar ranking_loss(Scalar s_pos, std::span<const Scalar> s_negs, Scalar margin);

inline double ranking_loss(double s_pos, std::initializer_list<double> s_negs, double margin) {
  return ranking_loss<double>(s_pos, std::span<const double>(s_negs.begin(), s_negs.size()),
                              margin);
}

struct BundleScores {
  double positive = 0.0;
  std::array<double, 4> negatives{};  // indexed like kNegativeTags
};

struct DiscriminationReport {
  double overall = 0.0;
  std::array<double, 4> per_tag{};
  std::size_t pairs = 0;
  std::array<std::size_t, 4> per_tag_pairs{};

  nlohmann::json to_json() const;
};

// Fraction of (positive, negative) pairs with score(positive) >
// score(negative); ties count as failures.
DiscriminationReport discrimination_accuracy(std::span<const BundleScores> scores);

template <typename Scalar>
std::vector<BundleScores> score_bundles(const ScorerModel<Scalar>& model,
                                        std::span<const NegativeBundle> bundles,
                                        const FeatureStore& features, int threads = 1);

template <typename Scalar>
DiscriminationReport discrimination_accuracy(const ScorerModel<Scalar>& model,
                                             std::span<const NegativeBundle> bundles,
                                             const FeatureStore& features, int threads = 1);

template <typename Scalar>
struct LossAndGradient {
  Scalar loss{};
  Vector<Scalar> gradient;
};

// Batch-mean ranking loss and its gradient. Every caption in a bundle,
// negatives included, is scored against the positive's image.
template <typename Scalar>
LossAndGradient<Scalar> batch_loss_and_gradient(const ScorerModel<Scalar>& model,
                                                std::span<const NegativeBundle> bundles,
                                                const FeatureStore& features, Scalar margin,
                                                int threads = 1);

template <typename Scalar>
Scalar batch_loss(const ScorerModel<Scalar>& model, std::span<const NegativeBundle> bundles,
                  const FeatureStore& features, Scalar margin, int threads = 1);

template <typename Scalar>
class AdamOptimizer {
 public:
  AdamOptimizer(Index size, double learning_rate, double beta1, double beta2, double eps);
  void step(Vector<Scalar>& params, const Vector<Scalar>& gradient);
  long steps() const { return t_; }

 private:
  Vector<Scalar> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

// Owns the optimizer state for one model. The model is mutated in place
// and must not be read concurrently with train_step.
template <typename Scalar>
class Trainer {
 public:
  // Unlike TrainConfig::validate, a zero learning rate is accepted here.
  Trainer(ScorerModel<Scalar>& model, const FeatureStore& features, TrainConfig config);

  // One update on the batch-mean loss. Returns the loss before the update.
  // Throws TrainingDivergedError naming the offending bundles when the loss
  // or gradient is not finite.
  Scalar train_step(std::span<const NegativeBundle> batch);

 private:
  ScorerModel<Scalar>& model_;
  const FeatureStore& features_;
  TrainConfig config_;
  AdamOptimizer<Scalar> optimizer_;
};

struct ValidationPoint {
  int step = 0;
  double loss = 0.0;
};

struct TrainReport {
  std::uint64_t seed = 0;
  std::vector<double> step_losses;  // entry i is the loss of step i + 1
  std::vector<ValidationPoint> validation;
  int best_step = 0;
  double best_validation_loss = 0.0;
  std::string best_checkpoint;  // set by callers that persist the model
  DiscriminationReport initial_accuracy;
  DiscriminationReport best_accuracy;
  double wall_seconds = 0.0;

  nlohmann::json to_json() const;
  std::string step_loss_csv() const;
  std::string validation_csv() const;
};

template <typename Scalar>
struct FitResult {
  TrainReport report;
  ScorerModel<Scalar> best_model;
};

// Trains from `initial` for config.max_steps steps, evaluating the
// validation loss at step 0, every eval_every steps and at the last step.
// Returns the model with the lowest validation loss (earliest on ties).
// Train and validation bundles must not share positive image ids.
template <typename Scalar>
FitResult<Scalar> fit(const ScorerModel<Scalar>& initial,
                      std::span<const NegativeBundle> train_bundles,
                      std::span<const NegativeBundle> valid_bundles, const FeatureStore& features,
                      const TrainConfig& config);

struct RepetitionSummary {
  std::vector<TrainReport> runs;
  double mean_accuracy = 0.0;
  double min_accuracy = 0.0;
  double max_accuracy = 0.0;

  nlohmann::json to_json() const;
};

// Runs config.repetitions independent fits with seeds seed, seed+1, ...
// `on_run` receives each finished run (e.g. to save its checkpoint).
template <typename Scalar>
RepetitionSummary fit_repeated(
    const ScorerConfig& scorer_config, std::span<const NegativeBundle> train_bundles,
    std::span<const NegativeBundle> valid_bundles, const FeatureStore& features,
    const TrainConfig& config,
    const std::function<void(int, FitResult<Scalar>&)>& on_run = {});

}  // namespace umiclab
