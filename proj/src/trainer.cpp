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

#include "umiclab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "umiclab/parallel.hpp"
#include "umiclab/random.hpp"

namespace umiclab {

void TrainConfig::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw InvariantError(std::string("train config: ") + what);
  };
  require(margin > 0.0, "margin must be > 0");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(max_steps >= 1, "max_steps must be >= 1");
  require(batch_bundles >= 1, "batch_bundles must be >= 1");
  require(eval_every >= 1, "eval_every must be >= 1");
  require(repetitions >= 1, "repetitions must be >= 1");
  require(threads >= 1, "threads must be >= 1");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "Adam betas in [0, 1)");
  require(adam_eps > 0.0, "adam_eps must be > 0");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"margin", margin},
          {"batch_bundles", batch_bundles},
          {"learning_rate", learning_rate},
          {"max_steps", max_steps},
          {"eval_every", eval_every},
          {"seed", seed},
          {"repetitions", repetitions},
          {"beta1", beta1},
          {"beta2", beta2},
          {"adam_eps", adam_eps},
          {"freeze_prefix", freeze_prefix},
          {"threads", threads}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.margin = j.value("margin", c.margin);
  c.batch_bundles = j.value("batch_bundles", c.batch_bundles);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.seed = j.value("seed", c.seed);
  c.repetitions = j.value("repetitions", c.repetitions);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.freeze_prefix = j.value("freeze_prefix", c.freeze_prefix);
  c.threads = j.value("threads", c.threads);
  return c;
}

template <typename Scalar>
Scalar ranking_loss(Scalar s_pos, std::span<const Scalar> s_negs, Scalar margin) {
  if (s_negs.empty()) throw InvariantError("ranking loss needs at least one negative");
  Scalar total = 0;
  for (Scalar s_neg : s_negs) {
    const Scalar hinge = margin - (s_pos - s_neg);
    // A NaN hinge must propagate; max() would silently clamp it to 0.
    total += std::isnan(hinge) ? hinge : std::max(Scalar(0), hinge);
  }
  return total / static_cast<Scalar>(s_negs.size());
}

nlohmann::json DiscriminationReport::to_json() const {
  nlohmann::json per = nlohmann::json::object();
  for (std::size_t t = 0; t < kNegativeTags.size(); ++t) {
    per[std::string(to_string(kNegativeTags[t]))] = per_tag[t];
  }
  return {{"overall", overall}, {"per_tag", per}, {"pairs", pairs}};
}

DiscriminationReport discrimination_accuracy(std::span<const BundleScores> scores) {
  if (scores.empty()) throw InvariantError("discrimination accuracy needs at least one bundle");
  DiscriminationReport report;
  std::array<std::size_t, 4> wins{};
  for (const auto& s : scores) {
    for (std::size_t t = 0; t < 4; ++t) {
      ++report.per_tag_pairs[t];
      if (s.positive > s.negatives[t]) ++wins[t];
    }
  }
  std::size_t total_wins = 0;
  for (std::size_t t = 0; t < 4; ++t) {
    report.per_tag[t] =
        static_cast<double>(wins[t]) / static_cast<double>(report.per_tag_pairs[t]);
    total_wins += wins[t];
    report.pairs += report.per_tag_pairs[t];
  }
  report.overall = static_cast<double>(total_wins) / static_cast<double>(report.pairs);
  return report;
}

namespace {


std::size_t worker_count(std::size_t n, int threads) {
  return std::max<std::size_t>(
      1, std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n));
}

template <typename Scalar>
const Caption& bundle_caption(const NegativeBundle& b, std::size_t k) {
  return k == 0 ? b.positive : b.negatives[k - 1].caption;
}

}  // namespace

template <typename Scalar>
std::vector<BundleScores> score_bundles(const ScorerModel<Scalar>& model,
                                        std::span<const NegativeBundle> bundles,
                                        const FeatureStore& features, int threads) {
  std::vector<BundleScores> out(bundles.size());
  parallel_chunks(bundles.size(), threads, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& b = bundles[i];
      const ImageFeatures& image = features.at(b.positive.image_id);
      out[i].positive = static_cast<double>(model.score(image, b.positive));
      for (std::size_t t = 0; t < 4; ++t) {
        out[i].negatives[t] = static_cast<double>(model.score(image, b.negatives[t].caption));
      }
    }
  });
  return out;
}

template <typename Scalar>
DiscriminationReport discrimination_accuracy(const ScorerModel<Scalar>& model,
                                             std::span<const NegativeBundle> bundles,
                                             const FeatureStore& features, int threads) {
  const auto scores = score_bundles(model, bundles, features, threads);
  return discrimination_accuracy(std::span<const BundleScores>(scores));
}

template <typename Scalar>
LossAndGradient<Scalar> batch_loss_and_gradient(const ScorerModel<Scalar>& model,
                                                std::span<const NegativeBundle> bundles,
                                                const FeatureStore& features, Scalar margin,
                                                int threads) {
  if (bundles.empty()) throw InvariantError("empty training batch");
  const std::size_t workers = worker_count(bundles.size(), threads);
  std::vector<Vector<Scalar>> grads(workers);
  std::vector<Scalar> losses(bundles.size(), Scalar(0));
  const Scalar inv_batch = Scalar(1) / static_cast<Scalar>(bundles.size());
  const Scalar inv_negs = Scalar(1) / Scalar(4);

  parallel_chunks(bundles.size(), threads, [&](std::size_t begin, std::size_t end,
                                               std::size_t w) {
    Vector<Scalar>& grad = grads[w];
    grad = Vector<Scalar>::Zero(model.num_parameters());
    std::array<ForwardCache<Scalar>, 5> caches;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& b = bundles[i];
      const ImageFeatures& image = features.at(b.positive.image_id);
      for (std::size_t k = 0; k < 5; ++k) {
        model.forward(model.make_input(image, bundle_caption<Scalar>(b, k)), caches[k]);
      }
      const Scalar s_pos = caches[0].score;
      std::array<Scalar, 5> dscore{};
      Scalar loss = 0;
      for (std::size_t k = 1; k < 5; ++k) {
        const Scalar hinge = margin - (s_pos - caches[k].score);
        if (hinge > Scalar(0)) {
          loss += hinge;
          dscore[0] -= inv_negs * inv_batch;
          dscore[k] += inv_negs * inv_batch;
        }
      }
      losses[i] = loss * inv_negs;
      for (const auto& c : caches) {
        if (!std::isfinite(static_cast<double>(c.score))) {
          losses[i] = std::numeric_limits<Scalar>::quiet_NaN();
        }
      }
      if (!std::isfinite(static_cast<double>(losses[i]))) continue;
      for (std::size_t k = 0; k < 5; ++k) {
        if (dscore[k] == Scalar(0)) continue;
        const Scalar s = caches[k].score;
        model.backward(caches[k], dscore[k] * s * (Scalar(1) - s), grad);
      }
    }
  });

  std::vector<std::string> bad;
  LossAndGradient<Scalar> result;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    if (!std::isfinite(static_cast<double>(losses[i]))) bad.push_back(bundles[i].positive.caption_id);
    result.loss += losses[i];
  }
  if (!bad.empty()) {
    throw TrainingDivergedError("non-finite loss in " + std::to_string(bad.size()) + " bundle(s)",
                                std::move(bad));
  }
  result.loss *= inv_batch;
  result.gradient = std::move(grads[0]);
  for (std::size_t w = 1; w < workers; ++w) result.gradient += grads[w];
  return result;
}

template <typename Scalar>
Scalar batch_loss(const ScorerModel<Scalar>& model, std::span<const NegativeBundle> bundles,
                  const FeatureStore& features, Scalar margin, int threads) {
  if (bundles.empty()) throw InvariantError("empty bundle set");
  const auto scores = score_bundles(model, bundles, features, threads);
  Scalar total = 0;
  for (const auto& s : scores) {
    std::array<Scalar, 4> negs;
    for (std::size_t t = 0; t < 4; ++t) negs[t] = static_cast<Scalar>(s.negatives[t]);
    total += ranking_loss<Scalar>(static_cast<Scalar>(s.positive), negs, margin);
  }
  return total / static_cast<Scalar>(bundles.size());
}

template <typename Scalar>
AdamOptimizer<Scalar>::AdamOptimizer(Index size, double learning_rate, double beta1,
                                     double beta2, double eps)
    : m_(Vector<Scalar>::Zero(size)),
      v_(Vector<Scalar>::Zero(size)),
      lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {}

template <typename Scalar>
void AdamOptimizer<Scalar>::step(Vector<Scalar>& params, const Vector<Scalar>& gradient) {
  ++t_;
  const auto b1 = static_cast<Scalar>(beta1_);
  const auto b2 = static_cast<Scalar>(beta2_);
  m_ = b1 * m_ + (Scalar(1) - b1) * gradient;
  v_ = b2 * v_ + (Scalar(1) - b2) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const auto step_size = static_cast<Scalar>(lr_ * std::sqrt(c2) / c1);
  const auto eps = static_cast<Scalar>(eps_ * std::sqrt(c2));
  params.array() -= step_size * m_.array() / (v_.array().sqrt() + eps);
}

template <typename Scalar>
Trainer<Scalar>::Trainer(ScorerModel<Scalar>& model, const FeatureStore& features,
                         TrainConfig config)
    : model_(model),
      features_(features),
      config_(config),
      optimizer_(model.num_parameters(), config.learning_rate, config.beta1, config.beta2,
                 config.adam_eps) {
  if (!(config_.learning_rate >= 0.0)) {
    throw InvariantError("train config: learning_rate must be >= 0");
  }
}

template <typename Scalar>
Scalar Trainer<Scalar>::train_step(std::span<const NegativeBundle> batch) {
  auto [loss, gradient] = batch_loss_and_gradient<Scalar>(
      model_, batch, features_, static_cast<Scalar>(config_.margin), config_.threads);
  if (!gradient.allFinite()) {
    std::vector<std::string> ids;
    for (const auto& b : batch) ids.push_back(b.positive.caption_id);
    throw TrainingDivergedError("non-finite gradient", std::move(ids));
  }
  if (config_.freeze_prefix >= 0) {
    gradient.head(model_.prefix_size(config_.freeze_prefix)).setZero();
  }
  optimizer_.step(model_.parameters(), gradient);
  return loss;
}

nlohmann::json TrainReport::to_json() const {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : validation) curve.push_back({{"step", p.step}, {"loss", p.loss}});
  return {{"seed", seed},
          {"steps", step_losses.size()},
          {"step_losses", step_losses},
          {"validation", curve},
          {"best_step", best_step},
          {"best_validation_loss", best_validation_loss},
          {"best_checkpoint", best_checkpoint},
          {"initial_accuracy", initial_accuracy.to_json()},
          {"best_accuracy", best_accuracy.to_json()},
          {"wall_seconds", wall_seconds}};
}

std::string TrainReport::step_loss_csv() const {
  std::ostringstream out;
  out.precision(9);
  out << "step,loss\n";
  for (std::size_t i = 0; i < step_losses.size(); ++i) out << i + 1 << ',' << step_losses[i] << '\n';
  return out.str();
}

std::string TrainReport::validation_csv() const {
  std::ostringstream out;
  out.precision(9);
  out << "step,loss\n";
  for (const auto& p : validation) out << p.step << ',' << p.loss << '\n';
  return out.str();
}

template <typename Scalar>
FitResult<Scalar> fit(const ScorerModel<Scalar>& initial,
                      std::span<const NegativeBundle> train_bundles,
                      std::span<const NegativeBundle> valid_bundles, const FeatureStore& features,
                      const TrainConfig& config) {
  config.validate();
  if (train_bundles.empty() || valid_bundles.empty()) {
    throw InvariantError("fit needs nonempty train and validation bundles");
  }
  std::set<std::string> train_images;
  for (const auto& b : train_bundles) train_images.insert(b.positive.image_id);
  for (const auto& b : valid_bundles) {
    if (train_images.count(b.positive.image_id)) {
      throw InvariantError("image '" + b.positive.image_id +
                           "' appears in both train and validation bundles");
    }
  }

  const auto started = std::chrono::steady_clock::now();
  const auto margin = static_cast<Scalar>(config.margin);
  ScorerModel<Scalar> model = initial;
  Trainer<Scalar> trainer(model, features, config);

  FitResult<Scalar> result{TrainReport{}, model};
  TrainReport& report = result.report;
  report.seed = config.seed;
  report.initial_accuracy = discrimination_accuracy(model, valid_bundles, features, config.threads);

  const auto evaluate = [&](int step) {
    const double loss =
        static_cast<double>(batch_loss(model, valid_bundles, features, margin, config.threads));
    report.validation.push_back({step, loss});
    if (report.validation.size() == 1 || loss < report.best_validation_loss) {
      report.best_validation_loss = loss;
      report.best_step = step;
      result.best_model = model;
    }
  };
  evaluate(0);

  std::vector<std::size_t> order(train_bundles.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch_size =
      std::min<std::size_t>(static_cast<std::size_t>(config.batch_bundles), order.size());
  std::size_t cursor = order.size();
  std::uint64_t epoch = 0;
  std::vector<NegativeBundle> batch;
  batch.reserve(batch_size);
  for (int step = 1; step <= config.max_steps; ++step) {
    if (cursor + batch_size > order.size()) {
      Rng rng = make_rng(config.seed, "trainer.shuffle", epoch++);
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    batch.clear();
    for (std::size_t k = 0; k < batch_size; ++k) batch.push_back(train_bundles[order[cursor + k]]);
    cursor += batch_size;
    report.step_losses.push_back(static_cast<double>(trainer.train_step(batch)));
    if (step % config.eval_every == 0 || step == config.max_steps) evaluate(step);
  }

  report.best_accuracy =
      discrimination_accuracy(result.best_model, valid_bundles, features, config.threads);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

nlohmann::json RepetitionSummary::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& r : runs) list.push_back(r.to_json());
  return {{"runs", list},
          {"mean_accuracy", mean_accuracy},
          {"min_accuracy", min_accuracy},
          {"max_accuracy", max_accuracy}};
}

template <typename Scalar>
RepetitionSummary fit_repeated(const ScorerConfig& scorer_config,
                               std::span<const NegativeBundle> train_bundles,
                               std::span<const NegativeBundle> valid_bundles,
                               const FeatureStore& features, const TrainConfig& config,
                               const std::function<void(int, FitResult<Scalar>&)>& on_run) {
  config.validate();
  RepetitionSummary summary;
  for (int r = 0; r < config.repetitions; ++r) {
    TrainConfig run_config = config;
    run_config.seed = config.seed + static_cast<std::uint64_t>(r);
    const auto initial = init_model<Scalar>(scorer_config, run_config.seed);
    FitResult<Scalar> run = fit(initial, train_bundles, valid_bundles, features, run_config);
    if (on_run) on_run(r, run);
    summary.runs.push_back(run.report);
  }
  double sum = 0.0;
  summary.min_accuracy = 1.0;
  summary.max_accuracy = 0.0;
  for (const auto& run : summary.runs) {
    const double acc = run.best_accuracy.overall;
    sum += acc;
    summary.min_accuracy = std::min(summary.min_accuracy, acc);
    summary.max_accuracy = std::max(summary.max_accuracy, acc);
  }
  summary.mean_accuracy = sum / static_cast<double>(summary.runs.size());
  return summary;
}

#define UMICLAB_INSTANTIATE_TRAINER(S)                                                          \
  template S ranking_loss<S>(S, std::span<const S>, S);                                         \
  template std::vector<BundleScores> score_bundles<S>(                                          \
      const ScorerModel<S>&, std::span<const NegativeBundle>, const FeatureStore&, int);        \
  template DiscriminationReport discrimination_accuracy<S>(                                     \
      const ScorerModel<S>&, std::span<const NegativeBundle>, const FeatureStore&, int);        \
  template LossAndGradient<S> batch_loss_and_gradient<S>(                                       \
      const ScorerModel<S>&, std::span<const NegativeBundle>, const FeatureStore&, S, int);     \
  template S batch_loss<S>(const ScorerModel<S>&, std::span<const NegativeBundle>,              \
                           const FeatureStore&, S, int);                                        \
  template class AdamOptimizer<S>;                                                              \
  template class Trainer<S>;                                                                    \
  template FitResult<S> fit<S>(const ScorerModel<S>&, std::span<const NegativeBundle>,          \
                               std::span<const NegativeBundle>, const FeatureStore&,            \
                               const TrainConfig&);                                             \
  template RepetitionSummary fit_repeated<S>(                                                   \
      const ScorerConfig&, std::span<const NegativeBundle>, std::span<const NegativeBundle>,    \
      const FeatureStore&, const TrainConfig&, const std::function<void(int, FitResult<S>&)>&);

UMICLAB_INSTANTIATE_TRAINER(float)
UMICLAB_INSTANTIATE_TRAINER(double)

#undef UMICLAB_INSTANTIATE_TRAINER

}  // namespace umiclab
