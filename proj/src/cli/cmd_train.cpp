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

#include "commands.hpp"
#include "common.hpp"
#include "umiclab/scorer.hpp"
#include "umiclab/trainer.hpp"
#include "umiclab/vocabulary.hpp"

namespace umiclab::cli {

namespace {

std::vector<NegativeBundle> read_bundles(const std::string& path, const std::string& what) {
  if (path.empty()) throw InputError("--" + what + " is required");
  if (!std::filesystem::exists(path)) throw InputError(what + " bundles '" + path + "' not found");
  auto bundles = load_bundles(path);
  if (bundles.empty()) throw InputError(what + " bundles '" + path + "' are empty");
  return bundles;
}

}  // namespace

int cmd_train(const Common& common, const TrainOptions& opts, std::ostream& out) {
  Run run("train", common.out_dir);
  const json config = load_config(common.config);
  run.input("train", opts.train);
  run.input("valid", opts.valid);
  run.input("features", opts.features);

  const auto train = read_bundles(opts.train, "train");
  const auto valid = read_bundles(opts.valid, "valid");
  const FeatureStore features = read_features(opts.features);
  for (const auto* split : {&train, &valid}) {
    for (const auto& b : *split) {
      if (!features.contains(b.positive.image_id)) {
        throw InputError("no features for image '" + b.positive.image_id + "' (bundle " +
                         b.positive.caption_id + ")");
      }
    }
  }

  ScorerConfig scorer = ScorerConfig::from_json(config.value("scorer", json::object()));
  scorer.feature_dim = static_cast<int>(features.dim());
  if (scorer.vocab.size() <= Vocabulary::kCls + 1) {
    std::vector<Caption> seen;
    for (const auto& b : train) {
      seen.push_back(b.positive);
      for (const auto& n : b.negatives) seen.push_back(n.caption);
    }
    scorer.vocab = build_vocabulary(seen);
  }

  TrainConfig tc = TrainConfig::from_json(config.value("train", json::object()));
  tc.seed = common.seed;
  tc.threads = common.jobs;
  if (opts.max_steps) tc.max_steps = *opts.max_steps;
  if (opts.learning_rate) tc.learning_rate = *opts.learning_rate;
  if (opts.batch) tc.batch_bundles = *opts.batch;
  if (opts.repetitions) tc.repetitions = *opts.repetitions;
  if (opts.eval_every) tc.eval_every = *opts.eval_every;
  if (opts.freeze_prefix) tc.freeze_prefix = *opts.freeze_prefix;
  try {
    scorer.validate();
    tc.validate();
  } catch (const InvariantError& e) {
    throw InputError(e.what());
  }
  json effective_scorer = scorer.to_json();
  effective_scorer.erase("vocab");
  run.config({{"scorer", effective_scorer}, {"train", tc.to_json()}});

  const auto summary = fit_repeated<float>(
      scorer, train, valid, features, tc, [&](int r, FitResult<float>& result) {
        const std::string stem = "seed" + std::to_string(result.report.seed);
        run.seed(result.report.seed);
        const auto ckpt = run.output("checkpoint_" + stem, "model-" + stem + ".umck");
        save_checkpoint(result.best_model, ckpt.string());
        result.report.best_checkpoint = ckpt.string();
        write_text(run.output("report_" + stem, "report-" + stem + ".json"),
                   result.report.to_json().dump(2) + "\n");
        write_text(run.output("steps_" + stem, "loss-" + stem + ".csv"),
                   result.report.step_loss_csv());
        write_text(run.output("valid_" + stem, "valid-" + stem + ".csv"),
                   result.report.validation_csv());
        out << "run " << r << " (seed " << result.report.seed << "): best step "
            << result.report.best_step << ", validation loss "
            << result.report.best_validation_loss << ", accuracy "
            << result.report.best_accuracy.overall << "\n";
      });
  write_text(run.output("summary", "summary.json"), summary.to_json().dump(2) + "\n");
  run.finish();
  return kExitOk;
}

}  // namespace umiclab::cli
