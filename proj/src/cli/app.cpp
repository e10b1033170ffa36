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

#include <CLI11.hpp>
#include <ostream>

#include "commands.hpp"
#include "common.hpp"
#include "umiclab/cli.hpp"
#include "umiclab/evalstats.hpp"
#include "umiclab/scorer.hpp"
#include "umiclab/trainer.hpp"

namespace umiclab::cli {

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unreferenced image-caption metric toolkit"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.add_option("--seed", common.seed, "Root seed for all randomness")->default_val(0);
  app.add_option("--config", common.config, "JSON config file; flags override its values");
  app.add_option("--jobs", common.jobs, "Worker threads")->default_val(1)->check(CLI::PositiveNumber);
  app.add_option("--out-dir", common.out_dir, "Output directory")->default_val(".");

  SynthOptions synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic captioned-image corpus");
  s->add_option("--images", synth.images)->default_val(synth.images);
  s->add_option("--train-images", synth.train_images)->default_val(synth.train_images);
  s->add_option("--captions-per-image", synth.captions_per_image)->default_val(synth.captions_per_image);
  s->add_option("--regions", synth.regions)->default_val(synth.regions);
  s->add_option("--dim", synth.dim)->default_val(synth.dim);
  s->add_option("--noise", synth.noise)->default_val(synth.noise);
  s->add_option("--fixture-records", synth.fixture_records,
                "Also write judgment and triplet fixtures of this size")
      ->default_val(0);

  GenNegativesOptions gen;
  auto* g = app.add_subcommand("gen-negatives", "Build negative bundles for captions");
  g->add_option("--captions", gen.captions)->required();
  g->add_option("--features", gen.features)->required();
  g->add_option("--lexicon-captions", gen.lexicon_captions,
                "Captions for the POS lexicon (default: --captions)");
  g->add_option("--output", gen.output, "File name inside --out-dir")->default_val(gen.output);

  TrainOptions train;
  auto* t = app.add_subcommand("train", "Train the scorer with the ranking loss");
  t->add_option("--train", train.train)->required();
  t->add_option("--valid", train.valid)->required();
  t->add_option("--features", train.features)->required();
  t->add_option("--max-steps", train.max_steps);
  t->add_option("--learning-rate", train.learning_rate);
  t->add_option("--batch", train.batch, "Bundles per batch");
  t->add_option("--repetitions", train.repetitions);
  t->add_option("--eval-every", train.eval_every);
  t->add_option("--freeze-prefix", train.freeze_prefix);

  ScoreOptions score;
  auto* sc = app.add_subcommand("score", "Score captions with UMIC and baselines");
  sc->add_option("--checkpoint", score.checkpoint);
  sc->add_option("--features", score.features);
  sc->add_option("--captions", score.captions);
  sc->add_option("--references", score.references, "Reference captions, grouped by image_id");
  sc->add_option("--judgments", score.judgments);
  sc->add_option("--triplets", score.triplets);
  sc->add_option("--metrics", score.metrics, "umic, bleu1, bleu4, rouge_l, cider")
      ->delimiter(',')
      ->default_str("umic");
  sc->add_option("--aggregation", score.aggregation)->default_val(score.aggregation);
  sc->add_option("--max-refs", score.max_refs)->default_val(score.max_refs);
  sc->add_option("--output", score.output)->default_val(score.output);

  EvalOptions eval;
  auto* e = app.add_subcommand("eval", "Correlate metric scores with human judgments");
  e->add_option("--judgments", eval.judgments, "NAME=PATH");
  e->add_option("--triplets", eval.triplets, "NAME=PATH");
  e->add_option("--scores", eval.scores, "NAME=PATH");
  e->add_option("--variant", eval.variants, "NAME=tau_b|tau_c");
  e->add_flag("--human", eval.human, "Add the human scores themselves as a metric");
  e->add_flag("--strict-ties", eval.strict_ties, "Count metric ties as misses");

  ReportDistOptions dist;
  auto* d = app.add_subcommand("report-dist", "Histogram normalized human scores");
  d->add_option("--judgments", dist.judgments, "NAME=PATH")->required();
  d->add_option("--bins", dist.bins)->default_val(dist.bins);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (s->parsed()) return cmd_synth(common, synth, out);
    if (g->parsed()) return cmd_gen_negatives(common, gen, out);
    if (t->parsed()) return cmd_train(common, train, out);
    if (sc->parsed()) return cmd_score(common, score, out);
    if (e->parsed()) return cmd_eval(common, eval, out);
    return cmd_report_dist(common, dist, out);
  } catch (const TrainingDivergedError& ex) {
    err << "umiclab: training diverged: " << ex.what() << "\n";
    for (const auto& id : ex.bundle_ids()) err << "  bundle " << id << "\n";
    return kExitRuntime;
  } catch (const InputError& ex) {
    err << "umiclab: " << ex.what() << "\n";
    return kExitInput;
  } catch (const ParseError& ex) {
    err << "umiclab: " << ex.what() << "\n";
    return kExitInput;
  } catch (const DuplicateError& ex) {
    err << "umiclab: " << ex.what() << "\n";
    return kExitInput;
  } catch (const FormatError& ex) {
    err << "umiclab: " << ex.what() << "\n";
    return kExitInput;
  } catch (const IoError& ex) {
    err << "umiclab: " << ex.what() << "\n";
    return kExitInput;
  } catch (const RangeError& ex) {
    err << "umiclab: " << ex.what() << "\n";
    return kExitInput;
  } catch (const CheckpointError& ex) {
    err << "umiclab: " << ex.what() << "\n";
    return kExitInput;
  } catch (const LexiconTooSmallError& ex) {
    err << "umiclab: " << ex.what() << "\n";
    return kExitInput;
  } catch (const std::exception& ex) {
    err << "umiclab: error: " << ex.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace umiclab::cli
