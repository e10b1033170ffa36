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
#include "umiclab/random.hpp"
#include "umiclab/synthetic.hpp"

namespace umiclab::cli {

int cmd_synth(const Common& common, const SynthOptions& opts, std::ostream& out) {
  Run run("synth", common.out_dir);
  SyntheticConfig config;
  config.n_images = opts.images;
  config.captions_per_image = opts.captions_per_image;
  config.regions_per_image = opts.regions;
  config.d = opts.dim;
  config.noise = opts.noise;
  if (opts.train_images < 1 || opts.train_images >= opts.images) {
    throw InputError("--train-images must lie in [1, images)");
  }
  run.config({{"images", opts.images},
              {"train_images", opts.train_images},
              {"captions_per_image", opts.captions_per_image},
              {"regions", opts.regions},
              {"dim", opts.dim},
              {"noise", opts.noise},
              {"fixture_records", opts.fixture_records}});
  run.seed(common.seed);

  const auto corpus =
      generate_synthetic_corpus(config, derive_seed(common.seed, "synth.corpus", 0));
  write_image_features(run.output("features", "features.umf").string(), corpus.features);
  write_captions(run.output("captions", "captions.jsonl").string(), corpus.captions);
  const auto [train, valid] =
      split_by_image(corpus.captions, static_cast<std::size_t>(opts.train_images));
  write_captions(run.output("train_captions", "train_captions.jsonl").string(), train);
  write_captions(run.output("valid_captions", "valid_captions.jsonl").string(), valid);

  if (opts.fixture_records > 0) {
    const std::pair<const char*, JudgmentFixtureConfig> presets[] = {
        {"flickr8k", flickr8k_like()}, {"composite", composite_like()},
        {"capeval1k", capeval1k_like()}};
    for (auto [name, preset] : presets) {
      preset.n_records = opts.fixture_records;
      const std::string file = std::string(name) + ".jsonl";
      write_judgments(run.output(name, file).string(),
                      generate_judgment_fixture(preset, derive_seed(common.seed, name, 0), &corpus));
    }
    write_triplets(run.output("pascal50s", "pascal50s.jsonl").string(),
                   generate_triplet_fixture(opts.fixture_records, 5,
                                            derive_seed(common.seed, "pascal50s", 0), &corpus));
  }
  run.finish();
  out << "wrote " << corpus.features.size() << " images and " << corpus.captions.size()
      << " captions to " << common.out_dir << "\n";
  return kExitOk;
}

}  // namespace umiclab::cli
