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

#include <cstdint>
#include <string>
#include <vector>

#include "umiclab/corpus.hpp"

namespace umiclab {

// Desk-scale stand-in for a captioned image collection. Every image holds a
// few objects, each with a color, and one action. Region vectors are noisy
// sums of fixed random embeddings of those concepts; captions are template
// sentences naming the same concepts, so image and text are associated by
// construction.
struct SyntheticConfig {
  int n_images = 250;
  int n_objects_vocab = 24;
  int regions_per_image = 4;
  int d = 64;
  int captions_per_image = 5;
  double noise = 0.1;
};

struct SyntheticCorpus {
  FeatureStore features;
  std::vector<Caption> captions;
  // Concepts used for each image, in image order: object nouns, their
  // colors, and the action verb.
  struct Scene {
    std::string image_id;
    std::vector<std::string> objects;
    std::vector<std::string> colors;
    std::string action;
  };
  std::vector<Scene> scenes;
};

// Throws InvariantError on non-positive counts or a vocabulary larger than
// the built-in word list.
SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& config, std::uint64_t seed);

// Word lists behind the synthetic captions.
const std::vector<std::string>& synthetic_objects();
const std::vector<std::string>& synthetic_colors();
const std::vector<std::string>& synthetic_actions();

// Splits a corpus by image: the first `n_train` images (ascending id) go to
// the first half of the result.
std::pair<std::vector<Caption>, std::vector<Caption>> split_by_image(
    const std::vector<Caption>& captions, std::size_t n_train);

enum class ScoreShape {
  kRetrievalSkewed,  // mostly low scores (retrieved, not generated, captions)
  kPolarized,        // mass near both ends (single annotator)
  kSpread,           // averaged annotators over generated captions
  kUniform,          // continuous, uniform over the scale
};

struct JudgmentFixtureConfig {
  int n_records = 1000;
  int raters = 1;
  Scale scale{1.0, 5.0};
  ScoreShape shape = ScoreShape::kSpread;
  int references = 5;
};

// Benchmark-shaped presets.
JudgmentFixtureConfig flickr8k_like();   // 3 expert raters, 1..4, skewed low
JudgmentFixtureConfig composite_like();  // 1 rater, 1..5, polarized
JudgmentFixtureConfig capeval1k_like();  // 5 raters, 1..5, spread

// With `images`, record i describes scene i mod N of that corpus, so the
// corpus features cover every fixture image, and the candidate matches its
// scene with probability equal to the record's latent quality. Without it,
// fixture images are fresh ids with no features.
std::vector<JudgmentRecord> generate_judgment_fixture(const JudgmentFixtureConfig& config,
                                                      std::uint64_t seed,
                                                      const SyntheticCorpus* images = nullptr);

// The human choice always falls on the candidate describing the image.
std::vector<TripletRecord> generate_triplet_fixture(int n_records, int references,
                                                    std::uint64_t seed,
                                                    const SyntheticCorpus* images = nullptr);

}  // namespace umiclab
