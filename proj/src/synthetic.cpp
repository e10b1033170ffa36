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

#include "umiclab/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "umiclab/errors.hpp"
#include "umiclab/random.hpp"

namespace umiclab {

const std::vector<std::string>& synthetic_objects() {
  static const std::vector<std::string> words = {
      "dog",   "cat",      "ball",  "car",   "horse",   "bird",     "man",     "woman",
      "child", "bike",     "boat",  "tree",  "bench",   "train",    "truck",   "sheep",
      "cow",   "kite",     "table", "chair", "bus",     "frisbee",  "surfboard", "elephant",
      "giraffe", "zebra",  "bear",  "pizza", "clock",   "umbrella", "skateboard", "laptop",
      "cake",  "donut",    "vase",  "bottle", "lamp",   "boy",      "girl",    "duck"};
  return words;
}

const std::vector<std::string>& synthetic_colors() {
  static const std::vector<std::string> words = {"red",   "blue",   "green",  "yellow",
                                                 "black", "white",  "brown",  "orange",
                                                 "purple", "gray",  "pink",   "golden"};
  return words;
}

const std::vector<std::string>& synthetic_actions() {
  static const std::vector<std::string> words = {"running", "sitting",  "jumping", "sleeping",
                                                 "eating",  "standing", "walking", "playing",
                                                 "swimming", "resting", "waiting", "rolling"};
  return words;
}

namespace {

using Scene = SyntheticCorpus::Scene;

std::string image_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "img%05d", i);
  return buf;
}

// Template sentences; k selects the template, `swap` the object order.
std::string scene_sentence(const Scene& s, int k, bool swap) {
  if (s.objects.size() == 1) {
    const std::string& o = s.objects[0];
    const std::string& c = s.colors[0];
    const std::string& v = s.action;
    switch (k % 5) {
      case 0: return "a " + c + " " + o + " is " + v + " .";
      case 1: return "there is a " + c + " " + o + " " + v + " here .";
      case 2: return "the " + o + " is " + v + " .";
      case 3: return "a " + o + " that is " + c + " is " + v + " .";
      default: return "one " + c + " " + o + " " + v + " alone .";
    }
  }
  const std::size_t a = swap ? 1 : 0;
  const std::size_t b = 1 - a;
  const std::string& o1 = s.objects[a];
  const std::string& c1 = s.colors[a];
  const std::string& o2 = s.objects[b];
  const std::string& c2 = s.colors[b];
  const std::string& v = s.action;
  switch (k % 5) {
    case 0: return "a " + c1 + " " + o1 + " is " + v + " near a " + c2 + " " + o2 + " .";
    case 1: return "there is a " + c1 + " " + o1 + " " + v + " next to a " + c2 + " " + o2 + " .";
    case 2: return "a " + c2 + " " + o2 + " and a " + c1 + " " + o1 + " " + v + " together .";
    case 3: return "the " + o1 + " is " + v + " beside the " + o2 + " .";
    default: return "a " + c1 + " " + o1 + " " + v + " with the " + c2 + " " + o2 + " .";
  }
}

Scene random_scene(const std::string& image_id, int n_objects_vocab, int n_obj, Rng& rng) {
  Scene s;
  s.image_id = image_id;
  std::vector<int> ids(static_cast<std::size_t>(n_objects_vocab));
  std::iota(ids.begin(), ids.end(), 0);
  std::uniform_int_distribution<int> color(0, static_cast<int>(synthetic_colors().size()) - 1);
  std::uniform_int_distribution<int> action(0, static_cast<int>(synthetic_actions().size()) - 1);
  for (int j = 0; j < n_obj; ++j) {
    std::uniform_int_distribution<int> pick(j, n_objects_vocab - 1);
    std::swap(ids[static_cast<std::size_t>(j)], ids[static_cast<std::size_t>(pick(rng))]);
    s.objects.push_back(synthetic_objects()[static_cast<std::size_t>(ids[static_cast<std::size_t>(j)])]);
    s.colors.push_back(synthetic_colors()[static_cast<std::size_t>(color(rng))]);
  }
  s.action = synthetic_actions()[static_cast<std::size_t>(action(rng))];
  return s;
}

std::vector<std::string> scene_captions(const Scene& s, int count, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  std::vector<std::string> out;
  for (int k = 0; k < count; ++k) out.push_back(scene_sentence(s, k, coin(rng)));
  return out;
}

Eigen::VectorXf random_embedding(int d, Rng& rng) {
  std::normal_distribution<float> normal(0.0f, 1.0f / std::sqrt(static_cast<float>(d)));
  Eigen::VectorXf v(d);
  for (int i = 0; i < d; ++i) v(i) = normal(rng);
  return v;
}

void random_box(Rng& rng, float* box) {
  std::uniform_real_distribution<float> start(0.0f, 0.6f);
  std::uniform_real_distribution<float> extent(0.1f, 0.4f);
  const float x1 = start(rng);
  const float y1 = start(rng);
  box[0] = x1;
  box[1] = y1;
  box[2] = std::min(1.0f, x1 + extent(rng));
  box[3] = std::min(1.0f, y1 + extent(rng));
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(const SyntheticConfig& config, std::uint64_t seed) {
  if (config.n_images < 1 || config.n_objects_vocab < 1 || config.regions_per_image < 1 ||
      config.d < 1 || config.captions_per_image < 1) {
    throw InvariantError("synthetic corpus counts must all be >= 1");
  }
  if (config.n_objects_vocab > static_cast<int>(synthetic_objects().size())) {
    throw InvariantError("n_objects_vocab exceeds the built-in object list (" +
                         std::to_string(synthetic_objects().size()) + ")");
  }
  if (!(config.noise >= 0.0)) throw InvariantError("noise must be >= 0");

  Rng embed_rng = make_rng(seed, "synthetic.embeddings");
  std::map<std::string, Eigen::VectorXf> embedding;
  for (int i = 0; i < config.n_objects_vocab; ++i) {
    embedding[synthetic_objects()[static_cast<std::size_t>(i)]] =
        random_embedding(config.d, embed_rng);
  }
  for (const auto& w : synthetic_colors()) embedding[w] = random_embedding(config.d, embed_rng);
  for (const auto& w : synthetic_actions()) embedding[w] = random_embedding(config.d, embed_rng);

  const int n_obj = std::min(config.n_objects_vocab, config.regions_per_image >= 3 ? 2 : 1);
  const bool action_region = config.regions_per_image >= 2;

  SyntheticCorpus corpus;
  corpus.features = FeatureStore(config.d);
  std::normal_distribution<float> noise(
      0.0f, static_cast<float>(config.noise) / std::sqrt(static_cast<float>(config.d)));
  for (int i = 0; i < config.n_images; ++i) {
    Rng rng = make_rng(seed, "synthetic.image", static_cast<std::uint64_t>(i));
    Scene scene = random_scene(image_name(i), config.n_objects_vocab, n_obj, rng);

    std::vector<Eigen::VectorXf> rows;
    for (int j = 0; j < n_obj; ++j) {
      rows.push_back(embedding[scene.objects[static_cast<std::size_t>(j)]] +
                     embedding[scene.colors[static_cast<std::size_t>(j)]]);
    }
    if (action_region) rows.push_back(embedding[scene.action]);
    while (static_cast<int>(rows.size()) < config.regions_per_image) {
      rows.push_back(random_embedding(config.d, rng));
    }
    std::shuffle(rows.begin(), rows.end(), rng);

    ImageFeatures f;
    f.image_id = scene.image_id;
    f.regions.resize(config.regions_per_image, config.d);
    f.boxes.resize(config.regions_per_image, 4);
    for (int r = 0; r < config.regions_per_image; ++r) {
      for (int c = 0; c < config.d; ++c) {
        f.regions(r, c) = rows[static_cast<std::size_t>(r)](c) + noise(rng);
      }
      random_box(rng, f.boxes.row(r).data());
    }
    corpus.features.insert(std::move(f));

    const auto texts = scene_captions(scene, config.captions_per_image, rng);
    for (std::size_t k = 0; k < texts.size(); ++k) {
      corpus.captions.push_back(
          make_caption(scene.image_id + "-c" + std::to_string(k), scene.image_id, texts[k]));
    }
    corpus.scenes.push_back(std::move(scene));
  }
  return corpus;
}

std::pair<std::vector<Caption>, std::vector<Caption>> split_by_image(
    const std::vector<Caption>& captions, std::size_t n_train) {
  std::vector<std::string> ids;
  for (const auto& c : captions) ids.push_back(c.image_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const std::size_t cut = std::min(n_train, ids.size());
  std::pair<std::vector<Caption>, std::vector<Caption>> out;
  for (const auto& c : captions) {
    const auto pos = static_cast<std::size_t>(
        std::lower_bound(ids.begin(), ids.end(), c.image_id) - ids.begin());
    (pos < cut ? out.first : out.second).push_back(c);
  }
  return out;
}

JudgmentFixtureConfig flickr8k_like() {
  return {1000, 3, Scale{1.0, 4.0}, ScoreShape::kRetrievalSkewed, 5};
}

JudgmentFixtureConfig composite_like() {
  return {1000, 1, Scale{1.0, 5.0}, ScoreShape::kPolarized, 5};
}

JudgmentFixtureConfig capeval1k_like() {
  return {1000, 5, Scale{1.0, 5.0}, ScoreShape::kSpread, 5};
}

namespace {

double draw_rating(ScoreShape shape, Scale scale, double latent, Rng& rng) {
  const int lo = static_cast<int>(std::ceil(scale.min));
  const int hi = static_cast<int>(std::floor(scale.max));
  switch (shape) {
    case ScoreShape::kUniform:
      return std::uniform_real_distribution<double>(scale.min, scale.max)(rng);
    case ScoreShape::kPolarized: {
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      if (u < 0.45) return lo;
      if (u < 0.9) return hi;
      return std::uniform_int_distribution<int>(lo, hi)(rng);
    }
    case ScoreShape::kRetrievalSkewed: {
      std::discrete_distribution<int> level({70.0, 15.0, 10.0, 5.0});
      return std::min(hi, lo + level(rng));
    }
    case ScoreShape::kSpread:
    default: {
      const double centre = scale.min + latent * (scale.max - scale.min);
      const double r = std::round(centre + std::normal_distribution<double>(0.0, 0.7)(rng));
      return std::clamp(r, static_cast<double>(lo), static_cast<double>(hi));
    }
  }
}

}  // namespace

namespace {

const Scene& other_scene(const SyntheticCorpus& images, std::size_t self, Rng& rng) {
  const std::size_t n = images.scenes.size();
  const std::size_t step = std::uniform_int_distribution<std::size_t>(1, n - 1)(rng);
  return images.scenes[(self + step) % n];
}

void check_fixture_corpus(const SyntheticCorpus* images) {
  if (images && images->scenes.size() < 2) {
    throw InvariantError("fixture corpus needs at least two images");
  }
}

}  // namespace

std::vector<JudgmentRecord> generate_judgment_fixture(const JudgmentFixtureConfig& config,
                                                      std::uint64_t seed,
                                                      const SyntheticCorpus* images) {
  if (config.n_records < 0 || config.raters < 1 || config.references < 0) {
    throw InvariantError("invalid judgment fixture config");
  }
  check_fixture_corpus(images);
  std::vector<JudgmentRecord> records;
  records.reserve(static_cast<std::size_t>(config.n_records));
  for (int i = 0; i < config.n_records; ++i) {
    Rng rng = make_rng(seed, "fixture.judgment", static_cast<std::uint64_t>(i));
    const std::string id = "fx" + image_name(i);
    std::string image_id = id;
    std::vector<std::string> texts;
    double latent = 0.0;
    if (images) {
      const std::size_t k = static_cast<std::size_t>(i) % images->scenes.size();
      const Scene& scene = images->scenes[k];
      image_id = scene.image_id;
      latent = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      texts = scene_captions(scene, config.references, rng);
      const bool matches = std::bernoulli_distribution(latent)(rng);
      texts.push_back(scene_captions(matches ? scene : other_scene(*images, k, rng), 1, rng).front());
    } else {
      const Scene scene = random_scene(image_id, 24, 2, rng);
      texts = scene_captions(scene, config.references + 1, rng);
    }

    JudgmentRecord record;
    record.image_id = image_id;
    record.candidate = make_caption(id + "-cand", image_id, texts.back());
    for (int r = 0; r < config.references; ++r) {
      record.references.push_back(make_caption(id + "-ref" + std::to_string(r), image_id,
                                               texts[static_cast<std::size_t>(r)]));
    }
    record.scale = config.scale;
    if (!images) latent = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (int r = 0; r < config.raters; ++r) {
      record.raw_scores.push_back(draw_rating(config.shape, config.scale, latent, rng));
    }
    finalize_judgment(record);
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<TripletRecord> generate_triplet_fixture(int n_records, int references,
                                                    std::uint64_t seed,
                                                    const SyntheticCorpus* images) {
  if (n_records < 0 || references < 1) throw InvariantError("invalid triplet fixture config");
  check_fixture_corpus(images);
  std::vector<TripletRecord> records;
  for (int i = 0; i < n_records; ++i) {
    Rng rng = make_rng(seed, "fixture.triplet", static_cast<std::uint64_t>(i));
    const std::string id = "tx" + image_name(i);
    std::string image_id = id;
    std::vector<std::string> texts, wrong;
    if (images) {
      const std::size_t k = static_cast<std::size_t>(i) % images->scenes.size();
      image_id = images->scenes[k].image_id;
      texts = scene_captions(images->scenes[k], references + 1, rng);
      wrong = scene_captions(other_scene(*images, k, rng), 1, rng);
    } else {
      const Scene scene = random_scene(image_id, 24, 2, rng);
      const Scene other = random_scene(image_id, 24, 2, rng);
      texts = scene_captions(scene, references + 1, rng);
      wrong = scene_captions(other, 1, rng);
    }

    TripletRecord record;
    record.image_id = image_id;
    for (int r = 0; r < references; ++r) {
      record.references_a.push_back(make_caption(id + "-ref" + std::to_string(r), image_id,
                                                 texts[static_cast<std::size_t>(r)]));
    }
    const bool good_is_b = std::bernoulli_distribution(0.5)(rng);
    Caption good = make_caption(id + (good_is_b ? "-B" : "-C"), image_id, texts.back());
    Caption bad = make_caption(id + (good_is_b ? "-C" : "-B"), image_id, wrong.front());
    record.candidate_b = good_is_b ? good : bad;
    record.candidate_c = good_is_b ? bad : good;
    record.human_choice = good_is_b ? Choice::B : Choice::C;
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace umiclab
