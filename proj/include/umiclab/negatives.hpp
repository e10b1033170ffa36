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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "umiclab/corpus.hpp"
#include "umiclab/errors.hpp"
#include "umiclab/random.hpp"

namespace umiclab {

enum class PosTag { kNoun, kVerb, kAdj, kOther };

std::string_view to_string(PosTag tag);

using Tagger = std::function<PosTag(std::string_view)>;

// Small context-free tagger: a closed-class word list, a content-word
// dictionary (including the synthetic corpus vocabulary), and suffix rules
// for everything else. Unknown alphabetic words default to NOUN.
class RuleTagger {
 public:
  RuleTagger();
  PosTag operator()(std::string_view word) const;
  void add(std::string word, PosTag tag) { dictionary_[std::move(word)] = tag; }

 private:
  std::unordered_map<std::string, PosTag> dictionary_;
};

class LexiconTooSmallError : public Error {
 public:
  using Error::Error;
};

class NotPermutableError : public Error {
 public:
  using Error::Error;
};

// Content words seen in training captions, grouped by tag. Words appear
// once per tag, in first-seen order.
class PosLexicon {
 public:
  static constexpr std::array<PosTag, 3> kContentTags = {PosTag::kNoun, PosTag::kVerb,
                                                         PosTag::kAdj};

  void add(const std::string& word, PosTag tag);
  const std::vector<std::string>& words(PosTag tag) const;
  // Tag under which `word` is listed, if any.
  std::optional<PosTag> tag_of(const std::string& word) const;
  // Throws LexiconTooSmallError if any content tag has no words.
  void validate() const;

 private:
  std::array<std::vector<std::string>, 3> words_;
  std::unordered_map<std::string, PosTag> index_;
};

PosLexicon build_pos_lexicon(const std::vector<Caption>& captions, const Tagger& tagger);

struct SubstituteOptions {
  double rate = 0.3;
  // Select exactly round(rate * eligible) tokens (at least one) instead of
  // independent per-token draws.
  bool exact_count = false;
};

struct PerturbResult {
  Caption caption;
  bool modified = false;
};

// Replaces selected content words with a different word of the same tag.
// Tokens are eligible when the lexicon lists them and their tag offers an
// alternative. Returns modified=false when nothing was replaced.
PerturbResult substitute_keywords(const Caption& caption, const PosLexicon& lexicon,
                                  const SubstituteOptions& options, Rng& rng);

struct Neighbor {
  std::string image_id;
  double similarity = 0.0;
};

class SimilarityIndex {
 public:
  SimilarityIndex() = default;
  SimilarityIndex(std::size_t k, std::map<std::string, std::vector<Neighbor>> neighbors)
      : k_(k), neighbors_(std::move(neighbors)) {}

  std::size_t k() const { return k_; }
  std::size_t size() const { return neighbors_.size(); }
  // Empty for unknown images.
  const std::vector<Neighbor>& neighbors(const std::string& image_id) const;

  nlohmann::json to_json() const;
  static SimilarityIndex from_json(const nlohmann::json& j);

 private:
  std::size_t k_ = 0;
  std::map<std::string, std::vector<Neighbor>> neighbors_;
};

// Cosine similarity between mean-pooled region features; ties broken by
// ascending image_id. Throws InvariantError on fewer than two images.
SimilarityIndex build_similarity_index(const FeatureStore& store, std::size_t k = 3);

// Captions grouped by image for O(1) "any caption but the target's" draws.
class CaptionPool {
 public:
  explicit CaptionPool(std::vector<Caption> captions);

  std::size_t size() const { return captions_.size(); }
  const std::vector<Caption>& captions() const { return captions_; }
  // [begin, end) into captions() for one image; empty range when absent.
  std::pair<std::size_t, std::size_t> range(const std::string& image_id) const;
  std::size_t image_count() const { return ranges_.size(); }

 private:
  std::vector<Caption> captions_;
  std::map<std::string, std::pair<std::size_t, std::size_t>> ranges_;
};

struct RandomDraw {
  Caption caption;
  bool hard = false;       // drawn from a neighbor image
  bool fell_back = false;  // hard branch chosen but neighbors had no captions
};

// With probability hard_prob a uniform caption of the target's nearest
// neighbors, otherwise a uniform caption of any other image. Throws
// InvariantError when only the target image has captions.
RandomDraw sample_random_caption(const CaptionPool& pool, const std::string& target_image_id,
                                 const SimilarityIndex& index, double hard_prob, Rng& rng);

// Each token is selected with probability `rate`; a selected token is
// duplicated in place or deleted with equal probability. At least one
// token always remains.
Caption repeat_or_remove(const Caption& caption, double rate, Rng& rng);

// Uniform non-identity permutation of the tokens. Throws NotPermutableError
// for single-token captions.
Caption permute_words(const Caption& caption, Rng& rng);

enum class NegativeTag { kSubstitute, kRandom, kRepeatRemove, kPermute };

std::string_view to_string(NegativeTag tag);
NegativeTag negative_tag_from_string(std::string_view name);

inline constexpr std::array<NegativeTag, 4> kNegativeTags = {
    NegativeTag::kSubstitute, NegativeTag::kRandom, NegativeTag::kRepeatRemove,
    NegativeTag::kPermute};

struct Negative {
  NegativeTag tag = NegativeTag::kSubstitute;
  Caption caption;
  // The strategy kept producing the positive, so a random caption was used.
  bool fallback = false;
};

struct NegativeBundle {
  Caption positive;
  std::array<Negative, 4> negatives;  // indexed like kNegativeTags
  std::uint64_t seed = 0;
  bool hard_random = false;
  bool random_fell_back = false;
};

struct BundleConfig {
  SubstituteOptions substitute;
  double hard_prob = 0.5;
  double repeat_remove_rate = 0.3;
  int max_retries = 5;
};

// One negative per strategy, each textually different from the positive.
// A strategy that fails to change the caption is retried up to
// max_retries times, then replaced by a random caption (flagged). Throws
// InvariantError if no different caption can be found at all.
NegativeBundle make_negative_bundle(const Caption& caption, const PosLexicon& lexicon,
                                    const CaptionPool& pool, const SimilarityIndex& index,
                                    const BundleConfig& config, std::uint64_t seed);

// One bundle per caption, in input order; bundle i is seeded with
// derive_seed(seed, "negatives.bundle", i). Random negatives come from
// these captions only, and the similarity index (built here unless
// given) covers only their images. Throws InvariantError when an image
// has no features.
std::vector<NegativeBundle> make_bundles(const std::vector<Caption>& captions,
                                         const FeatureStore& features, const PosLexicon& lexicon,
                                         const BundleConfig& config, std::uint64_t seed,
                                         const SimilarityIndex* index = nullptr, int threads = 1);

// Image ids of the captions, ascending and distinct.
std::vector<std::string> image_ids_of(const std::vector<Caption>& captions);

nlohmann::json to_json(const NegativeBundle& bundle);
NegativeBundle bundle_from_json(const nlohmann::json& j);

void write_bundles(const std::string& path, const std::vector<NegativeBundle>& bundles);
std::vector<NegativeBundle> load_bundles(const std::string& path);

}  // namespace umiclab
