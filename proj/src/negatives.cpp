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

#include "umiclab/negatives.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <set>

#include "umiclab/json_io.hpp"
#include "umiclab/parallel.hpp"
#include "umiclab/random.hpp"
#include "umiclab/synthetic.hpp"

namespace umiclab {

std::string_view to_string(PosTag tag) {
  switch (tag) {
    case PosTag::kNoun: return "NOUN";
    case PosTag::kVerb: return "VERB";
    case PosTag::kAdj: return "ADJ";
    default: return "OTHER";
  }
}

RuleTagger::RuleTagger() {
  static const char* const closed[] = {
      "a",    "an",    "the",   "is",    "are",   "was",   "were",  "be",     "been",
      "am",   "of",    "in",    "on",    "at",    "to",    "with",  "near",   "next",
      "beside", "and", "or",    "but",   "there", "here",  "that",  "this",   "these",
      "those", "it",   "its",   "his",   "her",   "their", "they",  "he",     "she",
      "one",  "two",   "three", "four",  "together", "alone", "by", "for",   "from",
      "under", "over", "while", "some",  "into",  "onto",  "up",    "down",   "out",
      "off",  "as",    "has",   "have",  "while", "very",  "other", "another", "each"};
  for (const char* w : closed) dictionary_[w] = PosTag::kOther;
  for (const auto& w : synthetic_objects()) dictionary_[w] = PosTag::kNoun;
  for (const auto& w : synthetic_colors()) dictionary_[w] = PosTag::kAdj;
  for (const auto& w : synthetic_actions()) dictionary_[w] = PosTag::kVerb;
  static const char* const adjectives[] = {"big",   "small", "large", "little", "young",
                                           "old",   "tall",  "short", "long",   "wooden",
                                           "empty", "busy",  "dark",  "bright", "happy"};
  for (const char* w : adjectives) dictionary_[w] = PosTag::kAdj;
  static const char* const verbs[] = {"sits", "runs", "stands", "rides", "holds", "eats",
                                      "plays", "walks", "looks", "flies", "sat",   "ran"};
  for (const char* w : verbs) dictionary_[w] = PosTag::kVerb;
}

PosTag RuleTagger::operator()(std::string_view word) const {
  if (const auto it = dictionary_.find(std::string(word)); it != dictionary_.end()) {
    return it->second;
  }
  const bool alphabetic = !word.empty() && std::all_of(word.begin(), word.end(), [](char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80;
  });
  if (!alphabetic) return PosTag::kOther;
  if (word.size() > 4 && word.ends_with("ing")) return PosTag::kVerb;
  if (word.size() > 4 && word.ends_with("ed")) return PosTag::kVerb;
  return PosTag::kNoun;
}

namespace {

std::size_t slot(PosTag tag) {
  switch (tag) {
    case PosTag::kNoun: return 0;
    case PosTag::kVerb: return 1;
    case PosTag::kAdj: return 2;
    default: throw InvariantError("only content tags are stored in a lexicon");
  }
}

}  // namespace

void PosLexicon::add(const std::string& word, PosTag tag) {
  if (tag == PosTag::kOther) return;
  if (index_.count(word)) return;
  index_.emplace(word, tag);
  words_[slot(tag)].push_back(word);
}

const std::vector<std::string>& PosLexicon::words(PosTag tag) const { return words_[slot(tag)]; }

std::optional<PosTag> PosLexicon::tag_of(const std::string& word) const {
  const auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void PosLexicon::validate() const {
  for (PosTag tag : kContentTags) {
    if (words(tag).empty()) {
      throw LexiconTooSmallError("POS lexicon has no " + std::string(to_string(tag)) + " words");
    }
  }
}

PosLexicon build_pos_lexicon(const std::vector<Caption>& captions, const Tagger& tagger) {
  if (captions.empty()) throw LexiconTooSmallError("cannot build a lexicon from no captions");
  PosLexicon lexicon;
  for (const auto& caption : captions) {
    for (const auto& token : caption.tokens) lexicon.add(token, tagger(token));
  }
  lexicon.validate();
  return lexicon;
}

PerturbResult substitute_keywords(const Caption& caption, const PosLexicon& lexicon,
                                  const SubstituteOptions& options, Rng& rng) {
  if (!(options.rate >= 0.0 && options.rate <= 1.0)) {
    throw RangeError("substitution rate must lie in [0, 1]");
  }
  std::vector<std::size_t> eligible;
  std::vector<PosTag> tags;
  for (std::size_t i = 0; i < caption.tokens.size(); ++i) {
    const auto tag = lexicon.tag_of(caption.tokens[i]);
    if (tag && lexicon.words(*tag).size() >= 2) {
      eligible.push_back(i);
      tags.push_back(*tag);
    }
  }

  std::vector<bool> selected(eligible.size(), false);
  if (options.exact_count) {
    if (!eligible.empty()) {
      auto count = static_cast<std::size_t>(
          std::lround(options.rate * static_cast<double>(eligible.size())));
      if (options.rate > 0.0) count = std::max<std::size_t>(count, 1);
      std::vector<std::size_t> order(eligible.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t k = 0; k < std::min(count, order.size()); ++k) selected[order[k]] = true;
    }
  } else {
    std::bernoulli_distribution pick(options.rate);
    for (std::size_t k = 0; k < eligible.size(); ++k) selected[k] = pick(rng);
  }

  auto tokens = caption.tokens;
  bool modified = false;
  for (std::size_t k = 0; k < eligible.size(); ++k) {
    if (!selected[k]) continue;
    const auto& pool = lexicon.words(tags[k]);
    const std::string& original = tokens[eligible[k]];
    // Draw from the pool minus the original word.
    const auto own = static_cast<std::size_t>(
        std::find(pool.begin(), pool.end(), original) - pool.begin());
    std::uniform_int_distribution<std::size_t> draw(0, pool.size() - 2);
    std::size_t choice = draw(rng);
    if (choice >= own) ++choice;
    tokens[eligible[k]] = pool[choice];
    modified = true;
  }
  return {make_caption(caption.caption_id, caption.image_id, std::move(tokens)), modified};
}

const std::vector<Neighbor>& SimilarityIndex::neighbors(const std::string& image_id) const {
  static const std::vector<Neighbor> empty;
  const auto it = neighbors_.find(image_id);
  return it == neighbors_.end() ? empty : it->second;
}

nlohmann::json SimilarityIndex::to_json() const {
  nlohmann::json j;
  j["k"] = k_;
  auto& entries = j["neighbors"] = nlohmann::json::object();
  for (const auto& [id, list] : neighbors_) {
    auto arr = nlohmann::json::array();
    for (const auto& n : list) arr.push_back({n.image_id, n.similarity});
    entries[id] = std::move(arr);
  }
  return j;
}

SimilarityIndex SimilarityIndex::from_json(const nlohmann::json& j) {
  std::map<std::string, std::vector<Neighbor>> neighbors;
  for (const auto& [id, arr] : j.at("neighbors").items()) {
    auto& list = neighbors[id];
    for (const auto& n : arr) list.push_back({n.at(0).get<std::string>(), n.at(1).get<double>()});
  }
  return SimilarityIndex(j.at("k").get<std::size_t>(), std::move(neighbors));
}

SimilarityIndex build_similarity_index(const FeatureStore& store, std::size_t k) {
  if (store.size() < 2) {
    throw InvariantError("similarity index needs at least two images");
  }
  std::vector<std::string> ids;
  Eigen::MatrixXd pooled(static_cast<Index>(store.size()), store.dim());
  for (const auto& [id, f] : store) {
    const auto row = static_cast<Index>(ids.size());
    pooled.row(row) = f.regions.cast<double>().colwise().mean();
    const double norm = pooled.row(row).norm();
    if (norm > 0.0) pooled.row(row) /= norm;
    ids.push_back(id);
  }
  const Eigen::MatrixXd cosine = pooled * pooled.transpose();
  const std::size_t keep = std::min(k, ids.size() - 1);

  std::map<std::string, std::vector<Neighbor>> neighbors;
  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    order.clear();
    for (std::size_t j = 0; j < ids.size(); ++j) {
      if (j != i) order.push_back(j);
    }
    // ids are already ascending, so a stable sort by similarity breaks
    // ties by id.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return cosine(static_cast<Index>(i), static_cast<Index>(a)) >
             cosine(static_cast<Index>(i), static_cast<Index>(b));
    });
    auto& list = neighbors[ids[i]];
    for (std::size_t r = 0; r < keep; ++r) {
      list.push_back({ids[order[r]], cosine(static_cast<Index>(i), static_cast<Index>(order[r]))});
    }
  }
  return SimilarityIndex(k, std::move(neighbors));
}

CaptionPool::CaptionPool(std::vector<Caption> captions) : captions_(std::move(captions)) {
  std::stable_sort(captions_.begin(), captions_.end(),
                   [](const Caption& a, const Caption& b) { return a.image_id < b.image_id; });
  for (std::size_t i = 0; i < captions_.size();) {
    std::size_t j = i;
    while (j < captions_.size() && captions_[j].image_id == captions_[i].image_id) ++j;
    ranges_[captions_[i].image_id] = {i, j};
    i = j;
  }
}

std::pair<std::size_t, std::size_t> CaptionPool::range(const std::string& image_id) const {
  const auto it = ranges_.find(image_id);
  return it == ranges_.end() ? std::pair<std::size_t, std::size_t>{0, 0} : it->second;
}

RandomDraw sample_random_caption(const CaptionPool& pool, const std::string& target_image_id,
                                 const SimilarityIndex& index, double hard_prob, Rng& rng) {
  if (!(hard_prob >= 0.0 && hard_prob <= 1.0)) {
    throw RangeError("hard-negative probability must lie in [0, 1]");
  }
  const auto [lo, hi] = pool.range(target_image_id);
  const std::size_t others = pool.size() - (hi - lo);
  if (others == 0) {
    throw InvariantError("no captions outside image '" + target_image_id + "'");
  }

  RandomDraw draw;
  if (std::bernoulli_distribution(hard_prob)(rng)) {
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    std::size_t total = 0;
    for (const auto& n : index.neighbors(target_image_id)) {
      if (n.image_id == target_image_id) continue;
      const auto r = pool.range(n.image_id);
      if (r.second > r.first) {
        ranges.push_back(r);
        total += r.second - r.first;
      }
    }
    if (total > 0) {
      std::size_t pick = std::uniform_int_distribution<std::size_t>(0, total - 1)(rng);
      for (const auto& [b, e] : ranges) {
        if (pick < e - b) {
          draw.caption = pool.captions()[b + pick];
          break;
        }
        pick -= e - b;
      }
      draw.hard = true;
      return draw;
    }
    draw.fell_back = true;
  }
  std::size_t pick = std::uniform_int_distribution<std::size_t>(0, others - 1)(rng);
  if (pick >= lo) pick += hi - lo;
  draw.caption = pool.captions()[pick];
  return draw;
}

Caption repeat_or_remove(const Caption& caption, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw RangeError("repeat/remove rate must lie in [0, 1]");
  std::bernoulli_distribution select(rate);
  std::bernoulli_distribution repeat(0.5);
  std::vector<std::string> out;
  out.reserve(caption.tokens.size() * 2);
  for (const auto& token : caption.tokens) {
    if (!select(rng)) {
      out.push_back(token);
    } else if (repeat(rng)) {
      out.push_back(token);
      out.push_back(token);
    }
  }
  if (out.empty()) out.push_back(caption.tokens.front());
  return make_caption(caption.caption_id, caption.image_id, std::move(out));
}

Caption permute_words(const Caption& caption, Rng& rng) {
  const std::size_t n = caption.tokens.size();
  if (n < 2) {
    throw NotPermutableError("caption '" + caption.caption_id + "' has fewer than two tokens");
  }
  std::vector<std::size_t> order(n);
  const auto identity = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      if (order[i] != i) return false;
    }
    return true;
  };
  do {
    std::iota(order.begin(), order.end(), 0);
    // Fisher-Yates with an explicit distribution so the draw sequence is
    // fixed for a given Rng.
    for (std::size_t i = n - 1; i > 0; --i) {
      std::swap(order[i], order[std::uniform_int_distribution<std::size_t>(0, i)(rng)]);
    }
  } while (identity());
  std::vector<std::string> tokens;
  tokens.reserve(n);
  for (std::size_t i : order) tokens.push_back(caption.tokens[i]);
  return make_caption(caption.caption_id, caption.image_id, std::move(tokens));
}

std::string_view to_string(NegativeTag tag) {
  switch (tag) {
    case NegativeTag::kSubstitute: return "SUBSTITUTE";
    case NegativeTag::kRandom: return "RANDOM";
    case NegativeTag::kRepeatRemove: return "REPEAT_REMOVE";
    default: return "PERMUTE";
  }
}

NegativeTag negative_tag_from_string(std::string_view name) {
  for (NegativeTag tag : kNegativeTags) {
    if (to_string(tag) == name) return tag;
  }
  throw Error("unknown negative tag '" + std::string(name) + "'");
}

namespace {

std::string negative_id(const Caption& positive, NegativeTag tag) {
  std::string suffix(to_string(tag));
  std::transform(suffix.begin(), suffix.end(), suffix.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return positive.caption_id + "#" + suffix;
}

}  // namespace

NegativeBundle make_negative_bundle(const Caption& caption, const PosLexicon& lexicon,
                                    const CaptionPool& pool, const SimilarityIndex& index,
                                    const BundleConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  NegativeBundle bundle;
  bundle.positive = caption;
  bundle.seed = seed;
  const std::string positive_text = join_tokens(caption.tokens);
  const auto differs = [&](const Caption& c) { return join_tokens(c.tokens) != positive_text; };
  const int attempts = std::max(1, config.max_retries);

  const auto random_negative = [&]() -> std::optional<RandomDraw> {
    for (int a = 0; a < attempts; ++a) {
      RandomDraw d = sample_random_caption(pool, caption.image_id, index, config.hard_prob, rng);
      if (differs(d.caption)) return d;
    }
    return std::nullopt;
  };

  for (std::size_t t = 0; t < kNegativeTags.size(); ++t) {
    const NegativeTag tag = kNegativeTags[t];
    Negative& negative = bundle.negatives[t];
    negative.tag = tag;
    std::optional<Caption> produced;
    if (tag == NegativeTag::kRandom) {
      if (auto d = random_negative()) {
        bundle.hard_random = d->hard;
        bundle.random_fell_back = d->fell_back;
        produced = std::move(d->caption);
      }
    } else {
      for (int a = 0; a < attempts && !produced; ++a) {
        Caption c;
        if (tag == NegativeTag::kSubstitute) {
          auto r = substitute_keywords(caption, lexicon, config.substitute, rng);
          if (!r.modified) continue;
          c = std::move(r.caption);
        } else if (tag == NegativeTag::kRepeatRemove) {
          c = repeat_or_remove(caption, config.repeat_remove_rate, rng);
        } else {
          if (caption.tokens.size() < 2) break;
          c = permute_words(caption, rng);
        }
        if (differs(c)) produced = std::move(c);
      }
      if (!produced) {
        negative.fallback = true;
        if (auto d = random_negative()) produced = std::move(d->caption);
      }
    }
    if (!produced) {
      throw InvariantError("could not produce a " + std::string(to_string(tag)) +
                           " negative for caption '" + caption.caption_id + "'");
    }
    const std::string source_image = produced->image_id;
    negative.caption = make_caption(negative_id(caption, tag), source_image,
                                    std::move(produced->tokens));
  }
  return bundle;
}

std::vector<std::string> image_ids_of(const std::vector<Caption>& captions) {
  std::set<std::string> ids;
  for (const auto& c : captions) ids.insert(c.image_id);
  return {ids.begin(), ids.end()};
}

std::vector<NegativeBundle> make_bundles(const std::vector<Caption>& captions,
                                         const FeatureStore& features, const PosLexicon& lexicon,
                                         const BundleConfig& config, std::uint64_t seed,
                                         const SimilarityIndex* index, int threads) {
  std::optional<SimilarityIndex> built;
  if (!index) {
    built = build_similarity_index(features.subset(image_ids_of(captions)));
    index = &*built;
  } else {
    for (const auto& id : image_ids_of(captions)) {
      if (!features.contains(id)) throw InvariantError("no features for image '" + id + "'");
    }
  }
  const CaptionPool pool(captions);
  std::vector<NegativeBundle> bundles(captions.size());
  parallel_chunks(captions.size(), threads, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t i = begin; i < end; ++i) {
      bundles[i] = make_negative_bundle(captions[i], lexicon, pool, *index, config,
                                        derive_seed(seed, "negatives.bundle", i));
    }
  });
  return bundles;
}

nlohmann::json to_json(const NegativeBundle& bundle) {
  nlohmann::json negatives = nlohmann::json::array();
  for (const auto& n : bundle.negatives) {
    negatives.push_back({{"tag", to_string(n.tag)},
                         {"caption_id", n.caption.caption_id},
                         {"source_image_id", n.caption.image_id},
                         {"text", n.caption.text},
                         {"fallback", n.fallback}});
  }
  return {{"positive", json_io::to_json(bundle.positive)},
          {"negatives", std::move(negatives)},
          {"seed", bundle.seed},
          {"hard_random", bundle.hard_random},
          {"random_fell_back", bundle.random_fell_back}};
}

NegativeBundle bundle_from_json(const nlohmann::json& j) {
  NegativeBundle bundle;
  bundle.positive = json_io::caption_from_json(j.at("positive"));
  const auto& negatives = j.at("negatives");
  if (!negatives.is_array() || negatives.size() != 4) {
    throw Error("a bundle needs exactly four negatives");
  }
  std::array<bool, 4> seen{};
  for (const auto& n : negatives) {
    const NegativeTag tag = negative_tag_from_string(n.at("tag").get<std::string>());
    const auto slot = static_cast<std::size_t>(tag);
    if (seen[slot]) throw Error("duplicate negative tag " + std::string(to_string(tag)));
    seen[slot] = true;
    Negative& negative = bundle.negatives[slot];
    negative.tag = tag;
    negative.caption = make_caption(n.at("caption_id").get<std::string>(),
                                    n.value("source_image_id", bundle.positive.image_id),
                                    n.at("text").get<std::string>());
    negative.fallback = n.value("fallback", false);
  }
  bundle.seed = j.value("seed", std::uint64_t{0});
  bundle.hard_random = j.value("hard_random", false);
  bundle.random_fell_back = j.value("random_fell_back", false);
  return bundle;
}

void write_bundles(const std::string& path, const std::vector<NegativeBundle>& bundles) {
  std::vector<nlohmann::json> rows;
  rows.reserve(bundles.size());
  for (const auto& b : bundles) rows.push_back(to_json(b));
  json_io::write_jsonl(path, rows);
}

std::vector<NegativeBundle> load_bundles(const std::string& path) {
  std::vector<NegativeBundle> bundles;
  json_io::for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t) {
    bundles.push_back(bundle_from_json(j));
  });
  return bundles;
}

}  // namespace umiclab
