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

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>

#include "support.hpp"
#include "umiclab/corpus.hpp"
#include "umiclab/errors.hpp"
#include "umiclab/synthetic.hpp"

using namespace umiclab;
using umiclab::testing::TempDir;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Little-endian encoders independent of the library's writer.
void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}
void put_f32(std::string& s, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(s, bits);
}

std::string one_image_umf(const std::vector<float>& regions, std::uint32_t n, std::uint32_t d,
                          const std::vector<float>& boxes) {
  std::string s = "UMF1";
  put_u32(s, 1);
  put_u16(s, 2);
  s += "i1";
  put_u32(s, n);
  put_u32(s, d);
  for (float f : regions) put_f32(s, f);
  for (float f : boxes) put_f32(s, f);
  return s;
}

}  // namespace

TEST(Tokenize, LowercasesAndSplitsPunctuation) {
  EXPECT_EQ(tokenize("A dog runs."), (std::vector<std::string>{"a", "dog", "runs", "."}));
  EXPECT_EQ(tokenize("  Two\tcats,  one MAT!"),
            (std::vector<std::string>{"two", "cats", ",", "one", "mat", "!"}));
  EXPECT_TRUE(tokenize("   ").empty());
}

TEST(Tokenize, IsIdempotentOnJoinedTokens) {
  for (const char* text : {"A man, riding a wave.", "it's (very) odd--right?", "x"}) {
    const auto tokens = tokenize(text);
    EXPECT_EQ(tokenize(join_tokens(tokens)), tokens) << text;
  }
}

TEST(MakeCaption, RejectsEmptyText) {
  EXPECT_THROW(make_caption("c", "i", std::string("  ")), InvariantError);
  const Caption c = make_caption("c", "i", std::string("A Dog."));
  EXPECT_EQ(c.text, "A Dog.");
  EXPECT_EQ(c.tokens, (std::vector<std::string>{"a", "dog", "."}));
}

TEST(LoadCaptions, ParsesOneCaptionPerLine) {
  TempDir dir;
  write_file(dir.file("c.jsonl"),
             "{\"caption_id\":\"c1\",\"image_id\":\"i1\",\"text\":\"A dog runs.\"}\n\n");
  const auto captions = load_captions(dir.file("c.jsonl"));
  ASSERT_EQ(captions.size(), 1u);
  EXPECT_EQ(captions[0].tokens, (std::vector<std::string>{"a", "dog", "runs", "."}));
  EXPECT_EQ(captions[0].image_id, "i1");
}

TEST(LoadCaptions, EmptyFileGivesNoCaptions) {
  TempDir dir;
  write_file(dir.file("c.jsonl"), "");
  EXPECT_TRUE(load_captions(dir.file("c.jsonl")).empty());
}

TEST(LoadCaptions, TruncatedLineReportsItsLineNumber) {
  TempDir dir;
  write_file(dir.file("c.jsonl"),
             "{\"caption_id\":\"c1\",\"image_id\":\"i1\",\"text\":\"a\"}\n"
             "{\"caption_id\":\"c2\",\"image_id\":\"i1\",\"text\":\"b\"}\n"
             "{\"caption_id\":\"c3\",\"image_id\":\n");
  try {
    load_captions(dir.file("c.jsonl"));
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_EQ(e.path(), dir.file("c.jsonl"));
  }
}

TEST(LoadCaptions, DuplicateIdIsAnError) {
  TempDir dir;
  write_file(dir.file("c.jsonl"),
             "{\"caption_id\":\"c1\",\"image_id\":\"i1\",\"text\":\"a\"}\n"
             "{\"caption_id\":\"c1\",\"image_id\":\"i2\",\"text\":\"b\"}\n");
  EXPECT_THROW(load_captions(dir.file("c.jsonl")), DuplicateError);
}

TEST(ImageFeatures, HandWrittenFileReadsBack) {
  TempDir dir;
  const std::vector<float> regions{1, 2, 3, 4, 5, 6, 7, 8};
  const std::vector<float> boxes{0, 0, 0.5f, 0.5f, 0.25f, 0.25f, 1, 1};
  write_file(dir.file("f.umf"), one_image_umf(regions, 2, 4, boxes));
  const FeatureStore store = load_image_features(dir.file("f.umf"));
  ASSERT_EQ(store.size(), 1u);
  EXPECT_EQ(store.dim(), 4);
  const auto& f = store.at("i1");
  ASSERT_EQ(f.regions.rows(), 2);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 4; ++c) EXPECT_EQ(f.regions(r, c), regions[static_cast<std::size_t>(r * 4 + c)]);
  }
  EXPECT_EQ(f.boxes(1, 0), 0.25f);
}

TEST(ImageFeatures, ShortPayloadIsATruncationError) {
  TempDir dir;
  std::string bytes = one_image_umf({1, 2, 3, 4, 5, 6, 7, 8}, 2, 4, {0, 0, 1, 1, 0, 0, 1, 1});
  bytes.resize(bytes.size() - 4);
  write_file(dir.file("f.umf"), bytes);
  try {
    load_image_features(dir.file("f.umf"));
    FAIL() << "expected a format error";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos) << e.what();
  }
}

TEST(ImageFeatures, BadMagicAndInvalidBoxesAreRejected) {
  TempDir dir;
  std::string bytes = one_image_umf({1, 2, 3, 4}, 1, 4, {0, 0, 1, 1});
  bytes[3] = '2';
  write_file(dir.file("a.umf"), bytes);
  EXPECT_THROW(load_image_features(dir.file("a.umf")), FormatError);

  write_file(dir.file("b.umf"), one_image_umf({1, 2, 3, 4}, 1, 4, {0.5f, 0.5f, 0.4f, 0.6f}));
  EXPECT_THROW(load_image_features(dir.file("b.umf")), Error);

  ImageFeatures f;
  f.image_id = "x";
  f.regions = RegionMatrix::Ones(1, 4);
  f.boxes = BoxMatrix(1, 4);
  f.boxes << 0.5f, 0.5f, 0.4f, 0.6f;
  EXPECT_THROW(validate(f), InvariantError);
}

TEST(ImageFeatures, NonFiniteValuesAreRejected) {
  TempDir dir;
  write_file(dir.file("f.umf"),
             one_image_umf({1, std::numeric_limits<float>::quiet_NaN(), 3, 4}, 1, 4, {0, 0, 1, 1}));
  EXPECT_THROW(load_image_features(dir.file("f.umf")), Error);
}

TEST(FeatureStore, RejectsDuplicatesAndMixedDimensions) {
  FeatureStore store;
  ImageFeatures f{"a", RegionMatrix::Zero(1, 3), BoxMatrix::Zero(1, 4)};
  store.insert(f);
  EXPECT_THROW(store.insert(f), DuplicateError);
  ImageFeatures g{"b", RegionMatrix::Zero(1, 5), BoxMatrix::Zero(1, 4)};
  EXPECT_THROW(store.insert(g), FormatError);
}

TEST(FeatureStore, RoundTripIsBitIdentical) {
  TempDir dir;
  const auto corpus = umiclab::testing::small_corpus(12, 16);
  write_image_features(dir.file("f.umf"), corpus.features);
  const FeatureStore back = load_image_features(dir.file("f.umf"));
  EXPECT_TRUE(back == corpus.features);
  for (const auto& [id, f] : corpus.features) {
    const auto& g = back.at(id);
    EXPECT_EQ(std::memcmp(f.regions.data(), g.regions.data(),
                          static_cast<std::size_t>(f.regions.size()) * sizeof(float)),
              0);
  }
}

TEST(NormalizeScore, MapsEndpointsExactly) {
  EXPECT_EQ(normalize_score(1, {1, 4}), 0.0);
  EXPECT_EQ(normalize_score(4, {1, 4}), 1.0);
  EXPECT_EQ(normalize_score(3, {1, 5}), 0.5);
  EXPECT_THROW(normalize_score(5.5, {1, 5}), RangeError);
  EXPECT_THROW(normalize_score(1, {2, 2}), RangeError);
}

TEST(NormalizeScore, IsMonotone) {
  double prev = -1.0;
  for (double raw = 1.0; raw <= 5.0; raw += 0.125) {
    const double v = normalize_score(raw, {1, 5});
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(LoadJudgments, NormalizesTheRaterMean) {
  TempDir dir;
  write_file(dir.file("j.jsonl"),
             "{\"image_id\":\"i1\",\"candidate\":{\"caption_id\":\"k\",\"text\":\"a dog\"},"
             "\"references\":[{\"caption_id\":\"r\",\"text\":\"a dog\"}],"
             "\"raw_scores\":[2,3,4],\"scale\":[1,5]}\n");
  const auto records = load_judgments(dir.file("j.jsonl"));
  ASSERT_EQ(records.size(), 1u);
  EXPECT_DOUBLE_EQ(records[0].normalized, 0.5);
  EXPECT_EQ(records[0].candidate.image_id, "i1");
  EXPECT_TRUE(records[0].candidate_in_references);
  EXPECT_FALSE(records[0].system.has_value());
}

TEST(LoadJudgments, OutOfScaleScoreIsAnError) {
  TempDir dir;
  write_file(dir.file("j.jsonl"),
             "{\"image_id\":\"i1\",\"candidate\":{\"caption_id\":\"k\",\"text\":\"a\"},"
             "\"raw_scores\":[7],\"scale\":[1,5]}\n");
  EXPECT_THROW(load_judgments(dir.file("j.jsonl")), Error);
}

TEST(LoadTriplets, RoundTripKeepsTheChoice) {
  TempDir dir;
  const auto fixture = generate_triplet_fixture(20, 5, 11);
  write_triplets(dir.file("t.jsonl"), fixture);
  const auto back = load_triplets(dir.file("t.jsonl"));
  ASSERT_EQ(back.size(), fixture.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].human_choice, fixture[i].human_choice);
    EXPECT_EQ(back[i].candidate_b.text, fixture[i].candidate_b.text);
    EXPECT_EQ(back[i].references_a.size(), 5u);
  }
}

TEST(Fixtures, CapEvalShapedFixtureLoadsAllRecords) {
  TempDir dir;
  auto config = capeval1k_like();
  config.n_records = 1000;
  write_judgments(dir.file("j.jsonl"), generate_judgment_fixture(config, 5));
  const auto records = load_judgments(dir.file("j.jsonl"));
  EXPECT_EQ(records.size(), 1000u);
  for (const auto& r : records) {
    EXPECT_EQ(r.raw_scores.size(), 5u);
    EXPECT_GE(r.normalized, 0.0);
    EXPECT_LE(r.normalized, 1.0);
  }
}

TEST(Fixtures, CorpusBackedFixturesUseCorpusImages) {
  const auto corpus = umiclab::testing::small_corpus(15, 8, 42);
  const auto judgments = generate_judgment_fixture(composite_like(), 3, &corpus);
  std::set<std::string> ids;
  for (const auto& r : judgments) {
    EXPECT_TRUE(corpus.features.contains(r.image_id)) << r.image_id;
    EXPECT_EQ(r.candidate.image_id, r.image_id);
    EXPECT_TRUE(ids.insert(r.candidate.caption_id).second);
  }
  for (const auto& t : generate_triplet_fixture(40, 5, 3, &corpus)) {
    EXPECT_TRUE(corpus.features.contains(t.image_id)) << t.image_id;
  }
  SyntheticCorpus one = corpus;
  one.scenes.resize(1);
  EXPECT_THROW(generate_judgment_fixture(composite_like(), 3, &one), InvariantError);
}

TEST(Synthetic, SameSeedGivesIdenticalOutput) {
  const auto a = umiclab::testing::small_corpus(15, 8, 42);
  const auto b = umiclab::testing::small_corpus(15, 8, 42);
  EXPECT_TRUE(a.features == b.features);
  ASSERT_EQ(a.captions.size(), b.captions.size());
  for (std::size_t i = 0; i < a.captions.size(); ++i) EXPECT_EQ(a.captions[i].text, b.captions[i].text);
  const auto c = umiclab::testing::small_corpus(15, 8, 43);
  EXPECT_FALSE(a.features == c.features);
}

TEST(Synthetic, CountsFollowTheConfig) {
  SyntheticConfig config;
  config.n_images = 200;
  config.captions_per_image = 5;
  const auto corpus = generate_synthetic_corpus(config, 1);
  EXPECT_EQ(corpus.captions.size(), 1000u);
  EXPECT_EQ(corpus.features.size(), 200u);
  EXPECT_EQ(corpus.features.dim(), 64);
}

TEST(Synthetic, CaptionsMentionTheirImagesObjects) {
  const auto corpus = umiclab::testing::small_corpus(30);
  std::map<std::string, const SyntheticCorpus::Scene*> scenes;
  for (const auto& s : corpus.scenes) scenes[s.image_id] = &s;
  for (const auto& c : corpus.captions) {
    const std::set<std::string> words(c.tokens.begin(), c.tokens.end());
    for (const auto& object : scenes.at(c.image_id)->objects) {
      EXPECT_TRUE(words.count(object)) << c.text << " lacks " << object;
    }
  }
}

TEST(Synthetic, SplitByImageKeepsImagesTogether) {
  const auto corpus = umiclab::testing::small_corpus(10);
  const auto [train, valid] = split_by_image(corpus.captions, 7);
  std::set<std::string> train_ids, valid_ids;
  for (const auto& c : train) train_ids.insert(c.image_id);
  for (const auto& c : valid) valid_ids.insert(c.image_id);
  EXPECT_EQ(train_ids.size(), 7u);
  EXPECT_EQ(valid_ids.size(), 3u);
  for (const auto& id : valid_ids) EXPECT_FALSE(train_ids.count(id));
}

TEST(Synthetic, RejectsBadConfig) {
  SyntheticConfig config;
  config.n_images = 0;
  EXPECT_THROW(generate_synthetic_corpus(config, 1), InvariantError);
}
