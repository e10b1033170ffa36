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

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace umiclab {

using Index = Eigen::Index;

// Region boxes are (x1, y1, x2, y2), normalized to [0, 1].
using BoxMatrix = Eigen::Matrix<float, Eigen::Dynamic, 4, Eigen::RowMajor>;
using RegionMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ImageFeatures {
  std::string image_id;
  RegionMatrix regions;  // N x d
  BoxMatrix boxes;       // N x 4

  Index num_regions() const { return regions.rows(); }
  Index dim() const { return regions.cols(); }
};

// Throws InvariantError unless N >= 1, boxes are ordered and inside [0,1],
// and every value is finite.
void validate(const ImageFeatures& features);

struct Caption {
  std::string caption_id;
  std::string image_id;
  std::vector<std::string> tokens;
  std::string text;
};

// Canonical tokenizer: ASCII-lowercase, split on whitespace, every ASCII
// punctuation character becomes its own token.
std::vector<std::string> tokenize(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens);

// Builds a caption from raw text. Throws InvariantError on empty token lists.
Caption make_caption(std::string caption_id, std::string image_id, std::string text);

// Builds a caption whose text is the space-joined token list.
Caption make_caption(std::string caption_id, std::string image_id,
                     std::vector<std::string> tokens);

// Immutable after construction; safe to share across concurrent readers.
class FeatureStore {
 public:
  FeatureStore() = default;
  explicit FeatureStore(Index dim) : dim_(dim) {}

  // Validates and inserts. Throws DuplicateError or FormatError on a
  // dimension disagreement.
  void insert(ImageFeatures features);

  Index dim() const { return dim_; }
  std::size_t size() const { return images_.size(); }
  bool empty() const { return images_.empty(); }
  bool contains(const std::string& image_id) const { return images_.count(image_id) != 0; }
  const ImageFeatures& at(const std::string& image_id) const;
  const ImageFeatures* find(const std::string& image_id) const;
  // Copy restricted to `ids`. Throws InvariantError naming a missing id.
  FeatureStore subset(const std::vector<std::string>& ids) const;

  // Iteration is in ascending image_id order.
  auto begin() const { return images_.begin(); }
  auto end() const { return images_.end(); }

 private:
  Index dim_ = 0;
  std::map<std::string, ImageFeatures> images_;
};

bool operator==(const FeatureStore& a, const FeatureStore& b);

struct Scale {
  double min = 0.0;
  double max = 1.0;
};

// (raw - min) / (max - min). Throws RangeError if raw is outside the scale
// or the scale is empty.
double normalize_score(double raw, Scale scale);

struct JudgmentRecord {
  std::string image_id;
  Caption candidate;
  std::vector<Caption> references;
  std::vector<double> raw_scores;
  Scale scale;
  double normalized = 0.0;
  std::optional<std::string> system;
  // Set on load when the candidate text equals one of the references.
  bool candidate_in_references = false;
};

// Recomputes `normalized` from the mean of raw_scores and the candidate
// duplicate tag. Throws RangeError on out-of-scale scores.
void finalize_judgment(JudgmentRecord& record);

enum class Choice { B, C };

struct TripletRecord {
  std::string image_id;
  std::vector<Caption> references_a;
  Caption candidate_b;
  Caption candidate_c;
  Choice human_choice = Choice::B;
};

// JSON Lines loaders. Malformed lines raise ParseError naming the line;
// duplicate caption ids raise DuplicateError. Blank lines are skipped.
std::vector<Caption> load_captions(const std::string& path);
std::vector<JudgmentRecord> load_judgments(const std::string& path);
std::vector<TripletRecord> load_triplets(const std::string& path);

void write_captions(const std::string& path, const std::vector<Caption>& captions);
void write_judgments(const std::string& path, const std::vector<JudgmentRecord>& records);
void write_triplets(const std::string& path, const std::vector<TripletRecord>& records);

// UMF1 binary feature container.
FeatureStore read_image_features(std::istream& in);
FeatureStore load_image_features(const std::string& path);
void write_image_features(std::ostream& out, const FeatureStore& store);
void write_image_features(const std::string& path, const FeatureStore& store);

}  // namespace umiclab
