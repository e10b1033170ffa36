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

#include "umiclab/vocabulary.hpp"

#include <set>

#include "umiclab/errors.hpp"

namespace umiclab {

Vocabulary::Vocabulary() {
  add(kPadToken);
  add(kUnkToken);
  add(kClsToken);
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  if (tokens.size() < 3 || tokens[kPad] != kPadToken || tokens[kUnk] != kUnkToken ||
      tokens[kCls] != kClsToken) {
    throw InvariantError("vocabulary must start with [PAD], [UNK], [CLS]");
  }
  for (const auto& t : tokens) {
    if (ids_.count(t)) throw DuplicateError("duplicate vocabulary token '" + t + "'");
    add(t);
  }
}

int Vocabulary::add(const std::string& token) {
  if (const auto it = ids_.find(token); it != ids_.end()) return it->second;
  const int id = size();
  tokens_.push_back(token);
  ids_.emplace(token, id);
  return id;
}

int Vocabulary::id(const std::string& token) const {
  const auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

nlohmann::json Vocabulary::to_json() const { return tokens_; }

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  return Vocabulary(j.get<std::vector<std::string>>());
}

Vocabulary build_vocabulary(const std::vector<Caption>& captions) {
  std::set<std::string> words;
  for (const auto& c : captions) words.insert(c.tokens.begin(), c.tokens.end());
  Vocabulary vocab;
  for (const auto& w : words) vocab.add(w);
  return vocab;
}

}  // namespace umiclab
