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

#include "umiclab/corpus.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "umiclab/binary_io.hpp"
#include "umiclab/errors.hpp"
#include "umiclab/json_io.hpp"

namespace umiclab {

void validate(const ImageFeatures& features) {
  const std::string& id = features.image_id;
  if (features.num_regions() < 1) {
    throw InvariantError("image '" + id + "' has no regions");
  }
  if (features.boxes.rows() != features.num_regions()) {
    throw InvariantError("image '" + id + "' has a box count different from its region count");
  }
  if (!features.regions.allFinite() || !features.boxes.allFinite()) {
    throw InvariantError("image '" + id + "' contains non-finite values");
  }
  for (Index r = 0; r < features.boxes.rows(); ++r) {
    const auto box = features.boxes.row(r);
    const bool in_unit = (box.array() >= 0.0f).all() && (box.array() <= 1.0f).all();
    if (!in_unit || box(0) > box(2) || box(1) > box(3)) {
      std::ostringstream msg;
      msg << "image '" << id << "' region " << r << " has an invalid box (" << box(0) << ", "
          << box(1) << ", " << box(2) << ", " << box(3) << ")";
      throw InvariantError(msg.str());
    }
  }
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      tokens.emplace_back(1, raw);
    } else {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : raw);
    }
  }
  flush();
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

Caption make_caption(std::string caption_id, std::string image_id, std::string text) {
  auto tokens = tokenize(text);
  if (tokens.empty()) {
    throw InvariantError("caption '" + caption_id + "' has no tokens");
  }
  return Caption{std::move(caption_id), std::move(image_id), std::move(tokens), std::move(text)};
}

Caption make_caption(std::string caption_id, std::string image_id,
                     std::vector<std::string> tokens) {
  if (tokens.empty()) {
    throw InvariantError("caption '" + caption_id + "' has no tokens");
  }
  std::string text = join_tokens(tokens);
  return Caption{std::move(caption_id), std::move(image_id), std::move(tokens), std::move(text)};
}

void FeatureStore::insert(ImageFeatures features) {
  validate(features);
  if (images_.empty() && dim_ == 0) dim_ = features.dim();
  if (features.dim() != dim_) {
    throw FormatError("image '" + features.image_id + "' has feature dimension " +
                      std::to_string(features.dim()) + ", store expects " + std::to_string(dim_));
  }
  const std::string id = features.image_id;
  if (!images_.emplace(id, std::move(features)).second) {
    throw DuplicateError("duplicate image_id '" + id + "'");
  }
}

const ImageFeatures& FeatureStore::at(const std::string& image_id) const {
  const auto* found = find(image_id);
  if (!found) throw Error("no features for image '" + image_id + "'");
  return *found;
}

const ImageFeatures* FeatureStore::find(const std::string& image_id) const {
  const auto it = images_.find(image_id);
  return it == images_.end() ? nullptr : &it->second;
}

FeatureStore FeatureStore::subset(const std::vector<std::string>& ids) const {
  FeatureStore out(dim_);
  for (const auto& id : ids) {
    if (out.contains(id)) continue;
    const ImageFeatures* f = find(id);
    if (!f) throw InvariantError("no features for image '" + id + "'");
    out.insert(*f);
  }
  return out;
}

bool operator==(const FeatureStore& a, const FeatureStore& b) {
  if (a.dim() != b.dim() || a.size() != b.size()) return false;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
    const auto& fa = ia->second;
    const auto& fb = ib->second;
    if (fa.image_id != fb.image_id || fa.regions.rows() != fb.regions.rows()) return false;
    // Bitwise comparison so that round-trips are checked exactly.
    if (std::memcmp(fa.regions.data(), fb.regions.data(), sizeof(float) * fa.regions.size()) ||
        std::memcmp(fa.boxes.data(), fb.boxes.data(), sizeof(float) * fa.boxes.size())) {
      return false;
    }
  }
  return true;
}

double normalize_score(double raw, Scale scale) {
  if (!(scale.max > scale.min)) {
    throw RangeError("score scale requires max > min");
  }
  if (!(raw >= scale.min && raw <= scale.max)) {
    std::ostringstream msg;
    msg << "score " << raw << " outside scale [" << scale.min << ", " << scale.max << "]";
    throw RangeError(msg.str());
  }
  return (raw - scale.min) / (scale.max - scale.min);
}

void finalize_judgment(JudgmentRecord& record) {
  if (record.raw_scores.empty()) {
    throw RangeError("judgment for '" + record.candidate.caption_id + "' has no raw scores");
  }
  for (double s : record.raw_scores) normalize_score(s, record.scale);
  const double mean = std::accumulate(record.raw_scores.begin(), record.raw_scores.end(), 0.0) /
                      static_cast<double>(record.raw_scores.size());
  record.normalized = normalize_score(mean, record.scale);
  const std::string candidate = join_tokens(record.candidate.tokens);
  record.candidate_in_references = false;
  for (const auto& ref : record.references) {
    if (join_tokens(ref.tokens) == candidate) record.candidate_in_references = true;
  }
}

namespace {

void check_unique(std::set<std::string>& seen, const std::string& id, const std::string& path,
                  std::size_t line) {
  if (!seen.insert(id).second) {
    throw DuplicateError(path + ":" + std::to_string(line) + ": duplicate caption_id '" + id +
                         "'");
  }
}

}  // namespace

std::vector<Caption> load_captions(const std::string& path) {
  std::vector<Caption> captions;
  std::set<std::string> seen;
  json_io::for_each_jsonl(path, [&](const json_io::Json& j, std::size_t line) {
    Caption caption = json_io::caption_from_json(j);
    check_unique(seen, caption.caption_id, path, line);
    captions.push_back(std::move(caption));
  });
  return captions;
}

std::vector<JudgmentRecord> load_judgments(const std::string& path) {
  std::vector<JudgmentRecord> records;
  std::set<std::string> seen;
  json_io::for_each_jsonl(path, [&](const json_io::Json& j, std::size_t line) {
    JudgmentRecord record = json_io::judgment_from_json(j);
    check_unique(seen, record.candidate.caption_id, path, line);
    records.push_back(std::move(record));
  });
  return records;
}

std::vector<TripletRecord> load_triplets(const std::string& path) {
  std::vector<TripletRecord> records;
  std::set<std::string> seen;
  json_io::for_each_jsonl(path, [&](const json_io::Json& j, std::size_t line) {
    TripletRecord record = json_io::triplet_from_json(j);
    check_unique(seen, record.candidate_b.caption_id, path, line);
    check_unique(seen, record.candidate_c.caption_id, path, line);
    records.push_back(std::move(record));
  });
  return records;
}

void write_captions(const std::string& path, const std::vector<Caption>& captions) {
  std::vector<json_io::Json> rows;
  rows.reserve(captions.size());
  for (const auto& c : captions) rows.push_back(json_io::to_json(c));
  json_io::write_jsonl(path, rows);
}

void write_judgments(const std::string& path, const std::vector<JudgmentRecord>& records) {
  std::vector<json_io::Json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(json_io::to_json(r));
  json_io::write_jsonl(path, rows);
}

void write_triplets(const std::string& path, const std::vector<TripletRecord>& records) {
  std::vector<json_io::Json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(json_io::to_json(r));
  json_io::write_jsonl(path, rows);
}

// UMF1 layout: "UMF1", u32 image count, then per image: u16 id length, id
// bytes, u32 N, u32 d, N*d f32 regions (row-major), N*4 f32 boxes.
FeatureStore read_image_features(std::istream& in) {
  const std::string magic = binary::read_bytes(in, 4, "magic");
  if (magic != "UMF1") throw FormatError("bad magic: expected UMF1");
  const std::uint32_t count = binary::read_u32(in, "image count");
  FeatureStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string where = "image " + std::to_string(i);
    ImageFeatures f;
    const std::uint16_t id_len = binary::read_u16(in, where + " id length");
    f.image_id = binary::read_bytes(in, id_len, where + " id");
    const std::uint32_t n = binary::read_u32(in, where + " region count");
    const std::uint32_t d = binary::read_u32(in, where + " dimension");
    if (i > 0 && static_cast<Index>(d) != store.dim()) {
      throw FormatError(where + " ('" + f.image_id + "') has dimension " + std::to_string(d) +
                        ", expected " + std::to_string(store.dim()));
    }
    f.regions.resize(n, d);
    f.boxes.resize(n, 4);
    binary::read_f32_array(in, {f.regions.data(), static_cast<std::size_t>(f.regions.size())},
                           where + " regions");
    binary::read_f32_array(in, {f.boxes.data(), static_cast<std::size_t>(f.boxes.size())},
                           where + " boxes");
    store.insert(std::move(f));
  }
  if (!binary::at_end(in)) throw FormatError("trailing bytes after last image");
  return store;
}

FeatureStore load_image_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file '" + path + "'");
  try {
    return read_image_features(in);
  } catch (const Error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_image_features(std::ostream& out, const FeatureStore& store) {
  binary::write_bytes(out, "UMF1");
  binary::write_u32(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [id, f] : store) {
    binary::write_u16(out, static_cast<std::uint16_t>(id.size()));
    binary::write_bytes(out, id);
    binary::write_u32(out, static_cast<std::uint32_t>(f.num_regions()));
    binary::write_u32(out, static_cast<std::uint32_t>(f.dim()));
    for (Index k = 0; k < f.regions.size(); ++k) binary::write_f32(out, f.regions.data()[k]);
    for (Index k = 0; k < f.boxes.size(); ++k) binary::write_f32(out, f.boxes.data()[k]);
  }
}

void write_image_features(const std::string& path, const FeatureStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write feature file '" + path + "'");
  write_image_features(out, store);
}

namespace json_io {

Json to_json(const Caption& caption) {
  return Json{{"caption_id", caption.caption_id},
              {"image_id", caption.image_id},
              {"text", caption.text}};
}

Caption caption_from_json(const Json& j, const std::string& default_image_id) {
  if (!j.is_object()) throw Error("caption must be a JSON object");
  std::string image_id = default_image_id;
  if (j.contains("image_id")) image_id = j.at("image_id").get<std::string>();
  if (image_id.empty()) throw Error("caption is missing image_id");
  return make_caption(j.at("caption_id").get<std::string>(), std::move(image_id),
                      j.at("text").get<std::string>());
}

namespace {

std::vector<Caption> captions_from_json(const Json& j, const std::string& image_id) {
  std::vector<Caption> out;
  for (const auto& item : j) out.push_back(caption_from_json(item, image_id));
  return out;
}

Json captions_to_json(const std::vector<Caption>& captions) {
  Json out = Json::array();
  for (const auto& c : captions) out.push_back(to_json(c));
  return out;
}

}  // namespace

Json to_json(const JudgmentRecord& record) {
  Json j{{"image_id", record.image_id},
         {"candidate", to_json(record.candidate)},
         {"references", captions_to_json(record.references)},
         {"raw_scores", record.raw_scores},
         {"scale", {record.scale.min, record.scale.max}},
         {"normalized", record.normalized}};
  if (record.system) j["system"] = *record.system;
  return j;
}

JudgmentRecord judgment_from_json(const Json& j) {
  JudgmentRecord record;
  record.image_id = j.at("image_id").get<std::string>();
  record.candidate = caption_from_json(j.at("candidate"), record.image_id);
  if (j.contains("references")) {
    record.references = captions_from_json(j.at("references"), record.image_id);
  }
  record.raw_scores = j.at("raw_scores").get<std::vector<double>>();
  const auto& scale = j.at("scale");
  if (!scale.is_array() || scale.size() != 2) throw Error("scale must be [min, max]");
  record.scale = Scale{scale[0].get<double>(), scale[1].get<double>()};
  if (j.contains("system") && !j.at("system").is_null()) {
    record.system = j.at("system").get<std::string>();
  }
  finalize_judgment(record);
  return record;
}

Json to_json(const TripletRecord& record) {
  return Json{{"image_id", record.image_id},
              {"references_A", captions_to_json(record.references_a)},
              {"candidate_B", to_json(record.candidate_b)},
              {"candidate_C", to_json(record.candidate_c)},
              {"human_choice", record.human_choice == Choice::B ? "B" : "C"}};
}

TripletRecord triplet_from_json(const Json& j) {
  TripletRecord record;
  record.image_id = j.at("image_id").get<std::string>();
  record.references_a = captions_from_json(j.at("references_A"), record.image_id);
  if (record.references_a.empty()) throw Error("references_A must be nonempty");
  record.candidate_b = caption_from_json(j.at("candidate_B"), record.image_id);
  record.candidate_c = caption_from_json(j.at("candidate_C"), record.image_id);
  const auto choice = j.at("human_choice").get<std::string>();
  if (choice == "B") {
    record.human_choice = Choice::B;
  } else if (choice == "C") {
    record.human_choice = Choice::C;
  } else {
    throw Error("human_choice must be \"B\" or \"C\", got \"" + choice + "\"");
  }
  return record;
}

void for_each_jsonl(const std::string& path,
                    const std::function<void(const Json&, std::size_t)>& on_record) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw ParseError(path, line_no, std::string("malformed JSON: ") + e.what());
    }
    try {
      on_record(j, line_no);
    } catch (const DuplicateError&) {
      throw;
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(path, line_no, e.what());
    }
  }
}

void write_jsonl(const std::string& path, const std::vector<Json>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (const auto& r : records) out << r.dump() << '\n';
}

}  // namespace json_io
}  // namespace umiclab
