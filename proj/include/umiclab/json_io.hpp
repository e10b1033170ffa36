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

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "umiclab/corpus.hpp"

namespace umiclab::json_io {

using Json = nlohmann::json;

Json to_json(const Caption& caption);
// `default_image_id` fills a missing image_id (nested captions in records).
Caption caption_from_json(const Json& j, const std::string& default_image_id = {});

Json to_json(const JudgmentRecord& record);
JudgmentRecord judgment_from_json(const Json& j);

Json to_json(const TripletRecord& record);
TripletRecord triplet_from_json(const Json& j);

// Reads a JSON Lines file, invoking `on_record` with (json, 1-based line).
// Parse failures and exceptions thrown by `on_record` become ParseError.
void for_each_jsonl(const std::string& path,
                    const std::function<void(const Json&, std::size_t)>& on_record);

void write_jsonl(const std::string& path, const std::vector<Json>& records);

}  // namespace umiclab::json_io
