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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "umiclab/corpus.hpp"
#include "umiclab/errors.hpp"
#include "umiclab/negatives.hpp"

namespace umiclab::cli {

using nlohmann::json;

// Bad or missing inputs; mapped to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;
  std::string tool_version;
  double wall_seconds = 0.0;

  json to_json() const;
};

// Stopwatch plus manifest bookkeeping for one command invocation.
class Run {
 public:
  // The manifest is <out_dir>/<stem>.manifest.json; stem defaults to the
  // command name.
  Run(std::string command, std::filesystem::path out_dir, std::string stem = {});

  const std::filesystem::path& out_dir() const { return out_dir_; }
  std::filesystem::path output(const std::string& key, const std::string& file_name);
  void input(const std::string& key, const std::string& path) { manifest_.inputs[key] = path; }
  void seed(std::uint64_t s) { manifest_.seeds.push_back(s); }
  void config(const json& effective);

  void finish();

 private:
  RunManifest manifest_;
  std::filesystem::path out_dir_;
  std::string stem_;
  std::chrono::steady_clock::time_point start_;
};

// 16 hex digits of FNV-1a over the compact JSON dump.
std::string config_hash(const json& config);

// Empty path -> empty object. Throws InputError on unreadable or invalid
// JSON.
json load_config(const std::string& path);

FeatureStore read_features(const std::string& path);
std::vector<Caption> read_captions(const std::string& path);

json to_json(const BundleConfig& config);
BundleConfig bundle_config_from_json(const json& j);

// "name=value" pairs from repeated options.
std::vector<std::pair<std::string, std::string>> parse_named(
    const std::vector<std::string>& values, const std::string& option);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace umiclab::cli
