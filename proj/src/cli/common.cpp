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

#include "common.hpp"

#include <cstdio>
#include <fstream>

#include "umiclab/cli.hpp"
#include "umiclab/random.hpp"

namespace umiclab::cli {

json RunManifest::to_json() const {
  return {{"command", command},   {"config_hash", config_hash},   {"seeds", seeds},
          {"inputs", inputs},     {"outputs", outputs},           {"tool_version", tool_version},
          {"wall_seconds", wall_seconds}};
}

Run::Run(std::string command, std::filesystem::path out_dir, std::string stem)
    : out_dir_(std::move(out_dir)),
      stem_(stem.empty() ? command : std::move(stem)),
      start_(std::chrono::steady_clock::now()) {
  manifest_.command = std::move(command);
  manifest_.tool_version = kToolVersion;
  manifest_.config_hash = config_hash(json::object());
  std::error_code ec;
  std::filesystem::create_directories(out_dir_, ec);
  if (ec) throw InputError("cannot create output directory '" + out_dir_.string() + "'");
}

std::filesystem::path Run::output(const std::string& key, const std::string& file_name) {
  auto path = out_dir_ / file_name;
  manifest_.outputs[key] = path.string();
  return path;
}

void Run::config(const json& effective) { manifest_.config_hash = config_hash(effective); }

void Run::finish() {
  manifest_.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  write_text(out_dir_ / (stem_ + ".manifest.json"), manifest_.to_json().dump(2) + "\n");
}

std::string config_hash(const json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(config.dump())));
  return buf;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path + "'");
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw InputError("config '" + path + "' is not a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw InputError("config '" + path + "': " + e.what());
  }
}

FeatureStore read_features(const std::string& path) {
  if (path.empty()) throw InputError("a features file is required");
  if (!std::filesystem::exists(path)) throw InputError("features file '" + path + "' not found");
  return load_image_features(path);
}

std::vector<Caption> read_captions(const std::string& path) {
  if (!std::filesystem::exists(path)) throw InputError("captions file '" + path + "' not found");
  return load_captions(path);
}

json to_json(const BundleConfig& c) {
  return {{"substitute_rate", c.substitute.rate},
          {"substitute_exact_count", c.substitute.exact_count},
          {"hard_prob", c.hard_prob},
          {"repeat_remove_rate", c.repeat_remove_rate},
          {"max_retries", c.max_retries}};
}

BundleConfig bundle_config_from_json(const json& j) {
  BundleConfig c;
  c.substitute.rate = j.value("substitute_rate", c.substitute.rate);
  c.substitute.exact_count = j.value("substitute_exact_count", c.substitute.exact_count);
  c.hard_prob = j.value("hard_prob", c.hard_prob);
  c.repeat_remove_rate = j.value("repeat_remove_rate", c.repeat_remove_rate);
  c.max_retries = j.value("max_retries", c.max_retries);
  const auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(c.substitute.rate) || !in_unit(c.hard_prob) || !in_unit(c.repeat_remove_rate)) {
    throw InputError("negative rates and probabilities must lie in [0, 1]");
  }
  if (c.max_retries < 1) throw InputError("max_retries must be at least 1");
  return c;
}

std::vector<std::pair<std::string, std::string>> parse_named(
    const std::vector<std::string>& values, const std::string& option) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& v : values) {
    const auto eq = v.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == v.size()) {
      throw InputError(option + " expects NAME=VALUE, got '" + v + "'");
    }
    out.emplace_back(v.substr(0, eq), v.substr(eq + 1));
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace umiclab::cli
