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

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "commands.hpp"
#include "common.hpp"
#include "umiclab/logging.hpp"
#include "umiclab/random.hpp"

namespace umiclab::cli {

namespace {

std::uint64_t fingerprint(const FeatureStore& store, std::size_t k) {
  std::uint64_t h = fnv1a("simindex") ^ k;
  for (const auto& [id, f] : store) {
    h = fnv1a(id, h);
    const auto bytes = [&](const auto& m) {
      return std::string_view(reinterpret_cast<const char*>(m.data()),
                              static_cast<std::size_t>(m.size()) * sizeof(float));
    };
    h = fnv1a(bytes(f.regions), h);
    h = fnv1a(bytes(f.boxes), h);
  }
  return h;
}

// Loads the index from UMICLAB_CACHE when a matching entry exists, and
// stores freshly built ones there.
SimilarityIndex cached_index(const FeatureStore& store, std::size_t k) {
  const char* dir = std::getenv("UMICLAB_CACHE");
  if (!dir || !*dir) return build_similarity_index(store, k);
  char name[40];
  std::snprintf(name, sizeof name, "simindex-%016llx.json",
                static_cast<unsigned long long>(fingerprint(store, k)));
  const std::filesystem::path path = std::filesystem::path(dir) / name;
  if (std::ifstream in(path); in) {
    try {
      return SimilarityIndex::from_json(json::parse(in));
    } catch (const std::exception& e) {
      warn("cache", "ignoring unreadable cache entry '" + path.string() + "': " + e.what());
    }
  }
  SimilarityIndex index = build_similarity_index(store, k);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  try {
    write_text(path, index.to_json().dump() + "\n");
  } catch (const std::exception& e) {
    warn("cache", e.what());
  }
  return index;
}

}  // namespace

int cmd_gen_negatives(const Common& common, const GenNegativesOptions& opts, std::ostream& out) {
  Run run("gen-negatives", common.out_dir,
          std::filesystem::path(opts.output).stem().string());
  const json config = load_config(common.config);
  const BundleConfig bundle_config = bundle_config_from_json(config.value("negatives", json::object()));
  const std::size_t k = config.value("neighbors", std::size_t{3});
  run.config({{"negatives", to_json(bundle_config)}, {"neighbors", k}});
  run.seed(common.seed);
  run.input("captions", opts.captions);
  run.input("features", opts.features);

  const FeatureStore features = read_features(opts.features);
  const auto captions = read_captions(opts.captions);
  if (captions.empty()) throw InputError("captions file '" + opts.captions + "' is empty");
  std::vector<Caption> lexicon_source = captions;
  if (!opts.lexicon_captions.empty()) {
    run.input("lexicon_captions", opts.lexicon_captions);
    lexicon_source = read_captions(opts.lexicon_captions);
  }
  const PosLexicon lexicon = build_pos_lexicon(lexicon_source, RuleTagger());

  FeatureStore subset;
  try {
    subset = features.subset(image_ids_of(captions));
  } catch (const InvariantError& e) {
    throw InputError(std::string(e.what()) + " in '" + opts.features + "'");
  }
  const SimilarityIndex index = cached_index(subset, k);
  const auto bundles =
      make_bundles(captions, subset, lexicon, bundle_config, common.seed, &index, common.jobs);
  write_bundles(run.output("bundles", opts.output).string(), bundles);
  run.finish();

  std::size_t fallbacks = 0;
  for (const auto& b : bundles) {
    for (const auto& n : b.negatives) fallbacks += n.fallback ? 1 : 0;
  }
  out << "wrote " << bundles.size() << " bundles (" << fallbacks << " fallback negatives)\n";
  return kExitOk;
}

}  // namespace umiclab::cli
