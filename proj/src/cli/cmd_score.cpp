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

#include <fstream>
#include <map>
#include <optional>
#include <set>

#include "commands.hpp"
#include "common.hpp"
#include "umiclab/baselines.hpp"
#include "umiclab/parallel.hpp"
#include "umiclab/scorer.hpp"

namespace umiclab::cli {

namespace {

struct Item {
  Caption candidate;
  std::vector<Caption> references;
};

std::vector<Item> gather_items(const ScoreOptions& opts, Run& run) {
  const int sources = !opts.captions.empty() + !opts.judgments.empty() + !opts.triplets.empty();
  if (sources != 1) throw InputError("give exactly one of --captions, --judgments, --triplets");
  std::vector<Item> items;
  const auto require = [](const std::string& path) {
    if (!std::filesystem::exists(path)) throw InputError("input '" + path + "' not found");
  };
  if (!opts.captions.empty()) {
    run.input("captions", opts.captions);
    const auto captions = read_captions(opts.captions);
    std::map<std::string, std::vector<Caption>> refs;
    if (!opts.references.empty()) {
      run.input("references", opts.references);
      for (auto& c : read_captions(opts.references)) refs[c.image_id].push_back(std::move(c));
    }
    for (const auto& c : captions) {
      Item item{c, {}};
      for (const auto& r : refs[c.image_id]) {
        if (r.caption_id != c.caption_id) item.references.push_back(r);
      }
      items.push_back(std::move(item));
    }
  } else if (!opts.judgments.empty()) {
    require(opts.judgments);
    run.input("judgments", opts.judgments);
    for (auto& r : load_judgments(opts.judgments)) {
      items.push_back({std::move(r.candidate), std::move(r.references)});
    }
  } else {
    require(opts.triplets);
    run.input("triplets", opts.triplets);
    for (auto& t : load_triplets(opts.triplets)) {
      items.push_back({std::move(t.candidate_b), t.references_a});
      items.push_back({std::move(t.candidate_c), std::move(t.references_a)});
    }
  }
  return items;
}

std::vector<Tokens> reference_tokens(const Item& item, std::size_t max_refs) {
  std::vector<Tokens> out;
  for (std::size_t i = 0; i < item.references.size() && i < max_refs; ++i) {
    out.push_back(item.references[i].tokens);
  }
  return out;
}

}  // namespace

int cmd_score(const Common& common, const ScoreOptions& opts, std::ostream& out) {
  Run run("score", common.out_dir, std::filesystem::path(opts.output).stem().string());
  if (opts.metrics.empty()) throw InputError("--metrics is empty");
  if (opts.max_refs < 1) throw InputError("--max-refs must be at least 1");
  Aggregation mode;
  if (opts.aggregation == "average") {
    mode = Aggregation::kAverage;
  } else if (opts.aggregation == "max") {
    mode = Aggregation::kMax;
  } else {
    throw InputError("--aggregation must be average or max");
  }
  std::vector<std::optional<BaselineMetric>> metrics;  // nullopt = umic
  for (const auto& m : opts.metrics) {
    if (m == "umic") {
      metrics.emplace_back();
      continue;
    }
    try {
      metrics.emplace_back(baseline_metric_from_string(m));
    } catch (const Error& e) {
      throw InputError(e.what());
    }
  }
  run.config({{"metrics", opts.metrics},
              {"aggregation", opts.aggregation},
              {"max_refs", opts.max_refs}});

  const auto items = gather_items(opts, run);
  const auto max_refs = static_cast<std::size_t>(opts.max_refs);

  std::optional<Scorer> model;
  std::optional<FeatureStore> features;
  const bool wants_umic =
      std::any_of(metrics.begin(), metrics.end(), [](const auto& m) { return !m.has_value(); });
  if (wants_umic) {
    if (opts.checkpoint.empty()) throw InputError("umic scores need --checkpoint");
    if (!std::filesystem::exists(opts.checkpoint)) {
      throw InputError("checkpoint '" + opts.checkpoint + "' not found");
    }
    run.input("checkpoint", opts.checkpoint);
    run.input("features", opts.features);
    model = load_checkpoint<float>(opts.checkpoint);
    features = read_features(opts.features);
  }

  std::optional<CiderCorpusStats> cider_stats;
  std::string cider_error;
  if (std::any_of(metrics.begin(), metrics.end(),
                  [](const auto& m) { return m == BaselineMetric::kCider; })) {
    std::vector<std::vector<Tokens>> documents;
    std::set<std::string> seen;
    for (const auto& item : items) {
      if (item.references.empty() || !seen.insert(item.candidate.image_id).second) continue;
      documents.push_back(reference_tokens(item, max_refs));
    }
    if (documents.size() < 2) {
      cider_error = "CIDEr needs references for at least two images";
    } else {
      cider_stats.emplace(documents);
    }
  }

  // One cell per (item, metric); a cell holds a score or an error.
  struct Cell {
    double score = 0.0;
    std::string error;
  };
  std::vector<Cell> cells(items.size() * metrics.size());
  parallel_chunks(items.size(), common.jobs, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (std::size_t i = begin; i < end; ++i) {
      const Item& item = items[i];
      for (std::size_t m = 0; m < metrics.size(); ++m) {
        Cell& cell = cells[i * metrics.size() + m];
        try {
          if (!metrics[m]) {
            const ImageFeatures* f = features->find(item.candidate.image_id);
            if (!f) {
              cell.error = "no features for image '" + item.candidate.image_id + "'";
              continue;
            }
            cell.score = static_cast<double>(model->score(*f, item.candidate));
          } else if (item.references.empty()) {
            cell.error = "no references";
          } else if (*metrics[m] == BaselineMetric::kCider && !cider_stats) {
            cell.error = cider_error;
          } else {
            cell.score = score_against_references(*metrics[m], item.candidate.tokens,
                                                  reference_tokens(item, max_refs),
                                                  cider_stats ? &*cider_stats : nullptr, mode,
                                                  max_refs);
          }
        } catch (const Error& e) {
          cell.error = e.what();
        }
      }
    }
  });

  const auto path = run.output("scores", opts.output);
  std::ofstream file(path);
  if (!file) throw IoError("cannot write '" + path.string() + "'");
  std::size_t errors = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      const Cell& cell = cells[i * metrics.size() + m];
      json record{{"caption_id", items[i].candidate.caption_id}, {"metric", opts.metrics[m]}};
      if (cell.error.empty()) {
        record["score"] = cell.score;
      } else {
        record["error"] = cell.error;
        ++errors;
      }
      file << record.dump() << '\n';
    }
  }
  file.close();
  run.finish();
  out << "scored " << items.size() << " captions with " << metrics.size() << " metric(s)";
  if (errors > 0) out << ", " << errors << " error(s)";
  out << "\n";
  return errors > 0 ? kExitInput : kExitOk;
}

}  // namespace umiclab::cli
