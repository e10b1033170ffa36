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

#include <algorithm>
#include <map>

#include "commands.hpp"
#include "common.hpp"
#include "umiclab/evalstats.hpp"
#include "umiclab/json_io.hpp"

namespace umiclab::cli {

namespace {

using ScoreTable = std::map<std::string, std::map<std::string, double>>;  // metric -> id -> score

ScoreTable read_scores(const std::string& path) {
  if (!std::filesystem::exists(path)) throw InputError("scores file '" + path + "' not found");
  ScoreTable table;
  json_io::for_each_jsonl(path, [&](const json& j, std::size_t line) {
    if (!j.contains("score")) return;  // error entries from `score`
    const auto id = j.at("caption_id").get<std::string>();
    const auto metric = j.at("metric").get<std::string>();
    if (!table[metric].emplace(id, j.at("score").get<double>()).second) {
      throw ParseError(path, line, "duplicate score for '" + id + "' under " + metric);
    }
  });
  return table;
}

TauVariant default_variant(const std::string& dataset) {
  std::string lower = dataset;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower.find("flickr") != std::string::npos ? TauVariant::kTauC : TauVariant::kTauB;
}

std::vector<double> lookup(const std::map<std::string, double>& scores,
                           const std::vector<std::string>& ids, const std::string& what) {
  std::vector<double> out;
  std::vector<std::string> missing;
  for (const auto& id : ids) {
    const auto it = scores.find(id);
    if (it == scores.end()) {
      missing.push_back(id);
    } else {
      out.push_back(it->second);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) list += (i ? ", " : "") + missing[i];
    if (missing.size() > 10) list += ", ...";
    throw InputError(what + ": " + std::to_string(missing.size()) + " caption id(s) without scores: " +
                     list);
  }
  return out;
}

}  // namespace

int cmd_eval(const Common& common, const EvalOptions& opts, std::ostream& out) {
  Run run("eval", common.out_dir);
  const auto judgments = parse_named(opts.judgments, "--judgments");
  const auto triplets = parse_named(opts.triplets, "--triplets");
  if (judgments.empty() && triplets.empty()) {
    throw InputError("give at least one --judgments or --triplets dataset");
  }
  std::map<std::string, std::string> score_paths;
  for (const auto& [name, path] : parse_named(opts.scores, "--scores")) score_paths[name] = path;
  std::map<std::string, TauVariant> variants;
  for (const auto& [name, v] : parse_named(opts.variants, "--variant")) {
    try {
      variants[name] = tau_variant_from_string(v);
    } catch (const Error& e) {
      throw InputError(e.what());
    }
  }
  const TiePolicy ties = opts.strict_ties ? TiePolicy::kStrict : TiePolicy::kHalfCredit;

  json variant_config = json::object();
  for (const auto& [name, path] : judgments) {
    if (!variants.count(name)) variants[name] = default_variant(name);
    variant_config[name] = std::string(to_string(variants[name]));
  }
  run.config({{"variants", variant_config},
              {"human", opts.human},
              {"ties", opts.strict_ties ? "strict" : "half"}});

  const auto scores_for = [&](const std::string& name) {
    ScoreTable table;
    if (const auto it = score_paths.find(name); it != score_paths.end()) {
      run.input("scores_" + name, it->second);
      table = read_scores(it->second);
    } else if (!opts.human) {
      throw InputError("no --scores given for dataset '" + name + "'");
    }
    return table;
  };

  std::vector<MetricReport> reports;
  for (const auto& [name, path] : judgments) {
    if (!std::filesystem::exists(path)) throw InputError("judgments '" + path + "' not found");
    run.input("judgments_" + name, path);
    const auto records = load_judgments(path);
    if (records.size() < 2) throw InputError("judgments '" + path + "' hold fewer than two records");
    std::vector<std::string> ids;
    std::vector<double> human;
    for (const auto& r : records) {
      ids.push_back(r.candidate.caption_id);
      human.push_back(r.normalized);
    }
    ScoreTable table = scores_for(name);
    if (opts.human) {
      for (std::size_t i = 0; i < ids.size(); ++i) table["human"][ids[i]] = human[i];
    }
    for (const auto& [metric, scores] : table) {
      const auto x = lookup(scores, ids, name + "/" + metric);
      const auto r = variants[name] == TauVariant::kTauC ? kendall_tau_c(x, human)
                                                         : kendall_tau_b(x, human);
      reports.push_back(correlation_report(name, metric, r));
    }
  }
  for (const auto& [name, path] : triplets) {
    if (!std::filesystem::exists(path)) throw InputError("triplets '" + path + "' not found");
    run.input("triplets_" + name, path);
    const auto records = load_triplets(path);
    if (records.empty()) throw InputError("triplets '" + path + "' are empty");
    std::vector<std::string> b_ids, c_ids;
    for (const auto& t : records) {
      b_ids.push_back(t.candidate_b.caption_id);
      c_ids.push_back(t.candidate_c.caption_id);
    }
    for (const auto& [metric, scores] : scores_for(name)) {
      MetricReport r;
      r.dataset = name;
      r.metric = metric;
      r.n = static_cast<long>(records.size());
      r.value = pascal_accuracy(lookup(scores, b_ids, name + "/" + metric),
                                lookup(scores, c_ids, name + "/" + metric), records, ties);
      reports.push_back(r);
    }
  }

  json array = json::array();
  for (const auto& r : reports) array.push_back(r.to_json());
  write_text(run.output("report", "report.json"), array.dump(2) + "\n");
  const std::string table = markdown_table(reports);
  write_text(run.output("table", "report.md"), table);
  run.finish();
  out << table;
  return kExitOk;
}

}  // namespace umiclab::cli
