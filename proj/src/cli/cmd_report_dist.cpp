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

#include "commands.hpp"
#include "common.hpp"
#include "umiclab/evalstats.hpp"

namespace umiclab::cli {

int cmd_report_dist(const Common& common, const ReportDistOptions& opts, std::ostream& out) {
  Run run("report-dist", common.out_dir);
  const auto datasets = parse_named(opts.judgments, "--judgments");
  if (datasets.empty()) throw InputError("give at least one --judgments NAME=PATH");
  if (opts.bins < 1) throw InputError("--bins must be at least 1");
  run.config({{"bins", opts.bins}});

  json summary = json::object();
  for (const auto& [name, path] : datasets) {
    if (!std::filesystem::exists(path)) throw InputError("judgments '" + path + "' not found");
    run.input(name, path);
    const auto records = load_judgments(path);
    std::vector<double> scores;
    for (const auto& r : records) scores.push_back(r.normalized);
    const auto counts = score_histogram(scores, opts.bins);
    write_text(run.output(name, name + "_hist.csv"), histogram_csv(counts));

    json entry{{"n", records.size()}, {"counts", counts}};
    const auto n = static_cast<double>(records.size());
    if (n > 0) {
      entry["outer_mass"] =
          static_cast<double>(counts.front() + (counts.size() > 1 ? counts.back() : 0)) / n;
    }
    try {
      entry["krippendorff_alpha"] = krippendorff_alpha(RatingsMatrix::from_judgments(records));
    } catch (const Error&) {
      entry["krippendorff_alpha"] = nullptr;  // single rater or no variation
    }
    summary[name] = entry;
    out << name << ": " << records.size() << " records";
    if (entry.contains("outer_mass")) out << ", outer-bin mass " << entry["outer_mass"].get<double>();
    out << "\n";
  }
  write_text(run.output("summary", "distribution.json"), summary.dump(2) + "\n");
  run.finish();
  return kExitOk;
}

}  // namespace umiclab::cli
