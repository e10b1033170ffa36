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

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "umiclab/cli.hpp"

namespace umiclab::cli {

struct Common {
  std::uint64_t seed = 0;
  std::string config;
  int jobs = 1;
  std::string out_dir = ".";
};

struct SynthOptions {
  int images = 250;
  int train_images = 200;
  int captions_per_image = 5;
  int regions = 4;
  int dim = 64;
  double noise = 0.1;
  int fixture_records = 0;  // 0 skips the judgment/triplet fixtures
};

struct GenNegativesOptions {
  std::string captions;
  std::string features;
  std::string lexicon_captions;  // defaults to `captions`
  std::string output = "bundles.jsonl";
};

struct TrainOptions {
  std::string train;
  std::string valid;
  std::string features;
  std::optional<int> max_steps;
  std::optional<double> learning_rate;
  std::optional<int> batch;
  std::optional<int> repetitions;
  std::optional<int> eval_every;
  std::optional<int> freeze_prefix;
};

struct ScoreOptions {
  std::string checkpoint;
  std::string features;
  std::string captions;
  std::string references;
  std::string judgments;
  std::string triplets;
  std::vector<std::string> metrics{"umic"};
  std::string aggregation = "average";
  int max_refs = 5;
  std::string output = "scores.jsonl";
};

struct EvalOptions {
  std::vector<std::string> judgments;  // NAME=PATH
  std::vector<std::string> triplets;   // NAME=PATH
  std::vector<std::string> scores;     // NAME=PATH
  std::vector<std::string> variants;   // NAME=tau_b|tau_c
  bool human = false;
  bool strict_ties = false;
};

struct ReportDistOptions {
  std::vector<std::string> judgments;  // NAME=PATH
  int bins = 10;
};

int cmd_synth(const Common& common, const SynthOptions& opts, std::ostream& out);
int cmd_gen_negatives(const Common& common, const GenNegativesOptions& opts, std::ostream& out);
int cmd_train(const Common& common, const TrainOptions& opts, std::ostream& out);
int cmd_score(const Common& common, const ScoreOptions& opts, std::ostream& out);
int cmd_eval(const Common& common, const EvalOptions& opts, std::ostream& out);
int cmd_report_dist(const Common& common, const ReportDistOptions& opts, std::ostream& out);

}  // namespace umiclab::cli
