// Copyright 2026 The dctscope Authors
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

// Command-line front end: analyze, synth, train, eval, qgrid. The job
// descriptions and runners are exposed so tests drive the same code paths.

#ifndef DCTSCOPE_TOOLS_CLI_H_
#define DCTSCOPE_TOOLS_CLI_H_

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dctscope/adq_localizer.h"
#include "dctscope/eval_metrics.h"
#include "dctscope/forgery_synth.h"
#include "dctscope/freq_learner.h"

namespace dctscope::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

// Worker count from DCTSCOPE_WORKERS, else 1.
int DefaultWorkers();

// Runs fn(0..n-1) on up to `workers` threads. Results must be written by
// index; the first failure (lowest index) is rethrown.
void ParallelFor(size_t n, int workers, const std::function<void(size_t)>& fn);

enum class SynthKind { kSplice, kCopyMove, kDjpeg };

struct SynthConfig {
  SynthKind kind = SynthKind::kSplice;
  uint64_t seed = 5000;
  int size = 256;
  // Forgeries: one cell per (q1, q2) pair, count_per_pair samples each,
  // recipe seed = seed + index within the cell.
  std::vector<int> q1 = {60, 70, 80, 90, 100};
  std::vector<int> q2 = {60, 70, 80, 90, 100};
  int count_per_pair = 30;
  std::optional<int> q1_donor;
  AlignmentMode alignment = AlignmentMode::kRandom;
  bool rotate = false;
  bool resize = false;
  double photo_fraction = 0.5;
  // djpeg patches: `count` samples at `qualities`.
  int count = 10000;
  std::vector<int> qualities = {60, 65, 70, 75, 80, 85, 90, 95, 100};
};

// Errors: kConfig on unknown keys, wrong types or invalid values.
SynthConfig ParseSynthConfig(const Json& j);
Json SynthConfigToJson(const SynthConfig& c);

// Recipes of a forgery config in manifest order (q1-major, then q2, then
// sample index).
std::vector<SynthRecipe> ForgeryRecipes(const SynthConfig& c);
ForgerySample GenerateForgery(SynthKind kind, const SynthRecipe& r);

struct AnalysisOutcome {
  PosteriorMap map;
  std::optional<Q1Estimate> estimate;  // unset when the image is too small
};
AnalysisOutcome AnalyzeModel(const JpegModel& model, const AdqConfig& config);

struct QgridCell {
  int q1 = 0;
  int q2 = 0;
  double mean_p_ap = 0;
  double inside_above_outside = 0;  // fraction of images
  int unreliable = 0;
  int images = 0;
};

struct QgridResult {
  std::vector<int> q1s;
  std::vector<int> q2s;
  std::vector<QgridCell> cells;         // q1-major
  std::vector<ProbabilityMap> example;  // first heatmap of each cell
  const QgridCell& at(size_t i1, size_t i2) const { return cells[i1 * q2s.size() + i2]; }
};

// Localizer over a forgery config's (q1, q2) grid. `q3` recompresses every
// image before analysis.
QgridResult RunQgrid(const SynthConfig& c, const AdqConfig& adq, int workers,
                     std::optional<int> q3 = std::nullopt);

struct MonotonicityCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};
// p-AP non-increasing in q1 (fixed q2), non-decreasing in q2 (fixed q1),
// each between neighbouring qualities within `band`; diagonal (q, q) below
// (q, q + 20) for q <= 80 when both cells exist.
std::vector<MonotonicityCheck> CheckQgrid(const QgridResult& r, double band);

// Grid of example heatmaps, q1 rows and q2 columns, each downsampled by
// `shrink`, separated by white lines.
GrayImage Montage(const QgridResult& r, int shrink);

// Seed of the generated training set when the config names none.
inline constexpr uint64_t kTrainingSetSeed = 7;

// The generated training set: 10000 djpeg patches of 64 x 64.
SynthConfig DefaultTrainingSet();

struct TrainJob {
  // Dataset: a djpeg manifest, or generated from `synth` when empty.
  std::string manifest;
  SynthConfig synth = DefaultTrainingSet();
  int val_every = 5;  // every val_every-th sample goes to validation
  LearnerArch arch;
  TrainConfig train;
};
TrainJob ParseTrainJob(const Json& j);
Json TrainJobToJson(const TrainJob& t);

// Examples of a djpeg dataset split by index: i % val_every == val_every - 1
// goes to validation.
void LoadTrainData(const TrainJob& job, std::vector<TrainExample>& train,
                   std::vector<TrainExample>& val);

// Labelled examples listed in a JSON-lines manifest.
std::vector<TrainExample> LoadManifestExamples(const std::string& manifest);

Json ConfigToJson(const AdqConfig& c);
AdqConfig ParseAdqConfig(const Json& j);
Json MetricsToJson(const MetricReport& m);
Json ClassMetricsToJson(const ClassMetrics& m);

// Main entry point; returns the process exit code.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dctscope::cli

#endif  // DCTSCOPE_TOOLS_CLI_H_
