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

// Pixel-level segmentation metrics and their class-permuted variants.
//
// Conventions:
//  - a pixel is predicted positive iff score >= threshold (default 0.5);
//  - the permuted Acc/F1 flip every binary decision, the permuted AP ranks
//    pixels by ascending score;
//  - F1 is 1 when TP = FP = FN = 0 (flagged in the report);
//  - AP is undefined without positives; such images are left out of the F1
//    and AP dataset averages and contribute Acc / p-Acc only.

#ifndef DCTSCOPE_EVAL_METRICS_H_
#define DCTSCOPE_EVAL_METRICS_H_

#include <cstdint>
#include <span>
#include <string>

#include "dctscope/plane.h"

namespace dctscope {

// Per-pixel tamper confidence in [0, 1].
using ProbabilityMap = Plane<double>;

inline constexpr double kDefaultThreshold = 0.5;

struct Confusion {
  int64_t tp = 0;
  int64_t tn = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  int64_t total() const { return tp + tn + fp + fn; }
  bool operator==(const Confusion&) const = default;
};

// Errors: kDimMismatch. With `flip` every decision is inverted.
Confusion ComputeConfusion(const Mask& truth, const ProbabilityMap& prediction,
                           double threshold = kDefaultThreshold,
                           bool flip = false);

double Accuracy(const Confusion& c);
// 2TP / (2TP + FP + FN); 1 when the denominator is zero.
double F1Score(const Confusion& c);
bool F1ByConvention(const Confusion& c);

// Area under the precision-recall curve, all-points step interpolation over
// the distinct scores, descending (ascending when `reverse`).
// Errors: kDimMismatch, kNoPositives.
double AveragePrecision(const Mask& truth, const ProbabilityMap& prediction,
                        bool reverse = false);

struct MetricReport {
  double acc = 0;
  double f1 = 0;
  double ap = 0;
  double p_acc = 0;
  double p_f1 = 0;
  double p_ap = 0;
  Confusion counts;
  bool has_positives = false;
  bool f1_convention = false;
};

MetricReport EvaluateMap(const Mask& truth, const ProbabilityMap& prediction,
                         double threshold = kDefaultThreshold);

struct DatasetSummary {
  int64_t images = 0;
  int64_t scored_images = 0;  // with at least one positive pixel
  double acc = 0;
  double p_acc = 0;
  double f1 = 0;
  double p_f1 = 0;
  double ap = 0;
  double p_ap = 0;
};

// Unweighted per-image means.
DatasetSummary Summarize(std::span<const MetricReport> reports);

// "acc,f1,ap,p_acc,p_f1,p_ap,tp,tn,fp,fn,has_positives" header and rows.
std::string MetricCsvHeader();
std::string MetricCsvRow(const MetricReport& r);

}  // namespace dctscope

#endif  // DCTSCOPE_EVAL_METRICS_H_
