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

#include "dctscope/eval_metrics.h"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <vector>

#include "dctscope/error.h"

namespace dctscope {
namespace {

void CheckDims(const Mask& g, const ProbabilityMap& p) {
  if (g.width != p.width || g.height != p.height) {
    throw Error(ErrorCode::kDimMismatch,
                "mask " + std::to_string(g.width) + "x" +
                    std::to_string(g.height) + " vs map " +
                    std::to_string(p.width) + "x" + std::to_string(p.height));
  }
}

}  // namespace

Confusion ComputeConfusion(const Mask& truth, const ProbabilityMap& prediction,
                           double threshold, bool flip) {
  CheckDims(truth, prediction);
  Confusion c;
  for (size_t i = 0; i < truth.size(); ++i) {
    const bool pos = (prediction.values[i] >= threshold) != flip;
    if (truth.values[i]) {
      pos ? ++c.tp : ++c.fn;
    } else {
      pos ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

double Accuracy(const Confusion& c) {
  const int64_t n = c.total();
  return n ? static_cast<double>(c.tp + c.tn) / static_cast<double>(n) : 0.0;
}

bool F1ByConvention(const Confusion& c) { return c.tp + c.fp + c.fn == 0; }

double F1Score(const Confusion& c) {
  if (F1ByConvention(c)) return 1.0;
  return static_cast<double>(2 * c.tp) /
         static_cast<double>(2 * c.tp + c.fp + c.fn);
}

double AveragePrecision(const Mask& truth, const ProbabilityMap& prediction,
                        bool reverse) {
  CheckDims(truth, prediction);
  const size_t n = truth.size();
  int64_t positives = 0;
  for (uint8_t g : truth.values) positives += g ? 1 : 0;
  if (positives == 0) {
    throw Error(ErrorCode::kNoPositives, "average precision needs positives");
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  const auto& s = prediction.values;
  if (reverse) {
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return s[a] < s[b]; });
  } else {
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return s[a] > s[b]; });
  }
  double ap = 0;
  int64_t tp = 0, fp = 0, prev_tp = 0;
  for (size_t k = 0; k < n;) {
    // Consume one group of equal scores: a single threshold.
    size_t e = k;
    while (e < n && s[order[e]] == s[order[k]]) {
      truth.values[order[e]] ? ++tp : ++fp;
      ++e;
    }
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += static_cast<double>(tp - prev_tp) / static_cast<double>(positives) *
          precision;
    prev_tp = tp;
    k = e;
  }
  return ap;
}

MetricReport EvaluateMap(const Mask& truth, const ProbabilityMap& prediction,
                         double threshold) {
  MetricReport r;
  r.counts = ComputeConfusion(truth, prediction, threshold, false);
  const Confusion flipped = ComputeConfusion(truth, prediction, threshold, true);
  r.acc = Accuracy(r.counts);
  r.p_acc = std::max(r.acc, Accuracy(flipped));
  r.f1 = F1Score(r.counts);
  r.p_f1 = std::max(r.f1, F1Score(flipped));
  r.f1_convention = F1ByConvention(r.counts);
  r.has_positives = r.counts.tp + r.counts.fn > 0;
  if (r.has_positives) {
    r.ap = AveragePrecision(truth, prediction, false);
    r.p_ap = std::max(r.ap, AveragePrecision(truth, prediction, true));
  }
  return r;
}

DatasetSummary Summarize(std::span<const MetricReport> reports) {
  DatasetSummary d;
  for (const MetricReport& r : reports) {
    ++d.images;
    d.acc += r.acc;
    d.p_acc += r.p_acc;
    if (!r.has_positives) continue;
    ++d.scored_images;
    d.f1 += r.f1;
    d.p_f1 += r.p_f1;
    d.ap += r.ap;
    d.p_ap += r.p_ap;
  }
  if (d.images) {
    d.acc /= static_cast<double>(d.images);
    d.p_acc /= static_cast<double>(d.images);
  }
  if (d.scored_images) {
    const double m = static_cast<double>(d.scored_images);
    d.f1 /= m;
    d.p_f1 /= m;
    d.ap /= m;
    d.p_ap /= m;
  }
  return d;
}

std::string MetricCsvHeader() {
  return "acc,f1,ap,p_acc,p_f1,p_ap,tp,tn,fp,fn,has_positives";
}

std::string MetricCsvRow(const MetricReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << r.acc << "," << r.f1 << "," << r.ap << "," << r.p_acc << "," << r.p_f1
     << "," << r.p_ap << "," << r.counts.tp << "," << r.counts.tn << ","
     << r.counts.fp << "," << r.counts.fn << "," << (r.has_positives ? 1 : 0);
  return os.str();
}

}  // namespace dctscope
