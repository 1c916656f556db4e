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

// Aligned double-quantization localizer. Estimates the primary quantization
// step per frequency from empty-bin patterns, then scores every block by a
// naive-Bayes likelihood ratio between a single-compression Laplacian model
// and the double-compression model built from it.

#ifndef DCTSCOPE_ADQ_LOCALIZER_H_
#define DCTSCOPE_ADQ_LOCALIZER_H_

#include <string>
#include <vector>

#include "dctscope/eval_metrics.h"
#include "dctscope/jpeg_codec.h"
#include "dctscope/quant_math.h"

namespace dctscope {

struct AdqConfig {
  // Lowest AC frequencies in zig-zag order (positions 1..frequency_count).
  int frequency_count = 9;
  int min_blocks = 256;
  int candidate_min = 1;
  int candidate_max = 16;
  // Confidence is the mean of the best `top_k` per-frequency scores.
  int top_k = 3;
  // Estimates (overall and per frequency) scoring below this are unreliable.
  // Calibrated on synthetic single vs (70, 90) double images; see
  // tests/adq_localizer_test.cc.
  double reliability_threshold = 0.6;
  // A candidate counts only if the bins it predicts empty are expected to
  // hold at least this many values under the Laplacian fit...
  double min_empty_expected = 20.0;
  // ...and actually hold at most this fraction of that expectation.
  double max_empty_ratio = 0.3;
  int histogram_bound = kDefaultHistogramBound;
  double smoothing = 1.0;
  double max_log_ratio = 8.0;
  double prior_single = 0.5;
  // Standard deviation of the pixel-domain rounding error seen by a
  // coefficient between the two compressions: sqrt(1/12).
  double requant_noise = 0.28867513459481287;
  // Detect values sitting on a coarser lattice when the stored step is 1
  // (a quality-100 re-save of an earlier JPEG) and analyze them at that
  // lattice step.
  bool fold_lattice = true;
  // Blocks whose decoded pixels reach this distance from 0 or 255 were
  // probably clipped after the first decompression, which moves their
  // coefficients off the double-quantization lattice. They get the prior.
  // Negative disables.
  int saturation_margin = 0;
  // Weight of the 3x3 block-neighbourhood mean mixed into each block's
  // posterior. 0 leaves the per-block posterior untouched.
  double neighbour_weight = 0.5;
};

struct FrequencyEstimate {
  Frequency frequency;
  int q2 = 1;         // step stored in the file
  int effective_q2 = 1;  // q2 times the detected lattice factor
  int q1 = 1;         // best candidate primary step
  double score = 0;   // PeriodStrength of q1, in [-1, 1]
  bool reliable = false;
};

struct Q1Estimate {
  std::vector<FrequencyEstimate> frequencies;
  double confidence = 0;
  bool reliable = false;
  int blocks = 0;
};

// The frequencies analyzed under `config`, in zig-zag order.
std::vector<Frequency> AnalysisFrequencies(const AdqConfig& config = {});

// Errors: kInsufficientData when the image has fewer than config.min_blocks
// blocks; kConfig for an invalid configuration.
Q1Estimate EstimateQ1(const JpegModel& model, const AdqConfig& config = {});

struct PosteriorMap {
  // Per-pixel P(single | block), i.e. tamper confidence. Pixel dimensions.
  ProbabilityMap pixels;
  // One value per block.
  ProbabilityMap blocks;
  bool unreliable = false;
  std::string warning;
};

// With an unreliable estimate the map is 0.5 everywhere and flagged.
PosteriorMap BlockPosteriorMap(const JpegModel& model, const Q1Estimate& est,
                               const AdqConfig& config = {});

// Model probabilities of one quantized value under each hypothesis, after
// smoothing. Exposed for tests.
struct BinLikelihood {
  std::vector<double> single;  // index v + bound
  std::vector<double> dbl;
  int bound = 0;
};
BinLikelihood ComputeBinLikelihood(double laplace_scale, int q1, int q2,
                                   int64_t sample_count, const AdqConfig& config);

// Lattice factor s >= 2 when the histogram of a step-1 frequency lives on
// multiples of s, else 1.
int DetectLattice(const Histogram& h);

}  // namespace dctscope

#endif  // DCTSCOPE_ADQ_LOCALIZER_H_
