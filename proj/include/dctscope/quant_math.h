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

// Scalar quantization, double quantization and coefficient histograms.

#ifndef DCTSCOPE_QUANT_MATH_H_
#define DCTSCOPE_QUANT_MATH_H_

#include <cstdint>
#include <string>
#include <vector>

#include "dctscope/jpeg_types.h"

namespace dctscope {

// [u / q] under `rounding`. Requires q >= 1.
int64_t Quantize(double u, int q,
                 RoundingMode rounding = RoundingMode::kNearestTiesUp);

// q * v.
int64_t Dequantize(int64_t v, int q);

// Quantize at q1, dequantize, quantize at q2.
int64_t DoubleQuantize(double u, int q1, int q2,
                       RoundingMode rounding = RoundingMode::kNearestTiesUp);

// Closed-form count of original bins feeding bin u2 after quantizing at q1
// and then q2:
//   n(u2) = q1 * (floor(r (u2 + 1/2)) - ceil(r (u2 - 1/2)) + 1),  r = q2/q1
// clamped below at 0. The interval is treated as closed, so a first-stage
// bin whose requantized value falls exactly on a rounding tie is credited to
// both neighbouring output bins. The result is symmetric, n(-u2) = n(u2), and
// its zero set is exactly the set of empty bins.
int64_t BinContribution(int64_t u2, int q1, int q2);

// Exact number of integers u with DoubleQuantize(u, q1, q2, rounding) == u2.
// Agrees with BinContribution except on tie bins.
int64_t ExactBinContribution(
    int64_t u2, int q1, int q2,
    RoundingMode rounding = RoundingMode::kNearestTiesUp);

// Period of the double-quantization bin pattern: q1 / gcd(q1, q2).
int Periodicity(int q1, int q2);

struct Frequency {
  int row = 0;
  int col = 0;
  bool operator==(const Frequency&) const = default;
};

inline constexpr int kDefaultHistogramBound = 60;

// Tally of one frequency's quantized values over all blocks.
struct Histogram {
  Frequency frequency;
  int bound = kDefaultHistogramBound;
  // counts[v + bound] for v in [-bound, bound].
  std::vector<int64_t> counts;
  int64_t overflow_low = 0;   // v < -bound
  int64_t overflow_high = 0;  // v > bound

  int64_t count(int v) const {
    return (v < -bound || v > bound) ? 0 : counts[v + bound];
  }
  int64_t total() const;
  int nonzero_bins() const;
};

// Errors: kOutOfRange for a frequency outside [0,7]^2 or bound < 1.
Histogram BuildHistogram(const CoeffGrid& grid, Frequency frequency,
                         int bound = kDefaultHistogramBound);

// "bin,count" rows for v in [-bound, bound]; overflow as "<-B" and ">B".
std::string HistogramToCsv(const Histogram& h);

struct PeriodStrengthOptions {
  // Fewer nonzero bins than this raises kDegenerateHistogram.
  int min_nonzero_bins = 5;
  // Bins whose expected single-compression count is below this carry no
  // emptiness evidence and are skipped.
  double min_expected_count = 3.0;
};

// Correlation in [-1, 1] between the observed emptiness of each bin and the
// empty-bin pattern BinContribution predicts for (candidate_q1, q2).
// Observed emptiness is max(0, 1 - h(v) / E(v)) where E is the count under a
// Laplacian fitted to the histogram by maximum likelihood. Returns 0 when
// either pattern is constant over the evaluated bins (for example q1 = q2).
double PeriodStrength(const Histogram& h, int candidate_q1, int q2,
                      const PeriodStrengthOptions& options = {});

// Maximum-likelihood Laplace scale for the dequantized values q2 * v
// (mean absolute value), floored at q2 / 4.
double LaplaceScale(const Histogram& h, int q2);

// Probability that a Laplace(0, b) variable lies in [lo, hi).
double LaplaceMass(double lo, double hi, double b);

}  // namespace dctscope

#endif  // DCTSCOPE_QUANT_MATH_H_
