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

#include "dctscope/quant_math.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>

#include "dctscope/error.h"

namespace dctscope {
namespace {

int64_t FloorDiv(int64_t a, int64_t b) {
  int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int64_t CeilDiv(int64_t a, int64_t b) { return -FloorDiv(-a, b); }

// Rounds num/den (den > 0) exactly.
int64_t RoundRational(int64_t num, int64_t den, RoundingMode mode) {
  switch (mode) {
    case RoundingMode::kNearestTiesUp:
      return FloorDiv(2 * num + den, 2 * den);
    case RoundingMode::kTowardZero:
      return num / den;
    case RoundingMode::kNearestTiesAway: {
      const int64_t m = FloorDiv(2 * std::abs(num) + den, 2 * den);
      return num < 0 ? -m : m;
    }
  }
  return 0;
}

// Number of integers u with RoundRational(u, q, mode) == v.
int64_t PreimageSize(int64_t v, int q, RoundingMode mode) {
  switch (mode) {
    case RoundingMode::kNearestTiesUp:
      // 2qv - q <= 2u < 2qv + q
      return CeilDiv(2 * q * v + q, 2) - CeilDiv(2 * q * v - q, 2);
    case RoundingMode::kTowardZero:
      return v == 0 ? 2 * q - 1 : q;
    case RoundingMode::kNearestTiesAway:
      if (v == 0) return (q % 2) ? q : q - 1;
      return PreimageSize(std::abs(v), q, RoundingMode::kNearestTiesUp);
  }
  return 0;
}

}  // namespace

int64_t Quantize(double u, int q, RoundingMode rounding) {
  return RoundWithMode(u / q, rounding);
}

int64_t Dequantize(int64_t v, int q) { return v * q; }

int64_t DoubleQuantize(double u, int q1, int q2, RoundingMode rounding) {
  const int64_t v1 = Quantize(u, q1, rounding);
  return RoundRational(Dequantize(v1, q1), q2, rounding);
}

int64_t BinContribution(int64_t u2, int q1, int q2) {
  // floor(q2 (2 u2 + 1) / (2 q1)) - ceil(q2 (2 u2 - 1) / (2 q1)) + 1
  const int64_t hi = FloorDiv(int64_t{q2} * (2 * u2 + 1), 2 * int64_t{q1});
  const int64_t lo = CeilDiv(int64_t{q2} * (2 * u2 - 1), 2 * int64_t{q1});
  return std::max<int64_t>(0, q1 * (hi - lo + 1));
}

int64_t ExactBinContribution(int64_t u2, int q1, int q2,
                             RoundingMode rounding) {
  // Any v1 reaching u2 satisfies |v1 q1 / q2 - u2| < 1.
  const int64_t lo = FloorDiv((u2 - 1) * q2, q1) - 1;
  const int64_t hi = CeilDiv((u2 + 1) * q2, q1) + 1;
  int64_t n = 0;
  for (int64_t v1 = lo; v1 <= hi; ++v1) {
    if (RoundRational(v1 * q1, q2, rounding) == u2) {
      n += PreimageSize(v1, q1, rounding);
    }
  }
  return n;
}

int Periodicity(int q1, int q2) { return q1 / std::gcd(q1, q2); }

int64_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), int64_t{0}) +
         overflow_low + overflow_high;
}

int Histogram::nonzero_bins() const {
  return static_cast<int>(
      std::count_if(counts.begin(), counts.end(), [](int64_t c) { return c; }));
}

Histogram BuildHistogram(const CoeffGrid& grid, Frequency f, int bound) {
  if (f.row < 0 || f.row > 7 || f.col < 0 || f.col > 7 || bound < 1) {
    throw Error(ErrorCode::kOutOfRange, "bad histogram frequency or bound");
  }
  Histogram h;
  h.frequency = f;
  h.bound = bound;
  h.counts.assign(2 * bound + 1, 0);
  for (int by = 0; by < grid.blocks_high(); ++by) {
    for (int bx = 0; bx < grid.blocks_wide(); ++bx) {
      const int v = grid.coeff(bx, by, f.row, f.col);
      if (v < -bound) {
        ++h.overflow_low;
      } else if (v > bound) {
        ++h.overflow_high;
      } else {
        ++h.counts[v + bound];
      }
    }
  }
  return h;
}

std::string HistogramToCsv(const Histogram& h) {
  std::ostringstream os;
  os << "bin,count\n";
  os << "<" << -h.bound << "," << h.overflow_low << "\n";
  for (int v = -h.bound; v <= h.bound; ++v) os << v << "," << h.count(v) << "\n";
  os << ">" << h.bound << "," << h.overflow_high << "\n";
  return os.str();
}

double LaplaceMass(double lo, double hi, double b) {
  auto cdf = [b](double x) {
    return x < 0 ? 0.5 * std::exp(x / b) : 1.0 - 0.5 * std::exp(-x / b);
  };
  return std::max(0.0, cdf(hi) - cdf(lo));
}

double LaplaceScale(const Histogram& h, int q2) {
  const int64_t n = h.total();
  double sum = 0;
  for (int v = -h.bound; v <= h.bound; ++v) {
    sum += static_cast<double>(h.count(v)) * std::abs(v);
  }
  sum += static_cast<double>(h.overflow_low + h.overflow_high) * (h.bound + 1);
  const double b = n ? q2 * sum / static_cast<double>(n) : 0.0;
  return std::max(b, q2 / 4.0);
}

double PeriodStrength(const Histogram& h, int candidate_q1, int q2,
                      const PeriodStrengthOptions& options) {
  if (candidate_q1 < 1 || q2 < 1) {
    throw Error(ErrorCode::kOutOfRange, "quantization step below 1");
  }
  if (h.nonzero_bins() < options.min_nonzero_bins) {
    throw Error(ErrorCode::kDegenerateHistogram,
                "histogram has " + std::to_string(h.nonzero_bins()) +
                    " nonzero bins");
  }
  const double n = static_cast<double>(h.total());
  const double b = LaplaceScale(h, q2);
  std::vector<double> observed, predicted;
  for (int v = -h.bound; v <= h.bound; ++v) {
    if (v == 0) continue;
    const double expected = n * LaplaceMass(q2 * (v - 0.5), q2 * (v + 0.5), b);
    if (expected < options.min_expected_count) continue;
    observed.push_back(
        std::max(0.0, 1.0 - static_cast<double>(h.count(v)) / expected));
    predicted.push_back(BinContribution(v, candidate_q1, q2) == 0 ? 1.0 : 0.0);
  }
  const size_t m = observed.size();
  if (m < 2) return 0.0;
  const double mx = std::accumulate(observed.begin(), observed.end(), 0.0) / m;
  const double my =
      std::accumulate(predicted.begin(), predicted.end(), 0.0) / m;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < m; ++i) {
    const double dx = observed[i] - mx, dy = predicted[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0 || syy <= 0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace dctscope
