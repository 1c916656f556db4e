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

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "dctscope/error.h"

namespace dctscope {
namespace {

// Literal three-step pipeline, written independently of the library.
int64_t RoundHalfUp(double x) { return static_cast<int64_t>(std::floor(x + 0.5)); }
int64_t OracleDoubleQuantize(int64_t u, int q1, int q2) {
  const int64_t v1 = RoundHalfUp(static_cast<double>(u) / q1);
  return RoundHalfUp(static_cast<double>(v1 * q1) / q2);
}

// Preimage counts of every output bin over integers in [-10000, 10000].
std::map<int64_t, int64_t> BruteCounts(int q1, int q2) {
  std::map<int64_t, int64_t> counts;
  for (int64_t u = -10000; u <= 10000; ++u) ++counts[OracleDoubleQuantize(u, q1, q2)];
  return counts;
}

// Some first-stage bin lands exactly between u2 and a neighbour.
bool IsTieBin(int64_t u2, int q1, int q2) {
  for (int64_t v1 = -2000; v1 <= 2000; ++v1) {
    if (2 * v1 * q1 == (2 * u2 + 1) * q2 || 2 * v1 * q1 == (2 * u2 - 1) * q2) {
      return true;
    }
  }
  return false;
}

TEST(Quantize, Examples) {
  EXPECT_EQ(Quantize(10, 7), 1);
  EXPECT_EQ(Quantize(3.5, 1), 4);
  EXPECT_EQ(Quantize(-3.5, 1), -3);
  EXPECT_EQ(Quantize(-3.5, 1, RoundingMode::kTowardZero), -3);
  EXPECT_EQ(Quantize(3.9, 1, RoundingMode::kTowardZero), 3);
  EXPECT_EQ(Quantize(-3.5, 1, RoundingMode::kNearestTiesAway), -4);
  for (int q = 1; q <= 32; ++q) {
    for (RoundingMode m : {RoundingMode::kNearestTiesUp, RoundingMode::kTowardZero,
                           RoundingMode::kNearestTiesAway}) {
      EXPECT_EQ(Quantize(0, q, m), 0);
    }
  }
}

TEST(Dequantize, RetractsQuantize) {
  EXPECT_EQ(Dequantize(1, 7), 7);
  EXPECT_EQ(Dequantize(0, 9), 0);
  for (int q = 1; q <= 32; ++q) {
    for (int v = -100; v <= 100; ++v) {
      EXPECT_EQ(Quantize(static_cast<double>(Dequantize(v, q)), q), v);
      EXPECT_EQ(Quantize(static_cast<double>(Dequantize(v, q)), q,
                         RoundingMode::kTowardZero),
                v);
    }
  }
}

TEST(DoubleQuantize, Examples) {
  EXPECT_EQ(DoubleQuantize(10, 7, 2), 4);
  for (int q = 1; q <= 16; ++q) {
    for (double u = -300; u <= 300; u += 0.25) {
      EXPECT_EQ(DoubleQuantize(u, q, q), Quantize(u, q));
    }
  }
}

TEST(DoubleQuantize, MatchesLiteralComposition) {
  for (int q1 = 1; q1 <= 16; ++q1) {
    for (int q2 = 1; q2 <= 16; ++q2) {
      for (int64_t u = -1000; u <= 1000; ++u) {
        ASSERT_EQ(DoubleQuantize(static_cast<double>(u), q1, q2),
                  OracleDoubleQuantize(u, q1, q2))
            << u << " " << q1 << " " << q2;
      }
    }
  }
}

TEST(BinContribution, WorkedPattern) {
  const int expected[7] = {7, 0, 0, 7, 7, 0, 0};
  for (int k = -5; k <= 5; ++k) {
    for (int r = 0; r < 7; ++r) {
      EXPECT_EQ(BinContribution(7 * k + r, 7, 2), expected[r]) << 7 * k + r;
    }
  }
}

TEST(BinContribution, SymmetricAndPeriodic) {
  for (int q1 = 1; q1 <= 16; ++q1) {
    for (int q2 = 1; q2 <= 16; ++q2) {
      const int p = Periodicity(q1, q2);
      for (int u = -50; u <= 50; ++u) {
        EXPECT_EQ(BinContribution(-u, q1, q2), BinContribution(u, q1, q2));
        EXPECT_GE(BinContribution(u, q1, q2), 0);
        EXPECT_EQ(BinContribution(u + p, q1, q2), BinContribution(u, q1, q2));
        EXPECT_EQ(ExactBinContribution(u + p, q1, q2),
                  ExactBinContribution(u, q1, q2));
      }
    }
  }
}

TEST(BinContribution, ExactFormMatchesBruteForce) {
  int64_t mismatches = 0;
  for (int q1 = 1; q1 <= 16; ++q1) {
    for (int q2 = 1; q2 <= 16; ++q2) {
      const auto counts = BruteCounts(q1, q2);
      for (int u2 = -50; u2 <= 50; ++u2) {
        const auto it = counts.find(u2);
        const int64_t brute = it == counts.end() ? 0 : it->second;
        if (ExactBinContribution(u2, q1, q2) != brute) ++mismatches;
      }
    }
  }
  EXPECT_EQ(mismatches, 0);
}

TEST(BinContribution, ClosedFormMatchesBruteForceOffTies) {
  for (int q1 = 1; q1 <= 16; ++q1) {
    for (int q2 = 1; q2 <= 16; ++q2) {
      const auto counts = BruteCounts(q1, q2);
      for (int u2 = -50; u2 <= 50; ++u2) {
        const auto it = counts.find(u2);
        const int64_t brute = it == counts.end() ? 0 : it->second;
        const int64_t closed = BinContribution(u2, q1, q2);
        if (closed == 0) {
          EXPECT_EQ(brute, 0);
        }
        if (!IsTieBin(u2, q1, q2)) {
          EXPECT_EQ(closed, brute) << q1 << "," << q2 << " @" << u2;
        } else {
          EXPECT_GE(closed, brute);
        }
      }
    }
  }
}

TEST(BinContribution, TieBinsForWorkedExample) {
  // 1 * 7 / 2 = 3.5 rounds up, so the shared bin goes to 4 (and -3 on the
  // negative side). The closed form credits both.
  EXPECT_EQ(ExactBinContribution(3, 7, 2), 0);
  EXPECT_EQ(ExactBinContribution(4, 7, 2), 7);
  EXPECT_EQ(ExactBinContribution(-3, 7, 2), 7);
  EXPECT_EQ(ExactBinContribution(-4, 7, 2), 0);
  EXPECT_EQ(ExactBinContribution(3, 7, 2, RoundingMode::kNearestTiesAway), 0);
  EXPECT_EQ(ExactBinContribution(-4, 7, 2, RoundingMode::kNearestTiesAway), 7);
}

TEST(BinContribution, ConservationOverPeriod) {
  // One full period of output bins collects exactly q2 * period integers.
  for (int q1 = 1; q1 <= 16; ++q1) {
    for (int q2 = 1; q2 <= q1; ++q2) {
      const auto counts = BruteCounts(q1, q2);
      const int p = Periodicity(q1, q2);
      for (int start = -40; start <= 20; start += 7) {
        int64_t sum = 0;
        for (int u2 = start; u2 < start + p; ++u2) {
          const auto it = counts.find(u2);
          sum += it == counts.end() ? 0 : it->second;
        }
        EXPECT_EQ(sum, int64_t{q2} * p) << q1 << "," << q2;
      }
    }
  }
}

TEST(Periodicity, Examples) {
  EXPECT_EQ(Periodicity(7, 2), 7);
  EXPECT_EQ(Periodicity(6, 3), 2);
  for (int q = 1; q <= 20; ++q) EXPECT_EQ(Periodicity(q, q), 1);
}

TEST(Histogram, Basics) {
  CoeffGrid zero(32, 16);
  const Histogram h0 = BuildHistogram(zero, {1, 1});
  EXPECT_EQ(h0.count(0), 8);
  EXPECT_EQ(h0.total(), 8);
  EXPECT_EQ(h0.nonzero_bins(), 1);

  CoeffGrid one(8, 8);
  one.coeff(0, 0, 1, 1) = 5;
  one.coeff(0, 0, 2, 1) = 99;
  EXPECT_EQ(BuildHistogram(one, {1, 1}).count(5), 1);
  const Histogram h = BuildHistogram(one, {2, 1}, 60);
  EXPECT_EQ(h.overflow_high, 1);
  EXPECT_EQ(h.total(), 1);
  EXPECT_THROW(BuildHistogram(one, {8, 0}), Error);
}

TEST(Histogram, Csv) {
  CoeffGrid g(8, 8);
  g.coeff(0, 0, 0, 1) = -2;
  const std::string csv = HistogramToCsv(BuildHistogram(g, {0, 1}, 2));
  EXPECT_EQ(csv, "bin,count\n<-2,0\n-2,1\n-1,0\n0,0\n1,0\n2,0\n>2,0\n");
}

// Laplacian coefficients quantized at q1 then q2, as a CoeffGrid column.
Histogram SyntheticHistogram(int q1, int q2, int n, double scale, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> ex(1.0 / scale);
  std::bernoulli_distribution sign(0.5);
  const int blocks = n;
  CoeffGrid g(8 * blocks, 8);
  for (int b = 0; b < blocks; ++b) {
    const double u = sign(rng) ? ex(rng) : -ex(rng);
    g.coeff(b, 0, 1, 1) = static_cast<int32_t>(
        q1 == q2 ? Quantize(u, q2) : DoubleQuantize(u, q1, q2));
  }
  return BuildHistogram(g, {1, 1});
}

TEST(Histogram, DoubleQuantizedZerosMatchPrediction) {
  for (auto [q1, q2] : {std::pair{7, 2}, {5, 3}, {9, 4}, {12, 5}}) {
    const Histogram h = SyntheticHistogram(q1, q2, 20000, 25.0, 1);
    for (int v = -15; v <= 15; ++v) {
      if (BinContribution(v, q1, q2) == 0) {
        EXPECT_EQ(h.count(v), 0);
      }
      if (ExactBinContribution(v, q1, q2) > 0) {
        EXPECT_GT(h.count(v), 0);
      }
    }
  }
}

TEST(PeriodStrength, RecoversPrimaryStep) {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const Histogram h = SyntheticHistogram(7, 2, 4000, 20.0, seed);
    int best = 1;
    double best_score = -2;
    for (int c = 1; c <= 16; ++c) {
      const double s = PeriodStrength(h, c, 2);
      EXPECT_GE(s, -1.0);
      EXPECT_LE(s, 1.0);
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    EXPECT_EQ(best, 7);
    EXPECT_GT(best_score, 0.6);
  }
}

TEST(PeriodStrength, SingleCompressionHasNoDominantCandidate) {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const Histogram h = SyntheticHistogram(2, 2, 4000, 20.0, seed);
    for (int c = 1; c <= 16; ++c) EXPECT_LT(PeriodStrength(h, c, 2), 0.35);
  }
}

TEST(PeriodStrength, DegenerateInputs) {
  CoeffGrid zero(64, 64);
  try {
    PeriodStrength(BuildHistogram(zero, {1, 1}), 7, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateHistogram);
  }
  // Flat histogram: every bin equally populated, no emptiness structure.
  Histogram flat;
  flat.bound = 60;
  flat.counts.assign(121, 50);
  for (int c = 1; c <= 16; ++c) EXPECT_LT(std::abs(PeriodStrength(flat, c, 2)), 0.35);
  EXPECT_EQ(PeriodStrength(flat, 2, 2), 0.0);
}

TEST(Laplace, MassIntegratesToOne) {
  EXPECT_NEAR(LaplaceMass(-1e9, 1e9, 3.0), 1.0, 1e-12);
  EXPECT_NEAR(LaplaceMass(0, 1e9, 3.0), 0.5, 1e-12);
  EXPECT_NEAR(LaplaceMass(-2, 2, 2.0), 1 - std::exp(-1.0), 1e-12);
}

}  // namespace
}  // namespace dctscope
