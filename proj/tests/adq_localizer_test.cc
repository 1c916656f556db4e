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

#include "dctscope/adq_localizer.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dctscope/error.h"
#include "dctscope/forgery_synth.h"

namespace dctscope {
namespace {

JpegModel DoublePatch(uint64_t seed, std::optional<int> q1, int q2, int size = 256) {
  return DecodeJpeg(GenDjpegPatch(seed, size, q1, q2).jpeg);
}

const FrequencyEstimate& At(const Q1Estimate& e, Frequency f) {
  for (const FrequencyEstimate& fe : e.frequencies) {
    if (fe.frequency == f) return fe;
  }
  throw std::runtime_error("frequency not analyzed");
}

TEST(AnalysisFrequencies, NineLowestAcInZigZagOrder) {
  const std::vector<Frequency> f = AnalysisFrequencies();
  ASSERT_EQ(f.size(), 9u);
  EXPECT_EQ(f[0], (Frequency{0, 1}));
  EXPECT_EQ(f[1], (Frequency{1, 0}));
  EXPECT_EQ(f[2], (Frequency{2, 0}));
  EXPECT_EQ(f[4], (Frequency{0, 2}));
  EXPECT_EQ(f[8], (Frequency{3, 0}));
}

TEST(EstimateQ1, RecoversStepSevenAt11) {
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const Q1Estimate e = EstimateQ1(DoublePatch(seed, 70, 90));
    EXPECT_TRUE(e.reliable) << seed;
    const FrequencyEstimate& f = At(e, {1, 1});
    EXPECT_EQ(f.q2, 2);
    EXPECT_EQ(f.q1, 7) << seed;
    EXPECT_GE(e.confidence, -1.0);
    EXPECT_LE(e.confidence, 1.0);
  }
}

TEST(EstimateQ1, SingleCompressedIsUnreliable) {
  int unreliable = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const int q = 60 + 10 * static_cast<int>(seed % 5);
    const Q1Estimate e = EstimateQ1(DoublePatch(100 + seed, std::nullopt, q));
    unreliable += !e.reliable;
  }
  EXPECT_GE(unreliable, 19);
}

TEST(EstimateQ1, TooFewBlocks) {
  const JpegModel small = DoublePatch(1, 70, 90, 120);  // 15 x 15 blocks
  try {
    EstimateQ1(small);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientData);
  }
  AdqConfig relaxed;
  relaxed.min_blocks = 200;
  EXPECT_NO_THROW(EstimateQ1(small, relaxed));
  relaxed.top_k = 0;
  EXPECT_THROW(EstimateQ1(small, relaxed), Error);
}

TEST(EstimateQ1, FoldsQuality100Resave) {
  const std::vector<uint8_t> twice = GenDjpegPatch(3, 256, 70, 90).jpeg;
  const JpegModel m = DecodeJpeg(GenRecompressed(twice, 100));
  const Q1Estimate e = EstimateQ1(m);
  EXPECT_TRUE(e.reliable);
  const FrequencyEstimate& f = At(e, {1, 1});
  EXPECT_EQ(f.q2, 1);
  EXPECT_EQ(f.effective_q2, 2);
  EXPECT_EQ(f.q1, 7);
}

TEST(DetectLattice, SyntheticHistograms) {
  std::mt19937_64 rng(8);
  auto make = [&](int s, double jitter) {
    Histogram h;
    h.bound = 255;
    h.counts.assign(511, 0);
    std::exponential_distribution<double> ex(1.0 / 6.0);
    std::bernoulli_distribution sign(0.5), jit(jitter);
    for (int i = 0; i < 4000; ++i) {
      int v = static_cast<int>(std::lround(ex(rng) / s)) * s;
      if (sign(rng)) v = -v;
      if (jit(rng)) v += sign(rng) ? 1 : -1;
      if (std::abs(v) <= 255) h.counts[v + 255]++;
    }
    return h;
  };
  EXPECT_EQ(DetectLattice(make(4, 0.05)), 4);
  EXPECT_EQ(DetectLattice(make(7, 0.1)), 7);
  EXPECT_EQ(DetectLattice(make(2, 0.05)), 2);
  EXPECT_EQ(DetectLattice(make(1, 0.0)), 1);
  Histogram zeros;
  zeros.bound = 10;
  zeros.counts.assign(21, 0);
  zeros.counts[10] = 1000;
  EXPECT_EQ(DetectLattice(zeros), 1);
}

// Monte Carlo oracle: draw u from the Laplacian, quantize at q1, add
// pixel-rounding noise, quantize at q2.
TEST(BinLikelihood, MatchesSimulation) {
  AdqConfig cfg;
  cfg.smoothing = 0;
  const double b = 9.0;
  const int q1 = 7, q2 = 2;
  const BinLikelihood lk = ComputeBinLikelihood(b, q1, q2, 1, cfg);
  std::mt19937_64 rng(12);
  std::exponential_distribution<double> ex(1.0 / b);
  std::bernoulli_distribution sign(0.5);
  std::normal_distribution<double> noise(0, cfg.requant_noise);
  const int n = 2000000;
  std::vector<int> single(2 * lk.bound + 1), dbl(2 * lk.bound + 1);
  for (int i = 0; i < n; ++i) {
    const double u = sign(rng) ? ex(rng) : -ex(rng);
    const int64_t vs = static_cast<int64_t>(std::floor(u / q2 + 0.5));
    const double c = q1 * std::floor(u / q1 + 0.5) + noise(rng);
    const int64_t vd = static_cast<int64_t>(std::floor(c / q2 + 0.5));
    if (std::abs(vs) <= lk.bound) single[vs + lk.bound]++;
    if (std::abs(vd) <= lk.bound) dbl[vd + lk.bound]++;
  }
  for (int v = -20; v <= 20; ++v) {
    const int i = v + lk.bound;
    for (auto [model, count] : {std::pair{lk.single[i], single[i]},
                                std::pair{lk.dbl[i], dbl[i]}}) {
      const double sd = std::sqrt(n * model * (1 - model)) + 1;
      EXPECT_NEAR(count, n * model, 5 * sd) << v;
    }
  }
  // Empty bins of the closed form keep only noise-tail mass.
  for (int v = 1; v <= 20; ++v) {
    if (BinContribution(v, q1, q2) == 0) {
      EXPECT_LT(lk.dbl[v + lk.bound], 0.01 * lk.single[v + lk.bound]) << v;
    }
  }
}

TEST(BinLikelihood, SmoothingKeepsEveryBinPositive) {
  const BinLikelihood lk = ComputeBinLikelihood(5.0, 7, 2, 1024, AdqConfig{});
  double ss = 0, sd = 0;
  for (size_t i = 0; i < lk.single.size(); ++i) {
    EXPECT_GT(lk.single[i], 0);
    EXPECT_GT(lk.dbl[i], 0);
    ss += lk.single[i];
    sd += lk.dbl[i];
  }
  EXPECT_NEAR(ss, 1.0, 1e-6);
  EXPECT_NEAR(sd, 1.0, 1e-6);
}

void ExpectMapInvariants(const PosteriorMap& pm, const JpegModel& m) {
  ASSERT_EQ(pm.pixels.width, m.pixel_width);
  ASSERT_EQ(pm.pixels.height, m.pixel_height);
  for (int y = 0; y < pm.pixels.height; ++y) {
    for (int x = 0; x < pm.pixels.width; ++x) {
      const double v = pm.pixels.at(x, y);
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
      ASSERT_EQ(v, pm.pixels.at(x - x % 8, y - y % 8));
    }
  }
}

TEST(BlockPosteriorMap, SingleCompressedImageIsFlatAndFlagged) {
  const JpegModel m = DoublePatch(9, std::nullopt, 90, 200);
  AdqConfig cfg;
  cfg.min_blocks = 100;
  const PosteriorMap pm = BlockPosteriorMap(m, EstimateQ1(m, cfg), cfg);
  ExpectMapInvariants(pm, m);
  EXPECT_TRUE(pm.unreliable);
  EXPECT_FALSE(pm.warning.empty());
  for (double v : pm.pixels.values) EXPECT_EQ(v, 0.5);
}

TEST(BlockPosteriorMap, DoubleCompressedImageLooksDouble) {
  const JpegModel m = DoublePatch(4, 70, 90);
  const PosteriorMap pm = BlockPosteriorMap(m, EstimateQ1(m));
  ExpectMapInvariants(pm, m);
  EXPECT_FALSE(pm.unreliable);
  double mean = 0;
  for (double v : pm.blocks.values) mean += v;
  mean /= static_cast<double>(pm.blocks.size());
  EXPECT_LT(mean, 0.2);
}

TEST(BlockPosteriorMap, SpliceInsideScoresAboveOutside) {
  int wins = 0;
  const int n = 20;
  for (int i = 0; i < n; ++i) {
    SynthRecipe r;
    r.seed = 300 + i;
    const ForgerySample s = GenSplice(r);
    const JpegModel m = DecodeJpeg(s.jpeg);
    const PosteriorMap pm = BlockPosteriorMap(m, EstimateQ1(m));
    ExpectMapInvariants(pm, m);
    double in = 0, out = 0;
    int64_t ni = 0, no = 0;
    for (size_t k = 0; k < s.mask.size(); ++k) {
      if (s.mask.values[k]) {
        in += pm.pixels.values[k];
        ++ni;
      } else {
        out += pm.pixels.values[k];
        ++no;
      }
    }
    wins += in / ni > out / no;
  }
  EXPECT_GE(wins, 18);
}

TEST(BlockPosteriorMap, SameQualityForgeryIsFlagged) {
  int flagged = 0;
  for (int i = 0; i < 5; ++i) {
    SynthRecipe r;
    r.seed = 40 + i;
    r.q1_background = r.q2 = 80;
    r.alignment = AlignmentMode::kAligned;
    const JpegModel m = DecodeJpeg(GenCopyMove(r).jpeg);
    flagged += BlockPosteriorMap(m, EstimateQ1(m)).unreliable;
  }
  EXPECT_GE(flagged, 4);
}

TEST(BlockPosteriorMap, NonMultipleOfEightDimensions) {
  GrayImage img = ProceduralTexture(5, 250, 203);
  img = CompressDecompress(img, 70);
  const JpegModel m = DecodeJpeg(EncodeJpeg(img, QualityToTable(90)));
  AdqConfig cfg;
  cfg.min_blocks = 100;
  const PosteriorMap pm = BlockPosteriorMap(m, EstimateQ1(m, cfg), cfg);
  ExpectMapInvariants(pm, m);
  EXPECT_EQ(pm.blocks.width, 32);
  EXPECT_EQ(pm.blocks.height, 26);
}

}  // namespace
}  // namespace dctscope
