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

#include "dctscope/dct_features.h"

#include <gtest/gtest.h>

#include <random>

#include "dctscope/error.h"
#include "dctscope/quant_math.h"

namespace dctscope {
namespace {

CoeffGrid RandomGrid(std::mt19937_64& rng, int bw, int bh) {
  CoeffGrid g(8 * bw, 8 * bh);
  std::geometric_distribution<int> mag(0.15);
  std::bernoulli_distribution neg(0.5);
  for (int32_t& v : g.values) v = neg(rng) ? -mag(rng) : mag(rng);
  return g;
}

ErrorCode CodeOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kConfig;
}

TEST(Volume, Examples) {
  CoeffGrid g(8, 8);
  g.at(1, 0) = -3;
  g.at(2, 0) = 25;
  const DctVolume v = ToVolume(g, 20);
  EXPECT_EQ(v.channels(), 21);
  EXPECT_EQ(v.at(3, 0, 1), 1);
  EXPECT_EQ(v.at(20, 0, 2), 1);
  EXPECT_EQ(v.at(0, 5, 5), 1);
  EXPECT_EQ(v.channel_at(0, 1), 3);
  const auto gap = GlobalAveragePool(ToVolume(CoeffGrid(16, 8)));
  EXPECT_EQ(gap[0], 1.0);
  for (size_t t = 1; t < gap.size(); ++t) EXPECT_EQ(gap[t], 0.0);
  EXPECT_THROW(ToVolume(g, 0), Error);
}

TEST(Volume, OneHotAndGapMatchesFoldedHistogram) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const CoeffGrid g = RandomGrid(rng, 1 + trial % 4, 1 + trial % 3);
    const int T = 1 + trial % 25;
    const DctVolume v = ToVolume(g, T);
    for (int y = 0; y < g.height; ++y) {
      for (int x = 0; x < g.width; ++x) {
        int ones = 0;
        for (int t = 0; t <= T; ++t) ones += v.at(t, y, x);
        ASSERT_EQ(ones, 1);
      }
    }
    // Folded, clipped histogram summed over all 64 frequencies.
    std::vector<int64_t> folded(T + 1, 0);
    for (int f = 0; f < 64; ++f) {
      const Histogram h = BuildHistogram(g, {f / 8, f % 8}, 1000);
      for (int b = -1000; b <= 1000; ++b) folded[std::min(std::abs(b), T)] += h.count(b);
    }
    const auto gap = GlobalAveragePool(v);
    double sum = 0;
    for (int t = 0; t <= T; ++t) {
      EXPECT_EQ(gap[t], static_cast<double>(folded[t]) / (g.width * g.height));
      sum += gap[t];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Separate, IndexExamples) {
  Tensor3 x(2, 16, 16);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> d(-1, 1);
  for (double& v : x.data) v = d(rng);
  const Tensor3 s = FrequencySeparate(x);
  EXPECT_EQ(s.channels, 128);
  EXPECT_EQ(s.height, 2);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      EXPECT_EQ(s.at(0, i, j), x.at(0, 8 * i, 8 * j));
      EXPECT_EQ(s.at(9, i, j), x.at(0, 8 * i + 1, 8 * j + 1));
      EXPECT_EQ(s.at(65, i, j), x.at(1, 8 * i, 8 * j + 1));
    }
  }
  EXPECT_EQ(CodeOf([] { FrequencySeparate(Tensor3(1, 12, 8)); }),
            ErrorCode::kMisalignedInput);
  EXPECT_EQ(CodeOf([] { FrequencyMerge(Tensor3(63, 1, 1)); }),
            ErrorCode::kShapeMismatch);
}

TEST(Separate, IsBijection) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-5, 5);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor3 x(1 + trial % 3, 8 * (1 + trial % 4), 8 * (1 + trial % 5));
    for (double& v : x.data) v = d(rng);
    EXPECT_EQ(FrequencyMerge(FrequencySeparate(x)), x);
    Tensor3 s(64 * (1 + trial % 2), 1 + trial % 3, 2);
    for (double& v : s.data) v = d(rng);
    EXPECT_EQ(FrequencySeparate(FrequencyMerge(s)), s);
  }
  // A single one lands back at its source coordinate.
  Tensor3 one(2, 16, 24);
  one.at(1, 13, 21) = 1;
  const Tensor3 s = FrequencySeparate(one);
  EXPECT_EQ(s.at(64 + 5 * 8 + 5, 1, 2), 1.0);
  EXPECT_EQ(FrequencyMerge(s), one);
}

TEST(Crop, ExamplesAndErrors) {
  std::mt19937_64 rng(4);
  const CoeffGrid g = RandomGrid(rng, 4, 3);
  EXPECT_EQ(GridAlignedCrop(g, 0, 0, g.height, g.width), g);
  EXPECT_EQ(CodeOf([&] { GridAlignedCrop(g, 4, 0, 8, 8); }),
            ErrorCode::kMisalignedCrop);
  EXPECT_EQ(CodeOf([&] { GridAlignedCrop(g, 0, 0, 8, 12); }),
            ErrorCode::kMisalignedCrop);
  EXPECT_EQ(CodeOf([&] { GridAlignedCrop(g, 16, 0, 16, 8); }),
            ErrorCode::kOutOfBounds);
  const CoeffGrid c = GridAlignedCrop(g, 8, 16, 16, 16);
  EXPECT_EQ(c.at(0, 0), g.at(16, 8));
  EXPECT_EQ(c.at(15, 15), g.at(31, 23));
}

TEST(Crop, HistogramIsSubTally) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const CoeffGrid g = RandomGrid(rng, 5, 5);
    const CoeffGrid c = GridAlignedCrop(g, 8, 16, 24, 16);
    for (int f = 0; f < 64; ++f) {
      const Histogram hp = BuildHistogram(g, {f / 8, f % 8});
      const Histogram hc = BuildHistogram(c, {f / 8, f % 8});
      EXPECT_EQ(hc.total(), 6);
      // Recount directly from the parent's block window.
      for (int b = -60; b <= 60; ++b) {
        int64_t direct = 0;
        for (int by = 1; by < 4; ++by) {
          for (int bx = 2; bx < 4; ++bx) direct += g.coeff(bx, by, f / 8, f % 8) == b;
        }
        EXPECT_EQ(hc.count(b), direct);
        EXPECT_LE(hc.count(b), hp.count(b));
      }
    }
  }
}

TEST(Crop, CommutesWithVolume) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const CoeffGrid g = RandomGrid(rng, 4, 4);
    const int i = 8 * (trial % 3), j = 8 * ((trial / 3) % 3);
    EXPECT_EQ(ToVolume(GridAlignedCrop(g, i, j, 8, 8)),
              GridAlignedCrop(ToVolume(g), i, j, 8, 8));
  }
}

TEST(Qtable, Multiply) {
  std::mt19937_64 rng(7);
  const CoeffGrid g = RandomGrid(rng, 2, 2);
  Tensor3 x(1, 16, 16);
  for (int y = 0; y < 16; ++y)
    for (int xx = 0; xx < 16; ++xx) x.at(0, y, xx) = g.at(xx, y);
  EXPECT_EQ(QtableMultiply(x, QuantTable()), x);
  const QuantTable t = QualityToTable(70);
  const Tensor3 d = QtableMultiply(x, t);
  for (int y = 0; y < 16; ++y) {
    for (int xx = 0; xx < 16; ++xx) {
      EXPECT_EQ(d.at(0, y, xx), Dequantize(g.at(xx, y), t.step(y % 8, xx % 8)));
    }
  }
  EXPECT_EQ(d.at(0, 9, 1), 7 * x.at(0, 9, 1));
  EXPECT_THROW(QtableMultiply(Tensor3(1, 8, 9), t), Error);
}

// Two-input convolution with kernel [1 at m, 1 at n shifted], bias -1, ReLU,
// then a global sum: the product of two binary planes.
int64_t ConvolutionCooccurrence(const DctVolume& v, int m, int n, int dy, int dx) {
  double total = 0;
  for (int y = 0; y < v.height(); ++y) {
    for (int x = 0; x < v.width(); ++x) {
      const int y2 = y + dy, x2 = x + dx;
      const double b = (y2 >= 0 && y2 < v.height() && x2 >= 0 && x2 < v.width())
                           ? v.at(n, y2, x2)
                           : 0.0;
      total += std::max(0.0, 1.0 * v.at(m, y, x) + 1.0 * b - 1.0);
    }
  }
  return static_cast<int64_t>(total);
}

TEST(Cooccurrence, ExamplesAndOracle) {
  CoeffGrid g(8, 8);
  for (int32_t& v : g.values) v = 5;
  g.at(0, 0) = 0;
  g.at(1, 0) = 1;
  const DctVolume v = ToVolume(g);
  EXPECT_EQ(Cooccurrence(v, 0, 1, 0, 1), 1);
  EXPECT_THROW(Cooccurrence(v, 0, 21, 0, 1), Error);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const DctVolume r = ToVolume(RandomGrid(rng, 2, 2), 6);
    for (int m = 0; m <= 6; ++m) {
      for (int n = 0; n <= 6; ++n) {
        for (auto [dy, dx] : {std::pair{0, 1}, {1, 0}, {1, 1}, {0, 8}, {-2, 3}}) {
          EXPECT_EQ(Cooccurrence(r, m, n, dy, dx), ConvolutionCooccurrence(r, m, n, dy, dx));
          EXPECT_EQ(Cooccurrence(r, m, n, dy, dx), Cooccurrence(r, n, m, -dy, -dx));
        }
      }
    }
  }
}

}  // namespace
}  // namespace dctscope
