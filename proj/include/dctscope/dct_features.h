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

// One-hot DCT volumes, frequency separation and block-grid-aware cropping.

#ifndef DCTSCOPE_DCT_FEATURES_H_
#define DCTSCOPE_DCT_FEATURES_H_

#include <cstdint>
#include <vector>

#include "dctscope/jpeg_types.h"
#include "dctscope/plane.h"

namespace dctscope {

inline constexpr int kDefaultClipThreshold = 20;

// Dense real tensor, channel-major: index (c * height + y) * width + x.
struct Tensor3 {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w),
        data(static_cast<size_t>(c) * h * w, fill) {}

  double& at(int c, int y, int x) {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  bool operator==(const Tensor3&) const = default;
};

// (T+1) x H x W binary tensor: channel t is set at (y, x) iff
// min(|M(y, x)|, T) == t. Stored one byte per entry.
class DctVolume {
 public:
  DctVolume() = default;
  DctVolume(int threshold, int height, int width);

  int threshold() const { return threshold_; }
  int channels() const { return threshold_ + 1; }
  int height() const { return height_; }
  int width() const { return width_; }

  uint8_t at(int t, int y, int x) const {
    return data_[(static_cast<size_t>(t) * height_ + y) * width_ + x];
  }
  uint8_t& at(int t, int y, int x) {
    return data_[(static_cast<size_t>(t) * height_ + y) * width_ + x];
  }
  // The set channel at (y, x).
  int channel_at(int y, int x) const;

  const std::vector<uint8_t>& data() const { return data_; }
  Tensor3 ToTensor() const;
  bool operator==(const DctVolume&) const = default;

 private:
  int threshold_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<uint8_t> data_;
};

// Errors: kOutOfRange if threshold < 1.
DctVolume ToVolume(const CoeffGrid& grid,
                   int threshold = kDefaultClipThreshold);

// Per-channel mean over all positions; entries sum to 1.
std::vector<double> GlobalAveragePool(const DctVolume& volume);

// Gathers each 8x8 frequency into its own channel at 1/8 resolution:
//   out(c, i, j) = in(c / 64, 8 i + (c % 64) / 8, 8 j + c % 8).
// Errors: kMisalignedInput if height or width is not a multiple of 8.
Tensor3 FrequencySeparate(const Tensor3& x);

// Inverse of FrequencySeparate. Errors: kShapeMismatch if the channel count
// is not a multiple of 64.
Tensor3 FrequencyMerge(const Tensor3& x);

// out(c, y, x) = in(c, y, x) * steps(y % 8, x % 8).
// Errors: kMisalignedInput.
Tensor3 QtableMultiply(const Tensor3& x, const QuantTable& table);

// Rows [i, i+h) and columns [j, j+w). All four values must be multiples of 8
// (kMisalignedCrop) and the window must lie inside the input (kOutOfBounds).
CoeffGrid GridAlignedCrop(const CoeffGrid& grid, int i, int j, int h, int w);
GrayImage GridAlignedCrop(const GrayImage& image, int i, int j, int h, int w);
DctVolume GridAlignedCrop(const DctVolume& volume, int i, int j, int h, int w);

// Number of positions p with channel m set at p and channel n set at
// p + (dy, dx). Errors: kOutOfRange for channels outside [0, T].
int64_t Cooccurrence(const DctVolume& volume, int m, int n, int dy, int dx);

}  // namespace dctscope

#endif  // DCTSCOPE_DCT_FEATURES_H_
