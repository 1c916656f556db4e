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

#include <algorithm>
#include <cstdlib>
#include <string>

#include "dctscope/error.h"

namespace dctscope {
namespace {

void CheckAligned(int h, int w) {
  if (h % kBlockSize != 0 || w % kBlockSize != 0) {
    throw Error(ErrorCode::kMisalignedInput,
                "tensor " + std::to_string(h) + "x" + std::to_string(w) +
                    " is not a multiple of 8");
  }
}

void CheckCrop(int i, int j, int h, int w, int height, int width) {
  if (i % 8 || j % 8 || h % 8 || w % 8) {
    throw Error(ErrorCode::kMisalignedCrop,
                "crop origin and size must be multiples of 8");
  }
  if (i < 0 || j < 0 || h < 0 || w < 0 || i + h > height || j + w > width) {
    throw Error(ErrorCode::kOutOfBounds, "crop window outside input");
  }
}

template <typename P>
void CopyWindow(const P& in, P& out, int i, int j) {
  for (int y = 0; y < out.height; ++y) {
    std::copy_n(in.values.begin() + static_cast<size_t>(i + y) * in.width + j,
                out.width,
                out.values.begin() + static_cast<size_t>(y) * out.width);
  }
}

}  // namespace

DctVolume::DctVolume(int threshold, int height, int width)
    : threshold_(threshold), height_(height), width_(width),
      data_(static_cast<size_t>(threshold + 1) * height * width, 0) {}

int DctVolume::channel_at(int y, int x) const {
  for (int t = 0; t <= threshold_; ++t) {
    if (at(t, y, x)) return t;
  }
  return -1;
}

Tensor3 DctVolume::ToTensor() const {
  Tensor3 t(channels(), height_, width_);
  std::transform(data_.begin(), data_.end(), t.data.begin(),
                 [](uint8_t v) { return static_cast<double>(v); });
  return t;
}

DctVolume ToVolume(const CoeffGrid& grid, int threshold) {
  if (threshold < 1) {
    throw Error(ErrorCode::kOutOfRange, "clip threshold must be >= 1");
  }
  DctVolume v(threshold, grid.height, grid.width);
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      const int a = std::min(std::abs(grid.at(x, y)), threshold);
      v.at(a, y, x) = 1;
    }
  }
  return v;
}

std::vector<double> GlobalAveragePool(const DctVolume& volume) {
  std::vector<double> out(volume.channels(), 0.0);
  const size_t plane = static_cast<size_t>(volume.height()) * volume.width();
  if (plane == 0) return out;
  for (int t = 0; t < volume.channels(); ++t) {
    int64_t s = 0;
    for (size_t k = 0; k < plane; ++k) s += volume.data()[t * plane + k];
    out[t] = static_cast<double>(s) / static_cast<double>(plane);
  }
  return out;
}

Tensor3 FrequencySeparate(const Tensor3& x) {
  CheckAligned(x.height, x.width);
  const int h8 = x.height / 8, w8 = x.width / 8;
  Tensor3 out(64 * x.channels, h8, w8);
  for (int c = 0; c < out.channels; ++c) {
    const int src = c / 64, r = (c % 64) / 8, s = c % 8;
    for (int i = 0; i < h8; ++i) {
      for (int j = 0; j < w8; ++j) out.at(c, i, j) = x.at(src, 8 * i + r, 8 * j + s);
    }
  }
  return out;
}

Tensor3 FrequencyMerge(const Tensor3& x) {
  if (x.channels % 64 != 0) {
    throw Error(ErrorCode::kShapeMismatch,
                "separated tensor needs a multiple of 64 channels");
  }
  Tensor3 out(x.channels / 64, 8 * x.height, 8 * x.width);
  for (int c = 0; c < x.channels; ++c) {
    const int dst = c / 64, r = (c % 64) / 8, s = c % 8;
    for (int i = 0; i < x.height; ++i) {
      for (int j = 0; j < x.width; ++j) out.at(dst, 8 * i + r, 8 * j + s) = x.at(c, i, j);
    }
  }
  return out;
}

Tensor3 QtableMultiply(const Tensor3& x, const QuantTable& table) {
  CheckAligned(x.height, x.width);
  Tensor3 out = x;
  for (int c = 0; c < x.channels; ++c) {
    for (int y = 0; y < x.height; ++y) {
      for (int xx = 0; xx < x.width; ++xx) out.at(c, y, xx) *= table.step(y % 8, xx % 8);
    }
  }
  return out;
}

CoeffGrid GridAlignedCrop(const CoeffGrid& grid, int i, int j, int h, int w) {
  CheckCrop(i, j, h, w, grid.height, grid.width);
  CoeffGrid out(w, h);
  CopyWindow(grid, out, i, j);
  return out;
}

GrayImage GridAlignedCrop(const GrayImage& image, int i, int j, int h, int w) {
  CheckCrop(i, j, h, w, image.height, image.width);
  GrayImage out(w, h);
  CopyWindow(image, out, i, j);
  return out;
}

DctVolume GridAlignedCrop(const DctVolume& volume, int i, int j, int h, int w) {
  CheckCrop(i, j, h, w, volume.height(), volume.width());
  DctVolume out(volume.threshold(), h, w);
  for (int t = 0; t < volume.channels(); ++t) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) out.at(t, y, x) = volume.at(t, i + y, j + x);
    }
  }
  return out;
}

int64_t Cooccurrence(const DctVolume& volume, int m, int n, int dy, int dx) {
  if (m < 0 || n < 0 || m > volume.threshold() || n > volume.threshold()) {
    throw Error(ErrorCode::kOutOfRange, "channel outside [0, T]");
  }
  int64_t count = 0;
  const int y0 = std::max(0, -dy), y1 = std::min(volume.height(), volume.height() - dy);
  const int x0 = std::max(0, -dx), x1 = std::min(volume.width(), volume.width() - dx);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      count += volume.at(m, y, x) & volume.at(n, y + dy, x + dx);
    }
  }
  return count;
}

}  // namespace dctscope
