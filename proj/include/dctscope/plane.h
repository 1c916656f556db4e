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

#ifndef DCTSCOPE_PLANE_H_
#define DCTSCOPE_PLANE_H_

#include <cstddef>
#include <cstdint>
#include <vector>

namespace dctscope {

// Row-major 2D array. Used for pixel images, masks, probability maps and
// coefficient grids.
template <typename T>
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<T> values;

  Plane() = default;
  Plane(int w, int h, T fill = T{})
      : width(w), height(h), values(static_cast<size_t>(w) * h, fill) {}

  T& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
  const T& at(int x, int y) const {
    return values[static_cast<size_t>(y) * width + x];
  }
  size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }

  bool operator==(const Plane&) const = default;
};

// 8-bit luma image.
using GrayImage = Plane<uint8_t>;

// Binary ground-truth mask; 1 marks tampered pixels.
using Mask = Plane<uint8_t>;

inline int RoundUpTo8(int v) { return (v + 7) & ~7; }

}  // namespace dctscope

#endif  // DCTSCOPE_PLANE_H_
