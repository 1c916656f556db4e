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

// Value types shared by the codec, the quantization math and the feature
// code: quantization tables, coefficient grids and the rounding convention.

#ifndef DCTSCOPE_JPEG_TYPES_H_
#define DCTSCOPE_JPEG_TYPES_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "dctscope/plane.h"

namespace dctscope {

inline constexpr int kBlockSize = 8;
inline constexpr int kBlockArea = 64;

// How a real quotient u/q is mapped to an integer.
enum class RoundingMode {
  kNearestTiesUp,    // floor(x + 1/2); ties go toward +infinity.
  kTowardZero,       // truncation.
  kNearestTiesAway,  // ties go away from zero (C round()).
};

std::string_view RoundingModeName(RoundingMode mode);
std::optional<RoundingMode> ParseRoundingMode(std::string_view name);

// Rounds x according to `mode`.
int64_t RoundWithMode(double x, RoundingMode mode);

// zig-zag position -> natural (row-major) index.
extern const std::array<int, kBlockArea> kZigZagToNatural;
// natural index -> zig-zag position.
extern const std::array<int, kBlockArea> kNaturalToZigZag;

// 8x8 quantization steps in natural order. Steps are in [1, 255].
class QuantTable {
 public:
  // All-ones table (quality 100 / uncompressed equivalent).
  QuantTable();
  // Throws Error(kInvalidTable) if any step is outside [1, 255].
  explicit QuantTable(const std::array<int, kBlockArea>& steps);

  int step(int row, int col) const { return steps_[row * kBlockSize + col]; }
  int step(int natural_index) const { return steps_[natural_index]; }
  int dc_step() const { return steps_[0]; }
  const std::array<int, kBlockArea>& steps() const { return steps_; }
  bool IsAllOnes() const;

  bool operator==(const QuantTable&) const = default;

 private:
  std::array<int, kBlockArea> steps_;
};

// Standard (ITU-T T.81 Annex K) luminance table.
extern const std::array<int, kBlockArea> kStandardLumaTable;

// libjpeg-style quality scaling of the standard luminance table.
// Throws Error(kOutOfRange) unless 1 <= quality <= 100.
QuantTable QualityToTable(int quality);

// Inverse of QualityToTable when the table is an exact standard-scaled table.
std::optional<int> MatchQuality(const QuantTable& table);

// Quantized (still integer) DCT coefficients laid out like the image: the
// coefficient at (x, y) is frequency (y mod 8, x mod 8) of block
// (x / 8, y / 8). Width and height are multiples of 8.
class CoeffGrid : public Plane<int32_t> {
 public:
  CoeffGrid() = default;
  // Throws Error(kMisalignedInput) unless both sizes are multiples of 8.
  CoeffGrid(int width, int height);

  int blocks_wide() const { return width / kBlockSize; }
  int blocks_high() const { return height / kBlockSize; }
  int block_count() const { return blocks_wide() * blocks_high(); }

  // Coefficient of block (bx, by) at frequency (row, col).
  int32_t& coeff(int bx, int by, int row, int col) {
    return at(bx * kBlockSize + col, by * kBlockSize + row);
  }
  int32_t coeff(int bx, int by, int row, int col) const {
    return at(bx * kBlockSize + col, by * kBlockSize + row);
  }
};

}  // namespace dctscope

#endif  // DCTSCOPE_JPEG_TYPES_H_
