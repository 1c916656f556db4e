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

#include "dctscope/jpeg_types.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "dctscope/error.h"

namespace dctscope {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnsupportedCoding: return "UnsupportedCoding";
    case ErrorCode::kCorruptStream: return "CorruptStream";
    case ErrorCode::kMissingTable: return "MissingTable";
    case ErrorCode::kInvalidTable: return "InvalidTable";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kDegenerateHistogram: return "DegenerateHistogram";
    case ErrorCode::kMisalignedInput: return "MisalignedInput";
    case ErrorCode::kMisalignedCrop: return "MisalignedCrop";
    case ErrorCode::kOutOfBounds: return "OutOfBounds";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kEmptyClass: return "EmptyClass";
    case ErrorCode::kRegionOutOfBounds: return "RegionOutOfBounds";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kNoPositives: return "NoPositives";
    case ErrorCode::kIo: return "IO";
    case ErrorCode::kConfig: return "Config";
  }
  return "Unknown";
}

std::string_view RoundingModeName(RoundingMode mode) {
  switch (mode) {
    case RoundingMode::kNearestTiesUp: return "nearest_ties_up";
    case RoundingMode::kTowardZero: return "toward_zero";
    case RoundingMode::kNearestTiesAway: return "nearest_ties_away";
  }
  return "unknown";
}

std::optional<RoundingMode> ParseRoundingMode(std::string_view name) {
  for (RoundingMode m :
       {RoundingMode::kNearestTiesUp, RoundingMode::kTowardZero,
        RoundingMode::kNearestTiesAway}) {
    if (RoundingModeName(m) == name) return m;
  }
  return std::nullopt;
}

int64_t RoundWithMode(double x, RoundingMode mode) {
  switch (mode) {
    case RoundingMode::kNearestTiesUp:
      return static_cast<int64_t>(std::floor(x + 0.5));
    case RoundingMode::kTowardZero:
      return static_cast<int64_t>(std::trunc(x));
    case RoundingMode::kNearestTiesAway:
      return static_cast<int64_t>(std::round(x));
  }
  return 0;
}

namespace {

constexpr std::array<int, kBlockArea> MakeZigZag() {
  std::array<int, kBlockArea> order{};
  int row = 0, col = 0;
  for (int i = 0; i < kBlockArea; ++i) {
    order[i] = row * kBlockSize + col;
    if ((row + col) % 2 == 0) {  // moving up-right
      if (col == kBlockSize - 1) {
        ++row;
      } else if (row == 0) {
        ++col;
      } else {
        --row;
        ++col;
      }
    } else {  // moving down-left
      if (row == kBlockSize - 1) {
        ++col;
      } else if (col == 0) {
        ++row;
      } else {
        ++row;
        --col;
      }
    }
  }
  return order;
}

constexpr std::array<int, kBlockArea> Invert(
    const std::array<int, kBlockArea>& p) {
  std::array<int, kBlockArea> inv{};
  for (int i = 0; i < kBlockArea; ++i) inv[p[i]] = i;
  return inv;
}

}  // namespace

const std::array<int, kBlockArea> kZigZagToNatural = MakeZigZag();
const std::array<int, kBlockArea> kNaturalToZigZag = Invert(MakeZigZag());

const std::array<int, kBlockArea> kStandardLumaTable = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99};

QuantTable::QuantTable() { steps_.fill(1); }

QuantTable::QuantTable(const std::array<int, kBlockArea>& steps)
    : steps_(steps) {
  for (int s : steps_) {
    if (s < 1 || s > 255) {
      throw Error(ErrorCode::kInvalidTable,
                  "quantization step " + std::to_string(s) +
                      " outside [1, 255]");
    }
  }
}

bool QuantTable::IsAllOnes() const {
  return std::all_of(steps_.begin(), steps_.end(),
                     [](int s) { return s == 1; });
}

QuantTable QualityToTable(int quality) {
  if (quality < 1 || quality > 100) {
    throw Error(ErrorCode::kOutOfRange,
                "quality " + std::to_string(quality) + " outside [1, 100]");
  }
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<int, kBlockArea> steps{};
  for (int i = 0; i < kBlockArea; ++i) {
    const int v = (kStandardLumaTable[i] * scale + 50) / 100;
    steps[i] = std::clamp(v, 1, 255);
  }
  return QuantTable(steps);
}

std::optional<int> MatchQuality(const QuantTable& table) {
  for (int q = 100; q >= 1; --q) {
    if (QualityToTable(q) == table) return q;
  }
  return std::nullopt;
}

CoeffGrid::CoeffGrid(int w, int h) : Plane<int32_t>(w, h, 0) {
  if (w < 0 || h < 0 || w % kBlockSize != 0 || h % kBlockSize != 0) {
    throw Error(ErrorCode::kMisalignedInput,
                "coefficient grid " + std::to_string(w) + "x" +
                    std::to_string(h) + " is not a multiple of 8");
  }
}

}  // namespace dctscope
