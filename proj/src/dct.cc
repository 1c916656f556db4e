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

#include "dctscope/dct.h"

#include <array>
#include <cmath>
#include <numbers>

namespace dctscope {
namespace {

// kBasis[u][x] = C(u)/2 * cos((2x+1) u pi / 16). The 2D transform is
// separable: F = B f B^T.
struct Basis {
  std::array<std::array<double, 8>, 8> m;
  Basis() {
    for (int u = 0; u < 8; ++u) {
      const double c = u == 0 ? std::numbers::sqrt2 / 2.0 : 1.0;
      for (int x = 0; x < 8; ++x) {
        m[u][x] = 0.5 * c * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
      }
    }
  }
};

const Basis& GetBasis() {
  static const Basis basis;
  return basis;
}

}  // namespace

void ForwardDct8x8(std::span<const double, 64> in, std::span<double, 64> out) {
  const auto& b = GetBasis().m;
  double tmp[64];
  // Rows: tmp[y][v] = sum_x b[v][x] in[y][x]
  for (int y = 0; y < 8; ++y) {
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) s += b[v][x] * in[y * 8 + x];
      tmp[y * 8 + v] = s;
    }
  }
  // Columns: out[u][v] = sum_y b[u][y] tmp[y][v]
  for (int u = 0; u < 8; ++u) {
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) s += b[u][y] * tmp[y * 8 + v];
      out[u * 8 + v] = s;
    }
  }
}

void InverseDct8x8(std::span<const double, 64> in, std::span<double, 64> out) {
  const auto& b = GetBasis().m;
  double tmp[64];
  // tmp[y][v] = sum_u b[u][y] in[u][v]
  for (int y = 0; y < 8; ++y) {
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += b[u][y] * in[u * 8 + v];
      tmp[y * 8 + v] = s;
    }
  }
  // out[y][x] = sum_v b[v][x] tmp[y][v]
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += b[v][x] * tmp[y * 8 + v];
      out[y * 8 + x] = s;
    }
  }
}

}  // namespace dctscope
