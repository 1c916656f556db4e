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

#ifndef DCTSCOPE_DCT_H_
#define DCTSCOPE_DCT_H_

#include <span>

namespace dctscope {

// Orthonormal 8x8 DCT-II in 64-bit floating point, row-major in and out:
//   F(u,v) = 1/4 C(u) C(v) sum_xy f(x,y) cos((2x+1)u pi/16) cos((2y+1)v pi/16)
// with C(0) = 1/sqrt(2). This is the JPEG FDCT without integer scaling.
void ForwardDct8x8(std::span<const double, 64> in, std::span<double, 64> out);

// Inverse of ForwardDct8x8.
void InverseDct8x8(std::span<const double, 64> in, std::span<double, 64> out);

}  // namespace dctscope

#endif  // DCTSCOPE_DCT_H_
