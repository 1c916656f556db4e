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

// Baseline sequential JPEG with direct access to the quantized coefficients.
//
// The decoder accepts Huffman-coded baseline and extended-sequential 8-bit
// files (any number of components, any sampling factors, restart markers,
// interleaved or per-component scans). Progressive, lossless, arithmetic and
// 12-bit files are rejected with ErrorCode::kUnsupportedCoding.
//
// The encoder writes single-component (grayscale) baseline files using the
// Annex K example Huffman tables.

#ifndef DCTSCOPE_JPEG_CODEC_H_
#define DCTSCOPE_JPEG_CODEC_H_

#include <cstdint>
#include <span>
#include <vector>

#include "dctscope/jpeg_types.h"
#include "dctscope/plane.h"

namespace dctscope {

// A non-luma component as stored in the file. Parsed and kept, never
// analyzed.
struct ComponentPlane {
  int id = 0;
  int h_samp = 1;
  int v_samp = 1;
  // Component sample dimensions (before padding to whole blocks).
  int sample_width = 0;
  int sample_height = 0;
  CoeffGrid coeffs;
  QuantTable qtable;
};

struct JpegModel {
  // Y-channel coefficients; dimensions are the pixel dimensions rounded up to
  // multiples of 8.
  CoeffGrid luma;
  QuantTable luma_qtable;
  std::vector<ComponentPlane> chroma;
  int pixel_width = 0;
  int pixel_height = 0;
  int restart_interval = 0;
  // True when the model came from CoeffsFromUncompressed rather than a file.
  bool from_uncompressed = false;
};

// Parses a JPEG file. Coefficients are returned exactly as entropy coded:
// DC differences resolved, de-zig-zagged, not dequantized.
// Errors: kUnsupportedCoding, kCorruptStream, kMissingTable.
JpegModel DecodeJpeg(std::span<const uint8_t> bytes);

// Dequantize, IDCT, level shift, round, clamp to [0, 255], crop padding.
GrayImage DecodePixels(const JpegModel& model);
GrayImage DecodePixels(const CoeffGrid& coeffs, const QuantTable& table,
                       int pixel_width, int pixel_height);

// Level shift, forward DCT and quantization of an image whose padding to a
// multiple of 8 uses edge replication. Requires width, height >= 1.
CoeffGrid QuantizeImage(const GrayImage& image, const QuantTable& table,
                        RoundingMode rounding = RoundingMode::kNearestTiesUp);

// Entropy codes an already quantized grid as a grayscale baseline JPEG.
// The pixel size may be smaller than the grid by at most 7 in each axis.
std::vector<uint8_t> EncodeCoefficients(const CoeffGrid& coeffs,
                                        const QuantTable& table,
                                        int pixel_width, int pixel_height);

// QuantizeImage + EncodeCoefficients. Requires an image of at least 8x8.
std::vector<uint8_t> EncodeJpeg(
    const GrayImage& image, const QuantTable& table,
    RoundingMode rounding = RoundingMode::kNearestTiesUp);

// Coefficients of a never-compressed image: forward DCT with an all-ones
// table. Equivalent to a quality-100 grayscale encode.
JpegModel CoeffsFromUncompressed(const GrayImage& image);

// Coefficient range the encoder clamps to: keeps every DC difference within
// Huffman category 11 and every AC value within category 10.
inline constexpr int kMinDcValue = -1024;
inline constexpr int kMaxDcValue = 1023;
inline constexpr int kMaxAcMagnitude = 1023;

}  // namespace dctscope

#endif  // DCTSCOPE_JPEG_CODEC_H_
