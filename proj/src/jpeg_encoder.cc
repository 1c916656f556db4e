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

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "dctscope/dct.h"
#include "dctscope/error.h"
#include "dctscope/jpeg_codec.h"

namespace dctscope {
namespace {

// Annex K.3 example luminance tables.
constexpr std::array<uint8_t, 16> kDcLumaBits = {0, 1, 5, 1, 1, 1, 1, 1,
                                                 1, 0, 0, 0, 0, 0, 0, 0};
constexpr std::array<uint8_t, 12> kDcLumaValues = {0, 1, 2, 3, 4,  5,
                                                   6, 7, 8, 9, 10, 11};
constexpr std::array<uint8_t, 16> kAcLumaBits = {0, 2, 1, 3, 3, 2, 4, 3,
                                                 5, 5, 4, 4, 0, 0, 1, 125};
constexpr std::array<uint8_t, 162> kAcLumaValues = {
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06,
    0x13, 0x51, 0x61, 0x07, 0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08,
    0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0, 0x24, 0x33, 0x62, 0x72,
    0x82, 0x09, 0x0A, 0x16, 0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45,
    0x46, 0x47, 0x48, 0x49, 0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59,
    0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6A, 0x73, 0x74, 0x75,
    0x76, 0x77, 0x78, 0x79, 0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3,
    0xA4, 0xA5, 0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6,
    0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9,
    0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
    0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF1, 0xF2, 0xF3, 0xF4,
    0xF5, 0xF6, 0xF7, 0xF8, 0xF9, 0xFA};

struct Code {
  uint16_t bits = 0;
  uint8_t length = 0;
};

std::array<Code, 256> BuildCodes(std::span<const uint8_t, 16> counts,
                                 std::span<const uint8_t> values) {
  std::array<Code, 256> codes{};
  uint16_t code = 0;
  size_t k = 0;
  for (int len = 1; len <= 16; ++len) {
    for (int i = 0; i < counts[len - 1]; ++i) {
      codes[values[k++]] = {code, static_cast<uint8_t>(len)};
      ++code;
    }
    code <<= 1;
  }
  return codes;
}

class BitWriter {
 public:
  explicit BitWriter(std::vector<uint8_t>& out) : out_(out) {}

  void Put(uint32_t bits, int n) {
    for (int i = n - 1; i >= 0; --i) {
      acc_ = (acc_ << 1) | ((bits >> i) & 1);
      if (++count_ == 8) Emit();
    }
  }
  void Put(const Code& c) { Put(c.bits, c.length); }

  // Pads with one bits.
  void Flush() {
    while (count_ != 0) {
      acc_ = (acc_ << 1) | 1;
      if (++count_ == 8) Emit();
    }
  }

 private:
  void Emit() {
    const uint8_t b = static_cast<uint8_t>(acc_ & 0xFF);
    out_.push_back(b);
    if (b == 0xFF) out_.push_back(0x00);
    acc_ = 0;
    count_ = 0;
  }

  std::vector<uint8_t>& out_;
  uint32_t acc_ = 0;
  int count_ = 0;
};

int Category(int v) {
  int a = std::abs(v);
  int n = 0;
  while (a) {
    ++n;
    a >>= 1;
  }
  return n;
}

uint32_t MagnitudeBits(int v, int cat) {
  return static_cast<uint32_t>(v >= 0 ? v : v + (1 << cat) - 1);
}

void Word(std::vector<uint8_t>& out, int v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v & 0xFF));
}

void Marker(std::vector<uint8_t>& out, uint8_t m) {
  out.push_back(0xFF);
  out.push_back(m);
}

}  // namespace

CoeffGrid QuantizeImage(const GrayImage& image, const QuantTable& table,
                        RoundingMode rounding) {
  if (image.width < 1 || image.height < 1) {
    throw Error(ErrorCode::kDimMismatch, "empty image");
  }
  CoeffGrid grid(RoundUpTo8(image.width), RoundUpTo8(image.height));
  std::array<double, 64> px{}, freq{};
  for (int by = 0; by < grid.blocks_high(); ++by) {
    for (int bx = 0; bx < grid.blocks_wide(); ++bx) {
      for (int r = 0; r < 8; ++r) {
        const int y = std::min(by * 8 + r, image.height - 1);
        for (int c = 0; c < 8; ++c) {
          const int x = std::min(bx * 8 + c, image.width - 1);
          px[r * 8 + c] = static_cast<double>(image.at(x, y)) - 128.0;
        }
      }
      ForwardDct8x8(px, freq);
      for (int k = 0; k < kBlockArea; ++k) {
        int64_t q = RoundWithMode(freq[k] / table.step(k), rounding);
        if (k == 0) {
          q = std::clamp<int64_t>(q, kMinDcValue, kMaxDcValue);
        } else {
          q = std::clamp<int64_t>(q, -kMaxAcMagnitude, kMaxAcMagnitude);
        }
        grid.coeff(bx, by, k / 8, k % 8) = static_cast<int32_t>(q);
      }
    }
  }
  return grid;
}

std::vector<uint8_t> EncodeCoefficients(const CoeffGrid& coeffs,
                                        const QuantTable& table,
                                        int pixel_width, int pixel_height) {
  if (pixel_width < 1 || pixel_height < 1 || pixel_width > coeffs.width ||
      pixel_height > coeffs.height || coeffs.width - pixel_width > 7 ||
      coeffs.height - pixel_height > 7 || pixel_width > 65535 ||
      pixel_height > 65535) {
    throw Error(ErrorCode::kDimMismatch,
                "pixel size does not match coefficient grid");
  }
  std::vector<uint8_t> out;
  out.reserve(1024 + coeffs.values.size() / 2);
  Marker(out, 0xD8);
  // JFIF APP0.
  Marker(out, 0xE0);
  Word(out, 16);
  for (uint8_t b : {'J', 'F', 'I', 'F', '\0'}) out.push_back(b);
  for (uint8_t b : {1, 1, 0}) out.push_back(b);
  Word(out, 1);
  Word(out, 1);
  out.push_back(0);
  out.push_back(0);
  // DQT, 8-bit, zig-zag order.
  Marker(out, 0xDB);
  Word(out, 67);
  out.push_back(0);
  for (int k = 0; k < kBlockArea; ++k) {
    out.push_back(static_cast<uint8_t>(table.step(kZigZagToNatural[k])));
  }
  // SOF0.
  Marker(out, 0xC0);
  Word(out, 11);
  out.push_back(8);
  Word(out, pixel_height);
  Word(out, pixel_width);
  out.push_back(1);
  out.push_back(1);
  out.push_back(0x11);
  out.push_back(0);
  // DHT.
  Marker(out, 0xC4);
  Word(out, 2 + 17 + 12 + 17 + 162);
  out.push_back(0x00);
  out.insert(out.end(), kDcLumaBits.begin(), kDcLumaBits.end());
  out.insert(out.end(), kDcLumaValues.begin(), kDcLumaValues.end());
  out.push_back(0x10);
  out.insert(out.end(), kAcLumaBits.begin(), kAcLumaBits.end());
  out.insert(out.end(), kAcLumaValues.begin(), kAcLumaValues.end());
  // SOS.
  Marker(out, 0xDA);
  Word(out, 8);
  out.push_back(1);
  out.push_back(1);
  out.push_back(0x00);
  out.push_back(0);
  out.push_back(63);
  out.push_back(0);

  static const auto dc_codes = BuildCodes(kDcLumaBits, kDcLumaValues);
  static const auto ac_codes = BuildCodes(kAcLumaBits, kAcLumaValues);
  BitWriter bw(out);
  int pred = 0;
  for (int by = 0; by < coeffs.blocks_high(); ++by) {
    for (int bx = 0; bx < coeffs.blocks_wide(); ++bx) {
      std::array<int, kBlockArea> zz{};
      for (int k = 0; k < kBlockArea; ++k) {
        const int n = kZigZagToNatural[k];
        zz[k] = coeffs.coeff(bx, by, n / 8, n % 8);
      }
      if (zz[0] < kMinDcValue || zz[0] > kMaxDcValue) {
        throw Error(ErrorCode::kOutOfRange,
                    "DC coefficient " + std::to_string(zz[0]) +
                        " outside encodable range");
      }
      const int diff = zz[0] - pred;
      pred = zz[0];
      const int dcat = Category(diff);
      bw.Put(dc_codes[dcat]);
      if (dcat) bw.Put(MagnitudeBits(diff, dcat), dcat);
      int run = 0;
      for (int k = 1; k < kBlockArea; ++k) {
        const int v = zz[k];
        if (v == 0) {
          ++run;
          continue;
        }
        if (std::abs(v) > kMaxAcMagnitude) {
          throw Error(ErrorCode::kOutOfRange,
                      "AC coefficient " + std::to_string(v) +
                          " outside encodable range");
        }
        while (run >= 16) {
          bw.Put(ac_codes[0xF0]);
          run -= 16;
        }
        const int cat = Category(v);
        bw.Put(ac_codes[(run << 4) | cat]);
        bw.Put(MagnitudeBits(v, cat), cat);
        run = 0;
      }
      if (run > 0) bw.Put(ac_codes[0x00]);
    }
  }
  bw.Flush();
  Marker(out, 0xD9);
  return out;
}

std::vector<uint8_t> EncodeJpeg(const GrayImage& image, const QuantTable& table,
                                RoundingMode rounding) {
  if (image.width < 8 || image.height < 8) {
    throw Error(ErrorCode::kDimMismatch, "image smaller than one block");
  }
  const CoeffGrid grid = QuantizeImage(image, table, rounding);
  return EncodeCoefficients(grid, table, image.width, image.height);
}

JpegModel CoeffsFromUncompressed(const GrayImage& image) {
  JpegModel m;
  m.luma = QuantizeImage(image, QuantTable());
  m.luma_qtable = QuantTable();
  m.pixel_width = image.width;
  m.pixel_height = image.height;
  m.from_uncompressed = true;
  return m;
}

}  // namespace dctscope
