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
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dctscope/dct.h"
#include "dctscope/error.h"
#include "dctscope/jpeg_codec.h"

namespace dctscope {
namespace {

[[noreturn]] void Corrupt(const std::string& what) {
  throw Error(ErrorCode::kCorruptStream, what);
}

[[noreturn]] void Unsupported(const std::string& what) {
  throw Error(ErrorCode::kUnsupportedCoding, what);
}

// Canonical Huffman table in the Annex F "maxcode / valptr" form.
struct HuffmanTable {
  bool defined = false;
  std::vector<uint8_t> symbols;
  std::array<int32_t, 18> maxcode{};
  std::array<int32_t, 17> mincode{};
  std::array<int32_t, 17> valptr{};

  void Build(const std::array<uint8_t, 16>& counts,
             std::vector<uint8_t> values) {
    symbols = std::move(values);
    int32_t code = 0;
    int k = 0;
    for (int len = 1; len <= 16; ++len) {
      const int n = counts[len - 1];
      if (n == 0) {
        maxcode[len] = -1;
      } else {
        valptr[len] = k;
        mincode[len] = code;
        code += n;
        k += n;
        maxcode[len] = code - 1;
        if (code > (1 << len)) Corrupt("Huffman table overflows code space");
      }
      code <<= 1;
    }
    maxcode[17] = 0x7fffffff;
    defined = true;
  }
};

// Reads entropy-coded bits, removing 0xFF00 stuffing. Reaching a marker while
// bits are still required is a Huffman underrun.
class BitReader {
 public:
  BitReader(std::span<const uint8_t> data, size_t pos)
      : data_(data), pos_(pos) {}

  int ReadBit() {
    if (bits_left_ == 0) FillByte();
    --bits_left_;
    return (cur_ >> bits_left_) & 1;
  }

  int32_t ReadBits(int n) {
    int32_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 1) | ReadBit();
    return v;
  }

  // Drops the partial byte; the next byte read is byte aligned.
  void Align() { bits_left_ = 0; }

  size_t position() const { return pos_; }

  // Consumes an expected RSTn marker after aligning.
  void ReadRestart(int expected) {
    Align();
    // Skip fill bytes.
    while (pos_ + 1 < data_.size() && data_[pos_] == 0xFF &&
           data_[pos_ + 1] == 0xFF) {
      ++pos_;
    }
    if (pos_ + 1 >= data_.size() || data_[pos_] != 0xFF ||
        data_[pos_ + 1] != 0xD0 + expected) {
      Corrupt("expected RST" + std::to_string(expected) + " marker");
    }
    pos_ += 2;
  }

 private:
  void FillByte() {
    if (pos_ >= data_.size()) Corrupt("Huffman underrun at end of data");
    uint8_t b = data_[pos_];
    if (b == 0xFF) {
      if (pos_ + 1 >= data_.size()) Corrupt("truncated entropy segment");
      if (data_[pos_ + 1] != 0x00) Corrupt("Huffman underrun at marker");
      pos_ += 2;
    } else {
      ++pos_;
    }
    cur_ = b;
    bits_left_ = 8;
  }

  std::span<const uint8_t> data_;
  size_t pos_;
  uint32_t cur_ = 0;
  int bits_left_ = 0;
};

int DecodeSymbol(BitReader& br, const HuffmanTable& t) {
  int32_t code = br.ReadBit();
  int len = 1;
  while (code > t.maxcode[len]) {
    code = (code << 1) | br.ReadBit();
    if (++len > 16) Corrupt("invalid Huffman code");
  }
  const int idx = t.valptr[len] + code - t.mincode[len];
  if (idx < 0 || idx >= static_cast<int>(t.symbols.size())) {
    Corrupt("Huffman symbol index out of range");
  }
  return t.symbols[idx];
}

int32_t Extend(int32_t v, int s) {
  return v < (1 << (s - 1)) ? v - (1 << s) + 1 : v;
}

struct FrameComponent {
  int id = 0;
  int h = 1;
  int v = 1;
  int tq = 0;
  int blocks_wide = 0;  // allocated (MCU padded)
  int blocks_high = 0;
  int sample_width = 0;
  int sample_height = 0;
  std::vector<int32_t> coeffs;  // blocks_high*8 rows x blocks_wide*8 cols
  std::optional<QuantTable> qtable;
  bool scanned = false;
  int dc_pred = 0;
};

class Decoder {
 public:
  explicit Decoder(std::span<const uint8_t> data) : data_(data) {}

  JpegModel Run() {
    if (data_.size() < 4 || data_[0] != 0xFF || data_[1] != 0xD8) {
      Corrupt("missing SOI marker");
    }
    pos_ = 2;
    bool done = false;
    while (!done) {
      const int marker = NextMarker();
      if (marker < 0) break;  // end of data
      switch (marker) {
        case 0xC0:
        case 0xC1:
          ReadFrame();
          break;
        case 0xC2: Unsupported("progressive JPEG");
        case 0xC3: Unsupported("lossless JPEG");
        case 0xC5: case 0xC6: case 0xC7:
          Unsupported("hierarchical JPEG");
        case 0xC9: case 0xCA: case 0xCB: case 0xCD: case 0xCE: case 0xCF:
        case 0xCC:
          Unsupported("arithmetic-coded JPEG");
        case 0xC4: ReadHuffmanTables(); break;
        case 0xDB: ReadQuantTables(); break;
        case 0xDD: ReadRestartInterval(); break;
        case 0xDA: ReadScan(); break;
        case 0xD9: done = true; break;
        case 0xDC: Unsupported("DNL marker");
        case 0xD8: Corrupt("unexpected SOI");
        default:
          if (marker >= 0xD0 && marker <= 0xD7) Corrupt("RST outside scan");
          SkipSegment();
          break;
      }
    }
    if (!frame_seen_) Corrupt("no SOF0/SOF1 frame header");
    if (scans_ == 0) Corrupt("no scan data");
    return BuildModel();
  }

 private:
  uint8_t Byte() {
    if (pos_ >= data_.size()) Corrupt("unexpected end of data");
    return data_[pos_++];
  }
  int Word() {
    const int hi = Byte();
    return (hi << 8) | Byte();
  }

  // Returns the next marker code, or -1 at end of data.
  int NextMarker() {
    while (pos_ < data_.size()) {
      if (data_[pos_] != 0xFF) Corrupt("expected marker");
      while (pos_ < data_.size() && data_[pos_] == 0xFF) ++pos_;
      if (pos_ >= data_.size()) return -1;
      return data_[pos_++];
    }
    return -1;
  }

  // Returns the end offset of the segment whose length field is next.
  size_t SegmentEnd() {
    const size_t start = pos_;
    const int len = Word();
    if (len < 2 || start + len > data_.size()) Corrupt("bad segment length");
    return start + len;
  }

  void SkipSegment() { pos_ = SegmentEnd(); }

  void ReadQuantTables() {
    const size_t end = SegmentEnd();
    while (pos_ < end) {
      const int pq_tq = Byte();
      const int precision = pq_tq >> 4;
      const int id = pq_tq & 15;
      if (id > 3 || precision > 1) Corrupt("bad DQT header");
      std::array<int, kBlockArea> steps{};
      for (int k = 0; k < kBlockArea; ++k) {
        const int v = precision ? Word() : Byte();
        if (v == 0) Corrupt("zero quantization step");
        if (v > 255) Unsupported("16-bit quantization step above 255");
        steps[kZigZagToNatural[k]] = v;
      }
      qtables_[id] = QuantTable(steps);
    }
    if (pos_ != end) Corrupt("DQT length mismatch");
  }

  void ReadHuffmanTables() {
    const size_t end = SegmentEnd();
    while (pos_ < end) {
      const int tc_th = Byte();
      const int tc = tc_th >> 4;
      const int th = tc_th & 15;
      if (tc > 1 || th > 3) Corrupt("bad DHT header");
      std::array<uint8_t, 16> counts{};
      int total = 0;
      for (auto& c : counts) {
        c = Byte();
        total += c;
      }
      if (total > 256) Corrupt("too many Huffman symbols");
      std::vector<uint8_t> values(total);
      for (auto& v : values) v = Byte();
      (tc == 0 ? dc_tables_ : ac_tables_)[th].Build(counts, std::move(values));
    }
    if (pos_ != end) Corrupt("DHT length mismatch");
  }

  void ReadRestartInterval() {
    const size_t end = SegmentEnd();
    restart_interval_ = Word();
    if (pos_ != end) Corrupt("DRI length mismatch");
  }

  void ReadFrame() {
    if (frame_seen_) Corrupt("multiple frame headers");
    const size_t end = SegmentEnd();
    const int precision = Byte();
    if (precision != 8) Unsupported(std::to_string(precision) + "-bit JPEG");
    height_ = Word();
    width_ = Word();
    if (height_ == 0) Unsupported("frame height defined by DNL");
    if (width_ == 0) Corrupt("zero frame width");
    const int n = Byte();
    if (n < 1 || n > 4) Corrupt("bad component count");
    comps_.resize(n);
    for (auto& c : comps_) {
      c.id = Byte();
      const int hv = Byte();
      c.h = hv >> 4;
      c.v = hv & 15;
      c.tq = Byte();
      if (c.h < 1 || c.h > 4 || c.v < 1 || c.v > 4 || c.tq > 3) {
        Corrupt("bad frame component");
      }
      hmax_ = std::max(hmax_, c.h);
      vmax_ = std::max(vmax_, c.v);
    }
    if (pos_ != end) Corrupt("SOF length mismatch");
    mcus_wide_ = (width_ + 8 * hmax_ - 1) / (8 * hmax_);
    mcus_high_ = (height_ + 8 * vmax_ - 1) / (8 * vmax_);
    for (auto& c : comps_) {
      c.sample_width = (width_ * c.h + hmax_ - 1) / hmax_;
      c.sample_height = (height_ * c.v + vmax_ - 1) / vmax_;
      c.blocks_wide = mcus_wide_ * c.h;
      c.blocks_high = mcus_high_ * c.v;
      c.coeffs.assign(static_cast<size_t>(c.blocks_wide) * c.blocks_high *
                          kBlockArea,
                      0);
    }
    if (comps_[0].h != hmax_ || comps_[0].v != vmax_) {
      Unsupported("luma component is subsampled");
    }
    frame_seen_ = true;
  }

  void ReadScan() {
    if (!frame_seen_) Corrupt("SOS before frame header");
    const size_t end = SegmentEnd();
    const int ns = Byte();
    if (ns < 1 || ns > 4) Corrupt("bad scan component count");
    std::vector<int> scan_comps;
    std::vector<int> dc_ids, ac_ids;
    for (int i = 0; i < ns; ++i) {
      const int cs = Byte();
      const int tables = Byte();
      int idx = -1;
      for (size_t k = 0; k < comps_.size(); ++k) {
        if (comps_[k].id == cs) idx = static_cast<int>(k);
      }
      if (idx < 0) Corrupt("scan references unknown component");
      const int td = tables >> 4, ta = tables & 15;
      if (td > 3 || ta > 3) Corrupt("bad scan table selector");
      if (!dc_tables_[td].defined || !ac_tables_[ta].defined) {
        throw Error(ErrorCode::kMissingTable, "undefined Huffman table");
      }
      auto& c = comps_[idx];
      if (!qtables_[c.tq]) {
        throw Error(ErrorCode::kMissingTable,
                    "undefined quantization table " + std::to_string(c.tq));
      }
      c.qtable = *qtables_[c.tq];
      c.scanned = true;
      scan_comps.push_back(idx);
      dc_ids.push_back(td);
      ac_ids.push_back(ta);
    }
    const int ss = Byte(), se = Byte(), ahal = Byte();
    if (ss != 0 || se != 63 || ahal != 0) {
      Corrupt("spectral selection in sequential scan");
    }
    if (pos_ != end) Corrupt("SOS length mismatch");

    BitReader br(data_, pos_);
    for (int idx : scan_comps) comps_[idx].dc_pred = 0;

    auto decode_block = [&](int ci, int bx, int by) {
      FrameComponent& c = comps_[scan_comps[ci]];
      const HuffmanTable& dc = dc_tables_[dc_ids[ci]];
      const HuffmanTable& ac = ac_tables_[ac_ids[ci]];
      const int row_stride = c.blocks_wide * kBlockSize;
      int32_t* origin = c.coeffs.data() +
                        static_cast<size_t>(by) * kBlockSize * row_stride +
                        static_cast<size_t>(bx) * kBlockSize;
      auto put = [&](int natural, int32_t v) {
        origin[(natural / 8) * row_stride + natural % 8] = v;
      };
      const int s = DecodeSymbol(br, dc);
      if (s > 11) Corrupt("DC category out of range");
      const int32_t diff = s ? Extend(br.ReadBits(s), s) : 0;
      c.dc_pred += diff;
      put(0, c.dc_pred);
      for (int k = 1; k < kBlockArea;) {
        const int rs = DecodeSymbol(br, ac);
        const int r = rs >> 4, sz = rs & 15;
        if (sz == 0) {
          if (r != 15) break;  // EOB
          k += 16;
          continue;
        }
        k += r;
        if (k > 63) Corrupt("AC run past end of block");
        put(kZigZagToNatural[k], Extend(br.ReadBits(sz), sz));
        ++k;
      }
    };

    int restart_index = 0;
    int mcus_since_restart = 0;
    auto maybe_restart = [&](bool last) {
      if (restart_interval_ == 0 || last) return;
      if (++mcus_since_restart == restart_interval_) {
        br.ReadRestart(restart_index);
        restart_index = (restart_index + 1) & 7;
        mcus_since_restart = 0;
        for (int idx : scan_comps) comps_[idx].dc_pred = 0;
      }
    };

    if (ns == 1) {
      const FrameComponent& c = comps_[scan_comps[0]];
      const int bw = (c.sample_width + 7) / 8;
      const int bh = (c.sample_height + 7) / 8;
      for (int by = 0; by < bh; ++by) {
        for (int bx = 0; bx < bw; ++bx) {
          decode_block(0, bx, by);
          maybe_restart(by == bh - 1 && bx == bw - 1);
        }
      }
    } else {
      for (int my = 0; my < mcus_high_; ++my) {
        for (int mx = 0; mx < mcus_wide_; ++mx) {
          for (int ci = 0; ci < ns; ++ci) {
            const FrameComponent& c = comps_[scan_comps[ci]];
            for (int v = 0; v < c.v; ++v) {
              for (int h = 0; h < c.h; ++h) {
                decode_block(ci, mx * c.h + h, my * c.v + v);
              }
            }
          }
          maybe_restart(my == mcus_high_ - 1 && mx == mcus_wide_ - 1);
        }
      }
    }
    br.Align();
    pos_ = br.position();
    // Skip anything up to the next non-stuffed, non-RST marker.
    while (pos_ + 1 < data_.size()) {
      if (data_[pos_] == 0xFF && data_[pos_ + 1] != 0x00 &&
          !(data_[pos_ + 1] >= 0xD0 && data_[pos_ + 1] <= 0xD7)) {
        break;
      }
      ++pos_;
    }
    if (pos_ + 1 >= data_.size()) pos_ = data_.size();
    ++scans_;
  }

  static CoeffGrid Crop(const FrameComponent& c, int w, int h) {
    CoeffGrid g(w, h);
    const int stride = c.blocks_wide * kBlockSize;
    for (int y = 0; y < h; ++y) {
      std::copy_n(c.coeffs.begin() + static_cast<size_t>(y) * stride, w,
                  g.values.begin() + static_cast<size_t>(y) * w);
    }
    return g;
  }

  JpegModel BuildModel() {
    JpegModel m;
    m.pixel_width = width_;
    m.pixel_height = height_;
    m.restart_interval = restart_interval_;
    for (size_t i = 0; i < comps_.size(); ++i) {
      const FrameComponent& c = comps_[i];
      if (!c.scanned) Corrupt("component without scan data");
      if (!c.qtable) throw Error(ErrorCode::kMissingTable, "no table");
      const int gw = RoundUpTo8(c.sample_width);
      const int gh = RoundUpTo8(c.sample_height);
      if (i == 0) {
        m.luma = Crop(c, gw, gh);
        m.luma_qtable = *c.qtable;
      } else {
        ComponentPlane p;
        p.id = c.id;
        p.h_samp = c.h;
        p.v_samp = c.v;
        p.sample_width = c.sample_width;
        p.sample_height = c.sample_height;
        p.coeffs = Crop(c, gw, gh);
        p.qtable = *c.qtable;
        m.chroma.push_back(std::move(p));
      }
    }
    return m;
  }

  std::span<const uint8_t> data_;
  size_t pos_ = 0;
  std::array<std::optional<QuantTable>, 4> qtables_;
  std::array<HuffmanTable, 4> dc_tables_;
  std::array<HuffmanTable, 4> ac_tables_;
  std::vector<FrameComponent> comps_;
  int restart_interval_ = 0;
  int width_ = 0;
  int height_ = 0;
  int hmax_ = 1;
  int vmax_ = 1;
  int mcus_wide_ = 0;
  int mcus_high_ = 0;
  bool frame_seen_ = false;
  int scans_ = 0;
};

}  // namespace

JpegModel DecodeJpeg(std::span<const uint8_t> bytes) {
  return Decoder(bytes).Run();
}

GrayImage DecodePixels(const CoeffGrid& coeffs, const QuantTable& table,
                       int pixel_width, int pixel_height) {
  if (pixel_width > coeffs.width || pixel_height > coeffs.height) {
    throw Error(ErrorCode::kDimMismatch, "pixel size exceeds grid");
  }
  GrayImage out(pixel_width, pixel_height);
  std::array<double, 64> in{}, px{};
  for (int by = 0; by < coeffs.blocks_high(); ++by) {
    for (int bx = 0; bx < coeffs.blocks_wide(); ++bx) {
      for (int r = 0; r < 8; ++r) {
        for (int c = 0; c < 8; ++c) {
          in[r * 8 + c] =
              static_cast<double>(coeffs.coeff(bx, by, r, c)) * table.step(r, c);
        }
      }
      InverseDct8x8(in, px);
      for (int r = 0; r < 8; ++r) {
        const int y = by * 8 + r;
        if (y >= pixel_height) break;
        for (int c = 0; c < 8; ++c) {
          const int x = bx * 8 + c;
          if (x >= pixel_width) break;
          const double v = std::floor(px[r * 8 + c] + 128.0 + 0.5);
          out.at(x, y) = static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
        }
      }
    }
  }
  return out;
}

GrayImage DecodePixels(const JpegModel& model) {
  return DecodePixels(model.luma, model.luma_qtable, model.pixel_width,
                      model.pixel_height);
}

}  // namespace dctscope
