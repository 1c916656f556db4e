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

#include "dctscope/forgery_synth.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "dctscope/error.h"
#include "dctscope/jpeg_codec.h"
#include "dctscope/png_io.h"
#include "dctscope/rng.h"

#ifndef DCTSCOPE_DEFAULT_DATA_DIR
#define DCTSCOPE_DEFAULT_DATA_DIR "data"
#endif

namespace dctscope {
namespace {

namespace fs = std::filesystem;

uint8_t ToByte(double v) {
  return static_cast<uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

double Smooth(double t) { return t * t * (3 - 2 * t); }

// Adds one octave of value noise with lattice spacing `cell`.
void AddValueNoise(Rng& rng, std::vector<double>& field, int w, int h,
                   double cell, double amp) {
  const int gw = static_cast<int>(w / cell) + 2;
  const int gh = static_cast<int>(h / cell) + 2;
  std::vector<double> lattice(static_cast<size_t>(gw) * gh);
  for (double& v : lattice) v = rng.Normal();
  for (int y = 0; y < h; ++y) {
    const double fy = y / cell;
    const int iy = static_cast<int>(fy);
    const double ty = Smooth(fy - iy);
    for (int x = 0; x < w; ++x) {
      const double fx = x / cell;
      const int ix = static_cast<int>(fx);
      const double tx = Smooth(fx - ix);
      const double a = lattice[iy * gw + ix], b = lattice[iy * gw + ix + 1];
      const double c = lattice[(iy + 1) * gw + ix],
                   d = lattice[(iy + 1) * gw + ix + 1];
      field[static_cast<size_t>(y) * w + x] +=
          amp * ((a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty);
    }
  }
}

void CheckQuality(int q) {
  if (q < 1 || q > 100) {
    throw Error(ErrorCode::kOutOfRange,
                "quality " + std::to_string(q) + " outside [1, 100]");
  }
}

double Bilinear(const GrayImage& img, double x, double y) {
  x = std::clamp(x, 0.0, img.width - 1.0);
  y = std::clamp(y, 0.0, img.height - 1.0);
  const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0, fy = y - y0;
  return (img.at(x0, y0) * (1 - fx) + img.at(x1, y0) * fx) * (1 - fy) +
         (img.at(x0, y1) * (1 - fx) + img.at(x1, y1) * fx) * fy;
}

bool BoxesOverlap(int ax, int ay, int bx, int by, int size) {
  return ax < bx + size && bx < ax + size && ay < by + size && by < ay + size;
}

// Shared splice / copy-move body. `donor` is the decoded donor image.
ForgerySample Paste(const SynthRecipe& r, Rng& rng, const GrayImage& target,
                    const GrayImage& donor, bool same_image,
                    PasteGeometry geometry) {
  const int size = r.size;
  const double radius = rng.Uniform(size / 10.0, size / 5.0);
  const int box = RoundUpTo8(static_cast<int>(std::ceil(2 * radius)) + 2);
  if (box > size || box > donor.width || box > donor.height) {
    throw Error(ErrorCode::kRegionOutOfBounds, "paste region does not fit");
  }
  const Polygon poly = RandomPolygon(rng, box / 2.0, box / 2.0, radius);
  const Mask local = RasterizePolygon(poly, box, box);

  const int sx = 8 * static_cast<int>(rng.UniformInt(0, (donor.width - box) / 8));
  const int sy = 8 * static_cast<int>(rng.UniformInt(0, (donor.height - box) / 8));
  // Candidate positions span whole multiples of 8 so that each residue mod 8
  // is equally likely.
  const int free = size - box;
  const int span = 8 * ((free + 1) / 8);
  int tx = 0, ty = 0;
  for (int attempt = 0;; ++attempt) {
    if (r.alignment == AlignmentMode::kAligned || span == 0) {
      tx = 8 * static_cast<int>(rng.UniformInt(0, free / 8));
      ty = 8 * static_cast<int>(rng.UniformInt(0, free / 8));
    } else {
      tx = static_cast<int>(rng.UniformInt(0, span - 1));
      ty = static_cast<int>(rng.UniformInt(0, span - 1));
      if (r.alignment == AlignmentMode::kMisaligned && tx % 8 == 0 &&
          ty % 8 == 0) {
        continue;
      }
    }
    if (!same_image || attempt >= 64 || !BoxesOverlap(sx, sy, tx, ty, box)) break;
  }
  if (r.alignment == AlignmentMode::kMisaligned && span == 0) {
    throw Error(ErrorCode::kRegionOutOfBounds, "no room for a misaligned paste");
  }

  // Optional resampling of the copied content around the box centre.
  const bool resample = r.rotate || r.resize;
  const double angle =
      r.rotate ? rng.Uniform(-30.0, 30.0) * std::numbers::pi / 180.0 : 0.0;
  const double scale = r.resize ? rng.Uniform(0.75, 1.25) : 1.0;
  const double ca = std::cos(angle) / scale, sa = std::sin(angle) / scale;

  ForgerySample out;
  GrayImage composite = target;
  out.mask = Mask(size, size);
  for (int y = 0; y < box; ++y) {
    for (int x = 0; x < box; ++x) {
      if (!local.at(x, y)) continue;
      uint8_t v;
      if (resample) {
        const double dx = x - box / 2.0, dy = y - box / 2.0;
        v = ToByte(Bilinear(donor, sx + box / 2.0 + ca * dx + sa * dy,
                            sy + box / 2.0 - sa * dx + ca * dy));
      } else {
        v = donor.at(sx + x, sy + y);
      }
      composite.at(tx + x, ty + y) = v;
      out.mask.at(tx + x, ty + y) = 1;
    }
  }
  out.jpeg = EncodeJpeg(composite, QualityToTable(r.q2));
  geometry.source_x = sx;
  geometry.source_y = sy;
  geometry.paste_x = tx;
  geometry.paste_y = ty;
  geometry.box_width = box;
  geometry.box_height = box;
  geometry.aligned = (tx - sx) % 8 == 0 && (ty - sy) % 8 == 0;
  geometry.resampled = resample;
  int64_t area = 0;
  for (uint8_t m : out.mask.values) area += m;
  geometry.mask_area = area;
  out.geometry = std::move(geometry);
  return out;
}

}  // namespace

SourcePool SourcePool::Load(const fs::path& dir) {
  SourcePool pool;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return pool;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir, ec)) {
    if (e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    pool.names_.push_back(f.stem().string());
    pool.photos_.push_back(ReadPng(f));
  }
  return pool;
}

const SourcePool& SourcePool::Default() {
  static const SourcePool pool = [] {
    const char* env = std::getenv("DCTSCOPE_DATA_DIR");
    const fs::path root = env ? fs::path(env) : fs::path(DCTSCOPE_DEFAULT_DATA_DIR);
    return Load(root / "sources");
  }();
  return pool;
}

GrayImage SourcePool::Draw(Rng& rng, int width, int height, std::string* id,
                           double photo_fraction) const {
  std::vector<size_t> fits;
  for (size_t i = 0; i < photos_.size(); ++i) {
    if (photos_[i].width >= width && photos_[i].height >= height) fits.push_back(i);
  }
  const bool photo = rng.Bernoulli(photo_fraction);
  const uint64_t texture_seed = rng.Next();
  if (!photo || fits.empty()) {
    if (id) *id = "texture:" + std::to_string(texture_seed);
    return ProceduralTexture(texture_seed, width, height);
  }
  const size_t k = fits[rng.UniformInt(0, static_cast<int64_t>(fits.size()) - 1)];
  const GrayImage& src = photos_[k];
  const int x0 = static_cast<int>(rng.UniformInt(0, src.width - width));
  const int y0 = static_cast<int>(rng.UniformInt(0, src.height - height));
  const bool flip = rng.Bernoulli(0.5);
  GrayImage out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      out.at(x, y) = src.at(x0 + (flip ? width - 1 - x : x), y0 + y);
    }
  }
  if (id) {
    *id = "photo:" + names_[k] + "@" + std::to_string(x0) + "," +
          std::to_string(y0) + (flip ? ",f" : "");
  }
  return out;
}

GrayImage ProceduralTexture(uint64_t seed, int width, int height) {
  Rng rng(seed);
  std::vector<double> field(static_cast<size_t>(width) * height,
                            rng.Uniform(70, 180));
  double cell = rng.Uniform(24, 72);
  double amp = rng.Uniform(15, 45);
  for (int o = 0; o < 5 && cell >= 1.5; ++o) {
    AddValueNoise(rng, field, width, height, cell, amp);
    cell /= 2;
    amp *= rng.Uniform(0.4, 0.65);
  }
  const double gx = rng.Uniform(-0.4, 0.4), gy = rng.Uniform(-0.4, 0.4);
  const int shapes = static_cast<int>(rng.UniformInt(2, 9));
  struct Shape {
    int kind;
    double cx, cy, rx, ry, level, stripe_freq, stripe_amp, stripe_angle;
  };
  std::vector<Shape> list;
  for (int s = 0; s < shapes; ++s) {
    Shape sh;
    sh.kind = static_cast<int>(rng.UniformInt(0, 1));
    sh.cx = rng.Uniform(0, width);
    sh.cy = rng.Uniform(0, height);
    sh.rx = rng.Uniform(4, width / 3.0);
    sh.ry = rng.Uniform(4, height / 3.0);
    sh.level = rng.Uniform(-70, 70);
    sh.stripe_freq = rng.Bernoulli(0.4) ? rng.Uniform(0.2, 1.6) : 0.0;
    sh.stripe_amp = rng.Uniform(5, 30);
    sh.stripe_angle = rng.Uniform(0, std::numbers::pi);
    list.push_back(sh);
  }
  const double sigma = rng.Uniform(1.0, 4.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double v = field[static_cast<size_t>(y) * width + x] + gx * x + gy * y;
      for (const Shape& sh : list) {
        const double dx = (x - sh.cx) / sh.rx, dy = (y - sh.cy) / sh.ry;
        const bool inside = sh.kind == 0 ? (std::abs(dx) <= 1 && std::abs(dy) <= 1)
                                         : (dx * dx + dy * dy <= 1);
        if (!inside) continue;
        v += sh.level;
        if (sh.stripe_freq > 0) {
          const double t = x * std::cos(sh.stripe_angle) + y * std::sin(sh.stripe_angle);
          v += sh.stripe_amp * std::sin(sh.stripe_freq * t);
        }
      }
      v += rng.Normal(0, sigma);
      field[static_cast<size_t>(y) * width + x] = v;
    }
  }
  GrayImage out(width, height);
  for (size_t i = 0; i < field.size(); ++i) out.values[i] = ToByte(field[i]);
  return out;
}

GrayImage CompressDecompress(const GrayImage& image, int quality) {
  CheckQuality(quality);
  const QuantTable table = QualityToTable(quality);
  return DecodePixels(QuantizeImage(image, table), table, image.width,
                      image.height);
}

PatchSample GenDjpegPatch(uint64_t seed, int size, std::optional<int> q1,
                          int q2, const SourcePool& pool) {
  if (size < 8 || size % 8 != 0) {
    throw Error(ErrorCode::kMisalignedInput, "patch size must be a multiple of 8");
  }
  CheckQuality(q2);
  if (q1) CheckQuality(*q1);
  Rng rng(seed);
  PatchSample s;
  GrayImage content = pool.Draw(rng, size, size, &s.source);
  if (q1) content = CompressDecompress(content, *q1);
  s.jpeg = EncodeJpeg(content, QualityToTable(q2));
  s.label = q1 ? 1 : 0;
  s.q1 = q1;
  s.q2 = q2;
  s.hard = q1 && *q1 == q2;
  return s;
}

std::vector<PatchSample> GenDjpegDataset(uint64_t seed, int count, int size,
                                         std::span<const int> qualities,
                                         const SourcePool& pool) {
  if (qualities.size() < 2) {
    throw Error(ErrorCode::kConfig, "need at least two qualities");
  }
  std::vector<PatchSample> out;
  out.reserve(count);
  const int64_t nq = static_cast<int64_t>(qualities.size());
  for (int i = 0; i < count; ++i) {
    const uint64_t s = Rng::Mix(seed, static_cast<uint64_t>(i));
    Rng rng(Rng::Mix(s, 1));
    if (i % 2 == 0) {
      out.push_back(GenDjpegPatch(s, size, std::nullopt,
                                  qualities[rng.UniformInt(0, nq - 1)], pool));
    } else {
      const int64_t a = rng.UniformInt(0, nq - 1);
      int64_t b = rng.UniformInt(0, nq - 2);
      if (b >= a) ++b;
      out.push_back(GenDjpegPatch(s, size, qualities[a], qualities[b], pool));
    }
  }
  return out;
}

std::string AlignmentModeName(AlignmentMode m) {
  switch (m) {
    case AlignmentMode::kAligned: return "aligned";
    case AlignmentMode::kMisaligned: return "misaligned";
    case AlignmentMode::kRandom: return "random";
  }
  return "random";
}

std::optional<AlignmentMode> ParseAlignmentMode(const std::string& s) {
  for (AlignmentMode m : {AlignmentMode::kAligned, AlignmentMode::kMisaligned,
                          AlignmentMode::kRandom}) {
    if (AlignmentModeName(m) == s) return m;
  }
  return std::nullopt;
}

ForgerySample GenSplice(const SynthRecipe& r, const SourcePool& pool) {
  CheckQuality(r.q1_background);
  CheckQuality(r.q2);
  if (r.q1_donor) CheckQuality(*r.q1_donor);
  if (r.size < 32 || r.size % 8 != 0) {
    throw Error(ErrorCode::kRegionOutOfBounds, "image size must be a multiple of 8, >= 32");
  }
  Rng rng(r.seed);
  PasteGeometry g;
  const GrayImage bg = CompressDecompress(
      pool.Draw(rng, r.size, r.size, &g.background_id, r.photo_fraction),
      r.q1_background);
  GrayImage donor = pool.Draw(rng, r.size, r.size, &g.donor_id, r.photo_fraction);
  if (r.q1_donor) donor = CompressDecompress(donor, *r.q1_donor);
  return Paste(r, rng, bg, donor, false, std::move(g));
}

ForgerySample GenCopyMove(const SynthRecipe& r, const SourcePool& pool) {
  CheckQuality(r.q1_background);
  CheckQuality(r.q2);
  if (r.size < 32 || r.size % 8 != 0) {
    throw Error(ErrorCode::kRegionOutOfBounds, "image size must be a multiple of 8, >= 32");
  }
  Rng rng(r.seed);
  PasteGeometry g;
  const GrayImage bg = CompressDecompress(
      pool.Draw(rng, r.size, r.size, &g.background_id, r.photo_fraction),
      r.q1_background);
  g.donor_id = g.background_id;
  return Paste(r, rng, bg, bg, true, std::move(g));
}

std::vector<uint8_t> GenRecompressed(std::span<const uint8_t> jpeg, int q3) {
  CheckQuality(q3);
  const GrayImage pixels = DecodePixels(DecodeJpeg(jpeg));
  return EncodeJpeg(pixels, QualityToTable(q3));
}

bool Polygon::Contains(double x, double y) const {
  bool inside = false;
  const size_t n = xs.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    if ((ys[i] > y) != (ys[j] > y) &&
        x < (xs[j] - xs[i]) * (y - ys[i]) / (ys[j] - ys[i]) + xs[i]) {
      inside = !inside;
    }
  }
  return inside;
}

Polygon RandomPolygon(Rng& rng, double cx, double cy, double radius) {
  const int n = static_cast<int>(rng.UniformInt(5, 10));
  std::vector<double> angles(n);
  for (double& a : angles) a = rng.Uniform(0, 2 * std::numbers::pi);
  std::sort(angles.begin(), angles.end());
  Polygon p;
  for (double a : angles) {
    const double r = radius * rng.Uniform(0.55, 1.0);
    p.xs.push_back(cx + r * std::cos(a));
    p.ys.push_back(cy + r * std::sin(a));
  }
  return p;
}

Mask RasterizePolygon(const Polygon& poly, int width, int height) {
  Mask m(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) m.at(x, y) = poly.Contains(x + 0.5, y + 0.5);
  }
  return m;
}

}  // namespace dctscope
