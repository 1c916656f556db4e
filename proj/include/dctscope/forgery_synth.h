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

// Seeded generation of single/double JPEG patches and splice / copy-move
// forgeries with ground-truth masks. Every output is a pure function of its
// seed and recipe.

#ifndef DCTSCOPE_FORGERY_SYNTH_H_
#define DCTSCOPE_FORGERY_SYNTH_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dctscope/plane.h"

namespace dctscope {

class Rng;

// Grayscale photographs plus an unbounded family of procedural textures.
class SourcePool {
 public:
  // Procedural textures only.
  SourcePool() = default;
  // Loads every *.png in `dir` (sorted by file name). A missing directory
  // yields a procedural-only pool.
  static SourcePool Load(const std::filesystem::path& dir);
  // The bundled pool under the configured data directory, or the directory
  // named by DCTSCOPE_DATA_DIR when set.
  static const SourcePool& Default();

  size_t photo_count() const { return photos_.size(); }
  const std::string& photo_name(size_t i) const { return names_[i]; }

  // Draws a width x height luma image. Returns the source id, for example
  // "photo:coffee@120,33,f" or "texture:1234".
  GrayImage Draw(Rng& rng, int width, int height, std::string* id,
                 double photo_fraction = 0.5) const;

 private:
  std::vector<std::string> names_;
  std::vector<GrayImage> photos_;
};

// Procedural texture: fractal value noise, random shapes, a ramp and sensor
// noise.
GrayImage ProceduralTexture(uint64_t seed, int width, int height);

// Encode at `quality`, then decode to pixels.
GrayImage CompressDecompress(const GrayImage& image, int quality);

struct PatchSample {
  std::vector<uint8_t> jpeg;
  int label = 0;  // 1 = double compressed
  std::optional<int> q1;
  int q2 = 0;
  bool hard = false;  // q1 == q2
  std::string source;
};

// size must be a multiple of 8. With q1 the patch is encoded at q1, decoded
// and re-encoded at q2 on the same grid; otherwise encoded once at q2.
PatchSample GenDjpegPatch(uint64_t seed, int size, std::optional<int> q1,
                          int q2, const SourcePool& pool = SourcePool::Default());

// Balanced single/double set: singles at a quality drawn from `qualities`,
// doubles at an ordered pair q1 != q2 drawn from `qualities`.
std::vector<PatchSample> GenDjpegDataset(uint64_t seed, int count, int size,
                                         std::span<const int> qualities,
                                         const SourcePool& pool =
                                             SourcePool::Default());

enum class AlignmentMode { kAligned, kMisaligned, kRandom };
std::string AlignmentModeName(AlignmentMode m);
std::optional<AlignmentMode> ParseAlignmentMode(const std::string& s);

struct SynthRecipe {
  uint64_t seed = 0;
  int size = 256;
  int q1_background = 70;
  // Unset: the donor was never compressed.
  std::optional<int> q1_donor;
  int q2 = 90;
  AlignmentMode alignment = AlignmentMode::kRandom;
  bool rotate = false;
  bool resize = false;
  double photo_fraction = 0.5;
};

// Where the paste went. Filled in by the generators.
struct PasteGeometry {
  std::string background_id;
  std::string donor_id;
  int source_x = 0;  // top-left of the copied box in the donor
  int source_y = 0;
  int paste_x = 0;   // top-left of the pasted box in the target
  int paste_y = 0;
  int box_width = 0;
  int box_height = 0;
  bool aligned = false;  // paste - source is a multiple of 8 on both axes
  bool resampled = false;
  int64_t mask_area = 0;
};

struct ForgerySample {
  std::vector<uint8_t> jpeg;
  Mask mask;
  PasteGeometry geometry;
};

// Background compressed at q1_background and decoded, donor (another image)
// compressed at q1_donor and decoded, polygonal region pasted without
// blending, composite encoded at q2. Errors: kRegionOutOfBounds when the
// image is too small for a region, kOutOfRange for bad qualities.
ForgerySample GenSplice(const SynthRecipe& recipe,
                        const SourcePool& pool = SourcePool::Default());

// As GenSplice with the decoded background as its own donor. The mask covers
// the destination only.
ForgerySample GenCopyMove(const SynthRecipe& recipe,
                          const SourcePool& pool = SourcePool::Default());

// Decode to pixels and encode again at q3.
std::vector<uint8_t> GenRecompressed(std::span<const uint8_t> jpeg, int q3);

// Star-shaped polygon rasterized by pixel centres (even-odd rule).
struct Polygon {
  std::vector<double> xs;
  std::vector<double> ys;
  bool Contains(double x, double y) const;
};
Polygon RandomPolygon(Rng& rng, double cx, double cy, double radius);
Mask RasterizePolygon(const Polygon& poly, int width, int height);

}  // namespace dctscope

#endif  // DCTSCOPE_FORGERY_SYNTH_H_
