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

#include "dctscope/png_io.h"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <random>

#include "dctscope/error.h"

namespace dctscope {

namespace {

[[noreturn]] void IoError(const std::string& what) {
  throw Error(ErrorCode::kIo, what);
}

}  // namespace

GrayImage DecodePng(std::span<const uint8_t> bytes) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    IoError(std::string("PNG decode failed: ") + img.message);
  }
  const bool gray = (img.format & PNG_FORMAT_FLAG_COLOR) == 0;
  // Keep the file's own encoding; no gamma or colorspace conversion.
  img.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  img.flags |= PNG_IMAGE_FLAG_16BIT_sRGB;
  std::vector<uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    IoError(std::string("PNG decode failed: ") + img.message);
  }
  GrayImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (gray) {
    out.values = std::move(buf);
  } else {
    for (size_t i = 0; i < out.values.size(); ++i) {
      const double y = 0.299 * buf[3 * i] + 0.587 * buf[3 * i + 1] +
                       0.114 * buf[3 * i + 2];
      out.values[i] = static_cast<uint8_t>(std::lround(y));
    }
  }
  png_image_free(&img);
  return out;
}

GrayImage ReadPng(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = ReadFileBytes(path);
  return DecodePng(bytes);
}

std::vector<uint8_t> EncodePng(const GrayImage& image) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(img, size, 0, image.values.data(), 0,
                                       nullptr)) {
    IoError(std::string("PNG encode failed: ") + img.message);
  }
  std::vector<uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0,
                                 image.values.data(), 0, nullptr)) {
    IoError(std::string("PNG encode failed: ") + img.message);
  }
  out.resize(size);
  return out;
}

void WritePng(const std::filesystem::path& path, const GrayImage& image) {
  WriteFileAtomic(path, EncodePng(image));
}

std::vector<uint8_t> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) IoError("cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (in.bad()) IoError("read failed: " + path.string());
  return bytes;
}

void WriteFileAtomic(const std::filesystem::path& path,
                     std::span<const uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  thread_local std::mt19937_64 rng(std::random_device{}());
  const std::filesystem::path tmp =
      path.string() + ".tmp" + std::to_string(rng() % 1000000000);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) IoError("cannot create " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    IoError("rename failed: " + path.string());
  }
}

void WriteFileAtomic(const std::filesystem::path& path,
                     const std::string& text) {
  WriteFileAtomic(path, std::span<const uint8_t>(
                            reinterpret_cast<const uint8_t*>(text.data()),
                            text.size()));
}

}  // namespace dctscope
