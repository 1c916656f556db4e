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

#ifndef DCTSCOPE_PNG_IO_H_
#define DCTSCOPE_PNG_IO_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dctscope/plane.h"

namespace dctscope {

// Decodes a PNG to 8-bit luma. Color inputs are converted with the BT.601
// weights used by JPEG (Y = 0.299 R + 0.587 G + 0.114 B); alpha is dropped.
GrayImage ReadPng(const std::filesystem::path& path);
GrayImage DecodePng(std::span<const uint8_t> bytes);

// Encodes an 8-bit grayscale PNG.
std::vector<uint8_t> EncodePng(const GrayImage& image);
void WritePng(const std::filesystem::path& path, const GrayImage& image);

// Whole-file helpers. Errors: kIo.
std::vector<uint8_t> ReadFileBytes(const std::filesystem::path& path);
// Writes to a sibling temp file, then renames over the target.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::span<const uint8_t> bytes);
void WriteFileAtomic(const std::filesystem::path& path,
                     const std::string& text);

}  // namespace dctscope

#endif  // DCTSCOPE_PNG_IO_H_
