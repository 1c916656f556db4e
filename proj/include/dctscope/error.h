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

#ifndef DCTSCOPE_ERROR_H_
#define DCTSCOPE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace dctscope {

enum class ErrorCode {
  kUnsupportedCoding,
  kCorruptStream,
  kMissingTable,
  kInvalidTable,
  kOutOfRange,
  kDegenerateHistogram,
  kMisalignedInput,
  kMisalignedCrop,
  kOutOfBounds,
  kInsufficientData,
  kShapeMismatch,
  kNonFinite,
  kEmptyClass,
  kRegionOutOfBounds,
  kDimMismatch,
  kNoPositives,
  kIo,
  kConfig,
};

// Stable identifier used in machine-readable error output.
std::string_view ErrorCodeName(ErrorCode code);

// Every recoverable failure in the library is reported as an Error carrying a
// typed code; callers dispatch on code() rather than on the message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dctscope

#endif  // DCTSCOPE_ERROR_H_
