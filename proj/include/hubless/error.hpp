/* Copyright 2026 The Hubless Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef HUBLESS_ERROR_HPP_
#define HUBLESS_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace hubless {

enum class ErrorCode {
  kDegenerateVector,
  kDimMismatch,
  kZeroVariance,
  kFormatError,
  kManifestMismatch,
  kCorruptData,
  kIoError,
  kConfigError,
  kCacheMismatch,
  kEmptyBatch,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure surfaced by the library is an Error carrying one of the
// codes above; the CLI maps codes onto process exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// True for failures caused by file contents or the filesystem, as opposed
// to invalid arguments.
inline bool IsDataError(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFormatError:
    case ErrorCode::kManifestMismatch:
    case ErrorCode::kCorruptData:
    case ErrorCode::kIoError:
      return true;
    default:
      return false;
  }
}

}  // namespace hubless

#endif  // HUBLESS_ERROR_HPP_
