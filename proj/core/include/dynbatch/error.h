/* Copyright 2026 The dynbatch Authors. All Rights Reserved.

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

#ifndef DYNBATCH_ERROR_H_
#define DYNBATCH_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace dynbatch {

enum class ErrorCode {
  kType,        // dtype or block type mismatch
  kShape,       // tensor shape mismatch
  kIndex,       // row index / label out of range
  kContract,    // violated precondition (empty input, double resolution, ...)
  kTrace,       // host data does not match the block structure
  kValidation,  // block tree fails compilation checks
  kSchedule,    // malformed invocation graph
  kIO,          // file parse / read / write failures
  kConfig,      // invalid CLI or benchmark configuration
};

std::string_view ErrorCodeName(ErrorCode code);

// The single exception type thrown by the library. Callers that need to
// distinguish failures inspect code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

  // Returns a copy whose message is prefixed with `context`, e.g. the
  // depth/operation the runtime was executing when a kernel failed.
  Error WithContext(std::string_view context) const {
    return Error(code_, std::string(context) + ": " + what());
  }

 private:
  ErrorCode code_;
};

}  // namespace dynbatch

#endif  // DYNBATCH_ERROR_H_
