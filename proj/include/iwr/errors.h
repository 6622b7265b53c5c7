// Copyright 2026 The IWR Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IWR_ERRORS_H_
#define IWR_ERRORS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace iwr {

// error categories surfaced by the library; the CLI maps them to exit codes
enum class ErrorKind {
  kInvalidArgument,
  kStepAfterDone,
  kCorruptCheckpoint,
  kDemoFailure,
  kEmptyInterventionBucket,
  kEmptyBucket,
  kOddBatch,
  kEmptyStore,
  kTaskMismatch,
  kSchemaViolation,
  kZeroRollouts,
  kQuotaUnreachable,
  kUnknownPolicy,
  kMalformedMessage,
  kBindFailure,
  kConfigInvalid,
  kIo,
};

std::string_view ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const { return kind_; }
  // message without the category prefix
  const std::string& detail() const { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace iwr

#endif  // IWR_ERRORS_H_
