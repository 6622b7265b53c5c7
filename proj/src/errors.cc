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

#include "iwr/errors.h"

namespace iwr {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
      return "InvalidArgument";
    case ErrorKind::kStepAfterDone:
      return "StepAfterDone";
    case ErrorKind::kCorruptCheckpoint:
      return "CorruptCheckpoint";
    case ErrorKind::kDemoFailure:
      return "DemoFailure";
    case ErrorKind::kEmptyInterventionBucket:
      return "EmptyInterventionBucket";
    case ErrorKind::kEmptyBucket:
      return "EmptyBucket";
    case ErrorKind::kOddBatch:
      return "OddBatch";
    case ErrorKind::kEmptyStore:
      return "EmptyStore";
    case ErrorKind::kTaskMismatch:
      return "TaskMismatch";
    case ErrorKind::kSchemaViolation:
      return "SchemaViolation";
    case ErrorKind::kZeroRollouts:
      return "ZeroRollouts";
    case ErrorKind::kQuotaUnreachable:
      return "QuotaUnreachable";
    case ErrorKind::kUnknownPolicy:
      return "UnknownPolicy";
    case ErrorKind::kMalformedMessage:
      return "MalformedMessage";
    case ErrorKind::kBindFailure:
      return "BindFailure";
    case ErrorKind::kConfigInvalid:
      return "ConfigInvalid";
    case ErrorKind::kIo:
      return "IoError";
  }
  return "Unknown";
}

}  // namespace iwr
