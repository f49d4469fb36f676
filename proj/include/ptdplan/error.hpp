// Copyright 2026 The ptdplan Authors. All Rights Reserved.
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

#pragma once

#include <stdexcept>
#include <string>

namespace ptdplan {

enum class ErrorKind {
  kMissingField,
  kInvalidValue,
  kMalformedDocument,
  kInvalidSample,
  kEmptyTable,
  kDuplicateKey,
  kIndivisibleMicroBatch,
  kInvalidArgument,
  kInfeasible,
  kNoFeasibleStrategy,
};

inline const char* ToString(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMissingField: return "MissingField";
    case ErrorKind::kInvalidValue: return "InvalidValue";
    case ErrorKind::kMalformedDocument: return "MalformedDocument";
    case ErrorKind::kInvalidSample: return "InvalidSample";
    case ErrorKind::kEmptyTable: return "EmptyTable";
    case ErrorKind::kDuplicateKey: return "DuplicateKey";
    case ErrorKind::kIndivisibleMicroBatch: return "IndivisibleMicroBatch";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kInfeasible: return "Infeasible";
    case ErrorKind::kNoFeasibleStrategy: return "NoFeasibleStrategy";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a kind so front ends can map
/// it onto an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ToString(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for "the inputs are fine but nothing fits" failures.
  bool is_infeasible() const noexcept {
    return kind_ == ErrorKind::kInfeasible ||
           kind_ == ErrorKind::kNoFeasibleStrategy;
  }

 private:
  ErrorKind kind_;
};

}  // namespace ptdplan
