// Copyright 2026 The robustec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ROBUSTEC_ERROR_H_
#define ROBUSTEC_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace robustec {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  // data
  kEmptyFile,
  kMissingColumn,
  kNonNumericCell,
  kInvalidIndicator,
  kEmptySubset,
  // models
  kSingularDesign,
  kSeparation,
  kNoVariation,
  // mest
  kCyclicDependency,
  kBlockSolveFailed,
  kResidualCheckFailed,
  kNonFiniteDerivative,
  kSingularBread,
  // estimators
  kMissingArm,
  kInsufficientData,
  // sim
  kNoLambdaData,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries a machine-readable code. For
// CSV errors `row` and `column` locate the offending cell (row is 1-based
// over data lines, -1 when not applicable).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, long row = -1,
        std::string column = {})
      : std::runtime_error(message),
        code_(code),
        cause_(code),
        row_(row),
        column_(std::move(column)) {}

  // Wraps an underlying failure; cause() reports the original code.
  Error(ErrorCode code, ErrorCode cause, const std::string& message)
      : std::runtime_error(message), code_(code), cause_(cause), row_(-1) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCode cause() const noexcept { return cause_; }
  long row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  ErrorCode code_;
  ErrorCode cause_;
  long row_;
  std::string column_;
};

}  // namespace robustec

#endif  // ROBUSTEC_ERROR_H_
