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

#include "robustec/error.h"

namespace robustec {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyFile: return "EmptyFile";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kNonNumericCell: return "NonNumericCell";
    case ErrorCode::kInvalidIndicator: return "InvalidIndicator";
    case ErrorCode::kEmptySubset: return "EmptySubset";
    case ErrorCode::kSingularDesign: return "SingularDesign";
    case ErrorCode::kSeparation: return "Separation";
    case ErrorCode::kNoVariation: return "NoVariation";
    case ErrorCode::kCyclicDependency: return "CyclicDependency";
    case ErrorCode::kBlockSolveFailed: return "BlockSolveFailed";
    case ErrorCode::kResidualCheckFailed: return "ResidualCheckFailed";
    case ErrorCode::kNonFiniteDerivative: return "NonFiniteDerivative";
    case ErrorCode::kSingularBread: return "SingularBread";
    case ErrorCode::kMissingArm: return "MissingArm";
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kNoLambdaData: return "NoLambdaData";
  }
  return "Unknown";
}

}  // namespace robustec
