// Copyright 2026 The domainrag Authors
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

#include "domainrag/errors.hpp"

namespace domainrag {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimension: return "DimensionError";
    case ErrorCode::kDegenerateVector: return "DegenerateVectorError";
    case ErrorCode::kEmptyInput: return "EmptyInputError";
    case ErrorCode::kDuplicateId: return "DuplicateIdError";
    case ErrorCode::kStage: return "StageError";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kGeometry: return "GeometryError";
    case ErrorCode::kValidation: return "ValidationError";
    case ErrorCode::kInsufficientData: return "InsufficientDataError";
    case ErrorCode::kAccounting: return "AccountingError";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamplesError";
    case ErrorCode::kNumerical: return "NumericalError";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kProtocolViolation: return "ProtocolViolation";
  }
  return "Error";
}

void throw_error(ErrorCode code, const std::string& message) {
  switch (code) {
    case ErrorCode::kDimension: throw DimensionError(message);
    case ErrorCode::kDegenerateVector: throw DegenerateVectorError(message);
    case ErrorCode::kEmptyInput: throw EmptyInputError(message);
    case ErrorCode::kDuplicateId: throw DuplicateIdError(message);
    case ErrorCode::kStage: throw StageError(message);
    case ErrorCode::kIo: throw IoError(message);
    case ErrorCode::kFormat: throw FormatError(message);
    case ErrorCode::kGeometry: throw GeometryError(message);
    case ErrorCode::kValidation: throw ValidationError(message);
    case ErrorCode::kInsufficientData: throw InsufficientDataError(message);
    case ErrorCode::kAccounting: throw AccountingError(message);
    case ErrorCode::kInsufficientSamples: throw InsufficientSamplesError(message);
    case ErrorCode::kNumerical: throw NumericalError(message);
    case ErrorCode::kConfig: throw ConfigError(message);
    case ErrorCode::kBackendUnavailable: throw BackendUnavailable(message);
    case ErrorCode::kProtocolViolation: throw ProtocolViolation(message);
  }
  throw Error(code, message);
}

}  // namespace domainrag
