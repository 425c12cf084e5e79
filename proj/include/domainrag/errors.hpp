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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace domainrag {

enum class ErrorCode {
  kDimension,
  kDegenerateVector,
  kEmptyInput,
  kDuplicateId,
  kStage,
  kIo,
  kFormat,
  kGeometry,
  kValidation,
  kInsufficientData,
  kAccounting,
  kInsufficientSamples,
  kNumerical,
  kConfig,
  kBackendUnavailable,
  kProtocolViolation,
};

std::string_view error_code_name(ErrorCode code);

// Base of every error raised by the library. The code survives re-wrapping,
// so callers can add context without losing the error category.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // Backend failures map to a distinct CLI exit code from validation errors.
  bool is_backend_error() const noexcept {
    return code_ == ErrorCode::kBackendUnavailable ||
           code_ == ErrorCode::kProtocolViolation;
  }

 private:
  ErrorCode code_;
};

#define DOMAINRAG_DEFINE_ERROR(Name, Code)                              \
  class Name : public Error {                                           \
   public:                                                              \
    explicit Name(const std::string& message) : Error(Code, message) {} \
  };

DOMAINRAG_DEFINE_ERROR(DimensionError, ErrorCode::kDimension)
DOMAINRAG_DEFINE_ERROR(DegenerateVectorError, ErrorCode::kDegenerateVector)
DOMAINRAG_DEFINE_ERROR(EmptyInputError, ErrorCode::kEmptyInput)
DOMAINRAG_DEFINE_ERROR(DuplicateIdError, ErrorCode::kDuplicateId)
DOMAINRAG_DEFINE_ERROR(StageError, ErrorCode::kStage)
DOMAINRAG_DEFINE_ERROR(IoError, ErrorCode::kIo)
DOMAINRAG_DEFINE_ERROR(FormatError, ErrorCode::kFormat)
DOMAINRAG_DEFINE_ERROR(GeometryError, ErrorCode::kGeometry)
DOMAINRAG_DEFINE_ERROR(ValidationError, ErrorCode::kValidation)
DOMAINRAG_DEFINE_ERROR(InsufficientDataError, ErrorCode::kInsufficientData)
DOMAINRAG_DEFINE_ERROR(AccountingError, ErrorCode::kAccounting)
DOMAINRAG_DEFINE_ERROR(InsufficientSamplesError, ErrorCode::kInsufficientSamples)
DOMAINRAG_DEFINE_ERROR(NumericalError, ErrorCode::kNumerical)
DOMAINRAG_DEFINE_ERROR(ConfigError, ErrorCode::kConfig)
DOMAINRAG_DEFINE_ERROR(BackendUnavailable, ErrorCode::kBackendUnavailable)
DOMAINRAG_DEFINE_ERROR(ProtocolViolation, ErrorCode::kProtocolViolation)

#undef DOMAINRAG_DEFINE_ERROR

// Throws the concrete subclass matching `code`.
[[noreturn]] void throw_error(ErrorCode code, const std::string& message);

}  // namespace domainrag
