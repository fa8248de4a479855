// Copyright 2026 The corrspace Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace corrspace {

enum class ErrorCode {
    kInvalidArgument,
    kZeroVector,
    kDimensionMismatch,
    kCapacityExceeded,
    kNotAWire,
    kNotDecomposable,
    kWireExhausted,
    kAttemptsExhausted,
    kIncompatibleWires,
    kSiteOutOfRange,
    kNonUnitary,
    kUnrecoverable,
    kConfig,
};

const char *error_code_name(ErrorCode code);

class Error : public std::runtime_error {
   public:
    Error(ErrorCode code, const std::string &message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {
    }

    ErrorCode code() const noexcept {
        return code_;
    }

   private:
    ErrorCode code_;
};

inline const char *error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::kInvalidArgument:
            return "invalid argument";
        case ErrorCode::kZeroVector:
            return "zero vector";
        case ErrorCode::kDimensionMismatch:
            return "dimension mismatch";
        case ErrorCode::kCapacityExceeded:
            return "capacity exceeded";
        case ErrorCode::kNotAWire:
            return "not a wire";
        case ErrorCode::kNotDecomposable:
            return "not decomposable";
        case ErrorCode::kWireExhausted:
            return "wire exhausted";
        case ErrorCode::kAttemptsExhausted:
            return "attempts exhausted";
        case ErrorCode::kIncompatibleWires:
            return "incompatible wires";
        case ErrorCode::kSiteOutOfRange:
            return "site out of range";
        case ErrorCode::kNonUnitary:
            return "non-unitary";
        case ErrorCode::kUnrecoverable:
            return "unrecoverable";
        case ErrorCode::kConfig:
            return "configuration error";
    }
    return "error";
}

}  // namespace corrspace
