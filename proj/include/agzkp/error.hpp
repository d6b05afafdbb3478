// Copyright 2026 The AGZKP Authors
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace agzkp {

enum class ErrorCode {
  kInvalidArgument,
  kNotInvertible,
  kDegenerateParameters,
  kDegenerateEvaluation,
  kChallengeLengthMismatch,
  kInvalidParameters,
  kDuplicateIv,
  kBadCertificate,
  kUnsupportedAlpha,
  kStaleTimestamp,
  kUndecryptableRequest,
  kEnvelopeFailure,
  kTooManyProofsRequested,
  kMalformedSetRequest,
  kParameterOverflow,
  kMissingSimulator,
  kUnknownFigure,
  kInvalidConfig,
  kMalformedMessage,
  kCryptoFailure,
  kFormatError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNotInvertible: return "NotInvertible";
    case ErrorCode::kDegenerateParameters: return "DegenerateParameters";
    case ErrorCode::kDegenerateEvaluation: return "DegenerateEvaluation";
    case ErrorCode::kChallengeLengthMismatch: return "ChallengeLengthMismatch";
    case ErrorCode::kInvalidParameters: return "InvalidParameters";
    case ErrorCode::kDuplicateIv: return "DuplicateIv";
    case ErrorCode::kBadCertificate: return "BadCertificate";
    case ErrorCode::kUnsupportedAlpha: return "UnsupportedAlpha";
    case ErrorCode::kStaleTimestamp: return "StaleTimestamp";
    case ErrorCode::kUndecryptableRequest: return "UndecryptableRequest";
    case ErrorCode::kEnvelopeFailure: return "EnvelopeFailure";
    case ErrorCode::kTooManyProofsRequested: return "TooManyProofsRequested";
    case ErrorCode::kMalformedSetRequest: return "MalformedSetRequest";
    case ErrorCode::kParameterOverflow: return "ParameterOverflow";
    case ErrorCode::kMissingSimulator: return "MissingSimulator";
    case ErrorCode::kUnknownFigure: return "UnknownFigure";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kMalformedMessage: return "MalformedMessage";
    case ErrorCode::kCryptoFailure: return "CryptoFailure";
    case ErrorCode::kFormatError: return "FormatError";
  }
  return "Unknown";
}

// All library failures surface as Error; protocol rejections are values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace agzkp
