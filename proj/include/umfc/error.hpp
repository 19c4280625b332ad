// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors

#ifndef UMFC_ERROR_HPP
#define UMFC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace umfc {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  NonFinite,
  DegenerateVector,
  DegenerateFeature,
  AllShiftsDegenerate,
  EmptySelection,
  TooFewSamples,
  MissingLabels,
  EmptyDomain,
  DimensionTooSmall,
  Io,
  BadMagic,
  UnsupportedVersion,
  WrongPayloadKind,
  TruncatedPayload,
  NonFinitePayload,
  LabelCountMismatch,
  NameCountMismatch,
  DuplicateName,
  MalformedFile,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace umfc

#endif  // UMFC_ERROR_HPP
