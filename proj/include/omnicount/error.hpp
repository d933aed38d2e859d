#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace omnicount {

enum class ErrorKind {
  BadMagic,
  UnsupportedDtype,
  TruncatedPayload,
  IoFailure,
  MissingField,
  DimMismatch,
  DepthOutOfRange,
  InvalidMask,
  InvalidArgument,
  EmptyMask,
  BackendUnavailable,
  ProtocolViolation,
  Timeout,
  UnknownLabel,
  DegenerateBox,
  UnsupportedConfig,
  EmptyTable,
  AllZeroGroundTruth,
  TooFewClasses,
  MissingGroundTruth,
  ParseError,
  SchemaMismatch,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (and the CLI
// exit-code mapping) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace omnicount
