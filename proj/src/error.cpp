#include "omnicount/error.hpp"

namespace omnicount {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorKind::TruncatedPayload: return "TruncatedPayload";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::MissingField: return "MissingField";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::DepthOutOfRange: return "DepthOutOfRange";
    case ErrorKind::InvalidMask: return "InvalidMask";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::EmptyMask: return "EmptyMask";
    case ErrorKind::BackendUnavailable: return "BackendUnavailable";
    case ErrorKind::ProtocolViolation: return "ProtocolViolation";
    case ErrorKind::Timeout: return "Timeout";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::DegenerateBox: return "DegenerateBox";
    case ErrorKind::UnsupportedConfig: return "UnsupportedConfig";
    case ErrorKind::EmptyTable: return "EmptyTable";
    case ErrorKind::AllZeroGroundTruth: return "AllZeroGroundTruth";
    case ErrorKind::TooFewClasses: return "TooFewClasses";
    case ErrorKind::MissingGroundTruth: return "MissingGroundTruth";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace omnicount
