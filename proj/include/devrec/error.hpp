#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace devrec {

/// Machine-readable failure causes. The names double as the error codes
/// reported by the HTTP service.
enum class ErrorCode {
  UnsupportedFormat,
  EmptyPayload,
  MissingIdentity,
  ParseError,
  CycleDetected,
  DanglingReference,
  DuplicateId,
  UnknownConcept,
  DuplicateUser,
  InvalidField,
  ClockSkew,
  UnknownArtifact,
  UnknownUser,
  StoreUnavailable,
  EmptySynset,
  EmptyQuery,
  ZeroVector,
  DuplicateArtifactId,
  NoTrainingData,
  UnknownLabeledId,
  EmptyRun,
  IngestDisabled,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::EmptyPayload: return "EmptyPayload";
    case ErrorCode::MissingIdentity: return "MissingIdentity";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnknownConcept: return "UnknownConcept";
    case ErrorCode::DuplicateUser: return "DuplicateUser";
    case ErrorCode::InvalidField: return "InvalidField";
    case ErrorCode::ClockSkew: return "ClockSkew";
    case ErrorCode::UnknownArtifact: return "UnknownArtifact";
    case ErrorCode::UnknownUser: return "UnknownUser";
    case ErrorCode::StoreUnavailable: return "StoreUnavailable";
    case ErrorCode::EmptySynset: return "EmptySynset";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DuplicateArtifactId: return "DuplicateArtifactId";
    case ErrorCode::NoTrainingData: return "NoTrainingData";
    case ErrorCode::UnknownLabeledId: return "UnknownLabeledId";
    case ErrorCode::EmptyRun: return "EmptyRun";
    case ErrorCode::IngestDisabled: return "IngestDisabled";
  }
  return "Unknown";
}

/// The single exception type thrown by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace devrec
