#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace srrg {

// Machine-readable failure codes shared by every module. Names match the
// error identifiers surfaced by the CLI and the review service.
enum class ErrorCode {
  kEmptyInput,
  kNewlineInUtterance,
  kLineWithoutArrow,
  kUnknownDisease,
  kUnknownStatus,
  kCountMismatch,
  kWrongVoterCount,
  kEmptyLexicon,
  kUnknownUtterance,
  kSchemaViolation,
  kDuplicateName,
  kCycleDetected,
  kEmptyTree,
  kNotALeaf,
  kUnknownLabel,
  kLengthMismatch,
  kLabelerFailure,
  kEmptyReference,
  kNameCollision,
  kFileNotFound,
  kUnknownStudy,
  kVersionConflict,
  kUnparsableEdit,
  kParseFailed,
  kIoError,
  kLlmFailure,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace srrg
