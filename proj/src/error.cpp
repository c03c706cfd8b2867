#include "srrg/error.hpp"

namespace srrg {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNewlineInUtterance: return "NewlineInUtterance";
    case ErrorCode::kLineWithoutArrow: return "LineWithoutArrow";
    case ErrorCode::kUnknownDisease: return "UnknownDisease";
    case ErrorCode::kUnknownStatus: return "UnknownStatus";
    case ErrorCode::kCountMismatch: return "CountMismatch";
    case ErrorCode::kWrongVoterCount: return "WrongVoterCount";
    case ErrorCode::kEmptyLexicon: return "EmptyLexicon";
    case ErrorCode::kUnknownUtterance: return "UnknownUtterance";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kDuplicateName: return "DuplicateName";
    case ErrorCode::kCycleDetected: return "CycleDetected";
    case ErrorCode::kEmptyTree: return "EmptyTree";
    case ErrorCode::kNotALeaf: return "NotALeaf";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kLabelerFailure: return "LabelerFailure";
    case ErrorCode::kEmptyReference: return "EmptyReference";
    case ErrorCode::kNameCollision: return "NameCollision";
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kUnknownStudy: return "UnknownStudy";
    case ErrorCode::kVersionConflict: return "VersionConflict";
    case ErrorCode::kUnparsableEdit: return "UnparsableEdit";
    case ErrorCode::kParseFailed: return "ParseFailed";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kLlmFailure: return "LlmFailure";
  }
  return "Unknown";
}

}  // namespace srrg
