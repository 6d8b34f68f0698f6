#include "planforge/error.hpp"

namespace planforge {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::LevelOutOfRange: return "LevelOutOfRange";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::EmptyTopic: return "EmptyTopic";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::InvalidValue: return "InvalidValue";
    case ErrorKind::NetworkError: return "NetworkError";
    case ErrorKind::AuthError: return "AuthError";
    case ErrorKind::ScriptMiss: return "ScriptMiss";
    case ErrorKind::EmptyResponse: return "EmptyResponse";
    case ErrorKind::DuplicateEntry: return "DuplicateEntry";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::VerdictParseError: return "VerdictParseError";
    case ErrorKind::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorKind::EmptyQuestionSet: return "EmptyQuestionSet";
    case ErrorKind::PlanParseError: return "PlanParseError";
    case ErrorKind::EmptyQueue: return "EmptyQueue";
    case ErrorKind::InsufficientMistakes: return "InsufficientMistakes";
    case ErrorKind::ExplanationParseError: return "ExplanationParseError";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::SampleTooLarge: return "SampleTooLarge";
    case ErrorKind::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

}  // namespace planforge
