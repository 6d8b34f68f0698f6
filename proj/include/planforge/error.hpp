#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace planforge {

/// Every failure the library reports carries one of these kinds.
enum class ErrorKind {
  // domain model
  LevelOutOfRange,
  ShapeError,
  EmptyTopic,
  IndexOutOfRange,
  InvalidValue,
  // backend
  NetworkError,
  AuthError,
  ScriptMiss,
  EmptyResponse,
  DuplicateEntry,
  // parsing / io
  ParseError,
  IoError,
  // evaluation
  VerdictParseError,
  ScoreOutOfRange,
  EmptyQuestionSet,
  // optimization
  PlanParseError,
  EmptyQueue,
  // analysis
  InsufficientMistakes,
  ExplanationParseError,
  InvariantViolation,
  // corpus
  EmptyCorpus,
  SampleTooLarge,
  // runlog
  ValidationError,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace planforge
