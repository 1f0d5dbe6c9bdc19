#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace studysim {

enum class ErrorCode {
  EmptyExam,
  InvalidScore,
  InvalidInput,
  Retryable,
  Fatal,
  CacheError,
  ParseError,
  ConfigError,
  LayoutError,
  SegmentationError,
  AnnotationError,
  SplitError,
  GenerationError,
  ExemplarError,
  AnswerError,
  SimulationError,
  ScoringError,
  EmptyStudySet,
  MetricError,
  MetricUnavailable,
  InvalidDistribution,
  StatError,
  EmptyDataset,
  DependencyError,
  ValidationError,
};

std::string_view to_string(ErrorCode code);

// All recoverable failures in the library are reported through this type.
// `detail` carries auxiliary payload, e.g. the raw LM text for ParseError.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

// Re-throws `e` with additional context prepended to the message.
[[noreturn]] inline void rethrow_with_context(const Error& e, const std::string& context) {
  throw Error(e.code(), context + ": " + e.what(), e.detail());
}

}  // namespace studysim
