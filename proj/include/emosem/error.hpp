#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace emosem {

enum class ErrorCode {
  parse,
  invariant,
  reference,
  io,
  config,
  too_few_participants,
  not_synthetic,
  transport,
  authentication,
  unresolvable_locator,
  empty_completion,
  empty_reference,
  empty_transcript,
  missing_answer_block,
  missing_role_tag,
  empty_segments,
  segmentation_failed,
  dimension_mismatch,
  degenerate_data,
  empty_corpus,
  missing_class,
  divergence,
  shape_mismatch,
  too_few_differences,
  length_mismatch,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// An error annotated with the pipeline stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.code(), "[" + stage + "] " + cause.what()),
        stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace emosem
