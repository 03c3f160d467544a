#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pflat {

enum class ErrorCode {
  InvalidArgument,
  InvalidConfig,
  DimensionMismatch,
  NonFiniteParameters,
  SequenceTooLong,
  UnknownLabelToken,
  MissingLabel,
  FormatError,
  ShapeMismatch,
  TooManyParamsForFiniteDiff,
  NotEnoughOrderings,
  InstructionTooShort,
  EmptyDataset,
  NonFiniteLoss,
  EmptyPerturbationSet,
  NonFiniteDivergence,
  PreconditionNotMet,
  NonFiniteScore,
  EmptyGrid,
  DegenerateInput,
  LengthMismatch,
  BadK,
  NegativeRelevance,
  ZeroBest,
  SelectedExceedsBest,
  NonFiniteGradient,
  PrefixTooLargeForFiniteDiff,
  ParseError,
  EmptyText,
  UnknownLabel,
  DuplicateId,
  IoError,
};

/// Coarse grouping used for CLI exit codes.
enum class ErrorCategory { usage, data, numeric };

std::string_view to_string(ErrorCode code);
ErrorCategory category_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace pflat
