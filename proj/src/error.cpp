#include "pflat/error.hpp"

namespace pflat {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonFiniteParameters: return "NonFiniteParameters";
    case ErrorCode::SequenceTooLong: return "SequenceTooLong";
    case ErrorCode::UnknownLabelToken: return "UnknownLabelToken";
    case ErrorCode::MissingLabel: return "MissingLabel";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TooManyParamsForFiniteDiff: return "TooManyParamsForFiniteDiff";
    case ErrorCode::NotEnoughOrderings: return "NotEnoughOrderings";
    case ErrorCode::InstructionTooShort: return "InstructionTooShort";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::EmptyPerturbationSet: return "EmptyPerturbationSet";
    case ErrorCode::NonFiniteDivergence: return "NonFiniteDivergence";
    case ErrorCode::PreconditionNotMet: return "PreconditionNotMet";
    case ErrorCode::NonFiniteScore: return "NonFiniteScore";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::NegativeRelevance: return "NegativeRelevance";
    case ErrorCode::ZeroBest: return "ZeroBest";
    case ErrorCode::SelectedExceedsBest: return "SelectedExceedsBest";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::PrefixTooLargeForFiniteDiff: return "PrefixTooLargeForFiniteDiff";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
      return ErrorCategory::usage;
    case ErrorCode::NonFiniteParameters:
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::NonFiniteDivergence:
    case ErrorCode::NonFiniteScore:
    case ErrorCode::NonFiniteGradient:
    case ErrorCode::DegenerateInput:
    case ErrorCode::ZeroBest:
    case ErrorCode::SelectedExceedsBest:
    case ErrorCode::TooManyParamsForFiniteDiff:
    case ErrorCode::PrefixTooLargeForFiniteDiff:
    case ErrorCode::PreconditionNotMet:
      return ErrorCategory::numeric;
    default:
      return ErrorCategory::data;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace pflat
