#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace halluest {

enum class ErrorKind {
  UnbalancedTag,
  NestedTag,
  UnknownTag,
  InvalidSpans,
  InvalidText,
  OffsetMismatch,
  TokenMismatch,
  EmptyInput,
  AllScreenedOut,
  OutOfRange,
  EmptyCorpus,
  ZeroRecall,
  ZeroCorpus,
  EmptyGroup,
  ConstantVector,
  LengthMismatch,
  TooFewPoints,
  RankDeficient,
  DimensionMismatch,
  SingularDesign,
  NonConvergence,
  NotNested,
  RowMismatch,
  InvalidParams,
  SchemaViolation,
  MalformedJson,
  IoFailure,
};

inline constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnbalancedTag: return "UnbalancedTag";
    case ErrorKind::NestedTag: return "NestedTag";
    case ErrorKind::UnknownTag: return "UnknownTag";
    case ErrorKind::InvalidSpans: return "InvalidSpans";
    case ErrorKind::InvalidText: return "InvalidText";
    case ErrorKind::OffsetMismatch: return "OffsetMismatch";
    case ErrorKind::TokenMismatch: return "TokenMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::AllScreenedOut: return "AllScreenedOut";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::ZeroRecall: return "ZeroRecall";
    case ErrorKind::ZeroCorpus: return "ZeroCorpus";
    case ErrorKind::EmptyGroup: return "EmptyGroup";
    case ErrorKind::ConstantVector: return "ConstantVector";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularDesign: return "SingularDesign";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::NotNested: return "NotNested";
    case ErrorKind::RowMismatch: return "RowMismatch";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::MalformedJson: return "MalformedJson";
    case ErrorKind::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

/// Single exception type for the library. `position` is a character offset
/// for markup errors and a 1-based line number for file loaders.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> position = std::nullopt)
      : std::runtime_error(format(kind, message, position)),
        kind_(kind),
        position_(position) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> position() const noexcept { return position_; }

 private:
  static std::string format(ErrorKind kind, const std::string& message,
                            std::optional<std::size_t> position) {
    std::string out(to_string(kind));
    if (position) out += " at " + std::to_string(*position);
    if (!message.empty()) out += ": " + message;
    return out;
  }

  ErrorKind kind_;
  std::optional<std::size_t> position_;
};

}  // namespace halluest
