#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace malclass {

enum class ErrorCode {
  MalformedJson,
  MissingBehaviorSection,
  EmptyTrace,
  InvalidN,
  EmptyCorpus,
  EmptyDocument,
  ZeroDf,
  AllFeaturesRemoved,
  DegenerateData,
  NonFiniteInput,
  DimensionMismatch,
  Unsupported,
  VersionMismatch,
  CorruptModel,
  ClassTooSmall,
  EmptyTestSet,
  IoFailure,
  InvalidSpec,
  ConfigError,
  MissingArtifact,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace malclass
