#include "malclass/error.hpp"

namespace malclass {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::MissingBehaviorSection: return "MissingBehaviorSection";
    case ErrorCode::EmptyTrace: return "EmptyTrace";
    case ErrorCode::InvalidN: return "InvalidN";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::ZeroDf: return "ZeroDf";
    case ErrorCode::AllFeaturesRemoved: return "AllFeaturesRemoved";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace malclass
