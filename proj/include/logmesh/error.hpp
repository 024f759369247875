#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace logmesh {

enum class ErrorCode {
  Io,
  Format,
  Schema,
  Validation,
  MissingIdentifier,
  MissingEmbedding,
  ShapeMismatch,
  NoConvergence,
  EmptyGraph,
  EmptyTrainingSet,
  NonFiniteLoss,
  ZeroScore,
  NotAttributable,
  OneClassOnly,
  NoPositives,
  PoolTooSmall,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "IoError";
    case ErrorCode::Format: return "FormatError";
    case ErrorCode::Schema: return "SchemaError";
    case ErrorCode::Validation: return "ValidationError";
    case ErrorCode::MissingIdentifier: return "MissingIdentifier";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::ZeroScore: return "ZeroScore";
    case ErrorCode::NotAttributable: return "NotAttributable";
    case ErrorCode::OneClassOnly: return "OneClassOnly";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::PoolTooSmall: return "PoolTooSmall";
  }
  return "Error";
}

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace logmesh
