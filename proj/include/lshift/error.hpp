#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lshift {

enum class ErrorCode {
  InvalidSpec,
  InvalidDistribution,
  UnsupportedClass,
  LengthMismatch,
  EmptyInput,
  DimensionMismatch,
  InvalidDelta,
  NonConvergence,
  SingularConfusion,
  InvalidParams,
  Divergence,
  InvalidBeta,
  BelowCritical,
  DensityZero,
  BadMagic,
  CountMismatch,
  TruncatedFile,
  InvalidConfig,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::UnsupportedClass: return "UnsupportedClass";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidDelta: return "InvalidDelta";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::SingularConfusion: return "SingularConfusion";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::Divergence: return "Divergence";
    case ErrorCode::InvalidBeta: return "InvalidBeta";
    case ErrorCode::BelowCritical: return "BelowCritical";
    case ErrorCode::DensityZero: return "DensityZero";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace lshift
