#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace npmwf {

enum class ErrorCode {
  InvalidArgument,
  SingularMatrix,
  DegenerateDenominator,
  ChannelMismatch,
  BinCountMismatch,
  BadMagic,
  TruncatedContainer,
  MissingTensor,
  ShapeMismatch,
  UnsupportedFormat,
  CorruptHeader,
  IoFailure,
  LengthMismatch,
  ZeroReference,
  InvalidConfig,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::BinCountMismatch: return "BinCountMismatch";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedContainer: return "TruncatedContainer";
    case ErrorCode::MissingTensor: return "MissingTensor";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace npmwf
