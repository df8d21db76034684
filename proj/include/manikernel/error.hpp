#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace manikernel {

enum class ErrorCode {
  NonSymmetric,
  NonSquare,
  NotSpd,
  ZeroExponent,
  NoConvergence,
  NumericalError,
  DimMismatch,
  EmptySet,
  UnsupportedMetric,
  RankDeficient,
  NotOrthonormal,
  BadShape,
  BadGrid,
  BadGamma,
  BadK,
  BadL,
  BadDims,
  NotPsd,
  SingularScatter,
  OneClass,
  TooSmall,
  RectOutOfBounds,
  TooFewPixels,
  NoPositives,
  FrameMismatch,
  InvalidArgument,
  Io,
  Parse,
  MissingLabels,
};

/// Coarse grouping used by the command-line front end to pick an exit code.
enum class ErrorCategory { Data, Numerical };

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonSymmetric: return "NonSymmetric";
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::NotSpd: return "NotSpd";
    case ErrorCode::ZeroExponent: return "ZeroExponent";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NumericalError: return "NumericalError";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::UnsupportedMetric: return "UnsupportedMetric";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NotOrthonormal: return "NotOrthonormal";
    case ErrorCode::BadShape: return "BadShape";
    case ErrorCode::BadGrid: return "BadGrid";
    case ErrorCode::BadGamma: return "BadGamma";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::BadL: return "BadL";
    case ErrorCode::BadDims: return "BadDims";
    case ErrorCode::NotPsd: return "NotPsd";
    case ErrorCode::SingularScatter: return "SingularScatter";
    case ErrorCode::OneClass: return "OneClass";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::RectOutOfBounds: return "RectOutOfBounds";
    case ErrorCode::TooFewPixels: return "TooFewPixels";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::FrameMismatch: return "FrameMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
    case ErrorCode::MissingLabels: return "MissingLabels";
  }
  return "Unknown";
}

constexpr ErrorCategory category(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoConvergence:
    case ErrorCode::NumericalError:
    case ErrorCode::SingularScatter:
    case ErrorCode::NotPsd:
      return ErrorCategory::Numerical;
    default:
      return ErrorCategory::Data;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace manikernel
