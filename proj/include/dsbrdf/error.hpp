#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dsbrdf {

enum class ErrorCode {
  kInvalidArgument,
  kDegenerateVector,
  kShapeMismatch,
  kRegionCountMismatch,
  kTooSmall,
  kRankDeficient,
  kOverflow,
  kNonfiniteGradient,
  kLineSearchFailure,
  kIo,
  kMalformedHeader,
  kTruncatedPayload,
  kNanInFile,
  kBitDepthMismatch,
  kNonRgba,
  kColorTypeMismatch,
  kWrongCount,
  kMissingVersion,
  kParseError,
};

std::string_view error_code_name(ErrorCode code);

/// True for failures of the numerics (as opposed to bad input or I/O).
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dsbrdf
