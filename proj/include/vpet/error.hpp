#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vpet {

/// Failure classes raised by the library. The CLI maps each class onto a
/// process exit code, so new codes must be added to `exit_code_for` too.
enum class ErrorCode {
  kInvalidArgument,
  kMissingFile,
  kMalformedSidecar,
  kRasterSizeMismatch,
  kNonFiniteVoxel,
  kIoFailure,
  kShapeMismatch,
  kGridMismatch,
  kSingularTransform,
  kEmptyInput,
  kInfeasibleGeometry,
  kPlacementFailure,
  kCorruptCheckpoint,
  kDivergence,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace vpet
