#include "vpet/error.hpp"

namespace vpet {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kMissingFile: return "missing file";
    case ErrorCode::kMalformedSidecar: return "malformed sidecar";
    case ErrorCode::kRasterSizeMismatch: return "raster size mismatch";
    case ErrorCode::kNonFiniteVoxel: return "non-finite voxel";
    case ErrorCode::kIoFailure: return "i/o failure";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kGridMismatch: return "grid mismatch";
    case ErrorCode::kSingularTransform: return "singular transform";
    case ErrorCode::kEmptyInput: return "empty input";
    case ErrorCode::kInfeasibleGeometry: return "infeasible geometry";
    case ErrorCode::kPlacementFailure: return "placement failure";
    case ErrorCode::kCorruptCheckpoint: return "corrupt checkpoint";
    case ErrorCode::kDivergence: return "numerical divergence";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace vpet
