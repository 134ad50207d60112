#include <algorithm>
#include <cmath>

#include "vpet/error.hpp"
#include "vpet/volume.hpp"

namespace vpet {

namespace {

constexpr double kEdgeTolerance = 1e-6;

// Lower sample index and blend weight along one axis, or false when the
// coordinate falls outside [0, n - 1].
bool locate(double p, int n, int& i0, double& frac) {
  if (p < -kEdgeTolerance || p > (n - 1) + kEdgeTolerance) return false;
  if (n == 1) {
    i0 = 0;
    frac = 0.0;
    return true;
  }
  const double clamped = std::clamp(p, 0.0, static_cast<double>(n - 1));
  i0 = std::min(static_cast<int>(std::floor(clamped)), n - 2);
  frac = clamped - i0;
  return true;
}

}  // namespace

Volume3D resample_linear(const Volume3D& src, const AffineTransform& a, const Grid& target) {
  require(target.dims.x >= 1 && target.dims.y >= 1 && target.dims.z >= 1, ErrorCode::kInvalidArgument,
          "target dims must be >= 1");
  require(!a.is_singular(), ErrorCode::kSingularTransform, "resampling transform is singular");

  const Dims& sd = src.dims();
  const float pad = src.min_value();
  const int sx = sd.x > 1 ? 1 : 0;
  const std::size_t sy = sd.y > 1 ? static_cast<std::size_t>(sd.x) : 0;
  const std::size_t sz = sd.z > 1 ? static_cast<std::size_t>(sd.x) * sd.y : 0;
  const auto s = src.data();

  std::vector<float> out(target.dims.count());
  std::size_t o = 0;
  for (int k = 0; k < target.dims.z; ++k) {
    for (int j = 0; j < target.dims.y; ++j) {
      for (int i = 0; i < target.dims.x; ++i, ++o) {
        const Eigen::Vector3d p = a.apply(Eigen::Vector3d(i, j, k));
        int x0, y0, z0;
        double fx, fy, fz;
        if (!locate(p.x(), sd.x, x0, fx) || !locate(p.y(), sd.y, y0, fy) || !locate(p.z(), sd.z, z0, fz)) {
          out[o] = pad;
          continue;
        }
        const std::size_t base = src.index(x0, y0, z0);
        const double c00 = s[base] * (1 - fx) + s[base + sx] * fx;
        const double c10 = s[base + sy] * (1 - fx) + s[base + sy + sx] * fx;
        const double c01 = s[base + sz] * (1 - fx) + s[base + sz + sx] * fx;
        const double c11 = s[base + sz + sy] * (1 - fx) + s[base + sz + sy + sx] * fx;
        const double c0 = c00 * (1 - fy) + c10 * fy;
        const double c1 = c01 * (1 - fy) + c11 * fy;
        out[o] = static_cast<float>(c0 * (1 - fz) + c1 * fz);
      }
    }
  }
  const Modality m = src.modality() == Modality::kMask ? Modality::kProb : src.modality();
  return Volume3D(target, m, std::move(out));
}

}  // namespace vpet
