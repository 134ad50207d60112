#pragma once

// Measurements shared by the unit tests and the acceptance runner.

#include <cmath>
#include <vector>

#include "vpet/dataprep.hpp"
#include "vpet/phantom.hpp"

namespace vpet::testing {

/// Distance, in CT voxels, between each planted lesion centre and the
/// centroid of the aligned PET uptake above 2.5 SUV within two radii of it.
inline std::vector<double> lesion_centroid_errors(const phantom::PhantomPair& ph) {
  const prep::ScanPair aligned = prep::prepare_pair(ph.ct, ph.pet, 1.0, 1.0);
  const Grid& g = aligned.pet.grid();
  const double suv_per_unit = kSuvWindow.width();
  std::vector<double> out;
  for (const auto& l : ph.lesions) {
    double wsum = 0.0, cx = 0.0, cy = 0.0, cz = 0.0;
    for (int z = 0; z < g.dims.z; ++z) {
      for (int y = 0; y < g.dims.y; ++y) {
        for (int x = 0; x < g.dims.x; ++x) {
          const double px = g.offset.x + x * g.spacing.x, py = g.offset.y + y * g.spacing.y,
                       pz = g.offset.z + z * g.spacing.z;
          const double r = std::hypot(px - l.centre_mm.x, py - l.centre_mm.y, pz - l.centre_mm.z);
          if (r > 2.0 * l.radius_mm) continue;
          const double w = aligned.pet.at(x, y, z) * suv_per_unit - kHighSuvThreshold;
          if (w <= 0.0) continue;
          wsum += w;
          cx += w * x;
          cy += w * y;
          cz += w * z;
        }
      }
    }
    if (wsum == 0.0) {
      out.push_back(INFINITY);
      continue;
    }
    const double tx = (l.centre_mm.x - g.offset.x) / g.spacing.x, ty = (l.centre_mm.y - g.offset.y) / g.spacing.y,
                 tz = (l.centre_mm.z - g.offset.z) / g.spacing.z;
    out.push_back(std::hypot(cx / wsum - tx, cy / wsum - ty, cz / wsum - tz));
  }
  return out;
}

}  // namespace vpet::testing
