#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vpet/lesion.hpp"
#include "vpet/volume.hpp"

namespace vpet::phantom {

struct PhantomConfig {
  Dims ct_dims{64, 64, 16};
  Vec3 ct_spacing{1.0, 1.0, 4.0};
  Vec3 ct_offset{0.0, 0.0, 0.0};
  Vec3 pet_spacing{3.0, 3.0, 4.0};
  Vec3 pet_offset{-7.5, -4.5, 0.0};
  std::optional<Dims> pet_dims;  // default: smallest grid covering the CT field of view

  int n_lesions = 2;
  double lesion_radius_lo = 4.0;  // mm
  double lesion_radius_hi = 6.0;
  double lesion_suv_lo = 4.0;
  double lesion_suv_hi = 8.0;
  double background_suv_lo = 0.5;
  double background_suv_hi = 1.5;
  double lesion_sigma_fraction = 0.6;  // PET blob sigma as a fraction of the lesion radius

  double air_hu = -1000.0;
  double tissue_hu = 30.0;
  double liver_hu = 60.0;
  double lesion_hu_delta = -25.0;
  double ct_noise_hu = 8.0;
  double pet_noise_suv = 0.05;

  std::uint64_t seed = 0;

  void validate() const;
};

struct Lesion {
  Vec3 centre_mm;
  double radius_mm = 0.0;
  double peak_suv = 0.0;
};

struct PhantomPair {
  Volume3D ct;       // CT, HU
  Volume3D pet;      // SUV, on its own grid
  Volume3D gt_mask;  // MASK, CT grid
  std::vector<Lesion> lesions;
};

/// Body ellipse, liver ellipsoid with hypodense spherical lesions and
/// Gaussian noise for CT; background uptake plus truncated-Gaussian lesion
/// blobs for PET. Throws kInfeasibleGeometry when lesions cannot be placed
/// inside the liver without touching each other.
PhantomPair generate_phantom_pair(const PhantomConfig& cfg);

struct CandidateOutput {
  lesion::CandidateSet candidates;
  Volume3D prob;  // PROB map consistent with the component scores
};

/// One candidate per ground-truth lesion (its exact voxels, score in
/// [0.96, 0.995]) plus `n_false` 3x3x1 spurious blobs with scores in
/// [0.80, 0.95) that keep a one-voxel gap from `avoid`, the lesions and one
/// another. Throws kPlacementFailure after a bounded number of attempts.
CandidateOutput generate_candidates(const Volume3D& gt_mask, int n_false, const Volume3D& avoid, std::uint64_t seed);

}  // namespace vpet::phantom
