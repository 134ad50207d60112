#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "vpet/volume.hpp"

namespace vpet::lesion {

struct Component {
  int id = 0;
  std::vector<std::size_t> voxels;  // sorted linear indices (x fastest)
  std::optional<double> score;
};

/// Pairwise-disjoint voxel components on one grid.
struct CandidateSet {
  Grid grid;
  std::vector<Component> components;

  std::size_t size() const { return components.size(); }
  /// Union of all components as a MASK volume.
  Volume3D to_mask() const;
  /// Throws kInvalidArgument if components overlap or leave the grid.
  void validate() const;
};

/// 26-connected labelling. Ids follow the scan order of each component's
/// first voxel. With a PROB map, each component's score is its maximum
/// probability.
CandidateSet connected_components(const Volume3D& mask);
CandidateSet connected_components(const Volume3D& mask, const Volume3D& prob);

/// {syn_pet > th} with th in SUV; NORMALIZED input is mapped into the SUV
/// window first.
Volume3D suv_threshold_mask(const Volume3D& syn_pet, double th_suv = kHighSuvThreshold);

/// Components whose overlap with `suv_mask` has at least `min_overlap`
/// voxels, unchanged and in input order.
CandidateSet reduce_false_positives(const CandidateSet& cands, const Volume3D& suv_mask, int min_overlap = 1);

struct DetectionScore {
  std::optional<double> tpr;  // undefined without ground-truth lesions
  double fpr = 0.0;           // false-positive components in this scan
  std::vector<bool> hits;     // per ground-truth lesion
  std::size_t lesions = 0;
  std::size_t detected = 0;
  std::size_t false_positives = 0;
};

DetectionScore score_detection(const CandidateSet& cands, const CandidateSet& gt, int min_overlap = 1);

/// One scan's inputs to an FROC sweep.
struct FrocScan {
  const Volume3D* prob = nullptr;     // PROB map from the detector
  const CandidateSet* gt = nullptr;   // ground-truth lesions
  const Volume3D* syn_pet = nullptr;  // synthesized PET (SUV or NORMALIZED)
};

struct FrocPoint {
  double threshold = 0.0;
  double mean_fpr = 0.0;       // false positives per scan
  std::optional<double> tpr;   // pooled over scans
  std::size_t candidates = 0;  // raw components before any reduction
  std::size_t kept = 0;        // components after the optional reduction
};

std::vector<double> default_threshold_grid();

/// For each th: components of {prob > th}, optionally filtered by the
/// {syn_pet > suv_th} mask, then scored. th_grid must be strictly
/// increasing inside (0, 1).
std::vector<FrocPoint> froc(std::span<const FrocScan> scans, std::span<const double> th_grid, bool use_fpr_layer,
                            double suv_th = kHighSuvThreshold, int min_overlap = 1);

/// Columns: curve,threshold,mean_fpr,tpr,candidates,kept.
void write_froc_csv(const std::filesystem::path& path, std::span<const FrocPoint> without_layer,
                    std::span<const FrocPoint> with_layer);

/// TPR against mean FPs per scan for both curves, with the operating point
/// `highlight_th` marked.
void write_froc_svg(const std::filesystem::path& path, std::span<const FrocPoint> without_layer,
                    std::span<const FrocPoint> with_layer, double highlight_th = 0.95);

}  // namespace vpet::lesion
