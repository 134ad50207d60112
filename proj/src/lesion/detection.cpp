#include "vpet/error.hpp"
#include "vpet/lesion.hpp"

namespace vpet::lesion {

namespace {

std::size_t overlap(const Component& c, std::span<const float> mask) {
  std::size_t n = 0;
  for (std::size_t v : c.voxels) n += mask[v] != 0.0f ? 1 : 0;
  return n;
}

}  // namespace

Volume3D suv_threshold_mask(const Volume3D& syn_pet, double th_suv) {
  double lo = 0.0;
  double scale = 1.0;
  if (syn_pet.modality() == Modality::kNormalized) {
    lo = kSuvWindow.lo();
    scale = kSuvWindow.width();
  } else {
    require(syn_pet.modality() == Modality::kSuv, ErrorCode::kInvalidArgument,
            "SUV thresholding needs an SUV or NORMALIZED volume");
  }
  std::vector<float> out(syn_pet.size());
  const auto d = syn_pet.data();
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = lo + scale * static_cast<double>(d[i]) > th_suv ? 1.0f : 0.0f;
  return syn_pet.with_data(std::move(out), Modality::kMask);
}

CandidateSet reduce_false_positives(const CandidateSet& cands, const Volume3D& suv_mask, int min_overlap) {
  require(suv_mask.modality() == Modality::kMask, ErrorCode::kInvalidArgument, "FP reduction needs a MASK volume");
  require(cands.grid == suv_mask.grid(), ErrorCode::kGridMismatch, "candidates and SUV mask are on different grids");
  require(min_overlap >= 1, ErrorCode::kInvalidArgument, "min_overlap must be >= 1");
  CandidateSet out{cands.grid, {}};
  for (const auto& c : cands.components) {
    if (overlap(c, suv_mask.data()) >= static_cast<std::size_t>(min_overlap)) out.components.push_back(c);
  }
  return out;
}

DetectionScore score_detection(const CandidateSet& cands, const CandidateSet& gt, int min_overlap) {
  require(cands.grid == gt.grid, ErrorCode::kGridMismatch, "candidates and ground truth are on different grids");
  require(min_overlap >= 1, ErrorCode::kInvalidArgument, "min_overlap must be >= 1");
  std::vector<int> owner(gt.grid.dims.count(), -1);
  for (std::size_t l = 0; l < gt.components.size(); ++l) {
    for (std::size_t v : gt.components[l].voxels) owner[v] = static_cast<int>(l);
  }
  DetectionScore s;
  s.lesions = gt.components.size();
  s.hits.assign(s.lesions, false);
  std::vector<std::size_t> counts(s.lesions);
  for (const auto& c : cands.components) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t v : c.voxels) {
      if (owner[v] >= 0) ++counts[static_cast<std::size_t>(owner[v])];
    }
    bool touches = false;
    for (std::size_t l = 0; l < s.lesions; ++l) {
      if (counts[l] >= static_cast<std::size_t>(min_overlap)) {
        s.hits[l] = true;
        touches = true;
      }
    }
    s.false_positives += touches ? 0 : 1;
  }
  for (bool h : s.hits) s.detected += h ? 1 : 0;
  s.fpr = static_cast<double>(s.false_positives);
  if (s.lesions > 0) s.tpr = static_cast<double>(s.detected) / static_cast<double>(s.lesions);
  return s;
}

}  // namespace vpet::lesion
