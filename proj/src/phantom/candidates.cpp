#include <algorithm>
#include <random>

#include "vpet/error.hpp"
#include "vpet/phantom.hpp"
#include "vpet/random.hpp"

namespace vpet::phantom {

namespace {

constexpr std::uint64_t kCandidateStream = 0xCA4D;
constexpr int kAttemptsPerBlob = 5000;

/// Marks every voxel within one step (26-neighbourhood) of a set voxel.
std::vector<char> dilate(const Volume3D& ref, const std::vector<char>& in) {
  const Dims d = ref.dims();
  std::vector<char> out(in.size(), 0);
  for (int z = 0; z < d.z; ++z) {
    for (int y = 0; y < d.y; ++y) {
      for (int x = 0; x < d.x; ++x) {
        if (!in[ref.index(x, y, z)]) continue;
        for (int dz = -1; dz <= 1; ++dz) {
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const int nx = x + dx, ny = y + dy, nz = z + dz;
              if (nx >= 0 && ny >= 0 && nz >= 0 && nx < d.x && ny < d.y && nz < d.z) out[ref.index(nx, ny, nz)] = 1;
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

CandidateOutput generate_candidates(const Volume3D& gt_mask, int n_false, const Volume3D& avoid, std::uint64_t seed) {
  require(gt_mask.modality() == Modality::kMask && avoid.modality() == Modality::kMask, ErrorCode::kInvalidArgument,
          "candidate generation needs MASK inputs");
  require(gt_mask.same_grid(avoid), ErrorCode::kGridMismatch, "avoid mask is on a different grid");
  require(n_false >= 0, ErrorCode::kInvalidArgument, "n_false must be >= 0");
  const Dims d = gt_mask.dims();
  require(n_false == 0 || (d.x >= 3 && d.y >= 3), ErrorCode::kPlacementFailure,
          "grid too small for 3x3 false-positive blobs");

  Rng rng = make_rng(seed, {kCandidateStream});
  std::uniform_real_distribution<double> tp_score(0.96, 0.995);
  std::uniform_real_distribution<double> fp_score(0.80, 0.95);

  lesion::CandidateSet out = lesion::connected_components(gt_mask);
  for (auto& c : out.components) c.score = static_cast<float>(tp_score(rng));

  std::vector<char> taken(gt_mask.size(), 0);
  for (std::size_t i = 0; i < taken.size(); ++i) taken[i] = gt_mask.data()[i] != 0.0f || avoid.data()[i] != 0.0f;
  std::vector<char> blocked = dilate(gt_mask, taken);

  std::uniform_int_distribution<int> ix(1, std::max(1, d.x - 2));
  std::uniform_int_distribution<int> iy(1, std::max(1, d.y - 2));
  std::uniform_int_distribution<int> iz(0, d.z - 1);
  for (int k = 0; k < n_false; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kAttemptsPerBlob && !placed; ++attempt) {
      const int cx = ix(rng), cy = iy(rng), cz = iz(rng);
      std::vector<std::size_t> blob;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) blob.push_back(gt_mask.index(cx + dx, cy + dy, cz));
      }
      if (std::any_of(blob.begin(), blob.end(), [&](std::size_t v) { return blocked[v] != 0; })) continue;
      std::sort(blob.begin(), blob.end());
      std::vector<char> mark(taken.size(), 0);
      for (std::size_t v : blob) mark[v] = 1;
      const std::vector<char> ring = dilate(gt_mask, mark);
      for (std::size_t i = 0; i < ring.size(); ++i) blocked[i] = blocked[i] || ring[i];
      out.components.push_back({static_cast<int>(out.components.size()), std::move(blob),
                                static_cast<double>(static_cast<float>(fp_score(rng)))});
      placed = true;
    }
    require(placed, ErrorCode::kPlacementFailure,
            "could not place false-positive blob " + std::to_string(k + 1) + " of " + std::to_string(n_false));
  }

  std::vector<float> prob(gt_mask.size(), 0.0f);
  for (const auto& c : out.components) {
    for (std::size_t v : c.voxels) prob[v] = static_cast<float>(*c.score);
  }
  out.validate();
  return {std::move(out), gt_mask.with_data(std::move(prob), Modality::kProb)};
}

}  // namespace vpet::phantom
