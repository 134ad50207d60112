#include <algorithm>
#include <deque>

#include "vpet/error.hpp"
#include "vpet/lesion.hpp"

namespace vpet::lesion {

namespace {

CandidateSet label(const Volume3D& mask, const Volume3D* prob) {
  require(mask.modality() == Modality::kMask, ErrorCode::kInvalidArgument, "component labelling needs a MASK volume");
  if (prob != nullptr) {
    require(prob->modality() == Modality::kProb, ErrorCode::kInvalidArgument, "scores must come from a PROB map");
    require(prob->same_grid(mask), ErrorCode::kGridMismatch, "probability map is on a different grid");
  }
  const Dims d = mask.dims();
  const auto m = mask.data();
  std::vector<int> labels(mask.size(), -1);
  CandidateSet out{mask.grid(), {}};
  std::deque<std::size_t> queue;

  for (std::size_t seed = 0; seed < m.size(); ++seed) {
    if (m[seed] == 0.0f || labels[seed] >= 0) continue;
    const int id = static_cast<int>(out.components.size());
    Component comp{id, {}, std::nullopt};
    labels[seed] = id;
    queue.push_back(seed);
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop_front();
      comp.voxels.push_back(v);
      const int x = static_cast<int>(v % d.x);
      const int y = static_cast<int>((v / d.x) % d.y);
      const int z = static_cast<int>(v / (static_cast<std::size_t>(d.x) * d.y));
      for (int dz = -1; dz <= 1; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx;
            const int ny = y + dy;
            const int nz = z + dz;
            if (nx < 0 || ny < 0 || nz < 0 || nx >= d.x || ny >= d.y || nz >= d.z) continue;
            const std::size_t n = mask.index(nx, ny, nz);
            if (m[n] == 0.0f || labels[n] >= 0) continue;
            labels[n] = id;
            queue.push_back(n);
          }
        }
      }
    }
    std::sort(comp.voxels.begin(), comp.voxels.end());
    if (prob != nullptr) {
      double best = 0.0;
      for (std::size_t v : comp.voxels) best = std::max(best, static_cast<double>(prob->data()[v]));
      comp.score = best;
    }
    out.components.push_back(std::move(comp));
  }
  return out;
}

}  // namespace

CandidateSet connected_components(const Volume3D& mask) { return label(mask, nullptr); }

CandidateSet connected_components(const Volume3D& mask, const Volume3D& prob) { return label(mask, &prob); }

Volume3D CandidateSet::to_mask() const {
  std::vector<float> data(grid.dims.count(), 0.0f);
  for (const auto& c : components) {
    for (std::size_t v : c.voxels) {
      require(v < data.size(), ErrorCode::kInvalidArgument, "component voxel outside the grid");
      data[v] = 1.0f;
    }
  }
  return Volume3D(grid, Modality::kMask, std::move(data));
}

void CandidateSet::validate() const {
  std::vector<char> seen(grid.dims.count(), 0);
  for (const auto& c : components) {
    for (std::size_t v : c.voxels) {
      require(v < seen.size(), ErrorCode::kInvalidArgument,
              "component " + std::to_string(c.id) + " has a voxel outside the grid");
      require(seen[v] == 0, ErrorCode::kInvalidArgument, "components overlap at voxel " + std::to_string(v));
      seen[v] = 1;
    }
  }
}

}  // namespace vpet::lesion
