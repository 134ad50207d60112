#include <algorithm>
#include <numeric>

#include "vpet/dataprep.hpp"
#include "vpet/error.hpp"

namespace vpet::prep {

float Image2D::min_value() const { return *std::min_element(pixels.begin(), pixels.end()); }

ScanPair make_scan_pair(Volume3D ct, Volume3D pet, std::optional<SliceRange> slice_range, Window suv_window) {
  require(ct.modality() == Modality::kNormalized && pet.modality() == Modality::kNormalized,
          ErrorCode::kInvalidArgument, "scan pair volumes must be NORMALIZED");
  require(ct.same_grid(pet), ErrorCode::kGridMismatch, "CT and PET must share one grid");
  if (slice_range) {
    require(slice_range->lo <= slice_range->hi, ErrorCode::kInvalidArgument, "slice range lo > hi");
    require(slice_range->lo >= 0 && slice_range->hi < ct.dims().z, ErrorCode::kInvalidArgument,
            "slice range outside the volume");
  }
  return ScanPair{std::move(ct), std::move(pet), suv_window, slice_range};
}

ScanPair prepare_pair(const Volume3D& ct_raw, const Volume3D& pet_raw, double dose_kbq, double weight_g,
                      const Window& ct_window, const Window& suv_window, std::optional<SliceRange> slice_range) {
  require(ct_raw.modality() == Modality::kCt, ErrorCode::kInvalidArgument, "CT input must have CT modality");

  Volume3D suv = [&] {
    switch (pet_raw.modality()) {
      case Modality::kSuv: return pet_raw;
      case Modality::kPetActivity: return compute_suv(pet_raw, dose_kbq, weight_g);
      default: fail(ErrorCode::kInvalidArgument, "PET input must be PET_ACTIVITY or SUV");
    }
  }();

  // Offset between the grids in CT voxel units; A maps PET indices to CT
  // indices, so the CT grid pulls its samples through the inverse.
  const Vec3& sct = ct_raw.spacing();
  const Vec3 t{(suv.offset().x - ct_raw.offset().x) / sct.x, (suv.offset().y - ct_raw.offset().y) / sct.y,
               (suv.offset().z - ct_raw.offset().z) / sct.z};
  const AffineTransform a = build_alignment_transform(sct, suv.spacing(), t);
  const Volume3D aligned = resample_linear(suv, a.inverse(), ct_raw.grid());

  return make_scan_pair(window_and_normalize(ct_raw, ct_window), window_and_normalize(aligned, suv_window),
                        slice_range, suv_window);
}

Image2D axial_slice(const Volume3D& v, int z) {
  require(z >= 0 && z < v.dims().z, ErrorCode::kInvalidArgument, "slice index out of range");
  Image2D img(v.dims().y, v.dims().x);
  const auto d = v.data();
  std::copy_n(d.begin() + static_cast<std::ptrdiff_t>(v.index(0, 0, z)), img.pixels.size(), img.pixels.begin());
  return img;
}

std::vector<SlicePair> extract_slices(const ScanPair& p, int scan_index) {
  int lo = 0;
  int hi = p.ct.dims().z - 1;
  if (p.slice_range) {
    require(p.slice_range->lo <= p.slice_range->hi, ErrorCode::kEmptyInput, "slice range is empty");
    require(p.slice_range->lo >= 0 && p.slice_range->hi <= hi, ErrorCode::kInvalidArgument,
            "slice range outside the volume");
    lo = p.slice_range->lo;
    hi = p.slice_range->hi;
  }
  std::vector<SlicePair> out;
  out.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (int z = lo; z <= hi; ++z) out.push_back({axial_slice(p.ct, z), axial_slice(p.pet, z), scan_index, z});
  return out;
}

SplitIndices split_train_val(std::size_t n, double fraction, std::uint64_t seed) {
  require(n > 0, ErrorCode::kEmptyInput, "cannot split an empty set");
  require(fraction > 0.0 && fraction < 1.0, ErrorCode::kInvalidArgument, "split fraction must lie in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, {0x5b117});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  SplitIndices s;
  s.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

SplitIndices split_train_val_by_group(std::span<const int> groups, double fraction, std::uint64_t seed) {
  require(!groups.empty(), ErrorCode::kEmptyInput, "cannot split an empty set");
  std::vector<int> ids(groups.begin(), groups.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const SplitIndices by_group = split_train_val(ids.size(), fraction, seed);
  std::vector<bool> is_val_group(ids.size(), false);
  for (auto g : by_group.val) is_val_group[g] = true;

  SplitIndices s;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto g = static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), groups[i]) - ids.begin());
    (is_val_group[g] ? s.val : s.train).push_back(i);
  }
  return s;
}

}  // namespace vpet::prep
