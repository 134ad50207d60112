#include <cmath>
#include <limits>

#include "vpet/error.hpp"
#include "vpet/eval.hpp"

namespace vpet::eval {

namespace {

/// Per-voxel SUV reader for SUV or NORMALIZED volumes.
struct SuvView {
  std::span<const float> data;
  double lo = 0.0;
  double scale = 1.0;

  explicit SuvView(const Volume3D& v) : data(v.data()) {
    if (v.modality() == Modality::kNormalized) {
      lo = kSuvWindow.lo();
      scale = kSuvWindow.width();
    } else {
      require(v.modality() == Modality::kSuv, ErrorCode::kInvalidArgument,
              "metrics need SUV or NORMALIZED volumes, got " + std::string(to_string(v.modality())));
    }
  }
  double operator[](std::size_t i) const { return lo + scale * static_cast<double>(data[i]); }
};

void check_inputs(const Volume3D& syn, const Volume3D& ref, const Volume3D* mask) {
  require(syn.same_grid(ref), ErrorCode::kGridMismatch, "synthesized and reference volumes are on different grids");
  if (mask != nullptr) {
    require(mask->modality() == Modality::kMask, ErrorCode::kInvalidArgument, "metric mask must have MASK modality");
    require(mask->same_grid(ref), ErrorCode::kGridMismatch, "metric mask is on a different grid");
  }
}

struct ErrorSums {
  double abs = 0.0;
  double sq = 0.0;
  std::size_t n = 0;
};

ErrorSums error_sums(const Volume3D& syn, const Volume3D& ref, const Volume3D* mask) {
  check_inputs(syn, ref, mask);
  const SuvView a(syn);
  const SuvView b(ref);
  ErrorSums s;
  for (std::size_t i = 0; i < syn.size(); ++i) {
    if (mask != nullptr && mask->data()[i] == 0.0f) continue;
    const double d = a[i] - b[i];
    s.abs += std::abs(d);
    s.sq += d * d;
    ++s.n;
  }
  return s;
}

std::optional<double> psnr_from(const ErrorSums& s) {
  if (s.n == 0) return std::nullopt;
  const double mse = s.sq / static_cast<double>(s.n);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(kPsnrPeak * kPsnrPeak / mse);
}

std::optional<double> mae_from(const ErrorSums& s) {
  if (s.n == 0) return std::nullopt;
  return s.abs / static_cast<double>(s.n);
}

std::optional<double> mean_of(std::optional<double> a, std::optional<double> b) {
  if (!a || !b) return std::nullopt;
  return 0.5 * (*a + *b);
}

}  // namespace

std::optional<double> mae(const Volume3D& syn, const Volume3D& ref, const Volume3D* mask) {
  return mae_from(error_sums(syn, ref, mask));
}

std::optional<double> psnr(const Volume3D& syn, const Volume3D& ref, const Volume3D* mask) {
  return psnr_from(error_sums(syn, ref, mask));
}

RegionMasks suv_region_masks(const Volume3D& ref, double threshold_suv) {
  const SuvView v(ref);
  std::vector<float> high(ref.size());
  std::vector<float> low(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const bool h = v[i] > threshold_suv;
    high[i] = h ? 1.0f : 0.0f;
    low[i] = h ? 0.0f : 1.0f;
  }
  return {ref.with_data(std::move(high), Modality::kMask), ref.with_data(std::move(low), Modality::kMask)};
}

ReconRecord evaluate_pair(const Volume3D& syn, const Volume3D& ref, std::optional<prep::SliceRange> range,
                          std::string scan, double threshold_suv) {
  check_inputs(syn, ref, nullptr);
  RegionMasks m = suv_region_masks(ref, threshold_suv);
  if (range) {
    require(range->lo >= 0 && range->lo <= range->hi && range->hi < ref.dims().z, ErrorCode::kInvalidArgument,
            "evaluation slice range outside the volume");
    const std::size_t plane = static_cast<std::size_t>(ref.dims().x) * ref.dims().y;
    std::vector<float> keep(ref.size(), 0.0f);
    std::fill(keep.begin() + static_cast<std::ptrdiff_t>(plane * range->lo),
              keep.begin() + static_cast<std::ptrdiff_t>(plane * (range->hi + 1)), 1.0f);
    auto restrict = [&](const Volume3D& mask) {
      std::vector<float> d(mask.data().begin(), mask.data().end());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= keep[i];
      return mask.with_data(std::move(d), Modality::kMask);
    };
    m = {restrict(m.high), restrict(m.low)};
  }
  const ErrorSums high = error_sums(syn, ref, &m.high);
  const ErrorSums low = error_sums(syn, ref, &m.low);
  ReconRecord r;
  r.scan = std::move(scan);
  r.mae_high = mae_from(high);
  r.psnr_high = psnr_from(high);
  r.mae_low = mae_from(low);
  r.psnr_low = psnr_from(low);
  r.mae_avg = mean_of(r.mae_high, r.mae_low);
  r.psnr_avg = mean_of(r.psnr_high, r.psnr_low);
  return r;
}

}  // namespace vpet::eval
