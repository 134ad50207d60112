#include <algorithm>

#include "vpet/error.hpp"
#include "vpet/volume.hpp"

namespace vpet {

Volume3D compute_suv(const Volume3D& activity, double injected_dose_kbq, double weight_g) {
  require(injected_dose_kbq > 0.0, ErrorCode::kInvalidArgument, "injected dose must be positive");
  require(weight_g > 0.0, ErrorCode::kInvalidArgument, "patient weight must be positive");
  const double scale = weight_g / injected_dose_kbq;
  std::vector<float> out(activity.size());
  std::transform(activity.data().begin(), activity.data().end(), out.begin(),
                 [scale](float r) { return static_cast<float>(r * scale); });
  return activity.with_data(std::move(out), Modality::kSuv);
}

Volume3D window_and_normalize(const Volume3D& v, const Window& w) {
  const double lo = w.lo();
  const double width = static_cast<double>(w.hi()) - lo;
  std::vector<float> out(v.size());
  std::transform(v.data().begin(), v.data().end(), out.begin(), [&](float x) {
    const double clipped = std::clamp(static_cast<double>(x), lo, static_cast<double>(w.hi()));
    return std::clamp(static_cast<float>((clipped - lo) / width), 0.0f, 1.0f);
  });
  return v.with_data(std::move(out), Modality::kNormalized);
}

Volume3D denormalize(const Volume3D& v, const Window& w, Modality result) {
  std::vector<float> out(v.size());
  const double width = static_cast<double>(w.hi()) - w.lo();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float x = v.data()[i];
    require(x >= 0.0f && x <= 1.0f, ErrorCode::kInvalidArgument, "denormalize input outside [0,1]");
    out[i] = static_cast<float>(x * width + w.lo());
  }
  return v.with_data(std::move(out), result);
}

}  // namespace vpet
