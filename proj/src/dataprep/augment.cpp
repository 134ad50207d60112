#include <algorithm>
#include <cmath>

#include "vpet/dataprep.hpp"
#include "vpet/error.hpp"

namespace vpet::prep {

namespace {
constexpr double kReferenceWidth = 512.0;
}

AugmentConfig AugmentConfig::for_input_size(int input_size) {
  AugmentConfig cfg;
  cfg.translate_px = 25.0 * input_size / kReferenceWidth;
  return cfg;
}

void AugmentConfig::validate() const {
  require(scale_lo > 0.0 && scale_lo <= scale_hi, ErrorCode::kInvalidArgument, "scale range must be positive");
  require(translate_px >= 0.0, ErrorCode::kInvalidArgument, "translation bound must be >= 0");
  require(noise_bound >= 0.0, ErrorCode::kInvalidArgument, "noise bound must be >= 0");
}

AugmentDraw draw_augmentation(const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  std::uniform_real_distribution<double> scale(cfg.scale_lo, cfg.scale_hi);
  std::uniform_real_distribution<double> shift(-cfg.translate_px, cfg.translate_px);
  AugmentDraw d;
  d.scale = cfg.scale_lo == cfg.scale_hi ? cfg.scale_lo : scale(rng);
  d.tx = cfg.translate_px == 0.0 ? 0.0 : shift(rng);
  d.ty = cfg.translate_px == 0.0 ? 0.0 : shift(rng);
  return d;
}

Image2D apply_augmentation(const Image2D& img, const AugmentDraw& d) {
  require(d.scale > 0.0, ErrorCode::kInvalidArgument, "augmentation scale must be positive");
  const float pad = img.min_value();
  const double cx = (img.width - 1) / 2.0;
  const double cy = (img.height - 1) / 2.0;
  Image2D out(img.height, img.width);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double sx = (x - cx - d.tx) / d.scale + cx;
      const double sy = (y - cy - d.ty) / d.scale + cy;
      if (sx < -1e-9 || sy < -1e-9 || sx > img.width - 1 + 1e-9 || sy > img.height - 1 + 1e-9) {
        out.at(y, x) = pad;
        continue;
      }
      const int x0 = std::min(static_cast<int>(std::floor(std::max(sx, 0.0))), std::max(img.width - 2, 0));
      const int y0 = std::min(static_cast<int>(std::floor(std::max(sy, 0.0))), std::max(img.height - 2, 0));
      const int x1 = std::min(x0 + 1, img.width - 1);
      const int y1 = std::min(y0 + 1, img.height - 1);
      const double fx = std::clamp(sx - x0, 0.0, 1.0);
      const double fy = std::clamp(sy - y0, 0.0, 1.0);
      const double top = img.at(y0, x0) * (1 - fx) + img.at(y0, x1) * fx;
      const double bottom = img.at(y1, x0) * (1 - fx) + img.at(y1, x1) * fx;
      out.at(y, x) = static_cast<float>(top * (1 - fy) + bottom * fy);
    }
  }
  return out;
}

SlicePair augment(const SlicePair& sample, const AugmentConfig& cfg, Rng& rng) {
  require(sample.ct.height == sample.pet.height && sample.ct.width == sample.pet.width, ErrorCode::kShapeMismatch,
          "CT and PET slices differ in shape");
  const AugmentDraw d = draw_augmentation(cfg, rng);
  return {apply_augmentation(sample.ct, d), apply_augmentation(sample.pet, d), sample.scan, sample.z};
}

Image2D add_input_noise(const Image2D& ct, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.noise_bound == 0.0) return ct;
  std::normal_distribution<double> gauss(0.0, cfg.noise_bound / 3.0);
  Image2D out = ct;
  for (float& v : out.pixels) v += static_cast<float>(std::clamp(gauss(rng), -cfg.noise_bound, cfg.noise_bound));
  return out;
}

}  // namespace vpet::prep
