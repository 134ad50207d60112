#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace vpet {

enum class Modality { kCt, kPetActivity, kSuv, kMask, kProb, kNormalized };

std::string_view to_string(Modality m);
Modality modality_from_string(std::string_view s);

/// Voxel counts along x, y, z.
struct Dims {
  int x = 1;
  int y = 1;
  int z = 1;

  std::size_t count() const {
    return static_cast<std::size_t>(x) * static_cast<std::size_t>(y) * static_cast<std::size_t>(z);
  }
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// A real-valued triple in millimetres (spacing or world offset).
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

/// Sampling grid of a volume: voxel (i, j, k) has its centre at
/// offset + (i * spacing.x, j * spacing.y, k * spacing.z).
struct Grid {
  Dims dims;
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 offset;

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Immutable 3D scalar volume. Raster order is x-fastest, then y, then z.
class Volume3D {
 public:
  Volume3D(Grid grid, Modality modality, std::vector<float> data);
  Volume3D(Grid grid, Modality modality, float fill = 0.0f);

  const Grid& grid() const { return grid_; }
  const Dims& dims() const { return grid_.dims; }
  const Vec3& spacing() const { return grid_.spacing; }
  const Vec3& offset() const { return grid_.offset; }
  Modality modality() const { return modality_; }

  std::span<const float> data() const { return data_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(grid_.dims.x) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(grid_.dims.y) * static_cast<std::size_t>(z));
  }
  float at(int x, int y, int z) const { return data_[index(x, y, z)]; }

  bool same_grid(const Volume3D& other) const { return grid_ == other.grid_; }

  /// A new volume on this grid carrying `data` with the given modality.
  Volume3D with_data(std::vector<float> data, Modality modality) const;

  float min_value() const;
  float max_value() const;

 private:
  Grid grid_;
  Modality modality_;
  std::vector<float> data_;
};

/// Intensity range of interest [lo, hi] used for clipping and rescaling.
class Window {
 public:
  constexpr Window(float lo, float hi) : lo_(lo), hi_(hi) {
    if (!(lo < hi)) throw_invalid();
  }

  constexpr float lo() const { return lo_; }
  constexpr float hi() const { return hi_; }
  constexpr float width() const { return hi_ - lo_; }

 private:
  [[noreturn]] static void throw_invalid();

  float lo_;
  float hi_;
};

/// Liver parenchyma CT window in HU.
inline constexpr Window kCtWindow{-160.0f, 240.0f};
/// PET window in SUV units.
inline constexpr Window kSuvWindow{0.0f, 20.0f};
/// Malignancy cut-off in SUV units.
inline constexpr float kHighSuvThreshold = 2.5f;

/// 4x4 homogeneous transform over voxel-index coordinates. Restricted to
/// positive axis scales and an affine bottom row.
class AffineTransform {
 public:
  AffineTransform();
  explicit AffineTransform(const Eigen::Matrix4d& m);

  static AffineTransform identity() { return AffineTransform(); }

  const Eigen::Matrix4d& matrix() const { return m_; }
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const;
  AffineTransform inverse() const;
  AffineTransform compose(const AffineTransform& inner) const;  // this * inner
  bool is_singular() const;

 private:
  Eigen::Matrix4d m_;
};

// --- MVOL file format -------------------------------------------------------

/// Strips a trailing ".mvol.json" / ".mvol.raw" so either file of the pair
/// (or the bare stem) names the volume.
std::filesystem::path mvol_stem(const std::filesystem::path& path);

Volume3D load_volume(const std::filesystem::path& path);
void save_volume(const Volume3D& v, const std::filesystem::path& path);

// --- intensity operations ---------------------------------------------------

/// SUV = r / (dose / weight); dose in kBq (decay corrected), weight in g.
Volume3D compute_suv(const Volume3D& activity, double injected_dose_kbq, double weight_g);

/// Clips to [lo, hi] then rescales linearly onto [0, 1].
Volume3D window_and_normalize(const Volume3D& v, const Window& w);

/// Inverse of the rescale step. Values must lie in [0, 1].
Volume3D denormalize(const Volume3D& v, const Window& w, Modality result = Modality::kSuv);

// --- alignment --------------------------------------------------------------

/// PET-index -> CT-index map: diag(s_pet / s_ct) with translation `t`
/// expressed in CT voxel units.
AffineTransform build_alignment_transform(const Vec3& ct_spacing, const Vec3& pet_spacing, const Vec3& t);

/// Samples `src` at a.apply(target index) for every voxel of `target` using
/// trilinear interpolation; out-of-range coordinates take min(src). MASK
/// sources come back as PROB since interpolation produces fractions.
Volume3D resample_linear(const Volume3D& src, const AffineTransform& a, const Grid& target);

}  // namespace vpet
