#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vpet/random.hpp"
#include "vpet/volume.hpp"

namespace vpet::prep {

/// Row-major single-channel image (row = y, column = x).
struct Image2D {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image2D() = default;
  Image2D(int h, int w, float fill = 0.0f) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

  float& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  float min_value() const;

  friend bool operator==(const Image2D&, const Image2D&) = default;
};

/// One axial CT slice and the aligned PET slice.
struct SlicePair {
  Image2D ct;
  Image2D pet;
  int scan = 0;
  int z = 0;
};

/// Inclusive axial index range.
struct SliceRange {
  int lo = 0;
  int hi = 0;
};

struct ScanPair {
  Volume3D ct;   // NORMALIZED
  Volume3D pet;  // NORMALIZED, on the CT grid
  Window suv_window = kSuvWindow;
  std::optional<SliceRange> slice_range;
};

struct AugmentConfig {
  double scale_lo = 0.9;
  double scale_hi = 1.1;
  double translate_px = 25.0;  // symmetric range [-t, t] per axis
  double noise_bound = 0.005;
  std::uint64_t seed = 0;

  /// Same ranges with the translation bound rescaled from the reference
  /// 512-pixel slice width to `input_size`.
  static AugmentConfig for_input_size(int input_size);
  void validate() const;
};

struct AugmentDraw {
  double scale = 1.0;
  double tx = 0.0;
  double ty = 0.0;
};

/// SUV conversion (when the PET holds activity), alignment onto the CT grid
/// and windowing of both modalities.
ScanPair prepare_pair(const Volume3D& ct_raw, const Volume3D& pet_raw, double dose_kbq, double weight_g,
                      const Window& ct_window = kCtWindow, const Window& suv_window = kSuvWindow,
                      std::optional<SliceRange> slice_range = std::nullopt);

/// Wraps already-prepared normalized volumes, checking the pair invariants.
ScanPair make_scan_pair(Volume3D ct, Volume3D pet, std::optional<SliceRange> slice_range = std::nullopt,
                        Window suv_window = kSuvWindow);

Image2D axial_slice(const Volume3D& v, int z);

std::vector<SlicePair> extract_slices(const ScanPair& p, int scan_index = 0);

AugmentDraw draw_augmentation(const AugmentConfig& cfg, Rng& rng);

/// Scale about the image centre followed by translation, bilinear sampling,
/// out-of-range pixels take the slice minimum.
Image2D apply_augmentation(const Image2D& img, const AugmentDraw& d);

/// Draws one transform and applies it to both slices.
SlicePair augment(const SlicePair& sample, const AugmentConfig& cfg, Rng& rng);

/// Zero-mean Gaussian perturbation, sigma = bound / 3, clipped to +-bound.
Image2D add_input_noise(const Image2D& ct, const AugmentConfig& cfg, Rng& rng);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Random per-item partition with |val| = round(fraction * n).
SplitIndices split_train_val(std::size_t n, double fraction, std::uint64_t seed);

/// Partition that keeps every group (scan) on one side.
SplitIndices split_train_val_by_group(std::span<const int> groups, double fraction, std::uint64_t seed);

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_train_val(std::span<const T> items, double fraction,
                                                          std::uint64_t seed) {
  const SplitIndices idx = split_train_val(items.size(), fraction, seed);
  std::pair<std::vector<T>, std::vector<T>> out;
  for (auto i : idx.train) out.first.push_back(items[i]);
  for (auto i : idx.val) out.second.push_back(items[i]);
  return out;
}

// --- pair manifest ----------------------------------------------------------

struct PairRecord {
  std::filesystem::path ct;
  std::filesystem::path pet;
  double dose_kbq = 0.0;
  double weight_g = 0.0;
  std::optional<SliceRange> slice_range;
};

/// Comma-separated `ct,pet,dose,weight,slice_lo,slice_hi` records, one per
/// scan. Empty slice fields mean "all slices"; '#' starts a comment line.
/// Relative paths resolve against the manifest's directory.
std::vector<PairRecord> read_pair_manifest(const std::filesystem::path& path);
void write_pair_manifest(const std::filesystem::path& path, std::span<const PairRecord> records);

}  // namespace vpet::prep
