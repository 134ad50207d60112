#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "vpet/error.hpp"
#include "vpet/volume.hpp"

namespace vpet {

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::kCt: return "CT";
    case Modality::kPetActivity: return "PET_ACTIVITY";
    case Modality::kSuv: return "SUV";
    case Modality::kMask: return "MASK";
    case Modality::kProb: return "PROB";
    case Modality::kNormalized: return "NORMALIZED";
  }
  return "?";
}

Modality modality_from_string(std::string_view s) {
  for (Modality m : {Modality::kCt, Modality::kPetActivity, Modality::kSuv, Modality::kMask, Modality::kProb,
                     Modality::kNormalized}) {
    if (to_string(m) == s) return m;
  }
  fail(ErrorCode::kInvalidArgument, "unknown modality '" + std::string(s) + "'");
}

namespace {

void validate(const Grid& g, Modality modality, std::span<const float> data) {
  require(g.dims.x >= 1 && g.dims.y >= 1 && g.dims.z >= 1, ErrorCode::kInvalidArgument,
          "volume dimensions must be >= 1 on every axis");
  require(g.spacing.x > 0 && g.spacing.y > 0 && g.spacing.z > 0, ErrorCode::kInvalidArgument,
          "voxel spacing must be positive");
  require(data.size() == g.dims.count(), ErrorCode::kRasterSizeMismatch,
          "raster holds " + std::to_string(data.size()) + " values, dims need " + std::to_string(g.dims.count()));
  if (modality == Modality::kMask) {
    for (float v : data) require(v == 0.0f || v == 1.0f, ErrorCode::kInvalidArgument, "MASK voxel outside {0,1}");
  } else if (modality == Modality::kNormalized || modality == Modality::kProb) {
    for (float v : data) {
      require(v >= 0.0f && v <= 1.0f, ErrorCode::kInvalidArgument,
              std::string(to_string(modality)) + " voxel outside [0,1]");
    }
  }
}

}  // namespace

Volume3D::Volume3D(Grid grid, Modality modality, std::vector<float> data)
    : grid_(grid), modality_(modality), data_(std::move(data)) {
  validate(grid_, modality_, data_);
}

Volume3D::Volume3D(Grid grid, Modality modality, float fill)
    : Volume3D(grid, modality, std::vector<float>(grid.dims.x >= 1 && grid.dims.y >= 1 && grid.dims.z >= 1
                                                      ? grid.dims.count()
                                                      : 0,
                                                  fill)) {}

Volume3D Volume3D::with_data(std::vector<float> data, Modality modality) const {
  return Volume3D(grid_, modality, std::move(data));
}

float Volume3D::min_value() const { return *std::min_element(data_.begin(), data_.end()); }
float Volume3D::max_value() const { return *std::max_element(data_.begin(), data_.end()); }

void Window::throw_invalid() { fail(ErrorCode::kInvalidArgument, "window requires lo < hi"); }

// --- AffineTransform ---------------------------------------------------------

namespace {

void validate_affine(const Eigen::Matrix4d& m) {
  require(m(3, 0) == 0.0 && m(3, 1) == 0.0 && m(3, 2) == 0.0 && m(3, 3) == 1.0, ErrorCode::kInvalidArgument,
          "affine bottom row must be (0, 0, 0, 1)");
  require(m(0, 0) > 0.0 && m(1, 1) > 0.0 && m(2, 2) > 0.0, ErrorCode::kInvalidArgument,
          "affine diagonal scales must be positive");
}

}  // namespace

AffineTransform::AffineTransform() : m_(Eigen::Matrix4d::Identity()) {}

AffineTransform::AffineTransform(const Eigen::Matrix4d& m) : m_(m) { validate_affine(m_); }

Eigen::Vector3d AffineTransform::apply(const Eigen::Vector3d& p) const {
  return m_.topLeftCorner<3, 3>() * p + m_.topRightCorner<3, 1>();
}

bool AffineTransform::is_singular() const {
  return std::abs(m_.topLeftCorner<3, 3>().determinant()) < 1e-12;
}

AffineTransform AffineTransform::inverse() const {
  require(!is_singular(), ErrorCode::kSingularTransform, "cannot invert a singular transform");
  const Eigen::Matrix3d lin = m_.topLeftCorner<3, 3>();
  Eigen::Matrix4d inv = Eigen::Matrix4d::Identity();
  if (lin.isDiagonal()) {
    for (int i = 0; i < 3; ++i) {
      inv(i, i) = 1.0 / lin(i, i);
      inv(i, 3) = -m_(i, 3) / lin(i, i);
    }
  } else {
    const Eigen::Matrix3d lin_inv = lin.inverse();
    inv.topLeftCorner<3, 3>() = lin_inv;
    inv.topRightCorner<3, 1>() = -lin_inv * m_.topRightCorner<3, 1>();
  }
  return AffineTransform(inv);
}

AffineTransform AffineTransform::compose(const AffineTransform& inner) const {
  return AffineTransform(m_ * inner.m_);
}

AffineTransform build_alignment_transform(const Vec3& ct_spacing, const Vec3& pet_spacing, const Vec3& t) {
  require(ct_spacing.x > 0 && ct_spacing.y > 0 && ct_spacing.z > 0 && pet_spacing.x > 0 && pet_spacing.y > 0 &&
              pet_spacing.z > 0,
          ErrorCode::kInvalidArgument, "alignment needs positive spacings");
  Eigen::Matrix4d a = Eigen::Matrix4d::Identity();
  a(0, 0) = pet_spacing.x / ct_spacing.x;
  a(1, 1) = pet_spacing.y / ct_spacing.y;
  a(2, 2) = pet_spacing.z / ct_spacing.z;
  a(0, 3) = t.x;
  a(1, 3) = t.y;
  a(2, 3) = t.z;
  return AffineTransform(a);
}

}  // namespace vpet
