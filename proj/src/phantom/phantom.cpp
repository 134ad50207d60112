#include <algorithm>
#include <cmath>
#include <random>

#include "vpet/error.hpp"
#include "vpet/phantom.hpp"
#include "vpet/random.hpp"

namespace vpet::phantom {

namespace {

constexpr std::uint64_t kGeometryStream = 0x6E0;
constexpr std::uint64_t kCtNoiseStream = 0xC7;
constexpr std::uint64_t kPetNoiseStream = 0x9E7;
constexpr int kPlacementAttempts = 2000;

struct Ellipsoid {
  Vec3 c;
  Vec3 r;

  double level(const Vec3& p) const {
    const double dx = (p.x - c.x) / r.x;
    const double dy = (p.y - c.y) / r.y;
    const double dz = (p.z - c.z) / r.z;
    return dx * dx + dy * dy + dz * dz;
  }
};

struct Anatomy {
  Vec3 body_centre;
  double body_rx = 0.0;
  double body_ry = 0.0;
  Ellipsoid liver;

  bool in_body(const Vec3& p) const {
    const double dx = (p.x - body_centre.x) / body_rx;
    const double dy = (p.y - body_centre.y) / body_ry;
    return dx * dx + dy * dy <= 1.0;
  }
};

Anatomy make_anatomy(const PhantomConfig& cfg) {
  const Vec3 ext{(cfg.ct_dims.x - 1) * cfg.ct_spacing.x, (cfg.ct_dims.y - 1) * cfg.ct_spacing.y,
                 (cfg.ct_dims.z - 1) * cfg.ct_spacing.z};
  const Vec3 c{cfg.ct_offset.x + ext.x / 2, cfg.ct_offset.y + ext.y / 2, cfg.ct_offset.z + ext.z / 2};
  Anatomy a;
  a.body_centre = c;
  a.body_rx = 0.46 * ext.x;
  a.body_ry = 0.40 * ext.y;
  a.liver.c = {c.x - 0.10 * ext.x, c.y + 0.02 * ext.y, c.z};
  a.liver.r = {0.28 * ext.x, 0.24 * ext.y, std::max(0.42 * ext.z, cfg.ct_spacing.z)};
  return a;
}

double dist(const Vec3& a, const Vec3& b) {
  return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

Vec3 world(const Grid& g, int x, int y, int z) {
  return {g.offset.x + x * g.spacing.x, g.offset.y + y * g.spacing.y, g.offset.z + z * g.spacing.z};
}

/// Lesion centres on CT voxel centres, spheres inside the liver, pairwise
/// separated by more than one voxel diagonal.
std::vector<Lesion> place_lesions(const PhantomConfig& cfg, const Anatomy& a, Rng& rng) {
  const Grid ct{cfg.ct_dims, cfg.ct_spacing, cfg.ct_offset};
  const double diag = std::sqrt(cfg.ct_spacing.x * cfg.ct_spacing.x + cfg.ct_spacing.y * cfg.ct_spacing.y +
                                cfg.ct_spacing.z * cfg.ct_spacing.z);
  std::uniform_real_distribution<double> radius(cfg.lesion_radius_lo, cfg.lesion_radius_hi);
  std::uniform_real_distribution<double> peak(cfg.lesion_suv_lo, cfg.lesion_suv_hi);
  std::uniform_int_distribution<int> ix(0, cfg.ct_dims.x - 1);
  std::uniform_int_distribution<int> iy(0, cfg.ct_dims.y - 1);
  std::uniform_int_distribution<int> iz(0, cfg.ct_dims.z - 1);

  std::vector<Lesion> out;
  for (int attempt = 0; attempt < kPlacementAttempts && static_cast<int>(out.size()) < cfg.n_lesions; ++attempt) {
    const double r = radius(rng);
    const Vec3 p = world(ct, ix(rng), iy(rng), iz(rng));
    const Ellipsoid shrunk{a.liver.c, {a.liver.r.x - r, a.liver.r.y - r, a.liver.r.z - r}};
    if (shrunk.r.x <= 0 || shrunk.r.y <= 0 || shrunk.r.z <= 0 || shrunk.level(p) > 1.0) continue;
    const bool clear = std::all_of(out.begin(), out.end(),
                                   [&](const Lesion& l) { return dist(l.centre_mm, p) > l.radius_mm + r + diag; });
    if (!clear) continue;
    out.push_back({p, r, peak(rng)});
  }
  require(static_cast<int>(out.size()) == cfg.n_lesions, ErrorCode::kInfeasibleGeometry,
          "could only place " + std::to_string(out.size()) + " of " + std::to_string(cfg.n_lesions) +
              " lesions inside the liver");
  return out;
}

Dims covering_pet_dims(const PhantomConfig& cfg) {
  auto axis = [](int n_ct, double s_ct, double o_ct, double s_pet, double o_pet) {
    const double far = o_ct + (n_ct - 1) * s_ct;
    return std::max(1, static_cast<int>(std::ceil((far - o_pet) / s_pet - 1e-9)) + 1);
  };
  return {axis(cfg.ct_dims.x, cfg.ct_spacing.x, cfg.ct_offset.x, cfg.pet_spacing.x, cfg.pet_offset.x),
          axis(cfg.ct_dims.y, cfg.ct_spacing.y, cfg.ct_offset.y, cfg.pet_spacing.y, cfg.pet_offset.y),
          axis(cfg.ct_dims.z, cfg.ct_spacing.z, cfg.ct_offset.z, cfg.pet_spacing.z, cfg.pet_offset.z)};
}

}  // namespace

void PhantomConfig::validate() const {
  require(ct_dims.x >= 1 && ct_dims.y >= 1 && ct_dims.z >= 1, ErrorCode::kInvalidArgument, "CT dims must be >= 1");
  for (const Vec3* s : {&ct_spacing, &pet_spacing}) {
    require(s->x > 0 && s->y > 0 && s->z > 0, ErrorCode::kInvalidArgument, "spacings must be > 0");
  }
  require(n_lesions >= 0, ErrorCode::kInvalidArgument, "n_lesions must be >= 0");
  require(lesion_radius_lo > 0 && lesion_radius_lo <= lesion_radius_hi, ErrorCode::kInvalidArgument,
          "lesion radius range must be positive and ordered");
  require(lesion_suv_lo > kHighSuvThreshold && lesion_suv_lo <= lesion_suv_hi, ErrorCode::kInvalidArgument,
          "lesion SUV range must be ordered and lie above 2.5");
  require(background_suv_lo >= 0 && background_suv_lo <= background_suv_hi &&
              background_suv_hi <= kHighSuvThreshold,
          ErrorCode::kInvalidArgument, "background SUV range must be ordered and lie within [0, 2.5]");
  require(lesion_sigma_fraction > 0, ErrorCode::kInvalidArgument, "lesion_sigma_fraction must be > 0");
  require(ct_noise_hu >= 0 && pet_noise_suv >= 0, ErrorCode::kInvalidArgument, "noise levels must be >= 0");
  if (pet_dims) {
    require(pet_dims->x >= 1 && pet_dims->y >= 1 && pet_dims->z >= 1, ErrorCode::kInvalidArgument,
            "PET dims must be >= 1");
  }
}

PhantomPair generate_phantom_pair(const PhantomConfig& cfg) {
  cfg.validate();
  const Anatomy anatomy = make_anatomy(cfg);
  Rng geo = make_rng(cfg.seed, {kGeometryStream});
  const std::vector<Lesion> lesions = place_lesions(cfg, anatomy, geo);
  std::uniform_real_distribution<double> bg(cfg.background_suv_lo, cfg.background_suv_hi);
  const double tissue_suv = bg(geo);
  const double liver_suv = bg(geo);

  const Grid ct_grid{cfg.ct_dims, cfg.ct_spacing, cfg.ct_offset};
  std::vector<float> ct(ct_grid.dims.count());
  std::vector<float> gt(ct_grid.dims.count(), 0.0f);
  Rng ct_rng = make_rng(cfg.seed, {kCtNoiseStream});
  std::normal_distribution<double> ct_noise(0.0, 1.0);
  std::size_t i = 0;
  for (int z = 0; z < ct_grid.dims.z; ++z) {
    for (int y = 0; y < ct_grid.dims.y; ++y) {
      for (int x = 0; x < ct_grid.dims.x; ++x, ++i) {
        const Vec3 p = world(ct_grid, x, y, z);
        double hu = cfg.air_hu;
        if (anatomy.in_body(p)) hu = cfg.tissue_hu;
        if (anatomy.liver.level(p) <= 1.0) hu = cfg.liver_hu;
        for (const auto& l : lesions) {
          if (dist(p, l.centre_mm) <= l.radius_mm) {
            hu = cfg.liver_hu + cfg.lesion_hu_delta;
            gt[i] = 1.0f;
          }
        }
        ct[i] = static_cast<float>(hu + cfg.ct_noise_hu * ct_noise(ct_rng));
      }
    }
  }

  const Grid pet_grid{cfg.pet_dims.value_or(covering_pet_dims(cfg)), cfg.pet_spacing, cfg.pet_offset};
  std::vector<float> pet(pet_grid.dims.count());
  Rng pet_rng = make_rng(cfg.seed, {kPetNoiseStream});
  std::normal_distribution<double> pet_noise(0.0, 1.0);
  i = 0;
  for (int z = 0; z < pet_grid.dims.z; ++z) {
    for (int y = 0; y < pet_grid.dims.y; ++y) {
      for (int x = 0; x < pet_grid.dims.x; ++x, ++i) {
        const Vec3 p = world(pet_grid, x, y, z);
        double suv = 0.0;
        if (anatomy.in_body(p)) suv = tissue_suv;
        if (anatomy.liver.level(p) <= 1.0) suv = liver_suv;
        for (const auto& l : lesions) {
          const double r = dist(p, l.centre_mm);
          const double sigma = cfg.lesion_sigma_fraction * l.radius_mm;
          if (r <= 2.0 * l.radius_mm) suv += (l.peak_suv - liver_suv) * std::exp(-r * r / (2.0 * sigma * sigma));
        }
        suv += cfg.pet_noise_suv * pet_noise(pet_rng);
        pet[i] = static_cast<float>(std::clamp(suv, 0.0, static_cast<double>(kSuvWindow.hi())));
      }
    }
  }

  return {Volume3D(ct_grid, Modality::kCt, std::move(ct)), Volume3D(pet_grid, Modality::kSuv, std::move(pet)),
          Volume3D(ct_grid, Modality::kMask, std::move(gt)), lesions};
}

}  // namespace vpet::phantom
