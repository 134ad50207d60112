#include <algorithm>
#include <cmath>
#include <set>

#include "test_support.hpp"

using namespace vpet;
using namespace vpet::prep;
using vpet::testing::expect_error;
using vpet::testing::TempDir;

namespace {

Volume3D ramp(Dims d, Modality m, float scale) {
  std::vector<float> v(d.count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = scale * static_cast<float>(i % 17);
  return Volume3D(Grid{d, {1.0, 1.0, 2.0}}, m, std::move(v));
}

}  // namespace

TEST(PreparePair, AlignedPairOnlyWindows) {
  const Volume3D ct = ramp({6, 5, 4}, Modality::kCt, 20.0f);
  const Volume3D pet = ramp({6, 5, 4}, Modality::kSuv, 1.5f);
  const ScanPair p = prepare_pair(ct, pet, 1.0, 1.0);
  EXPECT_TRUE(p.ct.same_grid(p.pet));
  const Volume3D expect = window_and_normalize(pet, kSuvWindow);
  for (std::size_t i = 0; i < pet.size(); ++i) ASSERT_FLOAT_EQ(p.pet.data()[i], expect.data()[i]);
}

TEST(PreparePair, ActivityIsConvertedAndSuvPassesThrough) {
  const Volume3D ct = ramp({4, 4, 2}, Modality::kCt, 10.0f);
  const Volume3D act = ramp({4, 4, 2}, Modality::kPetActivity, 5.0f);
  const ScanPair from_act = prepare_pair(ct, act, 350000.0, 70000.0);
  const ScanPair from_suv = prepare_pair(ct, compute_suv(act, 350000.0, 70000.0), 1.0, 1.0);
  EXPECT_EQ(from_act.pet.data()[5], from_suv.pet.data()[5]);
  expect_error(ErrorCode::kInvalidArgument, [&] { prepare_pair(act, act, 1.0, 1.0); });
}

TEST(PreparePair, OutputInvariantsOnPhantoms) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    phantom::PhantomConfig cfg;
    cfg.seed = seed;
    const auto ph = phantom::generate_phantom_pair(cfg);
    const ScanPair p = prepare_pair(ph.ct, ph.pet, 1.0, 1.0);
    EXPECT_TRUE(p.ct.same_grid(p.pet));
    EXPECT_EQ(p.ct.grid(), ph.ct.grid());
    EXPECT_GE(p.pet.min_value(), 0.0f);
    EXPECT_LE(p.pet.max_value(), 1.0f);
    EXPECT_EQ(p.pet.modality(), Modality::kNormalized);
  }
}

TEST(ExtractSlices, RangeExamples) {
  const Volume3D n = window_and_normalize(ramp({4, 4, 8}, Modality::kCt, 10.0f), kCtWindow);
  EXPECT_EQ(extract_slices(make_scan_pair(n, n, SliceRange{2, 5})).size(), 4u);
  const auto all = extract_slices(make_scan_pair(n, n));
  ASSERT_EQ(all.size(), 8u);
  EXPECT_EQ(all[3].z, 3);
  EXPECT_EQ(all[3].ct.at(1, 2), n.at(2, 1, 3));
  expect_error(ErrorCode::kInvalidArgument, [&] { make_scan_pair(n, n, SliceRange{5, 2}); });
}

TEST(Augment, IdentityDraw) {
  Image2D img(8, 8);
  for (int i = 0; i < 64; ++i) img.pixels[i] = static_cast<float>(i) / 64.0f;
  EXPECT_EQ(apply_augmentation(img, AugmentDraw{1.0, 0.0, 0.0}), img);
}

TEST(Augment, FixedSeedIsReproducible) {
  const auto slices = vpet::testing::phantom_slices(5, 2);
  const AugmentConfig cfg = AugmentConfig::for_input_size(64);
  Rng a = make_rng(17, {1}), b = make_rng(17, {1});
  const SlicePair x = augment(slices[0], cfg, a);
  const SlicePair y = augment(slices[0], cfg, b);
  EXPECT_EQ(x.ct, y.ct);
  EXPECT_EQ(x.pet, y.pet);
}

TEST(Augment, DrawsStayInRange) {
  AugmentConfig cfg;
  Rng rng = make_rng(3);
  double lo = 1e9, hi = -1e9;
  for (int i = 0; i < 10000; ++i) {
    const AugmentDraw d = draw_augmentation(cfg, rng);
    ASSERT_GE(d.scale, 0.9);
    ASSERT_LE(d.scale, 1.1);
    ASSERT_LE(std::abs(d.tx), 25.0);
    ASSERT_LE(std::abs(d.ty), 25.0);
    lo = std::min(lo, d.tx);
    hi = std::max(hi, d.tx);
  }
  EXPECT_LT(lo, -20.0);
  EXPECT_GT(hi, 20.0);
}

TEST(Augment, TranslationScalesWithInputSize) {
  EXPECT_DOUBLE_EQ(AugmentConfig::for_input_size(512).translate_px, 25.0);
  EXPECT_DOUBLE_EQ(AugmentConfig::for_input_size(64).translate_px, 25.0 / 8.0);
}

TEST(InputNoise, ZeroBoundIsIdentity) {
  Image2D img(4, 4, 0.3f);
  AugmentConfig cfg;
  cfg.noise_bound = 0.0;
  Rng rng = make_rng(1);
  EXPECT_EQ(add_input_noise(img, cfg, rng), img);
}

TEST(InputNoise, BoundedAndCentred) {
  const Image2D img(1000, 1000, 0.5f);
  AugmentConfig cfg;
  Rng rng = make_rng(2);
  const Image2D out = add_input_noise(img, cfg, rng);
  double sum = 0.0;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double d = static_cast<double>(out.pixels[i]) - 0.5;
    ASSERT_LE(std::abs(d), 0.005 + 1e-7);
    sum += d;
  }
  const double n = static_cast<double>(out.pixels.size());
  const double sigma = 0.005 / 3.0;
  EXPECT_LT(std::abs(sum / n), 3.0 * sigma / std::sqrt(n));
}

TEST(Split, WorkedExampleAndDeterminism) {
  const SplitIndices s = split_train_val(10, 0.2, 42);
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.val.size(), 2u);
  const SplitIndices t = split_train_val(10, 0.2, 42);
  EXPECT_EQ(s.train, t.train);
  EXPECT_EQ(s.val, t.val);
  std::multiset<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  EXPECT_EQ(all, (std::multiset<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
  expect_error(ErrorCode::kInvalidArgument, [] { split_train_val(10, 1.0, 1); });
}

TEST(Split, PartitionPropertyOverSizesAndSeeds) {
  for (std::size_t n = 2; n < 40; n += 3) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const SplitIndices s = split_train_val(n, 0.3, seed);
      std::vector<std::size_t> all = s.train;
      all.insert(all.end(), s.val.begin(), s.val.end());
      std::sort(all.begin(), all.end());
      for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(all[i], i);
      EXPECT_EQ(s.val.size(), static_cast<std::size_t>(std::lround(0.3 * static_cast<double>(n))));
    }
  }
}

TEST(Split, GroupsNeverStraddle) {
  std::vector<int> groups;
  for (int g = 0; g < 6; ++g) {
    for (int k = 0; k < 4 + g; ++k) groups.push_back(g);
  }
  const SplitIndices s = split_train_val_by_group(groups, 0.34, 8);
  std::set<int> tr, va;
  for (auto i : s.train) tr.insert(groups[i]);
  for (auto i : s.val) va.insert(groups[i]);
  EXPECT_EQ(va.size(), 2u);
  for (int g : va) EXPECT_FALSE(tr.contains(g));
  EXPECT_EQ(s.train.size() + s.val.size(), groups.size());
}

TEST(PairManifest, RoundTripResolvesRelativePaths) {
  TempDir dir("manifest");
  const std::vector<PairRecord> recs = {{dir / "a_ct", dir / "a_pet", 350000.0, 70000.0, SliceRange{1, 4}},
                                        {dir / "b_ct", dir / "b_pet", 1.0, 1.0, std::nullopt}};
  write_pair_manifest(dir / "pairs.csv", recs);
  const auto back = read_pair_manifest(dir / "pairs.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(std::filesystem::weakly_canonical(back[0].ct), std::filesystem::weakly_canonical(recs[0].ct));
  EXPECT_EQ(back[0].dose_kbq, 350000.0);
  ASSERT_TRUE(back[0].slice_range.has_value());
  EXPECT_EQ(back[0].slice_range->hi, 4);
  EXPECT_FALSE(back[1].slice_range.has_value());
}
