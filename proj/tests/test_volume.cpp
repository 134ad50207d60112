#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "test_support.hpp"

using namespace vpet;
using vpet::testing::expect_error;
using vpet::testing::line_volume;
using vpet::testing::TempDir;

TEST(MvolIo, SidecarDimsGiveVolumeShape) {
  TempDir dir("mvol");
  std::vector<float> data(32);
  for (int i = 0; i < 32; ++i) data[i] = static_cast<float>(i) * 0.5f;
  save_volume(Volume3D(Grid{{4, 4, 2}, {0.97, 0.97, 4.0}, {-10.0, 3.5, 0.25}}, Modality::kCt, data), dir / "a");
  const Volume3D v = load_volume(dir / "a.mvol.json");
  EXPECT_EQ(v.dims(), (Dims{4, 4, 2}));
  EXPECT_EQ(v.at(3, 1, 1), data[3 + 4 * (1 + 4 * 1)]);
}

TEST(MvolIo, RoundTripIsBitIdentical) {
  TempDir dir("mvol");
  std::mt19937_64 rng(11);
  for (Modality m : {Modality::kCt, Modality::kSuv, Modality::kPetActivity, Modality::kNormalized}) {
    const Volume3D v =
        vpet::testing::random_volume({5, 3, 2}, m, rng, m == Modality::kCt ? -1000.f : 0.f, 1.f);
    const Volume3D w(Grid{{5, 3, 2}, {0.5, 1.25, 3.0}, {1e-3, -7.5, 12.0}}, m, std::vector<float>(v.data().begin(), v.data().end()));
    save_volume(w, dir / "rt.mvol.json");
    const Volume3D r = load_volume(dir / "rt");
    EXPECT_EQ(r.grid(), w.grid());
    EXPECT_EQ(r.modality(), m);
    ASSERT_EQ(r.size(), w.size());
    EXPECT_EQ(std::memcmp(r.data().data(), w.data().data(), w.size() * sizeof(float)), 0);
  }
}

TEST(MvolIo, TruncatedRasterIsRejected) {
  TempDir dir("mvol");
  save_volume(Volume3D(Grid{{4, 4, 2}}, Modality::kSuv, 1.0f), dir / "t");
  std::filesystem::resize_file(dir / "t.mvol.raw", 31 * sizeof(float));
  expect_error(ErrorCode::kRasterSizeMismatch, [&] { load_volume(dir / "t"); });
}

TEST(MvolIo, NonFiniteVoxelIsRefused) {
  TempDir dir("mvol");
  const Volume3D v = line_volume({1.0f, std::numeric_limits<float>::quiet_NaN()}, Modality::kCt);
  expect_error(ErrorCode::kNonFiniteVoxel, [&] { save_volume(v, dir / "nan"); });
}

TEST(MvolIo, EmptyAndMissingPaths) {
  expect_error(ErrorCode::kInvalidArgument, [] { save_volume(line_volume({1.0f}), ""); });
  expect_error(ErrorCode::kMissingFile, [] { load_volume("/nonexistent/dir/x.mvol.json"); });
}

TEST(MvolIo, MalformedSidecar) {
  TempDir dir("mvol");
  save_volume(line_volume({1.0f, 2.0f}), dir / "m");
  std::ofstream(dir / "m.mvol.json") << R"({"dims": [2, 1], "spacing": [1,1,1], "offset": [0,0,0]})";
  expect_error(ErrorCode::kMalformedSidecar, [&] { load_volume(dir / "m"); });
}

TEST(Intensity, SuvWorkedExample) {
  const Volume3D suv = compute_suv(line_volume({5.0f, 0.0f, 10.0f}, Modality::kPetActivity), 350000.0, 70000.0);
  EXPECT_EQ(suv.modality(), Modality::kSuv);
  EXPECT_DOUBLE_EQ(suv.data()[0], 1.0);
  EXPECT_EQ(suv.data()[1], 0.0f);
  EXPECT_DOUBLE_EQ(suv.data()[2], 2.0 * suv.data()[0]);
  expect_error(ErrorCode::kInvalidArgument, [] { compute_suv(line_volume({1.0f}, Modality::kPetActivity), 0.0, 1.0); });
}

TEST(Intensity, WindowingExamples) {
  const Volume3D ct = window_and_normalize(line_volume({300.0f, 40.0f, -500.0f}, Modality::kCt), kCtWindow);
  EXPECT_FLOAT_EQ(ct.data()[0], 1.0f);
  EXPECT_FLOAT_EQ(ct.data()[1], 0.5f);
  EXPECT_FLOAT_EQ(ct.data()[2], 0.0f);
  EXPECT_FLOAT_EQ(window_and_normalize(line_volume({25.0f}), kSuvWindow).data()[0], 1.0f);
  expect_error(ErrorCode::kInvalidArgument, [] { Window(1.0f, 1.0f); });
}

TEST(Intensity, DenormalizeExamplesAndComposition) {
  const Volume3D n = line_volume({1.0f, 0.125f, 0.0f}, Modality::kNormalized);
  const Volume3D s = denormalize(n, kSuvWindow);
  EXPECT_FLOAT_EQ(s.data()[0], 20.0f);
  EXPECT_FLOAT_EQ(s.data()[1], 2.5f);
  std::mt19937_64 rng(4);
  const Volume3D x = vpet::testing::random_volume({50, 1, 1}, Modality::kSuv, rng, -5.0f, 30.0f);
  const Volume3D back = denormalize(window_and_normalize(x, kSuvWindow), kSuvWindow);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(back.data()[i], std::clamp(x.data()[i], 0.0f, 20.0f), 1e-5);
  }
}

TEST(Alignment, ClinicalSpacingScale) {
  const AffineTransform a = build_alignment_transform({0.97, 0.97, 4.0}, {3.0, 3.0, 4.0}, {0, 0, 0});
  EXPECT_NEAR(a.matrix()(0, 0), 3.0928, 1e-4);
  EXPECT_NEAR(a.matrix()(1, 1), 3.0928, 1e-4);
  EXPECT_DOUBLE_EQ(a.matrix()(2, 2), 1.0);
}

TEST(Alignment, EqualSpacings) {
  EXPECT_TRUE(build_alignment_transform({1, 2, 3}, {1, 2, 3}, {0, 0, 0}).matrix().isIdentity());
  const Eigen::Matrix4d m = build_alignment_transform({1, 2, 3}, {1, 2, 3}, {5, -3, 2}).matrix();
  EXPECT_TRUE((m.topLeftCorner<3, 3>().isIdentity()));
  EXPECT_TRUE(m.col(3).head<3>().isApprox(Eigen::Vector3d(5, -3, 2)));
}

TEST(Alignment, InverseComposesToIdentity) {
  const AffineTransform a = build_alignment_transform({0.8, 0.8, 2.5}, {3, 3, 4}, {1.5, -2, 0.25});
  EXPECT_TRUE(a.compose(a.inverse()).matrix().isIdentity(1e-12));
  expect_error(ErrorCode::kInvalidArgument, [] { build_alignment_transform({0, 1, 1}, {1, 1, 1}, {0, 0, 0}); });
}

TEST(Resample, IdentityIsExact) {
  std::mt19937_64 rng(9);
  const Volume3D v = vpet::testing::random_volume({6, 5, 3}, Modality::kSuv, rng, 0.0f, 10.0f);
  const Volume3D r = resample_linear(v, AffineTransform::identity(), v.grid());
  for (std::size_t i = 0; i < v.size(); ++i) ASSERT_EQ(r.data()[i], v.data()[i]);
}

TEST(Resample, MidpointAndPadding) {
  const Volume3D src = line_volume({1.0f, 3.0f});
  Eigen::Matrix4d half = Eigen::Matrix4d::Identity();
  half(0, 0) = 0.5;
  const Volume3D mid = resample_linear(src, AffineTransform(half), Grid{{2, 1, 1}});
  EXPECT_FLOAT_EQ(mid.data()[1], 2.0f);

  Eigen::Matrix4d shift = Eigen::Matrix4d::Identity();
  shift(0, 3) = 10.0;
  const Volume3D out = resample_linear(line_volume({4.0f, 7.0f}), AffineTransform(shift), Grid{{2, 1, 1}});
  EXPECT_EQ(out.data()[0], 4.0f);
  EXPECT_EQ(out.data()[1], 4.0f);
}

TEST(Resample, OutputStaysWithinSourceRange) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const Volume3D v = vpet::testing::random_volume({7, 6, 4}, Modality::kSuv, rng, 0.5f, 9.0f);
    std::uniform_real_distribution<double> u(-2.0, 2.0), s(0.3, 2.0);
    const AffineTransform a = build_alignment_transform({1, 1, 1}, {s(rng), s(rng), s(rng)}, {u(rng), u(rng), u(rng)});
    const Volume3D r = resample_linear(v, a, Grid{{9, 8, 5}});
    EXPECT_GE(r.min_value(), v.min_value() - 1e-5f);
    EXPECT_LE(r.max_value(), v.max_value() + 1e-5f);
  }
}
