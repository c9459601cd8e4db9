#include <omp.h>

#include <cstring>
#include <fstream>

#include "mvedit/flow.hpp"
#include "mvedit/io/png.hpp"
#include "mvedit/motion.hpp"
#include "mvedit/synth.hpp"
#include "support.hpp"

using namespace mvedit;
using mvtest::error_kind;
using mvtest::TempDir;
namespace fs = std::filesystem;

namespace {

ObjectPoints points(std::initializer_list<Vec3> list) { return {std::vector<Vec3>(list), 1}; }

ImageD random_image(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageD im(w, h, 3);
  for (auto& v : im.data()) v = u(rng);
  return im;
}

/// Restores the OpenMP thread count when the test ends.
struct ThreadScope {
  int saved = omp_get_max_threads();
  explicit ThreadScope(int n) { omp_set_num_threads(n); }
  ~ThreadScope() { omp_set_num_threads(saved); }
};

}  // namespace

TEST(ProjectFlow, IdentityMotionGivesZeroFlow) {
  const auto cam = mvtest::simple_camera(40, 30, 50.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < 200; ++i) pts.emplace_back((i % 20 - 10) * 0.05, (i / 20 - 5) * 0.05, 2.0);
  const ObjectPoints obj{pts, 1};
  const auto flow = project_flow(obj, obj, cam);
  EXPECT_GT(count_set(flow.valid), 0u);
  EXPECT_EQ(count_set(flow.moving_mask()), 0u);
}

TEST(ProjectFlow, HandPinholeExample) {
  // R = I, T = 0, foc 100, pp (0, 0): (0,0,1) -> (0.5,0,1) is flow (50, 0) at pixel (0, 0).
  const auto cam = make_camera("c", intrinsics(100.0, 0.0, 0.0), Mat3::Identity(), Vec3::Zero(), 10, 10);
  ProjectionOptions opt;
  opt.densify = false;
  const auto flow = project_flow(points({{0, 0, 1}}), points({{0.5, 0, 1}}), cam, opt);
  ASSERT_TRUE(flow.is_valid(0, 0));
  EXPECT_FLOAT_EQ(flow.u.at(0, 0), 50.0f);
  EXPECT_FLOAT_EQ(flow.v.at(0, 0), 0.0f);
  EXPECT_EQ(count_set(flow.valid), 1u);
}

TEST(ProjectFlow, BehindCameraIsEmptyProjection) {
  const auto cam = mvtest::simple_camera(10, 10, 10.0);
  const auto obj = points({{0, 0, -1}, {1, 0, -2}, {0, 1, -3}});
  EXPECT_EQ(error_kind([&] { project_flow(obj, obj, cam); }), ErrorKind::EmptyProjection);
  // A moved endpoint behind the camera skips the pair too.
  const auto front = points({{0, 0, 1}, {0.1, 0, 1}, {0, 0.1, 1}});
  EXPECT_EQ(error_kind([&] { project_flow(front, obj, cam); }), ErrorKind::EmptyProjection);
  EXPECT_EQ(error_kind([&] { project_flow(front, points({{0, 0, 1}}), cam); }), ErrorKind::InvalidArgument);
}

TEST(ProjectFlow, NearestSurfaceWins) {
  const auto cam = make_camera("c", intrinsics(100.0, 0.0, 0.0), Mat3::Identity(), Vec3::Zero(), 10, 10);
  ProjectionOptions opt;
  opt.densify = false;
  // Both land on pixel (0,0); the nearer one (z = 1) carries flow 10, the far one flow 20.
  const auto o = points({{0, 0, 2}, {0, 0, 1}});
  const auto m = points({{0.4, 0, 2}, {0.1, 0, 1}});
  const auto flow = project_flow(o, m, cam, opt);
  EXPECT_NEAR(flow.u.at(0, 0), 10.0, 1e-5);
}

TEST(ProjectFlow, RigidRotationOracleOnSyntheticScene) {
  // Scored where both fields are defined; the engine must also cover the
  // analytic footprint.
  SynthConfig c;
  c.width = 256;
  c.height = 256;
  const SyntheticScene synth(c);
  const Scene& scene = synth.scene();
  const auto object = select_object(scene, c.object_label);
  for (double angle : {15.0, 30.0, 90.0}) {
    const auto moved = apply_rotation(object, angle);
    const auto motion = AffineMotion::rotation_z_about(centroid(object.points), angle);
    for (const auto& view : scene.views) {
      const auto flow = project_flow(object, moved, view);
      const auto gt = synth.ground_truth_flow(view, motion);
      std::size_t analytic = 0, both = 0, ok = 0;
      for (int y = 0; y < flow.height(); ++y) {
        for (int x = 0; x < flow.width(); ++x) {
          if (!gt.is_valid(x, y)) continue;
          ++analytic;
          if (!flow.is_valid(x, y)) continue;
          ++both;
          if ((flow.at(x, y) - gt.at(x, y)).norm() <= 0.51) ++ok;
        }
      }
      ASSERT_GT(both, 0u);
      EXPECT_GE(static_cast<double>(ok) / both, 0.99) << "angle " << angle << " " << view.view_id;
      EXPECT_GE(static_cast<double>(both) / analytic, 0.99) << "angle " << angle << " " << view.view_id;
    }
  }
}

TEST(BackwardWarp, ZeroFlowIsIdentity) {
  std::mt19937_64 rng(1);
  const auto im = random_image(9, 7, rng);
  FlowField f(9, 7);
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 9; ++x) f.set(x, y, 0, 0);
  }
  EXPECT_EQ(backward_warp(im, f), im);
  EXPECT_EQ(backward_warp(im, FlowField(9, 7)), im);  // invalid pixels copy
}

TEST(BackwardWarp, RampShiftsByOneColumn) {
  ImageD ramp(12, 4, 3);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 12; ++x) {
      for (int c = 0; c < 3; ++c) ramp.at(x, y, c) = 0.05 * x + 0.01 * c;
    }
  }
  FlowField f(12, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 12; ++x) f.set(x, y, 1.0, 0.0);
  }
  const auto out = backward_warp(ramp, f);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 11; ++x) {
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(out.at(x, y, c), ramp.at(x + 1, y, c), 1e-12);
    }
    EXPECT_EQ(out.at(11, y, 0), ramp.at(11, y, 0));  // clamped at the border
  }
}

TEST(BackwardWarp, OutsideSamplesClamp) {
  std::mt19937_64 rng(2);
  const auto im = random_image(5, 5, rng);
  FlowField f(5, 5);
  f.set(2, 2, -100.0, 100.0);
  const auto out = backward_warp(im, f);
  EXPECT_EQ(out.at(2, 2, 1), im.at(0, 4, 1));
}

TEST(ForwardSplat, Examples) {
  std::mt19937_64 rng(3);
  const auto im = random_image(6, 6, rng);
  FlowField zero(6, 6);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 6; ++x) zero.set(x, y, 0, 0);
  }
  const auto same = forward_splat(im, zero);
  EXPECT_EQ(same.image, im);
  EXPECT_EQ(count_set(same.footprint), 36u);

  FlowField one(6, 6);
  one.set(0, 0, 3, 4);
  const auto single = forward_splat(im, one);
  EXPECT_EQ(count_set(single.footprint), 1u);
  EXPECT_TRUE(single.footprint.at(3, 4));
  EXPECT_EQ(single.image.at(3, 4, 2), im.at(0, 0, 2));
  EXPECT_EQ(single.image.at(0, 0, 0), 0.0);

  // Two sources on one target: magnitude 5 beats magnitude 1.
  FlowField two(6, 6);
  two.set(4, 5, 1, 0);  // lands on (5, 5)
  two.set(2, 2, 3, 3);  // lands on (5, 5), magnitude ~4.24
  two.set(0, 5, 5, 0);  // lands on (5, 5), magnitude 5
  const auto collision = forward_splat(im, two);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(collision.image.at(5, 5, c), im.at(0, 5, c));
}

TEST(ForwardSplat, EqualMagnitudesKeepLowerIndex) {
  std::mt19937_64 rng(4);
  const auto im = random_image(5, 1, rng);
  FlowField f(5, 1);
  f.set(1, 0, 1, 0);   // -> 2
  f.set(3, 0, -1, 0);  // -> 2
  const auto out = forward_splat(im, f);
  EXPECT_EQ(out.image.at(2, 0, 0), im.at(1, 0, 0));
}

TEST(ForwardSplat, BruteForceOracleProperty) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto im = random_image(13, 11, rng);
    const auto f = mvtest::random_flow(13, 11, rng, 4.0);
    const auto out = forward_splat(im, f);
    std::vector<double> best(13 * 11, -1.0);
    std::vector<int> who(13 * 11, -1);
    for (int y = 0; y < 11; ++y) {
      for (int x = 0; x < 13; ++x) {
        if (!f.is_valid(x, y)) continue;
        const int tx = static_cast<int>(std::floor(x + double(f.u.at(x, y)) + 0.5));
        const int ty = static_cast<int>(std::floor(y + double(f.v.at(x, y)) + 0.5));
        if (tx < 0 || ty < 0 || tx >= 13 || ty >= 11) continue;
        const double m = std::hypot(double(f.u.at(x, y)), double(f.v.at(x, y)));
        if (m > best[ty * 13 + tx]) {
          best[ty * 13 + tx] = m;
          who[ty * 13 + tx] = y * 13 + x;
        }
      }
    }
    for (int t = 0; t < 13 * 11; ++t) {
      ASSERT_EQ(out.footprint.data()[t] != 0, who[t] >= 0);
      if (who[t] >= 0) EXPECT_EQ(out.image.at(t % 13, t / 13, 0), im.at(who[t] % 13, who[t] / 13, 0));
    }
  }
}

TEST(ForwardSplat, TranslationWarpReproducesSource) {
  // Smooth image, integer translation: splat then backward warp gives back the source.
  ImageD im(32, 32, 3);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 32; ++x) {
      for (int c = 0; c < 3; ++c) im.at(x, y, c) = 0.5 + 0.4 * std::sin(0.2 * x + 0.1 * y + c);
    }
  }
  FlowField f(32, 32);
  for (int y = 8; y < 20; ++y) {
    for (int x = 8; x < 20; ++x) f.set(x, y, 3, -2);
  }
  const auto splat = forward_splat(im, f);
  const auto back = backward_warp(splat.image, f);
  double worst = 0.0;
  for (int y = 8; y < 20; ++y) {
    for (int x = 8; x < 20; ++x) {
      for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(back.at(x, y, c) - im.at(x, y, c)));
    }
  }
  EXPECT_LE(worst, 2.0 / 255.0);
}

TEST(Occlusion, Examples) {
  Mask fp(8, 8);
  FlowField zero(8, 8);
  for (int y = 2; y < 6; ++y) {
    for (int x = 2; x < 6; ++x) {
      fp.at(x, y) = 1;
      zero.set(x, y, 0, 0);
    }
  }
  const auto none = occlusion_mask(zero, fp);
  EXPECT_EQ(count_set(none.revealed), 0u);
  EXPECT_EQ(count_set(none.covered), 0u);

  Mask dot(8, 8);
  dot.at(0, 0) = 1;
  FlowField move(8, 8);
  move.set(0, 0, 5, 0);
  const auto occ = occlusion_mask(move, dot);
  EXPECT_EQ(count_set(occ.revealed), 1u);
  EXPECT_TRUE(occ.revealed.at(0, 0));
  EXPECT_EQ(count_set(occ.covered), 1u);
  EXPECT_TRUE(occ.covered.at(5, 0));

  // A filled square shifted by less than a pixel stays inside itself.
  FlowField shift(8, 8);
  for (int y = 2; y < 6; ++y) {
    for (int x = 2; x < 6; ++x) shift.set(x, y, 0.3, -0.2);
  }
  EXPECT_EQ(count_set(occlusion_mask(shift, fp).covered), 0u);
}

TEST(Colorize, Examples) {
  FlowField f(3, 1);
  f.set(0, 0, 0, 0);
  f.set(1, 0, 2, 0);
  const auto im = colorize_flow(f);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(im.at(0, 0, c), 255);
  EXPECT_EQ(im.at(1, 0, 0), 255);  // hue 0 at full saturation is red
  EXPECT_EQ(im.at(1, 0, 1), 0);
  EXPECT_EQ(im.at(1, 0, 2), 0);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(im.at(2, 0, c), 0);
  const auto black = colorize_flow(FlowField(4, 4));
  EXPECT_TRUE(std::all_of(black.data().begin(), black.data().end(), [](auto v) { return v == 0; }));
}

TEST(Flo, RoundTripIsBitExact) {
  std::mt19937_64 rng(6);
  TempDir dir;
  for (int trial = 0; trial < 5; ++trial) {
    const auto f = mvtest::random_flow(17, 9, rng, 100.0, 0.7);
    write_flo(dir / "f.flo", f);
    EXPECT_EQ(read_flo(dir / "f.flo"), f);
  }
}

TEST(Flo, ByteLayout) {
  TempDir dir;
  FlowField f(2, 1);
  f.set(0, 0, 1, 0);
  f.set(1, 0, 2, 0);
  write_flo(dir / "f.flo", f);
  std::ifstream in(dir / "f.flo", std::ios::binary);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
  ASSERT_EQ(bytes.size(), 28u);
  float magic, payload[4];
  std::int32_t w, h;
  std::memcpy(&magic, bytes.data(), 4);
  std::memcpy(&w, bytes.data() + 4, 4);
  std::memcpy(&h, bytes.data() + 8, 4);
  std::memcpy(payload, bytes.data() + 12, 16);
  EXPECT_EQ(magic, 202021.25f);
  EXPECT_EQ(w, 2);
  EXPECT_EQ(h, 1);
  EXPECT_EQ(payload[0], 1.0f);
  EXPECT_EQ(payload[1], 0.0f);
  EXPECT_EQ(payload[2], 2.0f);
  EXPECT_EQ(payload[3], 0.0f);
  EXPECT_TRUE(fs::exists(validity_sidecar(dir / "f.flo")));
}

TEST(Flo, BadMagicAndTruncation) {
  TempDir dir;
  {
    std::ofstream out(dir / "zero.flo", std::ios::binary);
    const float magic = 0.0f;
    const std::int32_t dims[2] = {1, 1};
    const float uv[2] = {0, 0};
    out.write(reinterpret_cast<const char*>(&magic), 4);
    out.write(reinterpret_cast<const char*>(dims), 8);
    out.write(reinterpret_cast<const char*>(uv), 8);
  }
  EXPECT_EQ(error_kind([&] { read_flo(dir / "zero.flo"); }), ErrorKind::Format);
  {
    std::ofstream out(dir / "short.flo", std::ios::binary);
    const float magic = kFloMagic;
    const std::int32_t dims[2] = {4, 4};
    out.write(reinterpret_cast<const char*>(&magic), 4);
    out.write(reinterpret_cast<const char*>(dims), 8);
  }
  EXPECT_EQ(error_kind([&] { read_flo(dir / "short.flo"); }), ErrorKind::Format);
  EXPECT_EQ(error_kind([&] { read_flo(dir / "missing.flo"); }), ErrorKind::NotFound);
}

TEST(Flo, WithoutSidecarEveryPixelIsValid) {
  TempDir dir;
  FlowField f(3, 2);
  f.set(1, 1, 0.5, -0.5);
  write_flo(dir / "f.flo", f);
  fs::remove(validity_sidecar(dir / "f.flo"));
  EXPECT_EQ(count_set(read_flo(dir / "f.flo").valid), 6u);
}

TEST(FlowField, Validate) {
  FlowField f(2, 2);
  EXPECT_NO_THROW(validate(f));
  f.u.at(0, 0) = 1.0f;  // invalid pixel with non-zero flow
  EXPECT_EQ(error_kind([&] { validate(f); }), ErrorKind::InvalidArgument);
  f.set(0, 0, std::nan(""), 0.0);
  EXPECT_EQ(error_kind([&] { validate(f); }), ErrorKind::InvalidArgument);
}

class KernelParity : public ::testing::TestWithParam<int> {};

TEST_P(KernelParity, OpenMpMatchesSerial) {
  ThreadScope threads(GetParam());
  std::mt19937_64 rng(42);
  const auto im = random_image(61, 47, rng);
  const auto f = mvtest::random_flow(61, 47, rng, 6.0);
  EXPECT_EQ(backward_warp(im, f), serial::backward_warp(im, f));
  const auto a = forward_splat(im, f);
  const auto b = serial::forward_splat(im, f);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.footprint, b.footprint);

  SynthConfig c;
  c.width = 96;
  c.height = 96;
  const SyntheticScene synth(c);
  const auto object = select_object(synth.scene(), c.object_label);
  const auto moved = apply_rotation(object, 37.0);
  for (const auto& view : synth.scene().views) {
    EXPECT_EQ(project_flow(object, moved, view), serial::project_flow(object, moved, view));
  }
}

INSTANTIATE_TEST_SUITE_P(Threads, KernelParity, ::testing::Values(1, 2, 3, 8));
