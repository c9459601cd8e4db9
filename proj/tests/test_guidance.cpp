#include <omp.h>

#include "mvedit/guidance.hpp"
#include "support.hpp"

using namespace mvedit;
using mvtest::error_kind;

namespace {

NoiseSchedule scalar_schedule(std::vector<double> ab, std::vector<int> timesteps) {
  NoiseSchedule s;
  s.alphas_bar = std::move(ab);
  s.timesteps = std::move(timesteps);
  return s;
}

LatentTensor scalar(double v) { return LatentTensor({1, 1, 1, 1}, v); }

LatentTensor random_tensor(LatentShape shape, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  LatentTensor t(shape);
  for (auto& v : t.data()) v = n(rng);
  return t;
}

ImageD random_image(int w, int h, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageD img(w, h, 3);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

class ZeroDenoiser final : public Denoiser {
 public:
  LatentTensor predict_noise(const LatentTensor& x, int, const Conditioning&) const override {
    return LatentTensor(x.shape());
  }
};

class NoGradient final : public FlowEstimator {
 public:
  FlowField estimate(const ImageD& from, const ImageD&, const Mask*) const override {
    FlowField f(from.width(), from.height());
    for (int y = 0; y < from.height(); ++y) {
      for (int x = 0; x < from.width(); ++x) f.set(x, y, 0.0, 0.0);
    }
    return f;
  }
};

}  // namespace

TEST(AddNoise, Examples) {
  const auto s = scalar_schedule({1.0, 0.25}, {1});
  EXPECT_EQ(add_noise(scalar(3.0), 0, scalar(1.0), s).data()[0], 3.0);
  EXPECT_NEAR(add_noise(scalar(1.0), 1, scalar(1.0), s).data()[0], 0.5 + std::sqrt(0.75), 1e-15);
  EXPECT_NEAR(add_noise(scalar(1.0), 1, scalar(1.0), s).data()[0], 1.3660, 1e-4);
  EXPECT_EQ(add_noise(scalar(2.0), 1, scalar(0.0), s).data()[0], 1.0);
  EXPECT_EQ(error_kind([&] { add_noise(scalar(1.0), 2, scalar(1.0), s); }), ErrorKind::Index);
  EXPECT_EQ(error_kind([&] { add_noise(scalar(1.0), -1, scalar(1.0), s); }), ErrorKind::Index);
}

TEST(Schedule, ScaledLinearValidAndSpaced) {
  const auto s = NoiseSchedule::scaled_linear(1000, 20);
  EXPECT_NO_THROW(validate(s));
  EXPECT_GE(s.alpha_bar(0), 0.99);
  for (int t = 1; t < 1000; ++t) EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
  ASSERT_EQ(s.sampling_steps(), 20);
  EXPECT_EQ(s.timesteps.front(), 49);
  EXPECT_EQ(s.timesteps.back(), 999);
  EXPECT_EQ(s.alpha_bar(kCleanStep), 1.0);
  EXPECT_EQ(error_kind([] { validate(scalar_schedule({0.5, 0.6}, {1})); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(error_kind([] { validate(scalar_schedule({0.98, 0.5}, {1})); }), ErrorKind::InvalidConfig);
}

TEST(DdimStep, ZeroEpsIsRescaling) {
  const auto s = NoiseSchedule::linear(100, 10);
  std::mt19937_64 rng(1);
  const auto x = random_tensor({2, 3, 4, 5}, rng);
  const auto out = ddim_step(x, LatentTensor(x.shape()), 59, 39, 0.0, s);
  const double k = std::sqrt(s.alpha_bar(39) / s.alpha_bar(59));
  for (std::size_t i = 0; i < x.data().size(); ++i) EXPECT_NEAR(out.data()[i], k * x.data()[i], 1e-14);
}

TEST(DdimStep, PerfectEpsRecoversX0Property) {
  const auto s = NoiseSchedule::scaled_linear(1000, 50);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x0 = random_tensor({1, 4, 6, 6}, rng);
    const auto eps = random_tensor(x0.shape(), rng);
    const int t = 999 - trial * 37;
    const auto xt = add_noise(x0, t, eps, s);
    const auto back = ddim_step(xt, eps, t, kCleanStep, 0.0, s);
    EXPECT_LE(max_abs_diff(back.data(), x0.data()), 1e-6);
    // t_prev = 0 is one training step short of clean.
    const auto near = ddim_step(xt, eps, t, 0, 0.0, s);
    EXPECT_LE(max_abs_diff(near.data(), add_noise(x0, 0, eps, s).data()), 1e-9);
  }
}

TEST(DdimStep, StochasticReproducible) {
  const auto s = NoiseSchedule::scaled_linear(1000, 10);
  std::mt19937_64 rng(3);
  const auto x = random_tensor({1, 4, 8, 8}, rng);
  const auto eps = random_tensor(x.shape(), rng);
  const double sigma = ddim_sigma(1.0, 499, 399, s);
  EXPECT_GT(sigma, 0.0);
  EXPECT_EQ(ddim_sigma(0.0, 499, 399, s), 0.0);
  const auto z1 = gaussian_like(x.shape(), 77);
  const auto z2 = gaussian_like(x.shape(), 77);
  EXPECT_EQ(z1, z2);
  EXPECT_EQ(ddim_step(x, eps, 499, 399, sigma, s, &z1), ddim_step(x, eps, 499, 399, sigma, s, &z2));
  EXPECT_NE(gaussian_like(x.shape(), 78), z1);
}

TEST(DdimInvert, ZeroDenoiserIsRescaling) {
  const auto s = NoiseSchedule::scaled_linear(1000, 8);
  std::mt19937_64 rng(4);
  const auto x0 = random_tensor({1, 2, 3, 3}, rng);
  const ZeroDenoiser zero;
  const auto traj = ddim_invert(x0, [&](const LatentTensor& x, int t) { return zero.predict_noise(x, t, {}); }, s);
  ASSERT_EQ(traj.size(), 9u);
  EXPECT_EQ(traj[0], x0);
  for (int i = 0; i < 8; ++i) {
    const double k = std::sqrt(s.alpha_bar(s.timesteps[i]));
    for (std::size_t j = 0; j < x0.data().size(); ++j) {
      EXPECT_NEAR(traj[i + 1].data()[j], k * x0.data()[j], 1e-12);
    }
  }
}

TEST(DdimInvert, SingleStepBoundaryAndStochasticRejected) {
  const auto s = scalar_schedule({0.999}, {0});
  const ZeroDenoiser zero;
  const NoisePredictor p = [&](const LatentTensor& x, int t) { return zero.predict_noise(x, t, {}); };
  EXPECT_EQ(ddim_invert(scalar(1.0), p, s).size(), 2u);
  InversionOptions stochastic;
  stochastic.eta = 0.5;
  EXPECT_EQ(error_kind([&] { ddim_invert(scalar(1.0), p, s, stochastic); }), ErrorKind::InvalidConfig);
}

TEST(DdimInvert, RoundTripWithToyDenoiser) {
  for (int steps : {1, 10, 20, 50}) {
    const auto s = NoiseSchedule::scaled_linear(1000, steps);
    const ToyDenoiser toy(s, 0.5);
    const NoisePredictor p = [&](const LatentTensor& x, int t) { return toy.predict_noise(x, t, {}); };
    std::mt19937_64 rng(5 + steps);
    auto x0 = random_tensor({2, 4, 8, 8}, rng);
    for (auto& v : x0.data()) v *= 0.5;
    const auto traj = ddim_invert(x0, p, s);
    ASSERT_EQ(traj.size(), static_cast<std::size_t>(steps + 1));
    const auto back = ddim_sample(traj.back(), p, s);
    EXPECT_LE(max_abs_diff(back.data(), x0.data()), 1e-3) << steps << " steps";
  }
}

TEST(ToyDenoiser, ClosedForm) {
  const auto s = NoiseSchedule::scaled_linear(1000, 10);
  const ToyDenoiser toy(s, 0.5);
  const double ab = s.alpha_bar(300);
  const double expect = std::sqrt(1 - ab) / (ab * 0.25 + 1 - ab);
  EXPECT_NEAR(toy.coefficient(300), expect, 1e-15);
  EXPECT_NEAR(toy.predict_noise(scalar(2.0), 300, {}).data()[0], 2.0 * expect, 1e-14);
}

TEST(GuidedEpsilon, ExamplesAndLinearity) {
  EXPECT_EQ(guided_epsilon(scalar(1.0), scalar(2.0), 0.5).data()[0], 2.0);
  std::mt19937_64 rng(6);
  const auto eps = random_tensor({2, 4, 5, 5}, rng);
  const auto g = random_tensor(eps.shape(), rng);
  EXPECT_EQ(guided_epsilon(eps, LatentTensor(eps.shape()), 3.0), eps);
  EXPECT_EQ(guided_epsilon(eps, g, 0.0), eps);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = u(rng), sigma = u(rng);
    LatentTensor ag = g;
    for (auto& v : ag.data()) v *= a;
    const auto lhs = guided_epsilon(eps, ag, sigma);
    const auto rhs = guided_epsilon(eps, g, sigma);
    for (std::size_t i = 0; i < eps.data().size(); ++i) {
      EXPECT_NEAR(lhs.data()[i] - eps.data()[i], a * (rhs.data()[i] - eps.data()[i]), 1e-12);
    }
  }
  EXPECT_EQ(error_kind([&] { guided_epsilon(eps, scalar(1.0), 1.0); }), ErrorKind::InvalidArgument);
}

TEST(Fgs, ZeroLossesAtOptimum) {
  std::mt19937_64 rng(7);
  const auto img = random_image(16, 12, rng);
  FlowField zero(16, 12);
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 16; ++x) zero.set(x, y, 0, 0);
  }
  const BlockMatcher bm({1, 4, 2, 0.05});
  EXPECT_EQ(color_loss(img, img, zero), 0.0);
  // Integer translation: the backward warp of the shifted image is the input.
  ImageD shifted(16, 12, 3);
  FlowField shift(16, 12);
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 16; ++x) {
      for (int c = 0; c < 3; ++c) shifted.at(x, y, c) = img.at(std::max(x - 2, 0), y, c);
      if (x < 14) shift.set(x, y, 2, 0);
    }
  }
  EXPECT_EQ(color_loss(img, shifted, shift), 0.0);
  EXPECT_EQ(mean_flow_l1(zero, bm.estimate(img, img)), 0.0);
}

TEST(Fgs, AnalyticGradientMatchesFiniteDifferences) {
  const BlockMatcher bm({1, 4, 2, 0.05});
  for (int seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const auto input = random_image(8, 8, rng);
    const auto edited = random_image(8, 8, rng);
    const auto flow = mvtest::random_flow(8, 8, rng, 1.5, 0.7);
    const auto res = fgs_losses(input, edited, flow, bm);
    const auto fd = finite_difference_gradient(
        edited,
        [&](const ImageD& probe) { return bm.flow_loss(input, probe, flow) + color_loss(input, probe, flow); },
        1e-6);
    double scale = 0.0;
    for (double v : fd.data()) scale = std::max(scale, std::abs(v));
    ASSERT_GT(scale, 0.0);
    EXPECT_LE(max_abs_diff(res.gradient.data(), fd.data()) / scale, 1e-4) << "seed " << seed;
  }
}

TEST(Fgs, CapabilityAndFallback) {
  std::mt19937_64 rng(8);
  const auto a = random_image(6, 6, rng);
  const auto b = random_image(6, 6, rng);
  const auto flow = mvtest::random_flow(6, 6, rng, 1.0, 1.0);
  const NoGradient est;
  EXPECT_EQ(error_kind([&] { fgs_losses(a, b, flow, est); }), ErrorKind::Capability);
  FgsOptions fd;
  fd.allow_finite_differences = true;
  const auto res = fgs_losses(a, b, flow, est, fd);
  EXPECT_EQ(res.gradient.width(), 6);
  EXPECT_GT(res.flow_loss, 0.0);
}

TEST(Lsf, BruteForceOracleAndIdempotence) {
  std::mt19937_64 rng(9);
  const auto sampled = random_tensor({3, 4, 7, 9}, rng);
  const auto warped = random_tensor(sampled.shape(), rng);
  std::vector<LatentMask> masks;
  for (int b = 0; b < 3; ++b) {
    LatentMask m(9, 7);
    for (int y = 0; y < 7; ++y) {
      for (int x = 0; x < 9; ++x) m.at(x, y) = b == 0 ? (x + y) % 2 : (rng() & 1u);
    }
    masks.push_back(m);
  }
  const auto fused = lsf_fuse(sampled, warped, masks);
  for (int b = 0; b < 3; ++b) {
    for (int c = 0; c < 4; ++c) {
      for (int y = 0; y < 7; ++y) {
        for (int x = 0; x < 9; ++x) {
          const double m = masks[b].at(x, y) ? 1.0 : 0.0;
          EXPECT_EQ(fused.at(b, c, y, x), m * warped.at(b, c, y, x) + (1.0 - m) * sampled.at(b, c, y, x));
        }
      }
    }
  }
  EXPECT_EQ(lsf_fuse(fused, warped, masks), fused);
  LatentMask ones(9, 7), zeros(9, 7);
  for (auto& v : ones.data()) v = 1;
  EXPECT_EQ(lsf_fuse(sampled, warped, {ones}), warped);
  EXPECT_EQ(lsf_fuse(sampled, warped, {zeros}), sampled);
  EXPECT_EQ(error_kind([&] { lsf_fuse(sampled, warped, {ones, ones}); }), ErrorKind::InvalidArgument);
}

TEST(Grid, PackShapesAndRoundTrip) {
  std::mt19937_64 rng(10);
  const auto views = random_tensor({4, 4, 64, 64}, rng);
  const auto grid = grid_pack(views);
  EXPECT_EQ(grid.shape(), (LatentShape{1, 4, 128, 128}));
  EXPECT_EQ(grid.at(0, 2, 5, 64 + 7), views.at(1, 2, 5, 7));
  EXPECT_EQ(grid.at(0, 3, 64 + 1, 2), views.at(2, 3, 1, 2));
  EXPECT_EQ(grid_unpack(grid, 4), views);
  for (int b : {1, 9, 16}) {
    const auto v = random_tensor({b, 2, 3, 5}, rng);
    EXPECT_EQ(grid_unpack(grid_pack(v), b), v);
  }
  EXPECT_EQ(error_kind([&] { grid_pack(random_tensor({3, 4, 8, 8}, rng)); }), ErrorKind::InvalidBatch);
  EXPECT_EQ(error_kind([&] { grid_unpack(grid, 3); }), ErrorKind::InvalidBatch);
}

TEST(Grid, ToyDenoiserIsLayoutEquivariant) {
  const auto s = NoiseSchedule::scaled_linear(1000, 10);
  const ToyDenoiser toy(s);
  std::mt19937_64 rng(11);
  const auto views = random_tensor({4, 4, 8, 8}, rng);
  EXPECT_EQ(predict_noise_views(toy, views, 499, {}, true), predict_noise_views(toy, views, 499, {}, false));
}

TEST(LatentMask, CoverageAndDilation) {
  Mask px(32, 16);
  // 16 of 64 pixels in cell (1, 0): exactly 25%.
  for (int y = 0; y < 4; ++y) {
    for (int x = 8; x < 12; ++x) px.at(x, y) = 1;
  }
  const auto m0 = latent_mask(px, 8, 0.25, 0);
  EXPECT_EQ(m0.width(), 4);
  EXPECT_EQ(m0.height(), 2);
  EXPECT_EQ(count_set(m0), 1u);
  EXPECT_TRUE(m0.at(1, 0));
  px.at(8, 0) = 0;
  EXPECT_EQ(count_set(latent_mask(px, 8, 0.25, 0)), 0u);
  px.at(8, 0) = 1;
  const auto m1 = latent_mask(px, 8, 0.25, 1);
  EXPECT_EQ(count_set(m1), 6u);
  EXPECT_FALSE(m1.at(3, 0));
}

TEST(ToyCodec, EncodeDecodeAndAdjointDotTest) {
  const ToyCodec codec;
  ImageD flat(16, 8, 3);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 16; ++x) {
      flat.at(x, y, 0) = 0.25;
      flat.at(x, y, 1) = 0.5;
      flat.at(x, y, 2) = 1.0;
    }
  }
  const auto z = codec.encode(flat);
  EXPECT_EQ(z.shape(), (LatentShape{1, 4, 1, 2}));
  EXPECT_EQ(z.at(0, 0, 0, 1), -0.5);
  EXPECT_EQ(codec.decode(z), flat);
  EXPECT_EQ(error_kind([&] { codec.encode(ImageD(12, 8, 3)); }), ErrorKind::InvalidArgument);

  std::mt19937_64 rng(12);
  const auto z1 = random_tensor({1, 4, 3, 4}, rng);
  const auto z2 = random_tensor(z1.shape(), rng);
  const auto g = random_image(32, 24, rng);
  const auto adj = codec.decode_adjoint(z1, g);
  ASSERT_TRUE(adj.has_value());
  const auto d1 = codec.decode(z1), d2 = codec.decode(z2);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < z1.data().size(); ++i) lhs += adj->data()[i] * (z1.data()[i] - z2.data()[i]);
  for (std::size_t i = 0; i < g.data().size(); ++i) rhs += g.data()[i] * (d1.data()[i] - d2.data()[i]);
  EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(rhs)));
}

TEST(BlockMatcher, RecoversIntegerShift) {
  std::mt19937_64 rng(13);
  const auto from = random_image(24, 20, rng);
  ImageD to(24, 20, 3);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 24; ++x) {
      for (int c = 0; c < 3; ++c) to.at(x, y, c) = from.at(std::clamp(x - 3, 0, 23), std::clamp(y + 2, 0, 19), c);
    }
  }
  const BlockMatcher bm({2, 6, 3, 0.05});
  const auto f = bm.estimate(from, to);
  int hits = 0, total = 0;
  for (int y = 6; y < 14; ++y) {
    for (int x = 4; x < 16; ++x) {
      ++total;
      hits += f.u.at(x, y) == 3.0f && f.v.at(x, y) == -2.0f;
    }
  }
  EXPECT_EQ(hits, total);
}

class BlockMatchParity : public ::testing::TestWithParam<int> {};

TEST_P(BlockMatchParity, MatchesSerialReference) {
  const int saved = omp_get_max_threads();
  omp_set_num_threads(GetParam());
  std::mt19937_64 rng(14);
  const auto from = random_image(20, 16, rng);
  const auto to = random_image(20, 16, rng);
  BlockMatcherOptions opts{1, 3, 2, 0.05};
  Mask roi(20, 16);
  for (int y = 2; y < 12; ++y) {
    for (int x = 3; x < 17; ++x) roi.at(x, y) = 1;
  }
  const BlockMatcher bm(opts);
  const auto a = bm.estimate(from, to), b = serial::block_match(from, to, opts);
  const auto c = bm.estimate(from, to, &roi), d = serial::block_match(from, to, opts, &roi);
  omp_set_num_threads(saved);
  EXPECT_EQ(a.u, b.u);
  EXPECT_EQ(a.v, b.v);
  EXPECT_EQ(a.valid, b.valid);
  EXPECT_EQ(c.u, d.u);
  EXPECT_EQ(c.valid, d.valid);
}

INSTANTIATE_TEST_SUITE_P(Threads, BlockMatchParity, ::testing::Values(1, 2, 3, 8));
