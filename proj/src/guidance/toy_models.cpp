#include <cmath>

#include "mvedit/models.hpp"

namespace mvedit {

double mean_flow_l1(const FlowField& target, const FlowField& estimate) {
  require_same_size(target.valid, estimate.valid, "mean_flow_l1");
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < target.height(); ++y) {
    for (int x = 0; x < target.width(); ++x) {
      if (!target.is_valid(x, y)) continue;
      sum += std::abs(static_cast<double>(target.u.at(x, y)) - estimate.u.at(x, y)) +
             std::abs(static_cast<double>(target.v.at(x, y)) - estimate.v.at(x, y));
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double FlowEstimator::flow_loss(const ImageD& from, const ImageD& to, const FlowField& target) const {
  return mean_flow_l1(target, estimate(from, to, &target.valid));
}

ToyDenoiser::ToyDenoiser(NoiseSchedule schedule, double prior_std)
    : schedule_(std::move(schedule)), prior_var_(prior_std * prior_std) {
  if (!(prior_std > 0.0)) fail(ErrorKind::InvalidConfig, "toy denoiser prior std must be positive");
}

double ToyDenoiser::coefficient(int t) const {
  const double ab = schedule_.alpha_bar(t);
  return std::sqrt(1.0 - ab) / (ab * prior_var_ + 1.0 - ab);
}

LatentTensor ToyDenoiser::predict_noise(const LatentTensor& x, int t, const Conditioning&) const {
  const double k = coefficient(t);
  LatentTensor out(x.shape());
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = k * x.data()[i];
  return out;
}

namespace {

constexpr double kLuma[3] = {0.299, 0.587, 0.114};

void require_codec_image(const ImageD& image, int factor) {
  if (image.channels() != 3) fail(ErrorKind::InvalidArgument, "codec expects an RGB image");
  if (image.width() % factor != 0 || image.height() % factor != 0 || image.empty()) {
    fail(ErrorKind::InvalidArgument, "image size must be a positive multiple of " + std::to_string(factor));
  }
}

}  // namespace

LatentTensor ToyCodec::encode(const ImageD& image) const {
  const int f = factor();
  require_codec_image(image, f);
  LatentTensor z({1, channels(), image.height() / f, image.width() / f});
  const double inv = 1.0 / (f * f);
  for (int cy = 0; cy < z.height(); ++cy) {
    for (int cx = 0; cx < z.width(); ++cx) {
      double sum[3] = {0.0, 0.0, 0.0};
      for (int y = 0; y < f; ++y) {
        for (int x = 0; x < f; ++x) {
          for (int c = 0; c < 3; ++c) sum[c] += image.at(cx * f + x, cy * f + y, c);
        }
      }
      double luma = 0.0;
      for (int c = 0; c < 3; ++c) {
        z.at(0, c, cy, cx) = 2.0 * sum[c] * inv - 1.0;
        luma += kLuma[c] * sum[c] * inv;
      }
      z.at(0, 3, cy, cx) = luma;
    }
  }
  return z;
}

ImageD ToyCodec::decode(const LatentTensor& z) const {
  if (z.batch() != 1 || z.channels() != channels()) fail(ErrorKind::InvalidArgument, "toy codec decodes 1 x 4 latents");
  const int f = factor();
  ImageD image(z.width() * f, z.height() * f, 3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) image.at(x, y, c) = 0.5 * (z.at(0, c, y / f, x / f) + 1.0);
    }
  }
  return image;
}

std::optional<LatentTensor> ToyCodec::decode_adjoint(const LatentTensor& at,
                                                     const ImageD& g) const {
  const int f = factor();
  if (g.width() != at.width() * f || g.height() != at.height() * f || g.channels() != 3) {
    fail(ErrorKind::InvalidArgument, "gradient does not match the decoded size");
  }
  LatentTensor out(at.shape());
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(0, c, y / f, x / f) += 0.5 * g.at(x, y, c);
    }
  }
  return out;
}

}  // namespace mvedit
