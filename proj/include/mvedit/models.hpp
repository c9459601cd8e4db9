#pragma once

#include <optional>
#include <string>

#include "mvedit/flow.hpp"
#include "mvedit/latent.hpp"
#include "mvedit/schedule.hpp"

namespace mvedit {

/// Passed through to the denoiser untouched.
struct Conditioning {
  std::string prompt;
  double cfg_scale = 7.5;
};

class Denoiser {
 public:
  virtual ~Denoiser() = default;
  /// Predicted noise for x at timestep t; same shape as x.
  virtual LatentTensor predict_noise(const LatentTensor& x, int t, const Conditioning& y) const = 0;
};

class LatentCodec {
 public:
  virtual ~LatentCodec() = default;
  virtual int factor() const noexcept = 0;
  virtual int channels() const noexcept = 0;
  /// One image -> 1 x C x (H/f) x (W/f).
  virtual LatentTensor encode(const ImageD& image) const = 0;
  virtual ImageD decode(const LatentTensor& latent) const = 0;
  /// Transpose of the decoder's Jacobian applied to an image-space gradient.
  virtual std::optional<LatentTensor> decode_adjoint(const LatentTensor& at,
                                                     const ImageD& image_gradient) const {
    (void)at;
    (void)image_gradient;
    return std::nullopt;
  }
};

class FlowEstimator {
 public:
  virtual ~FlowEstimator() = default;
  /// Forward flow from `from` to `to`. When `roi` is given only its pixels
  /// are estimated; the rest are invalid.
  virtual FlowField estimate(const ImageD& from, const ImageD& to, const Mask* roi = nullptr) const = 0;

  /// Mean over valid pixels of |du| + |dv| between `target` and the estimated flow.
  virtual double flow_loss(const ImageD& from, const ImageD& to, const FlowField& target) const;

  /// Gradient of flow_loss with respect to `to`, if the estimator can supply it.
  virtual std::optional<ImageD> flow_loss_gradient(const ImageD& from, const ImageD& to,
                                                   const FlowField& target) const {
    (void)from;
    (void)to;
    (void)target;
    return std::nullopt;
  }
};

/// Mean over valid target pixels of |du| + |dv|; 0 when nothing is valid.
double mean_flow_l1(const FlowField& target, const FlowField& estimate);

// ---------------------------------------------------------------------------
// Toy reference models.

/// Exact noise predictor for latents drawn from N(0, s^2) per element:
/// eps(x, t) = sqrt(1 - ab) x / (ab s^2 + 1 - ab). Acts elementwise, so it is
/// equivariant to any rearrangement of the latent grid.
class ToyDenoiser final : public Denoiser {
 public:
  ToyDenoiser(NoiseSchedule schedule, double prior_std = 0.5);
  LatentTensor predict_noise(const LatentTensor& x, int t, const Conditioning& y) const override;
  double coefficient(int t) const;

 private:
  NoiseSchedule schedule_;
  double prior_var_;
};

/// 8x average pooling into 4 channels: 0..2 hold 2 * mean(rgb) - 1, channel 3
/// the mean luma. Decoding upsamples channels 0..2 by repetition.
class ToyCodec final : public LatentCodec {
 public:
  int factor() const noexcept override { return 8; }
  int channels() const noexcept override { return 4; }
  LatentTensor encode(const ImageD& image) const override;
  ImageD decode(const LatentTensor& latent) const override;
  std::optional<LatentTensor> decode_adjoint(const LatentTensor& at,
                                             const ImageD& image_gradient) const override;
};

struct BlockMatcherOptions {
  int patch_radius = 2;
  int search_radius = 16;  // hard search window for estimate()
  int window_radius = 3;   // soft-argmin window around the target flow
  double temperature = 0.05;
};

/// Brute-force SSD block matching with edge-clamped sampling. estimate()
/// takes the arg-min (ties: smaller |d|^2, then raster order of d). The loss
/// uses a soft arg-min over a window centred on the rounded target flow,
/// which makes it differentiable in `to`.
class BlockMatcher final : public FlowEstimator {
 public:
  explicit BlockMatcher(BlockMatcherOptions options = {});
  FlowField estimate(const ImageD& from, const ImageD& to, const Mask* roi = nullptr) const override;
  double flow_loss(const ImageD& from, const ImageD& to, const FlowField& target) const override;
  std::optional<ImageD> flow_loss_gradient(const ImageD& from, const ImageD& to,
                                           const FlowField& target) const override;
  /// Soft arg-min flow over the loss window at every valid target pixel.
  FlowField soft_flow(const ImageD& from, const ImageD& to, const FlowField& target) const;
  const BlockMatcherOptions& options() const noexcept { return options_; }

 private:
  BlockMatcherOptions options_;
};

namespace serial {
FlowField block_match(const ImageD& from, const ImageD& to, const BlockMatcherOptions& options,
                      const Mask* roi = nullptr);
}  // namespace serial

}  // namespace mvedit
