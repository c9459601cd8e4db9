#pragma once

#include <vector>

#include "mvedit/models.hpp"

namespace mvedit {

struct FgsOptions {
  double flow_weight = 1.0;
  double color_weight = 1.0;
  /// Fall back to central differences when the estimator has no gradient.
  bool allow_finite_differences = false;
  double fd_step = 1e-4;
};

struct FgsResult {
  double flow_loss = 0.0;   // mean |f_m - f_p|_1 over valid pixels
  double color_loss = 0.0;  // mean |I_i - warp(I_o)| over valid pixels and channels
  ImageD gradient;          // d(w_f L_flow + w_c L_color) / d I_o
};

/// Color loss and its gradient with respect to `edited`.
double color_loss(const ImageD& input, const ImageD& edited, const FlowField& flow,
                  ImageD* gradient = nullptr);

/// Losses between the input view and an edited candidate under the commanded
/// flow. CapabilityError when the estimator has no gradient and finite
/// differences are disabled. The finite-difference path costs two loss
/// evaluations per pixel and channel.
FgsResult fgs_losses(const ImageD& input, const ImageD& edited, const FlowField& flow,
                     const FlowEstimator& estimator, const FgsOptions& options = {});

/// Central-difference gradient of any scalar image function.
ImageD finite_difference_gradient(const ImageD& at, const std::function<double(const ImageD&)>& f,
                                  double step);

/// eps + sigma * grad.
LatentTensor guided_epsilon(const LatentTensor& eps, const LatentTensor& grad, double sigma);

/// Per batch entry: where the mask is set take `warped`, elsewhere `sampled`.
/// A single mask applies to every entry.
LatentTensor lsf_fuse(const LatentTensor& sampled, const LatentTensor& warped,
                      const std::vector<LatentMask>& masks);

/// Tiles B = n*n views row-major into one 1 x C x (n h) x (n w) latent.
/// InvalidBatch when B is not a perfect square.
LatentTensor grid_pack(const LatentTensor& views);
LatentTensor grid_unpack(const LatentTensor& grid, int batch);

/// Calls the denoiser once on the packed grid (BGC) or once per view.
LatentTensor predict_noise_views(const Denoiser& denoiser, const LatentTensor& views, int t,
                                 const Conditioning& y, bool grid);

}  // namespace mvedit
