#include <cmath>

#include "mvedit/guidance.hpp"

namespace mvedit {
namespace {

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

double color_loss(const ImageD& input, const ImageD& edited, const FlowField& flow, ImageD* gradient) {
  require_same_size(input, edited, "color_loss");
  require_same_size(input, flow.valid, "color_loss");
  const int w = edited.width();
  const int h = edited.height();
  const int channels = edited.channels();
  if (gradient != nullptr) *gradient = ImageD(w, h, channels);
  std::size_t count = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) count += flow.is_valid(x, y) ? 1 : 0;
  }
  if (count == 0) return 0.0;
  const double inv = 1.0 / (static_cast<double>(count) * channels);
  double sum = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!flow.is_valid(x, y)) continue;
      const double sx = std::clamp(x + static_cast<double>(flow.u.at(x, y)), 0.0, w - 1.0);
      const double sy = std::clamp(y + static_cast<double>(flow.v.at(x, y)), 0.0, h - 1.0);
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      const double w00 = (1.0 - fx) * (1.0 - fy), w10 = fx * (1.0 - fy);
      const double w01 = (1.0 - fx) * fy, w11 = fx * fy;
      for (int c = 0; c < channels; ++c) {
        const double top = (1.0 - fx) * edited.at(x0, y0, c) + fx * edited.at(x1, y0, c);
        const double bottom = (1.0 - fx) * edited.at(x0, y1, c) + fx * edited.at(x1, y1, c);
        const double diff = (1.0 - fy) * top + fy * bottom - input.at(x, y, c);
        sum += std::abs(diff);
        if (gradient != nullptr) {
          const double g = sign(diff) * inv;
          gradient->at(x0, y0, c) += g * w00;
          gradient->at(x1, y0, c) += g * w10;
          gradient->at(x0, y1, c) += g * w01;
          gradient->at(x1, y1, c) += g * w11;
        }
      }
    }
  }
  return sum * inv;
}

ImageD finite_difference_gradient(const ImageD& at, const std::function<double(const ImageD&)>& f,
                                  double step) {
  ImageD grad(at.width(), at.height(), at.channels());
  ImageD probe = at;
  for (std::size_t i = 0; i < probe.data().size(); ++i) {
    const double original = probe.data()[i];
    probe.data()[i] = original + step;
    const double plus = f(probe);
    probe.data()[i] = original - step;
    const double minus = f(probe);
    probe.data()[i] = original;
    grad.data()[i] = (plus - minus) / (2.0 * step);
  }
  return grad;
}

FgsResult fgs_losses(const ImageD& input, const ImageD& edited, const FlowField& flow,
                     const FlowEstimator& estimator, const FgsOptions& options) {
  if (options.flow_weight < 0.0 || options.color_weight < 0.0) {
    fail(ErrorKind::InvalidConfig, "loss weights must be non-negative");
  }
  FgsResult result;
  ImageD color_grad;
  result.color_loss = color_loss(input, edited, flow, &color_grad);
  result.flow_loss = estimator.flow_loss(input, edited, flow);
  auto flow_grad = estimator.flow_loss_gradient(input, edited, flow);
  if (!flow_grad) {
    if (!options.allow_finite_differences) {
      fail(ErrorKind::Capability, "flow estimator has no loss gradient and finite differences are disabled");
    }
    flow_grad = finite_difference_gradient(
        edited, [&](const ImageD& probe) { return estimator.flow_loss(input, probe, flow); },
        options.fd_step);
  }
  result.gradient = ImageD(edited.width(), edited.height(), edited.channels());
  for (std::size_t i = 0; i < result.gradient.data().size(); ++i) {
    result.gradient.data()[i] =
        options.flow_weight * flow_grad->data()[i] + options.color_weight * color_grad.data()[i];
  }
  return result;
}

LatentTensor guided_epsilon(const LatentTensor& eps, const LatentTensor& grad, double sigma) {
  require_same_shape(eps, grad, "guided_epsilon");
  LatentTensor out(eps.shape());
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = eps.data()[i] + sigma * grad.data()[i];
  return out;
}

}  // namespace mvedit
