// OpenMP versions of the flow kernels. Every parallel loop writes disjoint
// outputs; collision resolution runs over the candidate arrays in index
// order, so results do not depend on the thread count.

#include <omp.h>

#include "detail.hpp"

namespace mvedit {
namespace {

void require_same_count(const ObjectPoints& original, const ObjectPoints& moved) {
  if (original.points.size() != moved.points.size()) {
    fail(ErrorKind::InvalidArgument, "original and moved point counts differ");
  }
}

}  // namespace

FlowField project_flow(const ObjectPoints& original, const ObjectPoints& moved,
                       const CameraView& view, const ProjectionOptions& options) {
  require_same_count(original, moved);
  const auto n = static_cast<std::int64_t>(original.points.size());
  std::vector<detail::ProjectedCandidate> candidates(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    candidates[i] = detail::project_pair(original.points[i], moved.points[i], view);
  }
  return detail::assemble_projected_flow(candidates, view, options);
}

ImageD backward_warp(const ImageD& image, const FlowField& flow) {
  require_same_size(image, flow.valid, "backward_warp");
  ImageD out(image.width(), image.height(), image.channels());
  const int h = image.height();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < image.width(); ++x) detail::warp_pixel(image, flow, out, x, y);
  }
  return out;
}

RgbImage backward_warp(const RgbImage& image, const FlowField& flow) {
  ImageD raw(image.width(), image.height(), image.channels());
  for (std::size_t i = 0; i < raw.data().size(); ++i) raw.data()[i] = image.data()[i];
  const ImageD warped = backward_warp(raw, flow);
  RgbImage out(image.width(), image.height(), image.channels());
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    out.data()[i] = static_cast<std::uint8_t>(
        std::clamp(std::floor(warped.data()[i] + 0.5), 0.0, 255.0));
  }
  return out;
}

namespace {

template <typename Pixel>
SplatResult<Pixel> forward_splat_omp(const Raster<Pixel>& image, const FlowField& flow) {
  require_same_size(image, flow.valid, "forward_splat");
  const int w = image.width();
  const auto n = static_cast<std::int64_t>(image.pixel_count());
  std::vector<detail::SplatCandidate> candidates(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    candidates[i] = detail::splat_target(flow, static_cast<int>(i % w), static_cast<int>(i / w));
  }
  return detail::resolve_splat(image, candidates);
}

}  // namespace

SplatResult<std::uint8_t> forward_splat(const RgbImage& image, const FlowField& flow) {
  return forward_splat_omp(image, flow);
}

SplatResult<double> forward_splat(const ImageD& image, const FlowField& flow) {
  return forward_splat_omp(image, flow);
}

}  // namespace mvedit
