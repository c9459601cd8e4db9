#include "detail.hpp"

namespace mvedit::serial {

FlowField project_flow(const ObjectPoints& original, const ObjectPoints& moved,
                       const CameraView& view, const ProjectionOptions& options) {
  if (original.points.size() != moved.points.size()) {
    fail(ErrorKind::InvalidArgument, "original and moved point counts differ");
  }
  std::vector<detail::ProjectedCandidate> candidates;
  candidates.reserve(original.points.size());
  for (std::size_t i = 0; i < original.points.size(); ++i) {
    candidates.push_back(detail::project_pair(original.points[i], moved.points[i], view));
  }
  return detail::assemble_projected_flow(candidates, view, options);
}

ImageD backward_warp(const ImageD& image, const FlowField& flow) {
  require_same_size(image, flow.valid, "backward_warp");
  ImageD out(image.width(), image.height(), image.channels());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) detail::warp_pixel(image, flow, out, x, y);
  }
  return out;
}

SplatResult<double> forward_splat(const ImageD& image, const FlowField& flow) {
  require_same_size(image, flow.valid, "forward_splat");
  std::vector<detail::SplatCandidate> candidates;
  candidates.reserve(image.pixel_count());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) candidates.push_back(detail::splat_target(flow, x, y));
  }
  return detail::resolve_splat(image, candidates);
}

}  // namespace mvedit::serial
