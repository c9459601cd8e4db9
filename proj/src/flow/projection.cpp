#include <deque>

#include "detail.hpp"

namespace mvedit::detail {

std::vector<std::int64_t> resolve_projection(const std::vector<ProjectedCandidate>& candidates,
                                             std::size_t pixel_count, double depth_band) {
  std::vector<double> nearest(pixel_count, std::numeric_limits<double>::infinity());
  for (const auto& c : candidates) {
    if (c.pixel >= 0) nearest[c.pixel] = std::min(nearest[c.pixel], c.depth);
  }
  std::vector<std::int64_t> winner(pixel_count, -1);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    if (c.pixel < 0 || c.depth > nearest[c.pixel] * (1.0 + depth_band)) continue;
    auto& w = winner[c.pixel];
    if (w < 0 || c.center_distance2 < candidates[w].center_distance2) {
      w = static_cast<std::int64_t>(i);
    }
  }
  return winner;
}

void densify_within_footprint(FlowField& flow, int closing_radius) {
  const Mask hits = flow.valid;
  const Mask footprint = mask_or(hits, erode(dilate(hits, closing_radius), closing_radius));
  const int w = flow.width();
  const int h = flow.height();
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (hits.at(x, y)) queue.emplace_back(x, y);
    }
  }
  static constexpr int kDx[4] = {1, -1, 0, 0};
  static constexpr int kDy[4] = {0, 0, 1, -1};
  while (!queue.empty()) {
    const auto [x, y] = queue.front();
    queue.pop_front();
    for (int k = 0; k < 4; ++k) {
      const int nx = x + kDx[k];
      const int ny = y + kDy[k];
      if (!flow.valid.contains(nx, ny) || !footprint.at(nx, ny) || flow.is_valid(nx, ny)) continue;
      flow.set(nx, ny, flow.u.at(x, y), flow.v.at(x, y));
      queue.emplace_back(nx, ny);
    }
  }
}

FlowField assemble_projected_flow(const std::vector<ProjectedCandidate>& candidates,
                                  const CameraView& view, const ProjectionOptions& options) {
  FlowField flow(view.width(), view.height());
  const auto winner = resolve_projection(candidates, flow.valid.pixel_count(), options.depth_band);
  bool any = false;
  for (std::size_t p = 0; p < winner.size(); ++p) {
    if (winner[p] < 0) continue;
    const auto& c = candidates[winner[p]];
    flow.set(static_cast<int>(p % view.width()), static_cast<int>(p / view.width()), c.du, c.dv);
    any = true;
  }
  if (!any) fail(ErrorKind::EmptyProjection, "no object point projects into view " + view.view_id);
  if (options.densify) densify_within_footprint(flow, options.closing_radius);
  return flow;
}

}  // namespace mvedit::detail
