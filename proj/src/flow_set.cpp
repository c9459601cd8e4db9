#include "mvedit/flow_set.hpp"

#include <fstream>

#include "mvedit/io/png.hpp"

namespace mvedit {

namespace fs = std::filesystem;

namespace {

FlowField moving_part(const FlowField& flow) {
  FlowField out = flow;
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      if (!flow.moves(x, y)) out.clear(x, y);
    }
  }
  return out;
}

}  // namespace

RgbImage warped_preview(const RgbImage& image, const FlowField& flow) {
  require_same_size(image, flow.valid, "warped_preview");
  const auto splat = forward_splat(image, moving_part(flow));
  RgbImage out = image;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (!splat.footprint.at(x, y)) continue;
      for (int c = 0; c < image.channels(); ++c) out.at(x, y, c) = splat.image.at(x, y, c);
    }
  }
  return out;
}

RgbImage occlusion_preview(const FlowField& flow) {
  const FlowField moving = moving_part(flow);
  const auto occ = occlusion_mask(moving, moving.valid);
  RgbImage out(flow.width(), flow.height(), 3);
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      if (occ.revealed.at(x, y)) out.at(x, y, 0) = 255;
      if (occ.covered.at(x, y)) out.at(x, y, 1) = 255;
    }
  }
  return out;
}

std::vector<std::string> write_flow_set(const fs::path& dir, const Scene& scene, const MotionSpec& spec,
                                        const MotionResult& result) {
  if (result.flows.size() != scene.views.size()) fail(ErrorKind::InvalidArgument, "need one flow per view");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::string> files;
  for (std::size_t v = 0; v < scene.views.size(); ++v) {
    const CameraView& view = scene.views[v];
    const FlowField& flow = result.flows[v];
    const fs::path flo = dir / (view.view_id + ".flo");
    write_flo(flo, flow);
    files.push_back(flo.filename().string());
    files.push_back(validity_sidecar(flo).filename().string());
    io::write_png_rgb(dir / (view.view_id + ".flow.png"), colorize_flow(flow));
    files.push_back(view.view_id + ".flow.png");
    io::write_png_rgb(dir / (view.view_id + ".occlusion.png"), occlusion_preview(flow));
    files.push_back(view.view_id + ".occlusion.png");
    io::write_png_rgb(dir / (view.view_id + ".warped.png"), warped_preview(view.image, flow));
    files.push_back(view.view_id + ".warped.png");
  }
  std::ofstream out(dir / "manifest.json");
  out << derived_json(spec, result, scene) << '\n';
  if (!out) fail(ErrorKind::Io, "cannot write " + (dir / "manifest.json").string());
  files.push_back("manifest.json");
  return files;
}

std::vector<FlowField> read_flow_set(const fs::path& dir, const Scene& scene) {
  if (!fs::is_directory(dir)) fail(ErrorKind::NotFound, "flows directory " + dir.string());
  std::vector<FlowField> flows;
  for (const auto& view : scene.views) {
    const fs::path flo = dir / (view.view_id + ".flo");
    if (!fs::exists(flo)) fail(ErrorKind::NotFound, flo.string());
    flows.push_back(read_flo(flo));
    if (!flows.back().valid.same_size(view.image)) {
      fail(ErrorKind::Validation, flo.string() + ": size differs from view " + view.view_id);
    }
  }
  return flows;
}

}  // namespace mvedit
