#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mvedit/motion.hpp"

namespace mvedit {

/// The input image with the moving pixels splatted to their destinations.
RgbImage warped_preview(const RgbImage& image, const FlowField& flow);

/// Writes, per view, <id>.flo (+ .valid.png sidecar), <id>.flow.png,
/// <id>.occlusion.png and <id>.warped.png, then manifest.json. Returns the
/// written file names relative to `dir`, manifest last.
std::vector<std::string> write_flow_set(const std::filesystem::path& dir, const Scene& scene,
                                        const MotionSpec& spec, const MotionResult& result);

/// Reads <id>.flo for every scene view. Missing directory or file: NotFound.
std::vector<FlowField> read_flow_set(const std::filesystem::path& dir, const Scene& scene);

/// Occlusion preview: revealed pixels red, covered pixels green.
RgbImage occlusion_preview(const FlowField& flow);

}  // namespace mvedit
