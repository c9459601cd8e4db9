#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mvedit/error.hpp"
#include "mvedit/scene.hpp"

namespace mvedit {

/// Process exit status for an error: 2 for malformed or missing input,
/// 3 for degenerate motion, 1 otherwise.
int exit_code(ErrorKind kind) noexcept;

struct EstimateFlowsArgs {
  std::filesystem::path scene_dir;
  SegmentLabel label = 0;
  std::filesystem::path motion_spec;
  std::filesystem::path out_dir;
};
/// Returns the written file names, relative to out_dir.
std::vector<std::string> cmd_estimate_flows(const EstimateFlowsArgs& args);

struct SynthSceneArgs {
  std::optional<std::filesystem::path> config;  // default config when unset
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;            // overrides the config seed
};
/// Writes the scene, synth_config.json and, with a ground_truth block,
/// gt/<id>.flo (+ sidecar), gt/<id>.png and gt/motion.json.
void cmd_synth_scene(const SynthSceneArgs& args);

struct RunMmdsArgs {
  std::filesystem::path scene_dir;
  std::filesystem::path flows_dir;
  std::optional<std::filesystem::path> config;  // toy defaults when unset
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> steps;                     // overrides sampling_steps
};
void cmd_run_mmds(const RunMmdsArgs& args);

struct MetricsArgs {
  std::filesystem::path input_dir;   // the scene
  std::filesystem::path output_dir;  // edited images: <id>.png or edited/<id>.png
  std::filesystem::path flows_dir;
  std::optional<std::filesystem::path> report_dir;  // default: output_dir
  std::string pairs = "consecutive";               // or "all"
  double lambda_mpa = 1.0;
  double lambda_atf = 1.0;
};
/// Writes metrics.json and metrics.csv; returns the JSON text.
std::string cmd_metrics(const MetricsArgs& args);

}  // namespace mvedit
