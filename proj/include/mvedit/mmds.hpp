#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mvedit/guidance.hpp"
#include "mvedit/scene.hpp"

namespace mvedit {

struct GuidanceConfig {
  int train_steps = 1000;
  int sampling_steps = 500;
  std::string schedule = "scaled_linear";  // or "linear"
  double beta_start = 0.00085;
  double beta_end = 0.012;
  double eta = 0.0;  // DDIM stochasticity; 0 is deterministic

  /// Guidance step size per sampling step (one value = constant).
  std::vector<double> sigma_t{30.0};
  /// "alpha_bar" multiplies sigma_t by alpha_bar(t) so the x0 update stays
  /// bounded at high noise; "constant" uses sigma_t as given.
  std::string sigma_scaling = "alpha_bar";
  double flow_weight = 1.0;
  double color_weight = 1.0;
  bool allow_finite_differences = false;

  /// Sampling steps run with guidance only before fusion starts; unset means
  /// 60% of sampling_steps.
  std::optional<int> lsf_start_step;
  bool lsf_enabled = true;
  bool bgc_enabled = true;
  bool background_preservation = true;
  bool detail_transfer = true;
  int inversion_refinements = 30;

  double cfg_scale = 7.5;
  std::string prompt;
  std::uint64_t seed = 0;
  double time_budget_seconds = 0.0;  // 0 disables the check

  std::string denoiser = "toy";
  std::string codec = "toy";
  std::string flow_estimator = "toy";
  double toy_prior_std = 0.5;
  BlockMatcherOptions block_matcher;

  int resolved_lsf_start() const;
  double sigma_at(int step) const;
  double effective_sigma(int step, double alpha_bar) const;
};

/// Throws InvalidConfig on any out-of-range field.
void validate(const GuidanceConfig& config);

GuidanceConfig guidance_config_from_json(const std::string& text);
std::string to_json(const GuidanceConfig& config);
GuidanceConfig load_guidance_config(const std::filesystem::path& path);

struct StepRecord {
  int step = 0;      // 0 = first (noisiest) sampling step
  int timestep = 0;
  bool lsf_active = false;
  std::vector<double> flow_loss;   // per view
  std::vector<double> color_loss;  // per view
};

/// Regions one view's edit is built from.
struct ViewPlan {
  Mask moving;           // non-zero flow pixels
  Mask splat_footprint;  // where the moved object lands
  Mask revealed;
  Mask covered;
  Mask static_pixels;
  ImageD source;         // splatted object over the static background
  LatentMask fusion_mask;
  LatentMask background_mask;
};

ViewPlan plan_view(const ImageD& input, const FlowField& flow, int factor);

struct MmdsResult {
  std::vector<std::string> view_ids;
  std::vector<RgbImage> edited;
  std::vector<ViewPlan> plans;
  std::vector<StepRecord> steps;
  double seconds = 0.0;
};

struct ModelStack {
  const Denoiser* denoiser = nullptr;
  const LatentCodec* codec = nullptr;
  const FlowEstimator* estimator = nullptr;
};

/// Owns the toy models a config selects. InvalidConfig for unknown names.
class ToyModels {
 public:
  explicit ToyModels(const GuidanceConfig& config);
  ModelStack stack() const { return {denoiser_.get(), codec_.get(), estimator_.get()}; }

 private:
  std::unique_ptr<Denoiser> denoiser_;
  std::unique_ptr<LatentCodec> codec_;
  std::unique_ptr<FlowEstimator> estimator_;
};

NoiseSchedule make_schedule(const GuidanceConfig& config);

/// Flow-guided multi-view sampling. `flows` holds one field per scene view, in
/// scene order.
MmdsResult run_mmds(const Scene& scene, const std::vector<FlowField>& flows,
                    const GuidanceConfig& config, const ModelStack& models);

/// edited/<view>.png, masks/<view>.{fusion,background,revealed,covered}.png,
/// manifest.json with the config and per-step losses.
void write_run(const MmdsResult& result, const GuidanceConfig& config,
               const std::filesystem::path& out_dir);

}  // namespace mvedit
