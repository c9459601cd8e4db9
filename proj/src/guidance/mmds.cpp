#include "mvedit/mmds.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>

#include <json.hpp>

#include "mvedit/io/png.hpp"

namespace mvedit {

NoiseSchedule make_schedule(const GuidanceConfig& config) {
  return config.schedule == "linear"
             ? NoiseSchedule::linear(config.train_steps, config.sampling_steps, config.beta_start, config.beta_end)
             : NoiseSchedule::scaled_linear(config.train_steps, config.sampling_steps, config.beta_start,
                                            config.beta_end);
}

ToyModels::ToyModels(const GuidanceConfig& config) {
  validate(config);
  denoiser_ = std::make_unique<ToyDenoiser>(make_schedule(config), config.toy_prior_std);
  codec_ = std::make_unique<ToyCodec>();
  estimator_ = std::make_unique<BlockMatcher>(config.block_matcher);
}

namespace {

FlowField moving_only(const FlowField& flow) {
  FlowField out = flow;
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      if (!flow.moves(x, y)) out.clear(x, y);
    }
  }
  return out;
}

/// Copies each unknown pixel from the nearest known one (4-neighbour BFS,
/// seeds in raster order).
void fill_from_nearest(ImageD& image, const Mask& known, const Mask& unknown) {
  Mask done = known;
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (known.at(x, y)) queue.emplace_back(x, y);
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
      if (!image.contains(nx, ny) || done.at(nx, ny) || !unknown.at(nx, ny)) continue;
      for (int c = 0; c < image.channels(); ++c) image.at(nx, ny, c) = image.at(x, y, c);
      done.at(nx, ny) = 1;
      queue.emplace_back(nx, ny);
    }
  }
}

}  // namespace

ViewPlan plan_view(const ImageD& input, const FlowField& flow, int factor) {
  require_same_size(input, flow.valid, "plan_view");
  ViewPlan plan;
  const FlowField moving_flow = moving_only(flow);
  plan.moving = moving_flow.valid;
  const auto splat = forward_splat(input, moving_flow);
  // Cracks where the flow spreads the object apart belong to the object.
  const Mask closed = mask_or(splat.footprint, erode(dilate(splat.footprint, 1), 1));
  Mask cracks = closed;
  for (std::size_t i = 0; i < cracks.data().size(); ++i) cracks.data()[i] &= !splat.footprint.data()[i];
  plan.splat_footprint = closed;
  const auto occ = occlusion_mask(moving_flow, plan.moving);
  plan.revealed = occ.revealed;
  for (std::size_t i = 0; i < cracks.data().size(); ++i) plan.revealed.data()[i] &= !cracks.data()[i];
  plan.covered = occ.covered;
  const Mask changed = mask_or(plan.moving, plan.splat_footprint);
  plan.static_pixels = mask_not(changed);

  plan.source = input;
  for (int y = 0; y < input.height(); ++y) {
    for (int x = 0; x < input.width(); ++x) {
      if (!splat.footprint.at(x, y)) continue;
      for (int c = 0; c < input.channels(); ++c) plan.source.at(x, y, c) = splat.image.at(x, y, c);
    }
  }
  fill_from_nearest(plan.source, splat.footprint, cracks);
  fill_from_nearest(plan.source, plan.static_pixels, plan.revealed);

  plan.fusion_mask = latent_mask(plan.splat_footprint, factor);
  plan.background_mask = mask_not(latent_mask(changed, factor));
  return plan;
}

namespace {

using Clock = std::chrono::steady_clock;

/// Replaces cells selected by the per-view mask with `from`.
void copy_cells(LatentTensor& into, const LatentTensor& from, const std::vector<LatentMask>& masks) {
  into = lsf_fuse(into, from, masks);
}

ImageD decode_view(const LatentCodec& codec, const LatentTensor& z, const ImageD* detail) {
  ImageD image = codec.decode(z);
  if (detail != nullptr) {
    for (std::size_t i = 0; i < image.data().size(); ++i) image.data()[i] += detail->data()[i];
  }
  return image;
}

}  // namespace

MmdsResult run_mmds(const Scene& scene, const std::vector<FlowField>& flows, const GuidanceConfig& config,
                    const ModelStack& models) {
  validate(config);
  if (!models.denoiser || !models.codec || !models.estimator) {
    fail(ErrorKind::InvalidConfig, "model stack is incomplete");
  }
  if (flows.size() != scene.views.size()) fail(ErrorKind::InvalidArgument, "need one flow per view");
  const auto start = Clock::now();
  const NoiseSchedule schedule = make_schedule(config);
  const Denoiser& denoiser = *models.denoiser;
  const LatentCodec& codec = *models.codec;
  const int views = static_cast<int>(scene.views.size());
  const Conditioning cond{config.prompt, config.cfg_scale};
  FgsOptions fgs{config.flow_weight, config.color_weight, config.allow_finite_differences, 1e-4};

  MmdsResult result;
  std::vector<ImageD> inputs;
  std::vector<ImageD> details(views);
  std::vector<LatentTensor> input_latents, source_latents;
  std::vector<bool> has_motion(views);
  for (int v = 0; v < views; ++v) {
    const CameraView& view = scene.views[v];
    result.view_ids.push_back(view.view_id);
    inputs.push_back(to_unit(view.image));
    require_same_size(inputs.back(), flows[v].valid, "run_mmds flow");
    result.plans.push_back(plan_view(inputs.back(), flows[v], codec.factor()));
    const ViewPlan& plan = result.plans.back();
    has_motion[v] = count_set(plan.moving) > 0;
    input_latents.push_back(codec.encode(inputs.back()));
    source_latents.push_back(codec.encode(plan.source));
    // High frequencies the codec drops, kept wherever the source is trusted.
    const ImageD lowpass = codec.decode(source_latents.back());
    details[v] = ImageD(lowpass.width(), lowpass.height(), 3);
    if (config.detail_transfer) {
      for (int y = 0; y < lowpass.height(); ++y) {
        for (int x = 0; x < lowpass.width(); ++x) {
          if (plan.revealed.at(x, y)) continue;
          for (int c = 0; c < 3; ++c) details[v].at(x, y, c) = plan.source.at(x, y, c) - lowpass.at(x, y, c);
        }
      }
    }
  }
  const LatentTensor z_input = stack(input_latents);
  const LatentTensor z_source = stack(source_latents);
  std::vector<LatentMask> fusion_masks, background_masks;
  for (const auto& plan : result.plans) {
    fusion_masks.push_back(plan.fusion_mask);
    background_masks.push_back(config.background_preservation ? plan.background_mask
                                                              : LatentMask(plan.background_mask.width(),
                                                                           plan.background_mask.height()));
  }

  const NoisePredictor denoise = [&](const LatentTensor& x, int t) {
    return predict_noise_views(denoiser, x, t, cond, config.bgc_enabled);
  };
  InversionOptions inversion;
  inversion.refinements = config.inversion_refinements;
  const auto trajectory = ddim_invert(z_input, denoise, schedule, inversion);

  // Background cells start from the inverted latent, the rest from noise.
  LatentTensor x = gaussian_like(z_input.shape(), config.seed);
  copy_cells(x, trajectory.back(), background_masks);
  const LatentTensor fusion_noise = gaussian_like(z_input.shape(), config.seed + 1);

  const int n = schedule.sampling_steps();
  const int lsf_start = config.resolved_lsf_start();
  for (int i = n - 1; i >= 0; --i) {
    const int step = n - 1 - i;
    const int t = schedule.timesteps[i];
    const int t_prev = schedule.previous(i);
    StepRecord record;
    record.step = step;
    record.timestep = t;
    record.flow_loss.assign(views, 0.0);
    record.color_loss.assign(views, 0.0);

    LatentTensor eps = denoise(x, t);
    const double sigma = config.effective_sigma(step, schedule.alpha_bar(t));
    const double sqrt_ab = std::sqrt(schedule.alpha_bar(t));
    for (int v = 0; v < views; ++v) {
      if (!has_motion[v]) continue;
      const LatentTensor x_v = x.slice(v);
      const LatentTensor eps_v = eps.slice(v);
      const LatentTensor x0 = predict_x0(x_v, eps_v, t, schedule);
      const ImageD edited = decode_view(codec, x0, &details[v]);
      const FgsResult losses = fgs_losses(inputs[v], edited, flows[v], *models.estimator, fgs);
      record.flow_loss[v] = losses.flow_loss;
      record.color_loss[v] = losses.color_loss;
      if (sigma == 0.0) continue;
      auto grad = codec.decode_adjoint(x0, losses.gradient);
      if (!grad) fail(ErrorKind::Capability, "codec has no decoder adjoint");
      for (double& g : grad->data()) g /= sqrt_ab;
      eps.assign_slice(v, guided_epsilon(eps_v, *grad, sigma));
    }

    const double ddim_sigma_t = config.eta > 0.0 ? ddim_sigma(config.eta, t, t_prev, schedule) : 0.0;
    LatentTensor step_noise;
    if (ddim_sigma_t > 0.0) step_noise = gaussian_like(x.shape(), config.seed + 2 + static_cast<std::uint64_t>(step));
    LatentTensor next = ddim_step(x, eps, t, t_prev, ddim_sigma_t, schedule,
                                  ddim_sigma_t > 0.0 ? &step_noise : nullptr);
    copy_cells(next, trajectory[i], background_masks);
    if (config.lsf_enabled && step >= lsf_start) {
      const LatentTensor warped = t_prev == kCleanStep ? z_source : add_noise(z_source, t_prev, fusion_noise, schedule);
      next = lsf_fuse(next, warped, fusion_masks);
      record.lsf_active = true;
    }
    if (!next.all_finite()) fail(ErrorKind::InvalidConfig, "sampling diverged; lower sigma_t");
    x = std::move(next);
    result.steps.push_back(std::move(record));

    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    if (config.time_budget_seconds > 0.0 && elapsed > config.time_budget_seconds) {
      fail(ErrorKind::Timeout, "sampling exceeded " + std::to_string(config.time_budget_seconds) + " s");
    }
  }

  for (int v = 0; v < views; ++v) {
    result.edited.push_back(to_rgb8(decode_view(codec, x.slice(v), &details[v])));
  }
  result.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

void write_run(const MmdsResult& result, const GuidanceConfig& config, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "edited");
  fs::create_directories(out_dir / "masks");
  nlohmann::json views = nlohmann::json::array();
  for (std::size_t v = 0; v < result.view_ids.size(); ++v) {
    const std::string& id = result.view_ids[v];
    io::write_png_rgb(out_dir / "edited" / (id + ".png"), result.edited[v]);
    const ViewPlan& plan = result.plans[v];
    io::write_png_mask(out_dir / "masks" / (id + ".fusion.png"), plan.fusion_mask);
    io::write_png_mask(out_dir / "masks" / (id + ".background.png"), plan.background_mask);
    io::write_png_mask(out_dir / "masks" / (id + ".revealed.png"), plan.revealed);
    io::write_png_mask(out_dir / "masks" / (id + ".covered.png"), plan.covered);
    views.push_back({{"view_id", id},
                     {"edited", "edited/" + id + ".png"},
                     {"moving_pixels", count_set(plan.moving)},
                     {"revealed_pixels", count_set(plan.revealed)},
                     {"covered_pixels", count_set(plan.covered)}});
  }
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : result.steps) {
    steps.push_back({{"step", s.step},
                     {"timestep", s.timestep},
                     {"lsf_active", s.lsf_active},
                     {"flow_loss", s.flow_loss},
                     {"color_loss", s.color_loss}});
  }
  const nlohmann::json manifest = {{"config", nlohmann::json::parse(to_json(config))},
                                   {"views", views},
                                   {"steps", steps}};
  std::ofstream out(out_dir / "manifest.json");
  if (!out) fail(ErrorKind::Io, "cannot write " + (out_dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

}  // namespace mvedit
