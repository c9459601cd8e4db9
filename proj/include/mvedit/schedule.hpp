#pragma once

#include <functional>
#include <vector>

#include "mvedit/latent.hpp"

namespace mvedit {

/// Marks the clean end of the chain (alpha_bar = 1) in step arguments.
inline constexpr int kCleanStep = -1;

struct NoiseSchedule {
  std::vector<double> alphas_bar;  // per training step, strictly decreasing
  std::vector<int> timesteps;      // DDIM subsequence, ascending

  /// Stable-diffusion style: betas linear in sqrt space between the bounds.
  static NoiseSchedule scaled_linear(int train_steps, int sampling_steps,
                                     double beta_start = 0.00085, double beta_end = 0.012);
  /// Betas linear between the bounds.
  static NoiseSchedule linear(int train_steps, int sampling_steps, double beta_start = 1e-4,
                              double beta_end = 0.02);
  /// Sampling subsequence t_i = (i + 1) * T / N - 1.
  static std::vector<int> spaced_timesteps(int train_steps, int sampling_steps);

  int train_steps() const noexcept { return static_cast<int>(alphas_bar.size()); }
  int sampling_steps() const noexcept { return static_cast<int>(timesteps.size()); }

  /// alpha_bar at t; kCleanStep gives 1. IndexError outside [0, T).
  double alpha_bar(int t) const;
  /// The sampling step before timesteps[i] (kCleanStep for i = 0).
  int previous(int i) const { return i == 0 ? kCleanStep : timesteps.at(i - 1); }
};

/// Throws InvalidConfig unless alpha_bar is strictly decreasing in (0, 1] with
/// alpha_bar[0] >= 0.99 and the subsequence is ascending and in range.
void validate(const NoiseSchedule& schedule);

/// x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) eps.
LatentTensor add_noise(const LatentTensor& x0, int t, const LatentTensor& eps,
                       const NoiseSchedule& schedule);

/// Clean-sample estimate implied by a noise prediction.
LatentTensor predict_x0(const LatentTensor& x_t, const LatentTensor& eps, int t,
                        const NoiseSchedule& schedule);

/// sigma for DDIM with stochasticity eta (0 = deterministic).
double ddim_sigma(double eta, int t, int t_prev, const NoiseSchedule& schedule);

/// One DDIM update from t to t_prev:
///   x_prev = sqrt(ab_prev) x0_hat + sqrt(1 - ab_prev - sigma^2) eps + sigma z.
/// `noise` (z) is required when sigma > 0.
LatentTensor ddim_step(const LatentTensor& x_t, const LatentTensor& eps, int t, int t_prev,
                       double sigma, const NoiseSchedule& schedule,
                       const LatentTensor* noise = nullptr);

using NoisePredictor = std::function<LatentTensor(const LatentTensor& x, int t)>;

struct InversionOptions {
  double eta = 0.0;
  /// Fixed-point refinements per step so the forward step reproduces the
  /// previous latent; 0 gives plain DDIM inversion.
  int refinements = 30;
  double tolerance = 1e-12;
};

/// Latents at [clean, timesteps[0], ..., timesteps[N-1]] (length N + 1),
/// obtained by running the deterministic step backwards from x0.
/// InvalidConfig when eta != 0.
std::vector<LatentTensor> ddim_invert(const LatentTensor& x0, const NoisePredictor& denoise,
                                      const NoiseSchedule& schedule,
                                      const InversionOptions& options = {});

/// Deterministic sampling from x at timesteps.back() down to the clean state.
LatentTensor ddim_sample(const LatentTensor& x_T, const NoisePredictor& denoise,
                         const NoiseSchedule& schedule);

}  // namespace mvedit
