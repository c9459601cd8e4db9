#include "mvedit/schedule.hpp"

#include <cmath>
#include <string>

namespace mvedit {
namespace {

NoiseSchedule from_betas(const std::vector<double>& betas, int sampling_steps) {
  NoiseSchedule s;
  s.alphas_bar.resize(betas.size());
  double prod = 1.0;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    prod *= 1.0 - betas[i];
    s.alphas_bar[i] = prod;
  }
  s.timesteps = NoiseSchedule::spaced_timesteps(static_cast<int>(betas.size()), sampling_steps);
  validate(s);
  return s;
}

void require_steps(int train_steps, int sampling_steps) {
  if (train_steps < 1 || sampling_steps < 1 || sampling_steps > train_steps) {
    fail(ErrorKind::InvalidConfig, "need 1 <= sampling steps <= training steps");
  }
}

}  // namespace

NoiseSchedule NoiseSchedule::scaled_linear(int train_steps, int sampling_steps, double beta_start,
                                           double beta_end) {
  require_steps(train_steps, sampling_steps);
  std::vector<double> betas(train_steps);
  const double a = std::sqrt(beta_start);
  const double b = std::sqrt(beta_end);
  for (int i = 0; i < train_steps; ++i) {
    const double f = train_steps == 1 ? 0.0 : static_cast<double>(i) / (train_steps - 1);
    const double r = a + (b - a) * f;
    betas[i] = r * r;
  }
  return from_betas(betas, sampling_steps);
}

NoiseSchedule NoiseSchedule::linear(int train_steps, int sampling_steps, double beta_start,
                                    double beta_end) {
  require_steps(train_steps, sampling_steps);
  std::vector<double> betas(train_steps);
  for (int i = 0; i < train_steps; ++i) {
    const double f = train_steps == 1 ? 0.0 : static_cast<double>(i) / (train_steps - 1);
    betas[i] = beta_start + (beta_end - beta_start) * f;
  }
  return from_betas(betas, sampling_steps);
}

std::vector<int> NoiseSchedule::spaced_timesteps(int train_steps, int sampling_steps) {
  require_steps(train_steps, sampling_steps);
  std::vector<int> out(sampling_steps);
  for (int i = 0; i < sampling_steps; ++i) {
    out[i] = static_cast<int>((static_cast<std::int64_t>(i) + 1) * train_steps / sampling_steps) - 1;
  }
  return out;
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t == kCleanStep) return 1.0;
  if (t < 0 || t >= train_steps()) {
    fail(ErrorKind::Index, "timestep " + std::to_string(t) + " outside [0, " +
                               std::to_string(train_steps()) + ")");
  }
  return alphas_bar[t];
}

void validate(const NoiseSchedule& s) {
  if (s.alphas_bar.empty()) fail(ErrorKind::InvalidConfig, "empty noise schedule");
  if (!(s.alphas_bar[0] >= 0.99 && s.alphas_bar[0] <= 1.0)) {
    fail(ErrorKind::InvalidConfig, "alpha_bar[0] must lie in [0.99, 1]");
  }
  for (std::size_t i = 1; i < s.alphas_bar.size(); ++i) {
    if (!(s.alphas_bar[i] < s.alphas_bar[i - 1]) || !(s.alphas_bar[i] > 0.0)) {
      fail(ErrorKind::InvalidConfig, "alpha_bar must be strictly decreasing and positive");
    }
  }
  if (s.timesteps.empty()) fail(ErrorKind::InvalidConfig, "empty sampling subsequence");
  for (std::size_t i = 0; i < s.timesteps.size(); ++i) {
    if (s.timesteps[i] < 0 || s.timesteps[i] >= s.train_steps() ||
        (i > 0 && s.timesteps[i] <= s.timesteps[i - 1])) {
      fail(ErrorKind::InvalidConfig, "sampling timesteps must ascend within [0, T)");
    }
  }
}

LatentTensor add_noise(const LatentTensor& x0, int t, const LatentTensor& eps,
                       const NoiseSchedule& schedule) {
  require_same_shape(x0, eps, "add_noise");
  if (t < 0 || t >= schedule.train_steps()) fail(ErrorKind::Index, "add_noise timestep out of range");
  const double ab = schedule.alpha_bar(t);
  const double a = std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  LatentTensor out(x0.shape());
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = a * x0.data()[i] + b * eps.data()[i];
  return out;
}

LatentTensor predict_x0(const LatentTensor& x_t, const LatentTensor& eps, int t,
                        const NoiseSchedule& schedule) {
  require_same_shape(x_t, eps, "predict_x0");
  const double ab = schedule.alpha_bar(t);
  const double a = std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  LatentTensor out(x_t.shape());
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] = (x_t.data()[i] - b * eps.data()[i]) / a;
  return out;
}

double ddim_sigma(double eta, int t, int t_prev, const NoiseSchedule& schedule) {
  const double ab = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t_prev);
  return eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab)) * std::sqrt(1.0 - ab / ab_prev);
}

LatentTensor ddim_step(const LatentTensor& x_t, const LatentTensor& eps, int t, int t_prev,
                       double sigma, const NoiseSchedule& schedule, const LatentTensor* noise) {
  require_same_shape(x_t, eps, "ddim_step");
  if (t == kCleanStep || (t_prev != kCleanStep && t_prev >= t)) {
    fail(ErrorKind::InvalidArgument, "ddim_step needs t_prev < t");
  }
  const double ab = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t_prev);
  const double direction2 = 1.0 - ab_prev - sigma * sigma;
  if (sigma < 0.0 || direction2 < -1e-15) fail(ErrorKind::InvalidConfig, "DDIM sigma too large for this step");
  if (sigma > 0.0) {
    if (noise == nullptr) fail(ErrorKind::InvalidArgument, "stochastic DDIM step needs a noise tensor");
    require_same_shape(x_t, *noise, "ddim_step");
  }
  const double a = std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  const double a_prev = std::sqrt(ab_prev);
  const double dir = std::sqrt(std::max(0.0, direction2));
  LatentTensor out(x_t.shape());
  for (std::size_t i = 0; i < out.data().size(); ++i) {
    const double e = eps.data()[i];
    const double x0 = (x_t.data()[i] - b * e) / a;
    double v = a_prev * x0 + dir * e;
    if (sigma > 0.0) v += sigma * noise->data()[i];
    out.data()[i] = v;
  }
  return out;
}

std::vector<LatentTensor> ddim_invert(const LatentTensor& x0, const NoisePredictor& denoise,
                                      const NoiseSchedule& schedule, const InversionOptions& options) {
  if (options.eta != 0.0) fail(ErrorKind::InvalidConfig, "DDIM inversion needs a deterministic schedule");
  std::vector<LatentTensor> trajectory{x0};
  trajectory.reserve(schedule.timesteps.size() + 1);
  for (int i = 0; i < schedule.sampling_steps(); ++i) {
    const int t = schedule.timesteps[i];
    const int t_prev = schedule.previous(i);
    const LatentTensor& x_prev = trajectory.back();
    const double a = std::sqrt(schedule.alpha_bar(t));
    const double b = std::sqrt(1.0 - schedule.alpha_bar(t));
    const double a_prev = std::sqrt(schedule.alpha_bar(t_prev));
    const double b_prev = std::sqrt(1.0 - schedule.alpha_bar(t_prev));
    // Solve ddim_step(x_t, eps(x_t)) = x_prev by iterating
    //   x_t <- a * (x_prev - b_prev eps) / a_prev + b * eps.
    auto lift = [&](const LatentTensor& eps) {
      LatentTensor x(x_prev.shape());
      for (std::size_t k = 0; k < x.data().size(); ++k) {
        x.data()[k] = a * (x_prev.data()[k] - b_prev * eps.data()[k]) / a_prev + b * eps.data()[k];
      }
      return x;
    };
    LatentTensor x_t = lift(denoise(x_prev, t_prev == kCleanStep ? t : t_prev));
    // Anderson(1) mixing: the plain iteration contracts by ~sqrt(1 - ab) per
    // pass, which is slow for long jumps from the clean end.
    LatentTensor last_x, last_g;
    for (int r = 0; r < options.refinements; ++r) {
      const LatentTensor g = lift(denoise(x_t, t));
      double change = 0.0;
      for (std::size_t k = 0; k < g.data().size(); ++k) {
        change = std::max(change, std::abs(g.data()[k] - x_t.data()[k]));
      }
      LatentTensor next = g;
      if (r > 0) {
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < g.data().size(); ++k) {
          const double res = g.data()[k] - x_t.data()[k];
          const double dres = res - (last_g.data()[k] - last_x.data()[k]);
          num += res * dres;
          den += dres * dres;
        }
        if (den > 0.0) {
          const double gamma = num / den;
          for (std::size_t k = 0; k < g.data().size(); ++k) {
            next.data()[k] = g.data()[k] - gamma * (g.data()[k] - last_g.data()[k]);
          }
        }
      }
      last_x = std::move(x_t);
      last_g = g;
      x_t = std::move(next);
      if (change <= options.tolerance) break;
    }
    trajectory.push_back(std::move(x_t));
  }
  return trajectory;
}

LatentTensor ddim_sample(const LatentTensor& x_T, const NoisePredictor& denoise,
                         const NoiseSchedule& schedule) {
  LatentTensor x = x_T;
  for (int i = schedule.sampling_steps() - 1; i >= 0; --i) {
    const int t = schedule.timesteps[i];
    x = ddim_step(x, denoise(x, t), t, schedule.previous(i), 0.0, schedule);
  }
  return x;
}

}  // namespace mvedit
