#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mvedit/mmds.hpp"

namespace mvedit {

using nlohmann::json;

int GuidanceConfig::resolved_lsf_start() const {
  return lsf_start_step ? *lsf_start_step : static_cast<int>(0.6 * sampling_steps);
}

double GuidanceConfig::sigma_at(int step) const {
  return sigma_t.size() == 1 ? sigma_t[0] : sigma_t.at(step);
}

double GuidanceConfig::effective_sigma(int step, double alpha_bar) const {
  return sigma_scaling == "alpha_bar" ? sigma_at(step) * alpha_bar : sigma_at(step);
}

void validate(const GuidanceConfig& c) {
  auto bad = [](const std::string& what) { fail(ErrorKind::InvalidConfig, what); };
  if (c.train_steps < 1) bad("train_steps must be >= 1");
  if (c.sampling_steps < 1 || c.sampling_steps > c.train_steps) bad("sampling_steps must lie in [1, train_steps]");
  if (c.schedule != "scaled_linear" && c.schedule != "linear") bad("schedule must be scaled_linear or linear");
  if (!(c.beta_start > 0.0 && c.beta_start < c.beta_end && c.beta_end < 1.0)) bad("need 0 < beta_start < beta_end < 1");
  if (!(c.eta >= 0.0 && c.eta <= 1.0)) bad("eta must lie in [0, 1]");
  if (c.sigma_t.size() != 1 && c.sigma_t.size() != static_cast<std::size_t>(c.sampling_steps)) {
    bad("sigma_t needs one value or one per sampling step");
  }
  for (double s : c.sigma_t) {
    if (!(s >= 0.0) || !std::isfinite(s)) bad("sigma_t values must be finite and >= 0");
  }
  if (c.sigma_scaling != "alpha_bar" && c.sigma_scaling != "constant") bad("sigma_scaling must be alpha_bar or constant");
  if (!(c.flow_weight >= 0.0) || !(c.color_weight >= 0.0)) bad("loss weights must be >= 0");
  const int lsf = c.resolved_lsf_start();
  if (lsf < 0 || lsf > c.sampling_steps) bad("lsf_start_step must lie in [0, sampling_steps]");
  if (c.inversion_refinements < 0) bad("inversion_refinements must be >= 0");
  if (!(c.time_budget_seconds >= 0.0)) bad("time_budget_seconds must be >= 0");
  if (c.denoiser != "toy" || c.codec != "toy" || c.flow_estimator != "toy") {
    bad("only the toy model stack is available");
  }
  if (!(c.toy_prior_std > 0.0)) bad("toy prior_std must be > 0");
  const auto& b = c.block_matcher;
  if (b.patch_radius < 0 || b.search_radius < 0 || b.window_radius < 0 || !(b.temperature > 0.0)) {
    bad("block matcher radii must be >= 0 and temperature > 0");
  }
}

namespace {

void reject_unknown(const json& object, const std::set<std::string>& known, const std::string& where) {
  for (const auto& item : object.items()) {
    if (!known.contains(item.key())) fail(ErrorKind::InvalidConfig, "unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
void read(const json& object, const char* key, T& out) {
  if (object.contains(key)) out = object.at(key).get<T>();
}

}  // namespace

GuidanceConfig guidance_config_from_json(const std::string& text) {
  GuidanceConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) fail(ErrorKind::InvalidConfig, "guidance config must be a JSON object");
    reject_unknown(j,
                   {"train_steps", "sampling_steps", "schedule", "beta_start", "beta_end", "eta", "sigma_t", "sigma_scaling",
                    "flow_weight", "color_weight", "allow_finite_differences", "lsf_start_step", "lsf_enabled",
                    "bgc_enabled", "background_preservation", "detail_transfer", "inversion_refinements",
                    "cfg_scale", "prompt", "seed", "time_budget_seconds", "models", "toy"},
                   "guidance config");
    read(j, "train_steps", c.train_steps);
    read(j, "sampling_steps", c.sampling_steps);
    read(j, "schedule", c.schedule);
    read(j, "beta_start", c.beta_start);
    read(j, "beta_end", c.beta_end);
    read(j, "eta", c.eta);
    if (j.contains("sigma_t")) {
      const auto& s = j.at("sigma_t");
      c.sigma_t = s.is_array() ? s.get<std::vector<double>>() : std::vector<double>{s.get<double>()};
    }
    read(j, "sigma_scaling", c.sigma_scaling);
    read(j, "flow_weight", c.flow_weight);
    read(j, "color_weight", c.color_weight);
    read(j, "allow_finite_differences", c.allow_finite_differences);
    if (j.contains("lsf_start_step") && !j.at("lsf_start_step").is_null()) {
      c.lsf_start_step = j.at("lsf_start_step").get<int>();
    }
    read(j, "lsf_enabled", c.lsf_enabled);
    read(j, "bgc_enabled", c.bgc_enabled);
    read(j, "background_preservation", c.background_preservation);
    read(j, "detail_transfer", c.detail_transfer);
    read(j, "inversion_refinements", c.inversion_refinements);
    read(j, "cfg_scale", c.cfg_scale);
    read(j, "prompt", c.prompt);
    read(j, "seed", c.seed);
    read(j, "time_budget_seconds", c.time_budget_seconds);
    if (j.contains("models")) {
      const auto& m = j.at("models");
      reject_unknown(m, {"denoiser", "codec", "flow_estimator"}, "models");
      read(m, "denoiser", c.denoiser);
      read(m, "codec", c.codec);
      read(m, "flow_estimator", c.flow_estimator);
    }
    if (j.contains("toy")) {
      const auto& t = j.at("toy");
      reject_unknown(t, {"prior_std", "patch_radius", "search_radius", "window_radius", "temperature"}, "toy");
      read(t, "prior_std", c.toy_prior_std);
      read(t, "patch_radius", c.block_matcher.patch_radius);
      read(t, "search_radius", c.block_matcher.search_radius);
      read(t, "window_radius", c.block_matcher.window_radius);
      read(t, "temperature", c.block_matcher.temperature);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidConfig, std::string("guidance config: ") + e.what());
  }
  validate(c);
  return c;
}

std::string to_json(const GuidanceConfig& c) {
  json j = {
      {"train_steps", c.train_steps},
      {"sampling_steps", c.sampling_steps},
      {"schedule", c.schedule},
      {"beta_start", c.beta_start},
      {"beta_end", c.beta_end},
      {"eta", c.eta},
      {"sigma_t", c.sigma_t},
      {"sigma_scaling", c.sigma_scaling},
      {"flow_weight", c.flow_weight},
      {"color_weight", c.color_weight},
      {"allow_finite_differences", c.allow_finite_differences},
      {"lsf_start_step", c.resolved_lsf_start()},
      {"lsf_enabled", c.lsf_enabled},
      {"bgc_enabled", c.bgc_enabled},
      {"background_preservation", c.background_preservation},
      {"detail_transfer", c.detail_transfer},
      {"inversion_refinements", c.inversion_refinements},
      {"cfg_scale", c.cfg_scale},
      {"prompt", c.prompt},
      {"seed", c.seed},
      {"time_budget_seconds", c.time_budget_seconds},
      {"models", {{"denoiser", c.denoiser}, {"codec", c.codec}, {"flow_estimator", c.flow_estimator}}},
      {"toy",
       {{"prior_std", c.toy_prior_std},
        {"patch_radius", c.block_matcher.patch_radius},
        {"search_radius", c.block_matcher.search_radius},
        {"window_radius", c.block_matcher.window_radius},
        {"temperature", c.block_matcher.temperature}}},
  };
  return j.dump(2);
}

GuidanceConfig load_guidance_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::NotFound, path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return guidance_config_from_json(buffer.str());
}

}  // namespace mvedit
