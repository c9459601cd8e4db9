#include "mvedit/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mvedit/flow_set.hpp"
#include "mvedit/io/png.hpp"
#include "mvedit/metrics.hpp"
#include "mvedit/mmds.hpp"
#include "mvedit/synth.hpp"

namespace mvedit {

namespace fs = std::filesystem;

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Validation:
    case ErrorKind::NotFound:
    case ErrorKind::Format:
    case ErrorKind::InvalidConfig:
    case ErrorKind::InvalidArgument:
      return 2;
    default:
      return is_degenerate_motion(kind) ? 3 : 1;
  }
}

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::NotFound, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text << '\n';
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
}

}  // namespace

std::vector<std::string> cmd_estimate_flows(const EstimateFlowsArgs& args) {
  const Scene scene = load_scene(args.scene_dir);
  const MotionSpec spec = load_motion_spec(args.motion_spec);
  const MotionResult result = estimate_motion(scene, args.label, spec);
  return write_flow_set(args.out_dir, scene, spec, result);
}

void cmd_synth_scene(const SynthSceneArgs& args) {
  const std::string text = args.config ? read_text(*args.config) : "{}";
  SynthConfig config = synth_config_from_json(text);
  if (args.seed) config.seed = *args.seed;
  const SyntheticScene synth(config);
  write_scene(synth.scene(), args.out_dir);
  write_text(args.out_dir / "synth_config.json", to_json(config));

  const auto motion = ground_truth_motion(text, synth);
  if (!motion) return;
  const fs::path gt = args.out_dir / "gt";
  fs::create_directories(gt);
  for (const auto& view : synth.scene().views) {
    write_flo(gt / (view.view_id + ".flo"), synth.ground_truth_flow(view, *motion));
    io::write_png_rgb(gt / (view.view_id + ".png"), synth.render(view, *motion));
  }
  nlohmann::json m = {{"A", nlohmann::json::array()}, {"b", {motion->b.x(), motion->b.y(), motion->b.z()}}};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m["A"].push_back(motion->A(r, c));
  }
  write_text(gt / "motion.json", m.dump(2));
}

void cmd_run_mmds(const RunMmdsArgs& args) {
  const Scene scene = load_scene(args.scene_dir);
  const auto flows = read_flow_set(args.flows_dir, scene);
  GuidanceConfig config = args.config ? load_guidance_config(*args.config) : GuidanceConfig{};
  if (args.seed) config.seed = *args.seed;
  if (args.steps) config.sampling_steps = *args.steps;
  validate(config);
  const ToyModels models(config);
  const MmdsResult result = run_mmds(scene, flows, config, models.stack());
  write_run(result, config, args.out_dir);
}

std::string cmd_metrics(const MetricsArgs& args) {
  const Scene scene = load_scene(args.input_dir);
  const auto flows = read_flow_set(args.flows_dir, scene);
  if (!fs::is_directory(args.output_dir)) fail(ErrorKind::NotFound, "output directory " + args.output_dir.string());
  std::vector<RgbImage> edited;
  for (const auto& view : scene.views) {
    fs::path path = args.output_dir / "edited" / (view.view_id + ".png");
    if (!fs::exists(path)) path = args.output_dir / (view.view_id + ".png");
    if (!fs::exists(path)) fail(ErrorKind::NotFound, "edited image for " + view.view_id);
    edited.push_back(io::read_png_rgb(path));
  }
  MetricOptions options;
  options.lambda_mpa = args.lambda_mpa;
  options.lambda_atf = args.lambda_atf;
  if (args.pairs == "all") {
    options.pairs = PairSelection::All;
  } else if (args.pairs != "consecutive") {
    fail(ErrorKind::Validation, "pairs must be consecutive or all");
  }
  // The search must reach the largest commanded displacement.
  double reach = 0.0;
  for (const auto& flow : flows) {
    for (int y = 0; y < flow.height(); ++y) {
      for (int x = 0; x < flow.width(); ++x) {
        if (flow.is_valid(x, y)) reach = std::max({reach, std::abs(double(flow.u.at(x, y))), std::abs(double(flow.v.at(x, y)))});
      }
    }
  }
  BlockMatcherOptions matcher;
  matcher.search_radius = std::max(matcher.search_radius, static_cast<int>(std::ceil(reach)) + 4);
  const BlockMatcher estimator(matcher);
  const MetricReport report = evaluate(scene, edited, flows, estimator, options);
  const fs::path dir = args.report_dir.value_or(args.output_dir);
  fs::create_directories(dir);
  const std::string json = report.to_json();
  write_text(dir / "metrics.json", json);
  std::ofstream csv(dir / "metrics.csv");
  csv << report.to_csv();
  if (!csv) fail(ErrorKind::Io, "cannot write metrics.csv");
  return json;
}

}  // namespace mvedit
