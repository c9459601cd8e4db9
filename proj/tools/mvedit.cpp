#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "mvedit/commands.hpp"
#include "mvedit/service.hpp"

namespace {

int serve(const std::filesystem::path& scene_dir, const std::string& host, int port,
          const std::filesystem::path& export_dir, int ttl_seconds) {
  mvedit::SessionOptions options;
  options.export_root = export_dir;
  options.ttl = std::chrono::seconds(ttl_seconds);
  mvedit::SessionManager sessions(mvedit::load_scene(scene_dir), options);
  mvedit::HttpService service(sessions);
  const int bound = service.bind(host, port);
  std::cerr << "serving " << scene_dir << " on http://" << host << ':' << bound << '\n';
  return service.listen() ? 0 : 1;
}

int port_from_env() {
  const char* env = std::getenv("MVEDIT_PORT");
  if (env == nullptr || *env == '\0') return 8080;
  try {
    return std::stoi(env);
  } catch (const std::exception&) {
    mvedit::fail(mvedit::ErrorKind::Validation, std::string("MVEDIT_PORT is not a port: ") + env);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view motion editing: flow estimation, guided sampling, metrics"};
  app.require_subcommand(1);

  mvedit::EstimateFlowsArgs est;
  auto* estimate = app.add_subcommand("estimate-flows", "Per-view flows for a motion prior");
  estimate->add_option("--scene", est.scene_dir, "Scene directory")->required();
  estimate->add_option("--label", est.label, "Segment label of the object")->required();
  estimate->add_option("--motion", est.motion_spec, "MotionSpec JSON")->required();
  estimate->add_option("--out", est.out_dir, "Output directory")->required();

  mvedit::SynthSceneArgs syn;
  std::filesystem::path syn_config;
  std::uint64_t syn_seed = 0;
  auto* synth = app.add_subcommand("synth-scene", "Render the synthetic cuboid scene");
  auto* syn_config_opt = synth->add_option("--config", syn_config, "Synth config JSON");
  auto* syn_seed_opt = synth->add_option("--seed", syn_seed, "Texture seed");
  synth->add_option("--out", syn.out_dir, "Output directory")->required();

  mvedit::RunMmdsArgs run;
  std::filesystem::path run_config;
  std::uint64_t run_seed = 0;
  int run_steps = 0;
  auto* mmds = app.add_subcommand("run-mmds", "Flow-guided sampling of the edited views");
  mmds->add_option("--scene", run.scene_dir, "Scene directory")->required();
  mmds->add_option("--flows", run.flows_dir, "Directory of <view>.flo files")->required();
  mmds->add_option("--out", run.out_dir, "Output directory")->required();
  auto* run_config_opt = mmds->add_option("--config", run_config, "Guidance config JSON");
  auto* run_seed_opt = mmds->add_option("--seed", run_seed, "Sampling seed");
  auto* run_steps_opt = mmds->add_option("--steps", run_steps, "Sampling steps")->check(CLI::PositiveNumber);

  mvedit::MetricsArgs met;
  std::filesystem::path met_report;
  auto* metrics = app.add_subcommand("metrics", "MPA, ATF and MVC of an edit");
  metrics->add_option("--input", met.input_dir, "Scene directory")->required();
  metrics->add_option("--output", met.output_dir, "Edited images (run directory)")->required();
  metrics->add_option("--flows", met.flows_dir, "Directory of <view>.flo files")->required();
  auto* met_report_opt = metrics->add_option("--report", met_report, "Report directory (default: --output)");
  metrics->add_option("--pairs", met.pairs, "consecutive or all")->check(CLI::IsMember({"consecutive", "all"}));
  metrics->add_option("--lambda-mpa", met.lambda_mpa, "MPA scale");
  metrics->add_option("--lambda-atf", met.lambda_atf, "ATF scale");

  std::filesystem::path serve_scene, serve_exports = "exports";
  std::string serve_host = "127.0.0.1";
  int serve_port = -1, serve_ttl = 1800;
  auto* srv = app.add_subcommand("serve", "HTTP session API for interactive authoring");
  srv->add_option("--scene", serve_scene, "Scene directory")->required();
  srv->add_option("--port", serve_port, "Port (default: MVEDIT_PORT or 8080)");
  srv->add_option("--host", serve_host, "Bind address");
  srv->add_option("--export-dir", serve_exports, "Where exported flow sets go");
  srv->add_option("--ttl", serve_ttl, "Session lifetime without use, seconds")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*estimate) {
      for (const auto& f : mvedit::cmd_estimate_flows(est)) std::cout << (est.out_dir / f).string() << '\n';
    } else if (*synth) {
      if (*syn_config_opt) syn.config = syn_config;
      if (*syn_seed_opt) syn.seed = syn_seed;
      mvedit::cmd_synth_scene(syn);
    } else if (*mmds) {
      if (*run_config_opt) run.config = run_config;
      if (*run_seed_opt) run.seed = run_seed;
      if (*run_steps_opt) run.steps = run_steps;
      mvedit::cmd_run_mmds(run);
    } else if (*metrics) {
      if (*met_report_opt) met.report_dir = met_report;
      std::cout << mvedit::cmd_metrics(met) << '\n';
    } else if (*srv) {
      return serve(serve_scene, serve_host, serve_port >= 0 ? serve_port : port_from_env(), serve_exports, serve_ttl);
    }
  } catch (const mvedit::Error& e) {
    std::cerr << "mvedit: " << e.what() << '\n';
    return mvedit::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "mvedit: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
