#include <thread>

#include <json.hpp>

#include "mvedit/commands.hpp"
#include "mvedit/flow_set.hpp"
#include "mvedit/io/png.hpp"
#include "mvedit/service.hpp"
#include "mvedit/synth.hpp"
#include "support.hpp"

// After Eigen: <resolv.h> defines a _res macro.
#include <httplib.h>

using namespace mvedit;
using nlohmann::json;

namespace {

std::string png64(const RgbImage& image) { return io::base64_encode(io::encode_png_rgb(image)); }

class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new mvtest::TempDir();
    SynthConfig c;
    c.width = c.height = 96;
    c.max_cloud_points = 4000;
    write_scene(SyntheticScene(c).scene(), dir_->path() / "scene");
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  void SetUp() override {
    SessionOptions opts;
    opts.export_root = dir_->path() / ("exports" + std::to_string(counter_++));
    sessions_ = std::make_unique<SessionManager>(load_scene(dir_->path() / "scene"), opts);
    service_ = std::make_unique<HttpService>(*sessions_);
    port_ = service_->bind("127.0.0.1", 0);
    thread_ = std::thread([this] { service_->listen(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(60, 0);
    for (int i = 0; i < 200 && !client_->Get("/scene"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  void TearDown() override {
    service_->stop();
    thread_.join();
  }

  std::pair<int, json> post(const std::string& path, const std::string& body) {
    auto res = client_->Post(path, body, "application/json");
    if (!res) return {0, json()};
    return {res->status, json::parse(res->body, nullptr, false)};
  }
  std::pair<int, json> get(const std::string& path) {
    auto res = client_->Get(path);
    if (!res) return {0, json()};
    return {res->status, json::parse(res->body, nullptr, false)};
  }
  std::string new_session(int label = 8) {
    auto [status, body] = post("/session", json{{"view_id", "view0"}, {"label", label}}.dump());
    EXPECT_EQ(status, 200) << body.dump();
    return body.value("session_id", "");
  }

  static mvtest::TempDir* dir_;
  static inline int counter_ = 0;
  std::unique_ptr<SessionManager> sessions_;
  std::unique_ptr<HttpService> service_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

mvtest::TempDir* ServiceTest::dir_ = nullptr;

}  // namespace

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(http_status(ErrorKind::NotFound), 404);
  EXPECT_EQ(http_status(ErrorKind::Conflict), 409);
  EXPECT_EQ(http_status(ErrorKind::Validation), 422);
  EXPECT_EQ(http_status(ErrorKind::DegenerateFlow), 422);
  EXPECT_EQ(http_status(ErrorKind::Io), 500);
}

TEST_F(ServiceTest, SceneSummary) {
  auto [status, body] = get("/scene");
  ASSERT_EQ(status, 200);
  EXPECT_EQ(body["views"].size(), 4u);
  EXPECT_EQ(body["views"][0]["width"], 96);
  EXPECT_FALSE(body["views"][0]["thumbnail_png"].get<std::string>().empty());
  bool has8 = false;
  for (const auto& l : body["labels"]) has8 |= l["label"] == 8;
  EXPECT_TRUE(has8);
}

TEST_F(ServiceTest, SessionFootprintMatchesView) {
  auto [status, body] = post("/session", R"({"view_id": "view0", "label": 8})");
  ASSERT_EQ(status, 200) << body.dump();
  EXPECT_EQ(body["footprint"]["width"], 96);
  EXPECT_EQ(body["footprint"]["height"], 96);
  const auto& scene = sessions_->scene();
  const Mask fp = object_footprint(select_object(scene, 8), scene.views[0]);
  EXPECT_EQ(body["footprint"]["pixels"], count_set(fp));
  EXPECT_EQ(body["footprint"]["mask_png"], io::base64_encode(io::encode_png_mask(fp)));
}

TEST_F(ServiceTest, ErrorStatuses) {
  EXPECT_EQ(post("/session", R"({"view_id": "view0", "label": 99})").first, 404);
  EXPECT_EQ(post("/session", R"({"view_id": "nope", "label": 8})").first, 404);
  EXPECT_EQ(post("/session", R"({"view_id": "view0", "label": -1})").first, 422);
  EXPECT_EQ(post("/session", R"({"view_id": "view0"})").first, 422);
  EXPECT_EQ(post("/session", R"({"view_id": "view0", "label": 8, "extra": 1})").first, 422);
  EXPECT_EQ(post("/session", "{oops").first, 422);
  EXPECT_EQ(post("/session/abc123/motion", R"({"mode": "rotation", "angle_deg": 5})").first, 404);
  EXPECT_EQ(get("/session/abc123/state").first, 404);
  const std::string id = new_session();
  auto [s409, e409] = post("/session/" + id + "/export", "");
  EXPECT_EQ(s409, 409);
  EXPECT_EQ(e409["error"], "Conflict");
  EXPECT_EQ(post("/session/" + id + "/motion", R"({"mode": "rotation"})").first, 422);
  EXPECT_EQ(post("/session/" + id + "/motion", R"({"mode": "rotation", "angle_deg": 5, "reference_view": "view2"})")
                .first,
            422);
  EXPECT_EQ(post("/session/" + id + "/motion", R"({"mode": "translation", "drag": [[0, 0, 3, 3]], "brush_radius": 1})")
                .first,
            422);
}

TEST_F(ServiceTest, ZeroRotationPreviewsEqualInputs) {
  const std::string id = new_session();
  auto [status, body] = post("/session/" + id + "/motion", R"({"mode": "rotation", "angle_deg": 0})");
  ASSERT_EQ(status, 200) << body.dump();
  const auto& scene = sessions_->scene();
  ASSERT_EQ(body["views"].size(), 4u);
  for (std::size_t v = 0; v < 4; ++v) {
    EXPECT_EQ(body["views"][v]["warped_png"], png64(scene.views[v].image)) << v;
  }
}

TEST_F(ServiceTest, MotionResponseEqualsLibraryCall) {
  const std::string id = new_session();
  const std::string spec_text = R"({"mode": "rotation", "angle_deg": 30, "reference_view": "view0"})";
  auto [status, body] = post("/session/" + id + "/motion", spec_text);
  ASSERT_EQ(status, 200) << body.dump();
  EXPECT_EQ(body["revision"], 1);

  const auto& scene = sessions_->scene();
  MotionSpec spec = motion_spec_from_json(spec_text);
  const auto lib = estimate_motion(scene, 8, spec);
  const auto manifest = json::parse(derived_json(spec, lib, scene));
  EXPECT_EQ(body["derived"], manifest["derived"]);
  EXPECT_EQ(body["motion_spec"], manifest["motion_spec"]);
  for (std::size_t v = 0; v < 4; ++v) {
    EXPECT_EQ(body["views"][v]["flow_png"], png64(colorize_flow(lib.flows[v])));
    EXPECT_EQ(body["views"][v]["warped_png"], png64(warped_preview(scene.views[v].image, lib.flows[v])));
    EXPECT_EQ(body["views"][v]["visible"], static_cast<bool>(lib.visible[v]));
  }

  auto [s2, b2] = post("/session/" + id + "/motion", R"({"mode": "rotation", "angle_deg": -15})");
  ASSERT_EQ(s2, 200);
  EXPECT_EQ(b2["revision"], 2);
  auto [s3, state] = get("/session/" + id + "/state");
  ASSERT_EQ(s3, 200);
  EXPECT_EQ(state["revision"], 2);
  EXPECT_EQ(state["derived"]["phi_deg"], -15.0);
  EXPECT_FALSE(state["footprint"].contains("mask_png"));
}

TEST_F(ServiceTest, ExportRoundTripsBitExactly) {
  const std::string id = new_session();
  const std::string spec_text = R"({"mode": "rotation", "angle_deg": 30, "reference_view": "view0"})";
  ASSERT_EQ(post("/session/" + id + "/motion", spec_text).first, 200);
  auto [status, body] = post("/session/" + id + "/export", "");
  ASSERT_EQ(status, 200) << body.dump();
  EXPECT_EQ(body["revision"], 1);
  const std::filesystem::path dir = body["directory"].get<std::string>();
  const auto& scene = sessions_->scene();
  const auto flows = read_flow_set(dir, scene);
  MotionSpec spec = motion_spec_from_json(spec_text);
  const auto lib = estimate_motion(scene, 8, spec);
  for (std::size_t v = 0; v < 4; ++v) EXPECT_EQ(flows[v], lib.flows[v]);

  // Re-import through the metrics command: the input scene as its own edit.
  MetricsArgs m;
  m.input_dir = dir_->path() / "scene";
  m.output_dir = dir_->path() / "scene";
  m.flows_dir = dir;
  m.report_dir = dir / "report";
  const auto report = json::parse(cmd_metrics(m));
  EXPECT_EQ(report["views"].size(), 4u);

  // Exporting the same revision again writes identical files.
  auto [s2, again] = post("/session/" + id + "/export", "");
  ASSERT_EQ(s2, 200);
  const auto second = read_flow_set(again["directory"].get<std::string>(), scene);
  for (std::size_t v = 0; v < 4; ++v) EXPECT_EQ(second[v], flows[v]);
  auto [s3, state] = get("/session/" + id + "/state");
  EXPECT_EQ(state["exports"].size(), 2u);
}

TEST_F(ServiceTest, ConcurrentSessions) {
  std::vector<std::string> ids;
  for (int i = 0; i < 3; ++i) ids.push_back(new_session());
  std::vector<std::thread> workers;
  std::vector<int> statuses(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    workers.emplace_back([&, i] {
      httplib::Client c("127.0.0.1", port_);
      c.set_read_timeout(60, 0);
      const auto res = c.Post("/session/" + ids[i] + "/motion",
                              json{{"mode", "rotation"}, {"angle_deg", 10.0 * (i + 1)}}.dump(), "application/json");
      statuses[i] = res ? res->status : 0;
    });
  }
  for (auto& w : workers) w.join();
  for (int s : statuses) EXPECT_EQ(s, 200);
  EXPECT_EQ(sessions_->size(), 3u);
}

TEST(SessionManager, ExpiredSessionsArePurged) {
  SynthConfig c;
  c.width = c.height = 32;
  SessionOptions opts;
  opts.ttl = std::chrono::seconds(1);
  SessionManager sessions(SyntheticScene(c).scene(), opts);
  const auto s = sessions.create("view0", 8);
  EXPECT_EQ(sessions.size(), 1u);
  std::this_thread::sleep_for(std::chrono::milliseconds(1100));
  EXPECT_EQ(mvtest::error_kind([&] { sessions.state(s.id); }), ErrorKind::NotFound);
  EXPECT_EQ(sessions.purge_expired(), 0u);
  EXPECT_EQ(sessions.size(), 0u);
}
