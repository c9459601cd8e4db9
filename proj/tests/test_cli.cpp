#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "mvedit/flow.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(MVEDIT_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return files;
}

/// One small scene shared by every test in this file.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new mvtest::TempDir();
    write_text(*dir_ / "synth.json",
               R"({"width": 64, "height": 64, "max_cloud_points": 3000, "ground_truth": {"rotation_z_deg": 30}})");
    ASSERT_EQ(run("synth-scene --config " + (*dir_ / "synth.json").string() + " --out " + scene().string()), 0);
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path scene() { return *dir_ / "scene"; }
  static fs::path path(const std::string& name) { return *dir_ / name; }

  static mvtest::TempDir* dir_;
};

mvtest::TempDir* CliTest::dir_ = nullptr;

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("estimate-flows --scene /nonexistent"), 2);
}

TEST_F(CliTest, SynthSceneIsDeterministic) {
  ASSERT_EQ(run("synth-scene --config " + path("synth.json").string() + " --out " + path("again").string()), 0);
  EXPECT_EQ(tree(scene()), tree(path("again")));
  EXPECT_TRUE(fs::exists(scene() / "gt" / "view3.flo"));
  EXPECT_TRUE(fs::exists(scene() / "gt" / "motion.json"));
  ASSERT_EQ(run("synth-scene --config " + path("synth.json").string() + " --seed 5 --out " + path("seeded").string()),
            0);
  EXPECT_NE(tree(scene()), tree(path("seeded")));
  write_text(path("bad_synth.json"), R"({"views": 1})");
  EXPECT_EQ(run("synth-scene --config " + path("bad_synth.json").string() + " --out " + path("x").string()), 2);
}

TEST_F(CliTest, EstimateFlowsIdentityAndErrors) {
  write_text(path("zero.json"), R"({"mode": "rotation", "reference_view": "view0", "angle_deg": 0})");
  ASSERT_EQ(run("estimate-flows --scene " + scene().string() + " --label 8 --motion " + path("zero.json").string() +
                " --out " + path("zero").string()),
            0);
  for (int v = 0; v < 4; ++v) {
    const auto f = mvedit::read_flo(path("zero") / ("view" + std::to_string(v) + ".flo"));
    EXPECT_EQ(mvedit::count_set(f.moving_mask()), 0u);
    EXPECT_TRUE(fs::exists(path("zero") / ("view" + std::to_string(v) + ".occlusion.png")));
  }
  const auto manifest = json::parse(slurp(path("zero") / "manifest.json"));
  EXPECT_EQ(manifest["derived"]["phi_deg"], 0.0);

  EXPECT_EQ(run("estimate-flows --scene " + scene().string() + " --label 99 --motion " + path("zero.json").string() +
                " --out " + path("o1").string()),
            2);
  write_text(path("bad.json"), R"({"mode": "rotation"})");
  EXPECT_EQ(run("estimate-flows --scene " + scene().string() + " --label 8 --motion " + path("bad.json").string() +
                " --out " + path("o2").string()),
            2);
  write_text(path("miss.json"),
             R"({"mode": "translation", "reference_view": "view0", "drag": [[0, 0, 4, 4]], "brush_radius": 1})");
  EXPECT_EQ(run("estimate-flows --scene " + scene().string() + " --label 8 --motion " + path("miss.json").string() +
                " --out " + path("o3").string()),
            3);
}

TEST_F(CliTest, RotationFlowsMatchGroundTruth) {
  write_text(path("rot.json"), R"({"mode": "rotation", "reference_view": "view0", "angle_deg": 30})");
  ASSERT_EQ(run("estimate-flows --scene " + scene().string() + " --label 8 --motion " + path("rot.json").string() +
                " --out " + path("rot").string()),
            0);
  for (int v = 0; v < 4; ++v) {
    const std::string id = "view" + std::to_string(v) + ".flo";
    const auto est = mvedit::read_flo(path("rot") / id);
    const auto gt = mvedit::read_flo(scene() / "gt" / id);
    std::size_t both = 0, good = 0;
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        if (!gt.is_valid(x, y) || !est.is_valid(x, y)) continue;
        ++both;
        good += std::hypot(est.u.at(x, y) - gt.u.at(x, y), est.v.at(x, y) - gt.v.at(x, y)) <= 0.51;
      }
    }
    ASSERT_GT(both, 0u);
    // 64 px views leave many silhouette pixels; the 0.99 level is checked at 256 px and up.
    EXPECT_GE(static_cast<double>(good) / both, 0.9) << id;
  }
}

TEST_F(CliTest, RunMmdsAndMetrics) {
  EXPECT_EQ(run("run-mmds --scene " + scene().string() + " --flows " + path("missing").string() + " --out " +
                path("m0").string()),
            2);
  write_text(path("tr.json"),
             R"({"mode": "translation", "reference_view": "view0", "drag": [[32, 36, 4, 0]], "brush_radius": 100})");
  ASSERT_EQ(run("estimate-flows --scene " + scene().string() + " --label 8 --motion " + path("tr.json").string() +
                " --out " + path("tr").string()),
            0);
  for (const char* out : {"m1", "m2"}) {
    ASSERT_EQ(run("run-mmds --scene " + scene().string() + " --flows " + path("tr").string() + " --steps 4 --out " +
                  path(out).string()),
              0);
  }
  EXPECT_EQ(tree(path("m1")), tree(path("m2")));
  EXPECT_TRUE(fs::exists(path("m1") / "edited" / "view2.png"));

  ASSERT_EQ(run("metrics --input " + scene().string() + " --output " + path("m1").string() + " --flows " +
                path("tr").string()),
            0);
  const auto report = json::parse(slurp(path("m1") / "metrics.json"));
  EXPECT_GE(report["mpa"].get<double>(), 0.0);
  EXPECT_TRUE(fs::exists(path("m1") / "metrics.csv"));

  // The scene as its own edit, against zero flows.
  write_text(path("zero.json"), R"({"mode": "rotation", "reference_view": "view0", "angle_deg": 0})");
  ASSERT_EQ(run("estimate-flows --scene " + scene().string() + " --label 8 --motion " + path("zero.json").string() +
                " --out " + path("zero").string()),
            0);
  ASSERT_EQ(run("metrics --input " + scene().string() + " --output " + scene().string() + " --flows " +
                path("zero").string() + " --report " + path("idr").string()),
            0);
  const auto identity = json::parse(slurp(path("idr") / "metrics.json"));
  EXPECT_EQ(identity["mpa"], 0.0);
  EXPECT_EQ(identity["atf"], 0.0);

  write_text(path("small.json"), R"({"width": 32, "height": 32})");
  ASSERT_EQ(run("synth-scene --config " + path("small.json").string() + " --out " + path("small").string()), 0);
  EXPECT_EQ(run("metrics --input " + scene().string() + " --output " + path("small").string() + " --flows " +
                path("tr").string() + " --report " + path("r3").string()),
            2);
}
