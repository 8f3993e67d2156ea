#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lplace/app/commands.hpp"
#include "lplace/fs_util.hpp"

namespace lplace::app {
namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string cmd = std::string(LPLACE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// Builds one small scene, P-SOG and placement set shared by the pipeline tests.
class CliTest : public ::testing::Test {
 protected:
  static fs::path dir() { return fs::temp_directory_path() / "lplace_cli_test"; }
  static fs::path data(const std::string& name) { return fs::path(LPLACE_DATA_DIR) / name; }

  static void SetUpTestSuite() {
    fs::remove_all(dir());
    fs::create_directories(dir());
    write(dir() / "scene.json",
          R"({"seed": 3, "n_frames": 6, "point_density": 3, "emit_range": 14, "ground_margin": 14,
              "region_x": [-4, 12], "region_y": [-12, 12],
              "buildings": {"count": 2}, "cars": {"count": 3}, "pedestrians": {"count": 2}})");
    write(dir() / "roi.json", R"({"extent": [25.6, 25.6, 6.4], "resolution": 0.8, "z_min": 0})");
    write(dir() / "optimize.json",
          R"({"psog": "scene.psog", "output_dir": "opt", "iterations": 6, "seed": 2})");
    ASSERT_EQ(run("scene -c " + (dir() / "scene.json").string() + " -o " + (dir() / "scene").string()), 0);
    ASSERT_EQ(run("psog --scene " + (dir() / "scene").string() + " --roi " + (dir() / "roi.json").string() +
                  " -o " + (dir() / "scene.psog").string()),
              0);
  }
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("bogus"), 2);
  EXPECT_EQ(run("scene -o " + (dir() / "x").string()), 2);
  EXPECT_EQ(run("scene -c /nonexistent/params.json -o " + (dir() / "x").string()), 2);
  EXPECT_EQ(run("--version"), 0);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(CliTest, SceneIsDeterministicAndComplete) {
  const fs::path again = dir() / "scene_again";
  ASSERT_EQ(run("scene -c " + (dir() / "scene.json").string() + " -o " + again.string()), 0);
  for (int f = 0; f < 6; ++f) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.txt", f);
    EXPECT_EQ(slurp(dir() / "scene" / name), slurp(again / name)) << name;
  }
  EXPECT_EQ(slurp(dir() / "scene" / "poses.txt"), slurp(again / "poses.txt"));
  EXPECT_TRUE(fs::exists(again / "manifest.json"));
}

TEST_F(CliTest, FrameCountOverride) {
  const fs::path out = dir() / "scene40";
  ASSERT_EQ(run("scene -c " + (dir() / "scene.json").string() + " --frames 40 -o " + out.string()), 0);
  int frames = 0;
  for (const auto& e : fs::directory_iterator(out))
    if (e.path().filename().string().rfind("frame_", 0) == 0) ++frames;
  EXPECT_EQ(frames, 40);
  EXPECT_EQ(load_scene_dir(out).clouds.size(), 40u);
}

TEST_F(CliTest, PsogIsReproducible) {
  const fs::path again = dir() / "again.psog";
  ASSERT_EQ(run("psog --scene " + (dir() / "scene").string() + " --roi " + (dir() / "roi.json").string() + " -o " +
                again.string()),
            0);
  EXPECT_EQ(slurp(dir() / "scene.psog"), slurp(again));
  EXPECT_TRUE(fs::exists(dir() / "scene.psog.manifest.json"));
}

TEST_F(CliTest, PsogNoiseClassMismatchIsDataError) {
  write(dir() / "bad_psog.json", R"({"scene_dir": "scene", "roi": "roi.json", "output": "bad.psog",
        "corruption": {"steps": [{"kind": "crosstalk"}], "noise_class": 99}})");
  EXPECT_EQ(run("psog -c " + (dir() / "bad_psog.json").string()), 3);
  EXPECT_FALSE(fs::exists(dir() / "bad.psog"));
}

TEST_F(CliTest, PsogMissingSceneIsDataError) {
  EXPECT_EQ(run("psog --scene /nonexistent --roi " + (dir() / "roi.json").string() + " -o " +
                (dir() / "none.psog").string()),
            3);
}

TEST_F(CliTest, CorruptedPsogDiffers) {
  const fs::path dirty = dir() / "dirty.psog";
  ASSERT_EQ(run("psog --scene " + (dir() / "scene").string() + " --roi " + (dir() / "roi.json").string() +
                " --corrupt incomplete_echo=0.5,seed=1 -o " + dirty.string()),
            0);
  EXPECT_NE(slurp(dir() / "scene.psog"), slurp(dirty));
}

TEST_F(CliTest, UnreadablePlacementIsUsageError) {
  write(dir() / "broken.json", "{not json");
  EXPECT_EQ(run("eval --psog " + (dir() / "scene.psog").string() + " -p " + (dir() / "broken.json").string() +
                " -o " + (dir() / "broken.csv").string()),
            2);
}

TEST_F(CliTest, OptimizeEvalReportPipeline) {
  const fs::path opt = dir() / "opt";
  ASSERT_EQ(run("--threads 1 optimize -c " + (dir() / "optimize.json").string()), 0);
  for (const char* f : {"best_placement.json", "optimize_log.csv", "certificate.txt", "manifest.json"})
    EXPECT_TRUE(fs::exists(opt / f)) << f;
  for (const auto& e : fs::directory_iterator(opt)) EXPECT_EQ(e.path().filename().string().find(".tmp"), std::string::npos);
  EXPECT_NE(slurp(opt / "certificate.txt").find("k_G_source = lower-bound estimate"), std::string::npos);

  // Best-so-far column never increases.
  std::istringstream log(slurp(opt / "optimize_log.csv"));
  std::string line;
  std::getline(log, line);
  EXPECT_EQ(line, "k,best_G,mean_G,sigma");
  double prev = std::numeric_limits<double>::infinity();
  int rows = 0;
  while (std::getline(log, line)) {
    const double best = std::stod(line.substr(line.find(',') + 1));
    EXPECT_LE(best, prev);
    prev = best;
    ++rows;
  }
  EXPECT_EQ(rows, 6);

  const fs::path csv = dir() / "eval.csv";
  ASSERT_EQ(run("eval --psog " + (dir() / "scene.psog").string() + " -p " + data("baseline_placements.json").string() +
                " -p " + (opt / "best_placement.json").string() + " -o " + csv.string()),
            0);
  std::ifstream in(csv);
  const auto rows_read = read_eval_csv(in);
  ASSERT_EQ(rows_read.size(), 8u);
  EXPECT_EQ(rows_read.back().name, "optimized");
  EXPECT_TRUE(fs::exists(dir() / "eval.csv.manifest.json"));

  write(dir() / "perf.csv", "name,miou\ncenter,30\nline,31\npyramid,29\nsquare,33\ntrapezoid,32\n");
  const fs::path report = dir() / "report.csv";
  ASSERT_EQ(run("report --metrics " + csv.string() + " --performance " + (dir() / "perf.csv").string() + " -o " +
                report.string()),
            0);
  const std::string text = slurp(report);
  EXPECT_EQ(text.substr(0, text.find('\n')), "performance,metric,pearson,n");
  EXPECT_NE(text.find("miou,msog,"), std::string::npos);
}

TEST_F(CliTest, OptimizeIgnoresThreadCount) {
  const fs::path a = dir() / "opt_t1", b = dir() / "opt_t3";
  ASSERT_EQ(run("--threads 1 optimize -c " + (dir() / "optimize.json").string() + " -o " + a.string()), 0);
  ASSERT_EQ(run("--threads 3 optimize -c " + (dir() / "optimize.json").string() + " -o " + b.string()), 0);
  EXPECT_EQ(slurp(a / "best_placement.json"), slurp(b / "best_placement.json"));
  EXPECT_EQ(slurp(a / "optimize_log.csv"), slurp(b / "optimize_log.csv"));
  EXPECT_EQ(slurp(a / "certificate.txt"), slurp(b / "certificate.txt"));
}

}  // namespace
}  // namespace lplace::app
