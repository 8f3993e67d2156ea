#include <CLI11.hpp>

#include <iostream>

#include "lplace/app/commands.hpp"
#include "lplace/parallel.hpp"

namespace {

// Exit codes: 0 success, 2 usage or configuration, 3 data, 4 numeric.
constexpr int kUsage = 2;
constexpr int kData = 3;
constexpr int kNumeric = 4;

}  // namespace

int main(int argc, char** argv) {
  using namespace lplace;
  CLI::App app{"Multi-LiDAR placement evaluation and optimization"};
  app.set_version_flag("--version", LPLACE_VERSION);
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: LPLACE_THREADS or hardware concurrency)")
      ->check(CLI::NonNegativeNumber);

  app::SceneArgs scene;
  auto* scene_cmd = app.add_subcommand("scene", "Generate a synthetic labeled scene");
  scene_cmd->add_option("-c,--config", scene.config, "Scene parameters (JSON)")->required();
  scene_cmd->add_option("-o,--out", scene.out_dir, "Output directory")->required();
  scene_cmd->add_option("--seed", scene.seed, "Override the scene seed");
  scene_cmd->add_option("--frames", scene.frames, "Override the frame count");

  app::PsogArgs psog;
  auto* psog_cmd = app.add_subcommand("psog", "Build a probabilistic semantic occupancy grid from a scene");
  psog_cmd->add_option("-c,--config", psog.config, "Optional JSON with scene_dir, roi, window, corruption, output");
  psog_cmd->add_option("--scene", psog.scene_dir, "Scene directory");
  psog_cmd->add_option("--roi", psog.roi, "ROI grid (JSON)");
  psog_cmd->add_option("-o,--out", psog.out, "Output P-SOG file");
  psog_cmd->add_option("--window", psog.window, "Frames merged per SOG (0: all)")->check(CLI::NonNegativeNumber);
  psog_cmd->add_option("--corrupt", psog.corrupt, "Corruptions, e.g. fog=0.02,seed=3");

  app::EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score placements on a P-SOG");
  eval_cmd->add_option("--psog", eval.psog, "P-SOG file")->required();
  eval_cmd->add_option("-p,--placements", eval.placements, "Placement files (JSON)")->required();
  eval_cmd->add_option("--metric", eval.metric, "segmentation, smig or detection:<class>");
  eval_cmd->add_option("--occlusion", eval.occlusion, "none or threshold[:tau]");
  eval_cmd->add_option("-o,--out", eval.out, "Output CSV")->required();

  app::OptimizeArgs opt;
  auto* opt_cmd = app.add_subcommand("optimize", "Search for the best placement with CMA-ES");
  opt_cmd->add_option("-c,--config", opt.config, "Optimization config (JSON)")->required();
  opt_cmd->add_option("-o,--out", opt.out_dir, "Output directory (overrides config)");
  opt_cmd->add_option("--psog", opt.psog, "P-SOG file (overrides config)");
  opt_cmd->add_option("--seed", opt.seed, "Override the seed");
  opt_cmd->add_option("--iterations", opt.iterations, "Override the iteration budget");

  app::ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Correlate metric rows with external performance numbers");
  report_cmd->add_option("--metrics", report.metrics, "CSV written by eval")->required();
  report_cmd->add_option("--performance", report.performance, "CSV with name,<column>,...")->required();
  report_cmd->add_option("-o,--out", report.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (threads > 0) set_default_threads(threads);
    if (*scene_cmd) app::cmd_scene(scene);
    if (*psog_cmd) app::cmd_psog(psog);
    if (*eval_cmd) app::cmd_eval(eval);
    if (*opt_cmd) app::cmd_optimize(opt);
    if (*report_cmd) app::cmd_report(report);
  } catch (const MismatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const EmptyAccumulatorError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const UndefinedMetricError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const OptimizerStateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const InsufficientDataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    // Parse, ingest, validation and I/O failures.
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return 0;
}
