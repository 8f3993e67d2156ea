#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lplace/app/config.hpp"
#include "lplace/certificate.hpp"
#include "lplace/corrupt.hpp"
#include "lplace/grid.hpp"
#include "lplace/ingest.hpp"

namespace lplace::app {

/// Record written next to every command's outputs.
struct RunManifest {
  std::string command;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  Json settings;  // resolved configuration
  double duration_s = 0.0;
};

/// Written atomically to `path`.
void write_manifest(const std::filesystem::path& path, const RunManifest& m);

/// Frames, poses and class table of a scene directory.
struct SceneData {
  ClassTable classes;
  std::vector<LabeledCloud> clouds;
  std::vector<EgoPose> poses;
};

SceneData load_scene_dir(const std::filesystem::path& dir);

/// Splits frames into consecutive windows of `window` frames (0: a single
/// window), applies `corruption` per frame, merges each window into its first
/// frame's coordinates and accumulates one voxelized SOG per window.
PSog build_psog(const SceneData& scene, const RoiGrid& grid, int window, const CorruptionSpec& corruption,
                int threads = 0);

struct EvalRow {
  std::string name;
  std::string mode;
  double msog = 0.0;  // NaN when coverage is empty
  double smig = 0.0;
  double smig_normalized = 0.0;  // smig / n_covered
  std::size_t n_covered = 0;
};

std::vector<EvalRow> evaluate_placements(const ProbField& prob, const std::vector<Placement>& placements,
                                         const MetricSpec& metric, const OcclusionMode& occlusion, int threads = 0);

void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows);
std::vector<EvalRow> read_eval_csv(std::istream& in, const std::string& source = "<stream>");

struct OptimizeOutcome {
  OptimizeResult result;
  Placement best;
  double lambda = 0.0;
  double best_metric = 0.0;
  Certificate certificate;
};

/// Runs the placement search on a loaded field.
OptimizeOutcome run_optimize(const OptimizeRunConfig& config, const ProbField& prob, int threads = 0);

void write_optimize_log(std::ostream& out, const std::vector<IterationLog>& history);

struct CorrelationRow {
  std::string performance;
  std::string metric;
  std::optional<double> pearson;  // empty when undefined
  std::size_t n = 0;
};

/// Joins metric rows and performance rows ("name,<col>,...") by name and
/// correlates every performance column with msog, smig and smig_normalized.
std::vector<CorrelationRow> correlate(const std::vector<EvalRow>& metrics, std::istream& performance,
                                      const std::string& source = "<stream>");

// Command entry points. Each writes its outputs and one manifest.

struct SceneArgs {
  std::filesystem::path config;
  std::filesystem::path out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> frames;
};
void cmd_scene(const SceneArgs& args);

struct PsogArgs {
  std::filesystem::path config;  // optional JSON with scene_dir, roi, window, corruption, output
  std::filesystem::path scene_dir;
  std::filesystem::path roi;
  std::filesystem::path out;
  std::optional<int> window;
  std::optional<std::string> corrupt;
};
void cmd_psog(const PsogArgs& args);

struct EvalArgs {
  std::filesystem::path psog;
  std::vector<std::filesystem::path> placements;
  std::string metric = "segmentation";
  std::string occlusion = "threshold:0.5";
  std::filesystem::path out;
};
void cmd_eval(const EvalArgs& args);

struct OptimizeArgs {
  std::filesystem::path config;
  std::filesystem::path out_dir;  // overrides config
  std::optional<std::filesystem::path> psog;
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
};
void cmd_optimize(const OptimizeArgs& args);

struct ReportArgs {
  std::filesystem::path metrics;
  std::filesystem::path performance;
  std::filesystem::path out;
};
void cmd_report(const ReportArgs& args);

}  // namespace lplace::app
