#include "lplace/app/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "lplace/fs_util.hpp"
#include "lplace/objective.hpp"
#include "lplace/parallel.hpp"
#include "lplace/psog_io.hpp"
#include "lplace/scene.hpp"

namespace lplace::app {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string frame_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04zu.txt", index);
  return buf;
}

fs::path manifest_path_for(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

std::string csv_value(double v) { return std::isnan(v) ? "nan" : format_double(v); }

double parse_csv_double(const std::string& s, const std::string& source, std::size_t line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::logic_error&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ParseError(source, line, "bad number '" + s + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

void write_text(const fs::path& path, const std::string& text) {
  write_atomically(path, [&](std::ostream& out) { out << text; });
}

}  // namespace

void write_manifest(const fs::path& path, const RunManifest& m) {
  Json j = {{"command", m.command},
            {"config", m.config},
            {"seed", m.seed ? Json(*m.seed) : Json(nullptr)},
            {"inputs", m.inputs},
            {"outputs", m.outputs},
            {"settings", m.settings},
            {"version", LPLACE_VERSION},
            {"duration_s", m.duration_s}};
  write_text(path, j.dump(2) + "\n");
}

SceneData load_scene_dir(const fs::path& dir) {
  const fs::path meta_path = dir / "scene.json";
  if (!fs::exists(meta_path)) throw IngestError("scene directory " + dir.string() + " has no scene.json");
  Json meta;
  try {
    meta = load_json(meta_path);
  } catch (const ConfigError& e) {
    throw IngestError(e.what());
  }
  SceneData scene;
  if (!meta.contains("classes") || !meta.contains("frames") || !meta.at("frames").is_array())
    throw IngestError(meta_path.string() + " needs 'classes' and 'frames'");
  scene.classes = class_table_from_json(meta.at("classes"));
  scene.poses = load_poses(dir / "poses.txt");
  for (const auto& f : meta.at("frames")) {
    if (!f.is_object() || !f.contains("id") || !f.contains("file"))
      throw IngestError(meta_path.string() + ": frame entries need 'id' and 'file'");
    const fs::path file = dir / f.at("file").get<std::string>();
    if (!fs::exists(file)) throw IngestError("missing frame file " + file.string());
    scene.clouds.push_back(load_cloud(file, f.at("id").get<std::uint64_t>()));
  }
  if (scene.clouds.empty()) throw IngestError("scene " + dir.string() + " has no frames");
  return scene;
}

PSog build_psog(const SceneData& scene, const RoiGrid& grid, int window, const CorruptionSpec& corruption,
                int threads) {
  grid.validate();
  scene.classes.validate();
  if (window < 0) throw ConfigError("aggregation window must be >= 0");
  if (!corruption.empty() && corruption.steps.end() != std::find_if(corruption.steps.begin(), corruption.steps.end(),
                                                                    [](const Corruption& c) {
                                                                      return c.kind == CorruptionKind::kCrosstalk;
                                                                    }) &&
      corruption.noise_class >= scene.classes.size())
    throw MismatchError("crosstalk noise class is outside the scene's class table");

  const std::size_t n = scene.clouds.size();
  const std::size_t w = window == 0 ? n : static_cast<std::size_t>(window);
  const std::size_t n_windows = (n + w - 1) / w;

  std::vector<std::optional<SogFrame>> sogs(n_windows);
  parallel_for(n_windows, threads, [&](std::size_t begin, std::size_t end, int) {
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t first = k * w;
      const std::size_t last = std::min(n, first + w);
      std::vector<LabeledCloud> clouds;
      clouds.reserve(last - first);
      for (std::size_t f = first; f < last; ++f)
        clouds.push_back(corruption.empty() ? scene.clouds[f] : apply(scene.clouds[f], corruption));
      const LabeledCloud merged =
          clouds.size() == 1 ? clouds.front() : aggregate_frames(clouds, scene.poses, scene.clouds[first].frame_id);
      sogs[k] = voxelize_vote(merged, grid, scene.classes);
    }
  });
  PSog psog(grid, scene.classes);
  for (const auto& s : sogs) psog.accumulate(*s);
  return psog;
}

std::vector<EvalRow> evaluate_placements(const ProbField& prob, const std::vector<Placement>& placements,
                                         const MetricSpec& metric, const OcclusionMode& occlusion, int threads) {
  const ProbField prepared = field_for(prob, metric);
  const std::string mode = format_metric(metric, prob.classes());
  std::vector<EvalRow> rows;
  for (const auto& p : placements) {
    const CoverageSet cov = coverage(p, prepared, occlusion, threads);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    EvalRow row{p.name, mode, nan, nan, nan, cov.n_covered()};
    if (row.n_covered > 0) {
      row.msog = score(prepared, cov, metric).value;
      row.smig = smig(prob, cov).value;
      row.smig_normalized = row.smig / static_cast<double>(row.n_covered);
    }
    rows.push_back(row);
  }
  return rows;
}

void write_eval_csv(std::ostream& out, const std::vector<EvalRow>& rows) {
  out << "name,mode,msog,smig,smig_normalized,n_covered\n";
  for (const auto& r : rows)
    out << r.name << ',' << r.mode << ',' << csv_value(r.msog) << ',' << csv_value(r.smig) << ','
        << csv_value(r.smig_normalized) << ',' << r.n_covered << '\n';
}

std::vector<EvalRow> read_eval_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(source, 1, "empty metrics file");
  ++line_no;
  strip_cr(line);
  if (line != "name,mode,msog,smig,smig_normalized,n_covered") throw ParseError(source, 1, "unexpected metrics header");
  std::vector<EvalRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 6) throw ParseError(source, line_no, "expected 6 columns");
    EvalRow r;
    r.name = cells[0];
    r.mode = cells[1];
    r.msog = parse_csv_double(cells[2], source, line_no);
    r.smig = parse_csv_double(cells[3], source, line_no);
    r.smig_normalized = parse_csv_double(cells[4], source, line_no);
    const double n = parse_csv_double(cells[5], source, line_no);
    if (!(n >= 0.0) || n != std::floor(n)) throw ParseError(source, line_no, "n_covered must be a count");
    r.n_covered = static_cast<std::size_t>(n);
    rows.push_back(r);
  }
  return rows;
}

OptimizeOutcome run_optimize(const OptimizeRunConfig& config, const ProbField& prob, int threads) {
  config.validate();
  const SearchSpace space = config.search_space();
  const MetricSpec metric = parse_metric(config.metric, prob.classes());
  const OcclusionMode occlusion = parse_occlusion(config.occlusion);

  PlacementObjective objective(prob, config.lidar, occlusion, metric,
                               {config.min_mutual_distance, config.lambda.value_or(1.0)}, space);
  OptimizeOutcome outcome;
  outcome.lambda = config.lambda ? *config.lambda : estimate_lambda(objective, space, config.seed);
  objective.set_lambda(outcome.lambda);

  OptimizerConfig oc;
  oc.space = space;
  oc.iterations = config.iterations;
  oc.population = config.population;
  oc.seed = config.seed;
  oc.whitened_sigma_path = config.whitened_sigma_path;
  oc.c_c = config.c_c;
  oc.initial_sigma = config.initial_sigma;
  oc.threads = threads;
  if (config.initial) oc.initial_mean = to_vector(*config.initial);

  outcome.result = optimize(objective.problem(), oc);
  outcome.best = to_placement(outcome.result.best_u, config.lidar, "optimized");
  outcome.best_metric = objective.metric(outcome.result.best_u);
  outcome.certificate = certify(outcome.result.evaluations, space, config.analytic_k_g);
  return outcome;
}

void write_optimize_log(std::ostream& out, const std::vector<IterationLog>& history) {
  out << "k,best_G,mean_G,sigma\n";
  for (const auto& h : history)
    out << h.k << ',' << csv_value(h.best_g) << ',' << csv_value(h.mean_g) << ',' << csv_value(h.sigma) << '\n';
}

std::vector<CorrelationRow> correlate(const std::vector<EvalRow>& metrics, std::istream& performance,
                                      const std::string& source) {
  std::string line;
  if (!std::getline(performance, line)) throw ParseError(source, 1, "empty performance file");
  strip_cr(line);
  const auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "name") throw ParseError(source, 1, "header must be name,<column>,...");

  std::map<std::string, const EvalRow*> by_name;
  for (const auto& r : metrics)
    if (!by_name.emplace(r.name, &r).second) throw ValidationError("duplicate metric row '" + r.name + "'");

  const std::size_t cols = header.size() - 1;
  std::vector<std::vector<double>> perf(cols), msog(cols), smig_v(cols), smig_n(cols);
  std::size_t line_no = 1;
  std::map<std::string, bool> seen;
  while (std::getline(performance, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) throw ParseError(source, line_no, "column count differs from header");
    if (!seen.emplace(cells[0], true).second) throw ParseError(source, line_no, "duplicate name '" + cells[0] + "'");
    auto it = by_name.find(cells[0]);
    if (it == by_name.end()) continue;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = parse_csv_double(cells[c + 1], source, line_no);
      if (std::isnan(v) || std::isnan(it->second->msog)) continue;
      perf[c].push_back(v);
      msog[c].push_back(it->second->msog);
      smig_v[c].push_back(it->second->smig);
      smig_n[c].push_back(it->second->smig_normalized);
    }
  }

  std::vector<CorrelationRow> out;
  for (std::size_t c = 0; c < cols; ++c) {
    using Column = std::pair<std::string, const std::vector<double>*>;
    for (const auto& [name, values] :
         {Column{"msog", &msog[c]}, Column{"smig", &smig_v[c]}, Column{"smig_normalized", &smig_n[c]}}) {
      CorrelationRow row{header[c + 1], name, std::nullopt, perf[c].size()};
      try {
        row.pearson = pearson(*values, perf[c]);
      } catch (const UndefinedMetricError&) {
      } catch (const ValidationError&) {
      }
      out.push_back(row);
    }
  }
  return out;
}

void cmd_scene(const SceneArgs& args) {
  const auto start = Clock::now();
  SceneParams params = scene_params_from_json(load_json(args.config));
  if (args.seed) params.rng_seed = *args.seed;
  if (args.frames) params.n_frames = *args.frames;
  params.validate();
  if (args.out_dir.empty()) throw ConfigError("scene needs an output directory");

  const Scene scene = gen_scene(params);
  fs::create_directories(args.out_dir);
  RunManifest m{"scene", args.config.string(), params.rng_seed, {args.config.string()}, {}, to_json(params), 0.0};
  Json frames = Json::array();
  for (std::size_t f = 0; f < scene.clouds.size(); ++f) {
    const std::string name = frame_file_name(f);
    save_cloud(args.out_dir / name, scene.clouds[f]);
    frames.push_back({{"id", scene.clouds[f].frame_id}, {"file", name}});
    m.outputs.push_back((args.out_dir / name).string());
  }
  save_poses(args.out_dir / "poses.txt", scene.poses);
  Json meta = {{"classes", to_json(scene.classes)}, {"frames", frames}, {"frame_dt", scene.frame_dt},
               {"params", to_json(params)}};
  write_text(args.out_dir / "scene.json", meta.dump(2) + "\n");
  m.outputs.push_back((args.out_dir / "poses.txt").string());
  m.outputs.push_back((args.out_dir / "scene.json").string());
  m.duration_s = seconds_since(start);
  write_manifest(args.out_dir / "manifest.json", m);
  std::cout << "wrote " << scene.clouds.size() << " frames to " << args.out_dir.string() << "\n";
}

void cmd_psog(const PsogArgs& args) {
  const auto start = Clock::now();
  Json cfg = Json::object();
  fs::path base;
  if (!args.config.empty()) {
    cfg = load_json(args.config);
    base = args.config.parent_path();
    if (!cfg.is_object()) throw ConfigError("psog config must be a JSON object");
    for (const auto& [key, value] : cfg.items()) {
      (void)value;
      if (key != "scene_dir" && key != "roi" && key != "window" && key != "corruption" && key != "output")
        throw ConfigError("unknown key '" + key + "' in psog config");
    }
  }
  auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
  };

  fs::path scene_dir = args.scene_dir;
  if (scene_dir.empty() && cfg.contains("scene_dir")) scene_dir = resolve(cfg.at("scene_dir").get<std::string>());
  fs::path out = args.out;
  if (out.empty() && cfg.contains("output")) out = resolve(cfg.at("output").get<std::string>());
  if (scene_dir.empty()) throw ConfigError("psog needs a scene directory");
  if (out.empty()) throw ConfigError("psog needs an output path");

  RoiGrid grid;
  if (!args.roi.empty()) {
    grid = roi_from_json(load_json(args.roi));
  } else if (cfg.contains("roi")) {
    const Json& r = cfg.at("roi");
    grid = r.is_string() ? roi_from_json(load_json(resolve(r.get<std::string>()))) : roi_from_json(r);
  } else {
    throw ConfigError("psog needs an roi");
  }

  int window = 1;
  if (cfg.contains("window")) {
    if (!cfg.at("window").is_number_integer()) throw ConfigError("psog window must be an integer");
    window = cfg.at("window").get<int>();
  }
  if (args.window) window = *args.window;
  CorruptionSpec corruption;
  if (cfg.contains("corruption")) corruption = corruption_from_json(cfg.at("corruption"));
  if (args.corrupt) corruption = parse_corruption(*args.corrupt);

  const SceneData scene = load_scene_dir(scene_dir);
  const PSog psog = build_psog(scene, grid, window, corruption);
  if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
  save_psog(out, psog);

  Json settings = {{"scene_dir", scene_dir.string()},
                   {"roi", to_json(grid)},
                   {"window", window},
                   {"frames", psog.frames_seen()},
                   {"corruption", to_json(corruption)}};
  RunManifest m{"psog",
                args.config.string(),
                corruption.empty() ? std::nullopt : std::optional<std::uint64_t>(corruption.seed),
                {scene_dir.string()},
                {out.string()},
                settings,
                seconds_since(start)};
  write_manifest(manifest_path_for(out), m);
  std::cout << "wrote " << out.string() << " (T = " << psog.frames_seen() << ", N = " << grid.voxel_count()
            << ", M = " << psog.classes().size() << ")\n";
}

void cmd_eval(const EvalArgs& args) {
  const auto start = Clock::now();
  if (args.placements.empty()) throw ConfigError("eval needs at least one placement file");
  if (args.out.empty()) throw ConfigError("eval needs an output path");
  std::vector<Placement> placements;
  for (const auto& p : args.placements) {
    auto loaded = load_placements(p);
    placements.insert(placements.end(), loaded.begin(), loaded.end());
  }
  const PSog psog = load_psog(args.psog);
  const ProbField prob = finalize(psog);
  const MetricSpec metric = parse_metric(args.metric, prob.classes());
  const OcclusionMode occlusion = parse_occlusion(args.occlusion);
  const auto rows = evaluate_placements(prob, placements, metric, occlusion);

  std::ostringstream csv;
  write_eval_csv(csv, rows);
  if (!args.out.parent_path().empty()) fs::create_directories(args.out.parent_path());
  write_text(args.out, csv.str());
  std::cout << csv.str();

  RunManifest m{"eval", "", std::nullopt, {args.psog.string()}, {args.out.string()}, {}, 0.0};
  for (const auto& p : args.placements) m.inputs.push_back(p.string());
  m.settings = {{"metric", args.metric}, {"occlusion", format_occlusion(occlusion)}};
  m.duration_s = seconds_since(start);
  write_manifest(manifest_path_for(args.out), m);
}

void cmd_optimize(const OptimizeArgs& args) {
  const auto start = Clock::now();
  OptimizeRunConfig config = optimize_config_from_json(load_json(args.config), args.config.parent_path());
  if (args.psog) config.psog = *args.psog;
  if (!args.out_dir.empty()) config.output_dir = args.out_dir;
  if (args.seed) config.seed = *args.seed;
  if (args.iterations) config.iterations = *args.iterations;
  if (config.output_dir.empty()) throw ConfigError("optimize needs an output directory");
  config.validate();

  const ProbField prob = finalize(load_psog(config.psog));
  const OptimizeOutcome outcome = run_optimize(config, prob);

  fs::create_directories(config.output_dir);
  const fs::path log_path = config.output_dir / "optimize_log.csv";
  const fs::path cert_path = config.output_dir / "certificate.txt";
  const fs::path best_path = config.output_dir / "best_placement.json";
  write_atomically(log_path, [&](std::ostream& out) { write_optimize_log(out, outcome.result.history); });
  write_text(cert_path, format_certificate(outcome.certificate));
  Json best = {{"lidar", to_json(config.lidar)},
               {"placements", Json::array({to_json(outcome.best)})},
               {"result",
                {{"G", outcome.result.best_g},
                 {"metric", outcome.best_metric},
                 {"penalty", outcome.result.best_penalty},
                 {"lambda", outcome.lambda},
                 {"status", to_string(outcome.result.status)},
                 {"evaluations", outcome.result.evaluations.size()}}}};
  write_text(best_path, best.dump(2) + "\n");

  RunManifest m{"optimize",
                args.config.string(),
                config.seed,
                {config.psog.string()},
                {best_path.string(), log_path.string(), cert_path.string()},
                to_json(config),
                seconds_since(start)};
  write_manifest(config.output_dir / "manifest.json", m);
  std::cout << "status " << to_string(outcome.result.status) << ", best G " << format_double(outcome.result.best_g)
            << ", metric " << format_double(outcome.best_metric) << "\n";
  if (outcome.result.status != OptimizeStatus::kFeasible)
    std::cerr << "warning: no feasible candidate was sampled; reporting the lowest-G infeasible one\n";
}

void cmd_report(const ReportArgs& args) {
  const auto start = Clock::now();
  if (args.out.empty()) throw ConfigError("report needs an output path");
  std::ifstream metrics_in(args.metrics);
  if (!metrics_in) throw ConfigError("cannot open " + args.metrics.string());
  const auto metrics = read_eval_csv(metrics_in, args.metrics.string());
  std::ifstream perf_in(args.performance);
  if (!perf_in) throw ConfigError("cannot open " + args.performance.string());
  const auto rows = correlate(metrics, perf_in, args.performance.string());

  std::ostringstream csv;
  csv << "performance,metric,pearson,n\n";
  for (const auto& r : rows)
    csv << r.performance << ',' << r.metric << ',' << (r.pearson ? format_double(*r.pearson) : "undefined") << ','
        << r.n << '\n';
  std::cout << csv.str();
  if (!args.out.parent_path().empty()) fs::create_directories(args.out.parent_path());
  write_text(args.out, csv.str());
  write_manifest(manifest_path_for(args.out), {"report", "", std::nullopt,
                                               {args.metrics.string(), args.performance.string()},
                                               {args.out.string()}, {}, seconds_since(start)});
}

}  // namespace lplace::app
