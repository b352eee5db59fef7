// vinerow: scenario runs, dataset replay, pipeline benchmark and world
// generation. Exit codes: 0 ok, 1 config error, 2 runtime failure,
// 3 collision in `run --strict`.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vinerow/bench.hpp"
#include "vinerow/error.hpp"
#include "vinerow/experiment.hpp"
#include "vinerow/raster_io.hpp"
#include "vinerow/render.hpp"
#include "vinerow/replay.hpp"
#include "vinerow/scenario.hpp"
#include "vinerow/world.hpp"

namespace {

namespace fs = std::filesystem;
using namespace vinerow;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitCollision = 3;

/// Flags shared by every mode; unset optionals leave the file/default value.
struct Overrides {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> profile;
  std::optional<std::size_t> s_window;
  std::optional<double> l_depth;
  std::optional<std::size_t> fusion_threshold;
  std::optional<double> alpha_ema;
  std::optional<double> vmax;
  std::optional<double> wmax;
  std::optional<double> noise_frac;
  std::optional<std::size_t> min_cluster;
  std::optional<double> flip;
  std::optional<std::size_t> episodes;
  std::optional<std::size_t> max_steps;
  std::size_t jobs = 1;
  bool strict = false;
};

void add_common(CLI::App& app, Overrides& o) {
  app.add_option("--scenario", o.scenario, "Scenario JSON file");
  app.add_option("--seed", o.seed, "Base seed (episode k gets seed+k)");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--profile", o.profile, "Row profile: straight|curved");
  app.add_option("--s-window", o.s_window, "Fusion window S");
  app.add_option("--l-depth", o.l_depth, "Depth gate fraction in (0, 1]");
  app.add_option("--fusion-threshold", o.fusion_threshold, "Detections needed in the window");
  app.add_option("--alpha-ema", o.alpha_ema, "EMA smoothing factor");
  app.add_option("--vmax", o.vmax, "Maximum linear velocity [m/s]");
  app.add_option("--wmax", o.wmax, "Maximum angular velocity [rad/s]");
  app.add_option("--noise-frac", o.noise_frac, "Row noise threshold fraction");
  app.add_option("--min-cluster", o.min_cluster, "Minimum zero-cluster length [columns]");
  app.add_option("--flip", o.flip, "Segmentation pixel flip probability");
  app.add_option("--episodes", o.episodes, "Replace the episode list with N seeded episodes");
  app.add_option("--max-steps", o.max_steps, "Step limit per episode");
  app.add_option("--jobs", o.jobs, "Episodes run in parallel")->check(CLI::PositiveNumber);
  app.add_flag("--strict", o.strict, "Exit 3 if any episode ends in a collision");
}

ScenarioSpec resolve_scenario(const Overrides& o) {
  ScenarioSpec s = o.scenario.empty() ? ScenarioSpec{} : load_scenario(o.scenario);
  if (o.seed) s.seed = *o.seed;
  if (o.out) s.output_dir = *o.out;
  if (o.profile) s.world.profile = sim::parse_profile(*o.profile);
  if (o.s_window) {
    s.raster.s_window = *o.s_window;
    if (!o.fusion_threshold && s.raster.fusion_threshold > *o.s_window) {
      s.raster.fusion_threshold = *o.s_window;
    }
  }
  if (o.l_depth) s.raster.l_depth = *o.l_depth;
  if (o.fusion_threshold) s.raster.fusion_threshold = *o.fusion_threshold;
  if (o.alpha_ema) s.spc.alpha_ema = *o.alpha_ema;
  if (o.vmax) s.spc.v_max = *o.vmax;
  if (o.wmax) s.spc.w_max = *o.wmax;
  if (o.noise_frac) s.spc.th_noise_frac = *o.noise_frac;
  if (o.min_cluster) s.spc.min_cluster_len = *o.min_cluster;
  if (o.flip) s.flip_probability = *o.flip;
  if (o.max_steps) s.max_steps = *o.max_steps;
  if (o.episodes) {
    s.episodes.clear();
    for (std::size_t k = 0; k < *o.episodes; ++k) {
      s.episodes.push_back({s.name + "_" + std::to_string(k), s.seed + k, {}, {}, {}});
    }
  } else if (o.seed) {
    for (std::size_t k = 0; k < s.episodes.size(); ++k) s.episodes[k].seed = *o.seed + k;
  }
  if (o.profile) {
    for (auto& e : s.episodes) e.profile.reset();
  }
  s.validate();
  return s;
}

int cmd_run(const Overrides& o) {
  const ScenarioSpec spec = resolve_scenario(o);
  const auto results = run_scenario(spec, o.jobs);
  write_artifacts(spec, results, spec.output_dir);
  bool collided = false;
  std::cout << "episode              outcome     steps  faults  FR[%]    MAE[m]\n";
  for (const auto& r : results) {
    collided = collided || r.metrics.collision;
    std::printf("%-20s %-10s %6zu %7zu %6.2f %9.4f\n", r.spec.name.c_str(),
                sim::to_string(r.metrics.outcome).c_str(), r.metrics.steps, r.metrics.faults,
                r.metrics.fault_rate, r.metrics.mae);
  }
  const auto sum = summarize(results);
  std::printf("mean MAE %.4f m, max MAE %.4f m, FR %.2f%%, collisions %zu/%zu\n", sum.mean_mae,
              sum.max_mae, sum.fault_rate, sum.collisions, results.size());
  std::cout << "artifacts written to " << spec.output_dir << '\n';
  return (o.strict && collided) ? kExitCollision : kExitOk;
}

int cmd_replay(const Overrides& o, const std::string& manifest, double frame_rate) {
  const ScenarioSpec spec = resolve_scenario(o);
  replay::ReplayConfig cfg;
  cfg.raster = spec.raster;
  cfg.spc = spec.spc;
  cfg.frame_rate = frame_rate;
  cfg.validate();
  const auto entries = raster::load_manifest(manifest);
  const auto result = replay::replay_manifest(entries, cfg);
  const std::vector<std::string> meta{"manifest: " + manifest,
                                      "config: " + scenario_to_json(spec).dump()};
  if (o.out) {
    fs::create_directories(*o.out);
    std::ofstream cmds(fs::path(*o.out) / "commands.csv", std::ios::trunc);
    replay::write_replay_csv(cmds, result, meta);
    if (!result.per_class.empty()) {
      std::ofstream st(fs::path(*o.out) / "class_stats.csv", std::ios::trunc);
      replay::write_class_stats(st, result.per_class);
    }
    std::size_t faults = 0;
    for (const auto& s : result.sequences) faults += s.log.controller.fault_count;
    std::cout << result.sequences.size() << " sequence(s), " << result.commands()
              << " command(s), " << faults << " fault(s); written to " << *o.out << '\n';
  } else {
    replay::write_replay_csv(std::cout, result, meta);
  }
  if (!result.per_class.empty()) {
    std::cout << '\n';
    replay::write_class_stats(std::cout, result.per_class);
  }
  return kExitOk;
}

int cmd_bench(const Overrides& o, const std::vector<std::size_t>& resolutions,
              std::size_t iterations) {
  const ScenarioSpec spec = resolve_scenario(o);
  const auto reports = bench::run_bench(resolutions, iterations, spec.raster, spec.spc);
  bench::write_bench_csv(std::cout, reports);
  if (o.out) {
    fs::create_directories(*o.out);
    std::ofstream f(fs::path(*o.out) / "bench.csv", std::ios::trunc);
    bench::write_bench_csv(f, reports);
  }
  // 5 Hz command period.
  for (const auto& r : reports) {
    if (r.resolution == 224 && r.stage("full_step").ms.mean >= 200.0) {
      std::cerr << "full 224x224 step exceeds the 200 ms command period\n";
      return kExitRuntime;
    }
  }
  return kExitOk;
}

struct GenWorldOptions {
  std::size_t frames = 0;
  double start_s = 1.0;
  double lateral = 0.0;
  double heading = 0.0;
  double stride = 0.1;
  std::string label;
};

int cmd_gen_world(const Overrides& o, const GenWorldOptions& g) {
  const ScenarioSpec spec = resolve_scenario(o);
  const auto ep = spec.resolved_episodes().front();
  const sim::World world = sim::generate_world(spec.world_for(ep), ep.seed);
  const fs::path out = o.out.value_or(spec.output_dir);
  fs::create_directories(out);

  nlohmann::json j;
  j["seed"] = ep.seed;
  j["curvature"] = world.curvature;
  j["inter_row"] = world.inter_row;
  j["plant_spacing"] = world.plant_spacing;
  j["row_length"] = world.row_length;
  j["corridor"] = world.corridor;
  for (const auto& row : world.rows) {
    nlohmann::json plants = nlohmann::json::array();
    nlohmann::json centerline = nlohmann::json::array();
    for (const auto& p : row.plants) plants.push_back({p.x, p.y});
    for (const auto& p : row.centerline) centerline.push_back({p.x, p.y});
    j["rows"].push_back({{"lateral_offset", row.lateral_offset},
                         {"canopy_halfwidth", row.canopy_halfwidth},
                         {"centerline", centerline},
                         {"plants", plants}});
  }
  std::ofstream(out / "world.json", std::ios::trunc) << j.dump(2) << '\n';

  if (g.frames > 0) {
    std::vector<raster::ManifestEntry> entries;
    for (std::size_t k = 0; k < g.frames; ++k) {
      const auto pose = world.corridor_pose(g.start_s + g.stride * static_cast<double>(k),
                                            g.lateral, g.heading);
      sim::RenderOptions ropt;
      ropt.flip_probability = spec.flip_probability;
      ropt.noise_seed = mix_seed(ep.seed, 0x4015E);
      ropt.timestamp = static_cast<std::int64_t>(k);
      const auto views = sim::render_views(world, pose, spec.camera, ropt);
      raster::ManifestEntry e;
      e.frame_index = static_cast<std::int64_t>(k);
      e.mask_path = raster::frame_filename("mask", e.frame_index, ".pgm");
      e.depth_path = raster::frame_filename("depth", e.frame_index, ".pgm");
      if (!g.label.empty()) e.label = g.label;
      raster::save_mask(out / e.mask_path, views.seg);
      raster::save_depth_mm(out / e.depth_path, views.depth);
      entries.push_back(e);
    }
    raster::save_manifest(out / "manifest.txt", entries);
  }
  std::cout << "world with " << world.rows.size() << " rows written to " << (out / "world.json")
            << (g.frames > 0 ? ", plus " + std::to_string(g.frames) + " frames" : std::string())
            << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vineyard row following: SPC controller, simulator and evaluation"};
  app.require_subcommand(0, 1);

  Overrides top;
  std::string top_replay;
  bool top_bench = false;
  add_common(app, top);
  app.add_option("--replay", top_replay, "Replay a manifest (same as the replay subcommand)");
  app.add_flag("--bench", top_bench, "Run the benchmark (same as the bench subcommand)");

  std::vector<std::size_t> resolutions{32, 64, 128, 224};
  std::size_t iterations = 50;
  double frame_rate = 30.0;
  app.add_option("--resolutions", resolutions, "Benchmark resolutions")->delimiter(',');
  app.add_option("--iterations", iterations, "Benchmark iterations")->check(CLI::PositiveNumber);

  Overrides run_o;
  auto* run = app.add_subcommand("run", "Run all episodes of a scenario");
  add_common(*run, run_o);

  Overrides rep_o;
  std::string manifest;
  auto* rep = app.add_subcommand("replay", "Replay a recorded mask/depth manifest");
  add_common(*rep, rep_o);
  rep->add_option("manifest", manifest, "Manifest file")->required();
  rep->add_option("--frame-rate", frame_rate, "Frame rate used for timestamps");

  Overrides bench_o;
  auto* bench = app.add_subcommand("bench", "Per-stage pipeline latency");
  add_common(*bench, bench_o);
  bench->add_option("--resolutions", resolutions, "Square frame sizes")->delimiter(',');
  bench->add_option("--iterations", iterations, "Iterations per size")->check(CLI::PositiveNumber);

  Overrides gen_o;
  GenWorldOptions gen_g;
  auto* gen = app.add_subcommand("gen-world", "Write a world (and optionally rendered frames)");
  add_common(*gen, gen_o);
  gen->add_option("--frames", gen_g.frames, "Render N frames along the corridor");
  gen->add_option("--start", gen_g.start_s, "Arc length of the first frame [m]");
  gen->add_option("--lateral", gen_g.lateral, "Lateral offset of the camera [m]");
  gen->add_option("--heading", gen_g.heading, "Heading offset from the row [rad]");
  gen->add_option("--stride", gen_g.stride, "Advance between frames [m]");
  gen->add_option("--label", gen_g.label, "Class label written to the manifest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_o);
    if (*rep) return cmd_replay(rep_o, manifest, frame_rate);
    if (*bench) return cmd_bench(bench_o, resolutions, iterations);
    if (*gen) return cmd_gen_world(gen_o, gen_g);
    if (!top_replay.empty()) return cmd_replay(top, top_replay, frame_rate);
    if (top_bench) return cmd_bench(top, resolutions, iterations);
    if (!top.scenario.empty()) return cmd_run(top);
    std::cerr << app.help();
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
