#pragma once

// Runs every episode of a scenario and writes the artifacts: per-episode
// trajectory CSV, command log CSV and SVG plot, plus metrics.json/metrics.csv.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "vinerow/episode.hpp"
#include "vinerow/eval.hpp"
#include "vinerow/scenario.hpp"
#include "vinerow/svg.hpp"
#include "vinerow/world.hpp"

namespace vinerow {

struct EpisodeResult {
  EpisodeSpec spec;
  sim::World world;
  sim::EpisodeLog log;
  eval::Midline midline;
  eval::Metrics metrics;
};

inline EpisodeResult run_one(const ScenarioSpec& scenario, const EpisodeSpec& e) {
  EpisodeResult r;
  r.spec = e;
  r.world = sim::generate_world(scenario.world_for(e), e.seed);
  r.log = sim::run_episode(r.world, scenario.episode_config(e, r.world));
  r.midline = eval::compute_midline(r.world);
  r.metrics = eval::episode_metrics(r.log, r.midline);
  return r;
}

/// Episodes are independent and may run on `jobs` threads; results keep the
/// scenario's episode order.
inline std::vector<EpisodeResult> run_scenario(const ScenarioSpec& scenario, std::size_t jobs = 1) {
  scenario.validate();
  const auto episodes = scenario.resolved_episodes();
  std::vector<EpisodeResult> results(episodes.size());
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, episodes.size()));
  if (jobs == 1) {
    for (std::size_t k = 0; k < episodes.size(); ++k) results[k] = run_one(scenario, episodes[k]);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < jobs; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t k = next++; k < episodes.size(); k = next++) {
          results[k] = run_one(scenario, episodes[k]);
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

struct ScenarioSummary {
  double mean_mae = 0.0;
  double max_mae = 0.0;
  double fault_rate = 0.0;  // pooled over all control steps
  std::size_t collisions = 0;
  std::size_t completed = 0;
};

inline ScenarioSummary summarize(const std::vector<EpisodeResult>& results) {
  ScenarioSummary s;
  std::uint64_t steps = 0;
  std::uint64_t faults = 0;
  for (const auto& r : results) {
    s.mean_mae += r.metrics.mae;
    s.max_mae = std::max(s.max_mae, r.metrics.mae);
    s.collisions += r.metrics.collision ? 1 : 0;
    s.completed += r.metrics.outcome == sim::Outcome::kCompleted ? 1 : 0;
    steps += r.log.controller.step_count;
    faults += r.log.controller.fault_count;
  }
  if (!results.empty()) s.mean_mae /= static_cast<double>(results.size());
  s.fault_rate = steps > 0 ? 100.0 * static_cast<double>(faults) / static_cast<double>(steps) : 0.0;
  return s;
}

inline nlohmann::json metrics_json(const eval::Metrics& m) {
  return {{"mae", m.mae},
          {"fault_rate", m.fault_rate},
          {"collision", m.collision},
          {"outcome", sim::to_string(m.outcome)},
          {"steps", m.steps},
          {"control_steps", m.control_steps},
          {"faults", m.faults}};
}

inline void write_metrics_csv_header(std::ostream& os) {
  os << "episode,seed,profile,curvature,outcome,steps,control_steps,faults,fault_rate,mae,collision\n";
}

inline void write_metrics_csv_row(std::ostream& os, const ScenarioSpec& scenario,
                                  const EpisodeResult& r) {
  const auto wp = scenario.world_for(r.spec);
  os << r.spec.name << ',' << r.spec.seed << ',' << sim::to_string(wp.profile) << ','
     << sim::detail::fmt_num(r.world.curvature) << ',' << sim::to_string(r.metrics.outcome) << ','
     << r.metrics.steps << ',' << r.metrics.control_steps << ',' << r.metrics.faults << ','
     << sim::detail::fmt_num(r.metrics.fault_rate) << ',' << sim::detail::fmt_num(r.metrics.mae)
     << ',' << (r.metrics.collision ? 1 : 0) << '\n';
}

/// Writes all artifacts of a finished run into `out_dir` (created if needed).
inline void write_artifacts(const ScenarioSpec& scenario, const std::vector<EpisodeResult>& results,
                            const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  // The output location is left out so identical runs give identical bytes.
  nlohmann::json settings = scenario_to_json(scenario);
  settings.erase("output_dir");
  const std::string resolved = settings.dump();
  for (const auto& r : results) {
    const std::vector<std::string> meta{
        "scenario: " + resolved, "episode: " + r.spec.name, "seed: " + std::to_string(r.spec.seed),
        "curvature: " + sim::detail::fmt_num(r.world.curvature)};
    {
      std::ofstream f(out_dir / (r.spec.name + ".csv"), std::ios::trunc);
      sim::write_episode_csv(f, r.log, meta);
    }
    {
      std::ofstream f(out_dir / (r.spec.name + "_commands.csv"), std::ios::trunc);
      sim::write_command_csv(f, r.log, meta);
    }
    {
      std::ofstream f(out_dir / (r.spec.name + ".svg"), std::ios::trunc);
      plot::write_episode_svg(f, r.world, r.midline, r.log,
                              r.spec.name + " (MAE " + plot::detail::f3(r.metrics.mae) + " m)");
    }
  }
  {
    std::ofstream f(out_dir / "metrics.csv", std::ios::trunc);
    write_metrics_csv_header(f);
    for (const auto& r : results) write_metrics_csv_row(f, scenario, r);
  }
  const auto sum = summarize(results);
  nlohmann::json report;
  report["scenario"] = settings;
  report["summary"] = {{"mean_mae", sum.mean_mae},
                       {"max_mae", sum.max_mae},
                       {"fault_rate", sum.fault_rate},
                       {"collisions", sum.collisions},
                       {"completed", sum.completed},
                       {"episodes", results.size()}};
  nlohmann::json eps = nlohmann::json::array();
  for (const auto& r : results) {
    auto m = metrics_json(r.metrics);
    m["name"] = r.spec.name;
    m["seed"] = r.spec.seed;
    m["midline_max_residual"] = r.midline.max_residual;
    eps.push_back(std::move(m));
  }
  report["episodes"] = std::move(eps);
  std::ofstream f(out_dir / "metrics.json", std::ios::trunc);
  f << report.dump(2) << '\n';
}

}  // namespace vinerow
