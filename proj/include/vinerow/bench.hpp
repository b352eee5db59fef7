#pragma once

// Latency of each post-segmentation pipeline stage on synthetic frames.

#include <chrono>
#include <ostream>
#include <string>
#include <vector>

#include "vinerow/episode.hpp"
#include "vinerow/error.hpp"
#include "vinerow/eval.hpp"
#include "vinerow/raster.hpp"
#include "vinerow/rng.hpp"
#include "vinerow/spc.hpp"

namespace vinerow::bench {

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{
      "fusion",  "depth_mask", "ctrl_map", "noise_reduction", "histogram",
      "clustering", "control",   "full_step"};
  return names;
}

struct StageTiming {
  std::string stage;
  eval::Summary ms;
};

struct ResolutionReport {
  std::size_t resolution = 0;
  std::size_t iterations = 0;
  std::vector<StageTiming> stages;

  const StageTiming& stage(const std::string& name) const {
    for (const auto& s : stages) {
      if (s.stage == name) return s;
    }
    throw InputError("no stage named " + name);
  }
};

/// Vines on both sides with a free band in the middle, plus sparse speckle.
struct SyntheticFrames {
  std::vector<raster::SegMap> masks;
  raster::DepthMap depth;
};

inline SyntheticFrames synthetic_frames(std::size_t n, std::size_t window, std::uint64_t seed) {
  SplitMix64 rng(seed);
  SyntheticFrames f;
  for (std::size_t t = 0; t < window; ++t) {
    raster::SegMap m{BinaryGrid(n, n), static_cast<std::int64_t>(t)};
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const bool side = j < n / 3 || j >= n - n / 3;
        m.cells(i, j) = (side || rng.uniform() < 0.02) ? 1 : 0;
      }
    }
    f.masks.push_back(std::move(m));
  }
  f.depth.cells = Grid<float>(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      f.depth.cells(i, j) = rng.uniform() < 0.05 ? 0.0F : static_cast<float>(rng.uniform(0.3, 6.0));
    }
  }
  return f;
}

inline ResolutionReport bench_resolution(std::size_t n, std::size_t iterations,
                                         const raster::RasterConfig& rcfg = {},
                                         const spc::SpcConfig& scfg = {}) {
  if (n < 4) throw InputError("bench: resolution must be >= 4, got " + std::to_string(n));
  if (iterations == 0) throw InputError("bench: iterations must be >= 1");
  rcfg.validate();
  scfg.validate();
  using clock = std::chrono::steady_clock;
  const auto frames = synthetic_frames(n, rcfg.s_window, 0xBE4C + n);
  ResolutionReport rep;
  rep.resolution = n;
  rep.iterations = iterations;
  for (const auto& name : stage_names()) rep.stages.push_back({name, {}});
  auto timed = [&](std::size_t idx, auto&& fn) {
    const auto t0 = clock::now();
    auto result = fn();
    const auto t1 = clock::now();
    rep.stages[idx].ms.add(std::chrono::duration<double, std::milli>(t1 - t0).count());
    return result;
  };
  spc::ControllerState state;
  std::size_t sink = 0;  // keeps the optimizer honest
  for (std::size_t it = 0; it < iterations; ++it) {
    const auto cum = timed(0, [&] { return raster::fuse_segmentations(frames.masks, rcfg.s_window); });
    const auto mask = timed(1, [&] { return raster::depth_binary_mask(frames.depth, rcfg.l_depth); });
    const auto ctrl = timed(2, [&] { return raster::make_ctrl_map(cum, mask, rcfg.fusion_threshold); });
    const auto clean = timed(3, [&] { return spc::noise_reduction(ctrl, scfg.th_noise_frac); });
    const auto prof = timed(4, [&] { return spc::column_histogram(clean); });
    const auto clusters =
        timed(5, [&] { return spc::find_zero_clusters(prof, scfg.min_cluster_len_for(n)); });
    const auto cmd = timed(6, [&] {
      spc::ControllerState s = state;
      const auto c = spc::select_cluster(clusters, s, n, scfg.pcc_near_tol_for(n));
      if (!c) return spc::VelocityCommand{};
      return spc::ema_update(s, spc::control_function(c->center(), n, scfg.v_max, scfg.w_max),
                             scfg.alpha_ema);
    });
    const auto full = timed(7, [&] {
      return spc::spc_step(raster::preprocess(frames.masks, frames.depth, rcfg), state, scfg);
    });
    sink += clusters.size() + (cmd.v_x > 0 ? 1 : 0) + (full ? 1 : 0);
  }
  if (sink == static_cast<std::size_t>(-1)) rep.iterations = 0;
  return rep;
}

inline std::vector<ResolutionReport> run_bench(const std::vector<std::size_t>& resolutions,
                                               std::size_t iterations,
                                               const raster::RasterConfig& rcfg = {},
                                               const spc::SpcConfig& scfg = {}) {
  std::vector<ResolutionReport> out;
  for (std::size_t n : resolutions) out.push_back(bench_resolution(n, iterations, rcfg, scfg));
  return out;
}

inline void write_bench_csv(std::ostream& os, const std::vector<ResolutionReport>& reports) {
  using sim::detail::fmt_num;
  os << "resolution,stage,iterations,mean_ms,sd_ms\n";
  for (const auto& r : reports) {
    for (const auto& s : r.stages) {
      os << r.resolution << ',' << s.stage << ',' << r.iterations << ',' << fmt_num(s.ms.mean)
         << ',' << fmt_num(s.ms.stddev()) << '\n';
    }
  }
}

}  // namespace vinerow::bench
