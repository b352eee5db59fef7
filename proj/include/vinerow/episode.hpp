#pragma once

// Closed-loop episode: render -> fuse/gate -> SPC -> unicycle step, with a
// per-step log that serializes to CSV.

#include <charconv>
#include <deque>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vinerow/kinematics.hpp"
#include "vinerow/raster.hpp"
#include "vinerow/render.hpp"
#include "vinerow/spc.hpp"
#include "vinerow/world.hpp"

namespace vinerow::sim {

enum class Outcome { kCompleted, kCollision, kTruncated };

inline std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::kCompleted:
      return "completed";
    case Outcome::kCollision:
      return "collision";
    case Outcome::kTruncated:
      return "truncated";
  }
  return "unknown";
}

struct EpisodeConfig {
  raster::RasterConfig raster;
  spc::SpcConfig spc;
  CameraModel camera;
  KinematicParams kinematics;
  std::size_t max_steps = 600;
  Pose2D start_pose;
  double flip_probability = 0.0;
  std::uint64_t noise_seed = 0;

  void validate() const {
    raster.validate();
    spc.validate();
    camera.validate();
    kinematics.validate();
    if (!(flip_probability >= 0.0 && flip_probability <= 0.05)) {
      throw ConfigError("flip_probability must lie in [0, 0.05]");
    }
  }
};

struct StepRecord {
  std::size_t step = 0;
  double time = 0.0;
  Pose2D pose;  // pose at which the frame was captured
  bool warmup = false;
  bool fault = false;
  double x_c = 0.0;
  double d = 0.0;
  spc::VelocityCommand raw;
  spc::VelocityCommand ema;
  spc::VelocityCommand published;
};

struct EpisodeLog {
  std::vector<StepRecord> steps;
  Outcome outcome = Outcome::kTruncated;
  Pose2D final_pose;
  spc::ControllerState controller;
  std::size_t frame_width = 0;

  /// Steps on which SPC actually ran (fusion window full).
  std::size_t control_steps() const {
    std::size_t n = 0;
    for (const auto& s : steps) n += s.warmup ? 0 : 1;
    return n;
  }
  double fault_rate() const { return spc::fault_rate(controller); }
};

/// Drives the robot down the corridor until it leaves the row
/// (completed), touches a canopy (collision) or runs out of steps (truncated).
inline EpisodeLog run_episode(const World& world, const EpisodeConfig& config) {
  config.validate();
  const auto& cam = config.camera;
  spc::SpcController controller(config.spc, cam.width, cam.height);
  const geom::ArcPath ref = world.reference();

  EpisodeLog log;
  log.frame_width = cam.width;
  Pose2D pose = config.start_pose;
  std::deque<raster::SegMap> window;
  log.outcome = Outcome::kTruncated;

  for (std::size_t step = 0; step < config.max_steps; ++step) {
    if (world.in_canopy(pose.position())) {
      log.outcome = Outcome::kCollision;
      break;
    }
    if (ref.project(pose.position()).first >= world.row_length) {
      log.outcome = Outcome::kCompleted;
      break;
    }

    RenderOptions ropt;
    ropt.flip_probability = config.flip_probability;
    ropt.noise_seed = config.noise_seed;
    ropt.timestamp = static_cast<std::int64_t>(step);
    RenderedViews views = render_views(world, pose, cam, ropt);
    window.push_back(std::move(views.seg));
    if (window.size() > config.raster.s_window) window.pop_front();

    StepRecord rec;
    rec.step = step;
    rec.time = static_cast<double>(step) * config.kinematics.dt;
    rec.pose = pose;
    if (window.size() < config.raster.s_window) {
      rec.warmup = true;
    } else {
      const std::vector<raster::SegMap> frames(window.begin(), window.end());
      const raster::CtrlMap ctrl = raster::preprocess(frames, views.depth, config.raster);
      const auto out = controller.step(ctrl);
      rec.fault = out.trace.fault;
      rec.x_c = out.trace.x_c;
      rec.d = out.trace.d;
      rec.raw = out.trace.raw;
      rec.ema = out.trace.ema;
      rec.published = out.command;
    }
    log.steps.push_back(rec);
    pose = step_kinematics(pose, rec.published, config.kinematics.dt);
  }
  log.final_pose = pose;
  log.controller = controller.state();
  return log;
}

namespace detail {

inline std::string fmt_num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

}  // namespace detail

/// `metadata` lines are written verbatim behind "# ".
inline void write_episode_csv(std::ostream& os, const EpisodeLog& log,
                              const std::vector<std::string>& metadata = {}) {
  for (const auto& m : metadata) os << "# " << m << '\n';
  os << "# outcome: " << to_string(log.outcome) << '\n';
  os << "step,x,y,theta,x_c,v_ema,w_ema,fault,outcome\n";
  for (std::size_t k = 0; k < log.steps.size(); ++k) {
    const auto& s = log.steps[k];
    const bool last = k + 1 == log.steps.size();
    os << s.step << ',' << detail::fmt_num(s.pose.x) << ',' << detail::fmt_num(s.pose.y) << ','
       << detail::fmt_num(s.pose.theta) << ',';
    if (!s.warmup && !s.fault) os << detail::fmt_num(s.x_c);
    os << ',' << detail::fmt_num(s.published.v_x) << ',' << detail::fmt_num(s.published.w_z)
       << ',' << (s.fault ? 1 : 0) << ',' << (last ? to_string(log.outcome) : "running") << '\n';
  }
}

/// Command log: one row per control step (warmup steps are not commands).
inline void write_command_csv(std::ostream& os, const EpisodeLog& log,
                              const std::vector<std::string>& metadata = {}) {
  for (const auto& m : metadata) os << "# " << m << '\n';
  os << "step,timestamp,x_c,d,v_raw,w_raw,v_ema,w_ema,fault\n";
  for (const auto& s : log.steps) {
    if (s.warmup) continue;
    os << s.step << ',' << detail::fmt_num(s.time) << ',';
    if (!s.fault) os << detail::fmt_num(s.x_c) << ',' << detail::fmt_num(s.d);
    else os << ',';
    os << ',' << detail::fmt_num(s.raw.v_x) << ',' << detail::fmt_num(s.raw.w_z) << ','
       << detail::fmt_num(s.published.v_x) << ',' << detail::fmt_num(s.published.w_z) << ','
       << (s.fault ? 1 : 0) << '\n';
  }
}

}  // namespace vinerow::sim
