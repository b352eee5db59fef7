#pragma once

#include <cmath>

#include "vinerow/error.hpp"
#include "vinerow/geometry.hpp"
#include "vinerow/spc.hpp"

namespace vinerow::sim {

struct KinematicParams {
  double dt = 0.2;  // s, one command period at 5 Hz

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  }
};

/// Exact unicycle integration of a constant (v, w) command over dt.
inline geom::Pose2D step_kinematics(const geom::Pose2D& pose, const spc::VelocityCommand& cmd,
                                    double dt) {
  if (!(dt > 0.0)) throw InputError("step_kinematics: dt must be positive");
  constexpr double kStraightEps = 1e-9;
  const double v = cmd.v_x;
  const double w = cmd.w_z;
  geom::Pose2D out = pose;
  if (std::abs(w) > kStraightEps) {
    const double th1 = pose.theta + w * dt;
    out.x += (v / w) * (std::sin(th1) - std::sin(pose.theta));
    out.y -= (v / w) * (std::cos(th1) - std::cos(pose.theta));
    out.theta = geom::normalize_angle(th1);
  } else {
    out.x += v * dt * std::cos(pose.theta);
    out.y += v * dt * std::sin(pose.theta);
    out.theta = geom::normalize_angle(pose.theta + w * dt);
  }
  return out;
}

}  // namespace vinerow::sim
