#pragma once

// Parametric vineyard: parallel rows of box-shaped plants laid along offset
// curves of a constant-curvature reference path. The reference path (offset 0)
// is the center of the target corridor the robot drives through.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <cstdint>
#include <string>
#include <vector>

#include "vinerow/error.hpp"
#include "vinerow/geometry.hpp"
#include "vinerow/rng.hpp"

namespace vinerow::sim {

using geom::Pose2D;
using geom::Vec2;

enum class RowProfileKind { kStraight, kCurved };

inline std::string to_string(RowProfileKind p) {
  return p == RowProfileKind::kStraight ? "straight" : "curved";
}

inline RowProfileKind parse_profile(const std::string& s) {
  if (s == "straight") return RowProfileKind::kStraight;
  if (s == "curved") return RowProfileKind::kCurved;
  throw ConfigError("unknown row profile '" + s + "' (expected straight|curved)");
}

struct WorldParams {
  RowProfileKind profile = RowProfileKind::kStraight;
  double inter_row = 1.8;        // m, [1.70, 2.00]
  double plant_spacing = 0.85;   // m, [0.70, 1.00]
  double curvature = 1.0 / 30.0; // 1/m, signed (left turn positive); ignored for straight
  double row_length = 30.0;      // m of reference arc length
  std::size_t num_rows = 2;
  double canopy_halfwidth = 0.25;
  double canopy_height = 1.8;
  double jitter = 0.05;  // max plant displacement, m

  void validate() const {
    auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    if (!in(inter_row, 1.70, 2.00)) {
      throw ConfigError("inter_row must lie in [1.70, 2.00] m, got " + std::to_string(inter_row));
    }
    if (!in(plant_spacing, 0.70, 1.00)) {
      throw ConfigError("plant_spacing must lie in [0.70, 1.00] m, got " +
                        std::to_string(plant_spacing));
    }
    if (num_rows < 2) throw ConfigError("num_rows must be >= 2");
    if (!(row_length > 0.0)) throw ConfigError("row_length must be positive");
    if (!(canopy_halfwidth > 0.0 && canopy_halfwidth < 0.5 * inter_row)) {
      throw ConfigError("canopy_halfwidth must lie in (0, inter_row/2)");
    }
    if (!(canopy_height > 0.0)) throw ConfigError("canopy_height must be positive");
    if (!in(jitter, 0.0, 0.05)) throw ConfigError("jitter must lie in [0, 0.05] m");
    if (profile == RowProfileKind::kCurved) {
      if (curvature == 0.0) throw ConfigError("curved profile needs a nonzero curvature");
      const double reach = (static_cast<double>(num_rows) + 1.0) * inter_row;
      if (std::abs(curvature) * reach >= 0.5) {
        throw ConfigError("curvature too tight for the requested number of rows");
      }
    }
  }
};

/// A row of plants. `centerline` samples the nominal row curve and `plants`
/// holds the jittered plant centers at the same stations, in driving order.
/// Each plant is a vertical box of half-width `canopy_halfwidth` whose sides
/// follow the local row direction `headings[k]`.
struct VineRow {
  std::vector<Vec2> centerline;
  std::vector<Vec2> plants;
  std::vector<double> headings;
  double lateral_offset = 0.0;
  double canopy_height = 1.8;
  double canopy_halfwidth = 0.25;
};

struct World {
  std::vector<VineRow> rows;
  double inter_row = 1.8;
  double plant_spacing = 0.85;
  double curvature = 0.0;
  double row_length = 30.0;
  std::uint64_t rng_seed = 0;
  /// Index of the row on the right of the target corridor; the corridor is
  /// rows[corridor] / rows[corridor + 1].
  std::size_t corridor = 0;

  geom::ArcPath reference() const noexcept { return {curvature}; }

  /// Row-aligned pose at arc length s on the corridor center.
  Pose2D corridor_pose(double s, double lateral = 0.0, double heading_offset = 0.0) const {
    const auto ref = reference();
    const Vec2 p = ref.point(s, lateral);
    return {p.x, p.y, geom::normalize_angle(ref.heading(s) + heading_offset)};
  }

  /// Distance from p to the nearest row centerline.
  double nearest_row_distance(Vec2 p) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& row : rows) best = std::min(best, geom::polyline_distance(p, row.centerline));
    return best;
  }

  bool in_canopy(Vec2 p) const {
    for (const auto& row : rows) {
      if (geom::polyline_distance(p, row.centerline) < row.canopy_halfwidth) return true;
    }
    return false;
  }

  /// Reflection across the corridor axis (y -> -y). Row order is reversed so
  /// the corridor index stays valid.
  World mirrored() const {
    World m = *this;
    m.curvature = -curvature;
    m.rows.assign(rows.rbegin(), rows.rend());
    for (auto& row : m.rows) {
      row.lateral_offset = -row.lateral_offset;
      for (auto& p : row.centerline) p.y = -p.y;
      for (auto& p : row.plants) p.y = -p.y;
      for (auto& h : row.headings) h = -h;
    }
    m.corridor = rows.size() - 2 - corridor;
    return m;
  }
};

inline World generate_world(const WorldParams& params, std::uint64_t seed) {
  params.validate();
  World world;
  world.inter_row = params.inter_row;
  world.plant_spacing = params.plant_spacing;
  world.curvature = params.profile == RowProfileKind::kCurved ? params.curvature : 0.0;
  world.row_length = params.row_length;
  world.rng_seed = seed;
  world.corridor = (params.num_rows - 2) / 2;

  const geom::ArcPath ref = world.reference();
  SplitMix64 rng(mix_seed(seed, 0x57041D));
  for (std::size_t k = 0; k < params.num_rows; ++k) {
    VineRow row;
    row.canopy_height = params.canopy_height;
    row.canopy_halfwidth = params.canopy_halfwidth;
    row.lateral_offset =
        (static_cast<double>(k) - static_cast<double>(world.corridor) - 0.5) * params.inter_row;
    // Reference arc length per meter travelled along this offset curve.
    const double stretch = 1.0 - world.curvature * row.lateral_offset;
    const double ds = params.plant_spacing / stretch;
    const auto count = static_cast<std::size_t>(std::floor(params.row_length / ds + 1e-9)) + 1;
    for (std::size_t n = 0; n < count; ++n) {
      const double s = static_cast<double>(n) * ds;
      const double r = params.jitter * std::sqrt(rng.uniform());
      const double a = 2.0 * std::numbers::pi * rng.uniform();
      const Vec2 c = ref.point(s, row.lateral_offset);
      row.centerline.push_back(c);
      row.plants.push_back(c + Vec2{r * std::cos(a), r * std::sin(a)});
      row.headings.push_back(ref.heading(s));
    }
    world.rows.push_back(std::move(row));
  }
  return world;
}

}  // namespace vinerow::sim
