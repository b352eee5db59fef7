#pragma once

// Synthetic RGB-D substitute: a pinhole depth camera ray-cast against the
// plant boxes and the ground plane, plus a geometric segmentation oracle
// (1 where the first hit is canopy).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "vinerow/error.hpp"
#include "vinerow/geometry.hpp"
#include "vinerow/raster.hpp"
#include "vinerow/rng.hpp"
#include "vinerow/world.hpp"

namespace vinerow::sim {

struct CameraModel {
  double hfov = 1.204;  // rad
  double vfov = 0.737;  // rad
  std::size_t width = raster::kDefaultFrameSize;
  std::size_t height = raster::kDefaultFrameSize;
  double mount_height = 0.10;  // m above ground
  double tilt = 0.0;           // rad, positive pitches the optical axis down
  double max_range = 6.0;      // m

  double fx() const noexcept { return 0.5 * static_cast<double>(width) / std::tan(0.5 * hfov); }
  double fy() const noexcept { return 0.5 * static_cast<double>(height) / std::tan(0.5 * vfov); }

  void validate() const {
    auto open_pi = [](double a) { return a > 0.0 && a < std::numbers::pi; };
    if (!open_pi(hfov) || !open_pi(vfov)) throw ConfigError("camera fov must lie in (0, pi)");
    if (width == 0 || height == 0) throw ConfigError("camera resolution must be positive");
    if (!(max_range > 0.0)) throw ConfigError("camera max_range must be positive");
    if (!(mount_height >= 0.0)) throw ConfigError("camera mount_height must be >= 0");
  }
};

struct RenderOptions {
  double flip_probability = 0.0;  // per-pixel segmentation flip, [0, 0.05]
  std::uint64_t noise_seed = 0;
  std::int64_t timestamp = 0;
};

struct RenderedViews {
  raster::SegMap seg;
  raster::DepthMap depth;
};

namespace detail {

struct BoxHit {
  double t_in;   // horizontal distance where the ray enters the box footprint
  double t_out;  // ... and leaves it
};

// Slab test of a 2D ray (origin o, unit direction d) against a square of
// half-width hw centered at c whose sides follow `heading`.
inline bool ray_square(geom::Vec2 o, geom::Vec2 d, geom::Vec2 c, double heading, double hw,
                       BoxHit& hit) {
  const double ch = std::cos(heading);
  const double sh = std::sin(heading);
  const geom::Vec2 rel = o - c;
  const double ox = rel.x * ch + rel.y * sh;
  const double oy = -rel.x * sh + rel.y * ch;
  const double dx = d.x * ch + d.y * sh;
  const double dy = -d.x * sh + d.y * ch;
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  auto slab = [&](double orig, double dir) {
    if (std::abs(dir) < 1e-15) return std::abs(orig) <= hw;
    double a = (-hw - orig) / dir;
    double b = (hw - orig) / dir;
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    return t0 <= t1;
  };
  if (!slab(ox, dx) || !slab(oy, dy)) return false;
  if (t1 < 0.0) return false;
  hit = {t0, t1};
  return true;
}

struct Footprint {
  geom::Vec2 center;
  double heading;
  double halfwidth;
  double height;
};

// Horizontal box intervals crossed by one horizontal ray, sorted by entry.
inline std::vector<std::pair<BoxHit, const Footprint*>> cast_horizontal(
    geom::Vec2 origin, geom::Vec2 dir, const std::vector<Footprint>& boxes, double max_t) {
  std::vector<std::pair<BoxHit, const Footprint*>> hits;
  BoxHit h{};
  for (const auto& b : boxes) {
    if (ray_square(origin, dir, b.center, b.heading, b.halfwidth, h) && h.t_in <= max_t) {
      hits.emplace_back(h, &b);
    }
  }
  std::sort(hits.begin(), hits.end(),
            [](const auto& a, const auto& b) { return a.first.t_in < b.first.t_in; });
  return hits;
}

}  // namespace detail

/// Renders the segmentation oracle and depth map seen from `pose`. Depth is
/// the Euclidean hit distance; rays reaching nothing within max_range are
/// invalid (0). Ground hits are valid depth with segmentation 0.
inline RenderedViews render_views(const World& world, const Pose2D& pose, const CameraModel& cam,
                                  const RenderOptions& options = {}) {
  cam.validate();
  const double range = cam.max_range;
  const geom::Vec2 origin = pose.position();

  std::vector<detail::Footprint> boxes;
  for (const auto& row : world.rows) {
    const double reach = range + row.canopy_halfwidth * std::numbers::sqrt2;
    for (std::size_t k = 0; k < row.plants.size(); ++k) {
      if ((row.plants[k] - origin).norm() <= reach) {
        boxes.push_back({row.plants[k], row.headings[k], row.canopy_halfwidth,
                         row.canopy_height});
      }
    }
  }

  const std::size_t w = cam.width;
  const std::size_t h = cam.height;
  RenderedViews out{raster::SegMap{BinaryGrid(w, h), options.timestamp},
                    raster::DepthMap{Grid<float>(w, h, 0.0F), 0.0F}};
  const double fx = cam.fx();
  const double fy = cam.fy();
  const double ct = std::cos(cam.tilt);
  const double st = std::sin(cam.tilt);
  const double cth = std::cos(pose.theta);
  const double sth = std::sin(pose.theta);
  const double z0 = cam.mount_height;

  std::vector<std::pair<detail::BoxHit, const detail::Footprint*>> hits;
  geom::Vec2 cached_dir{std::numeric_limits<double>::quiet_NaN(), 0.0};

  for (std::size_t u = 0; u < w; ++u) {
    const double left = -(static_cast<double>(u) + 0.5 - 0.5 * static_cast<double>(w)) / fx;
    for (std::size_t v = 0; v < h; ++v) {
      const double up = -(static_cast<double>(v) + 0.5 - 0.5 * static_cast<double>(h)) / fy;
      const double fwd = ct + up * st;
      const double vert = up * ct - st;
      const double hx = fwd * cth - left * sth;
      const double hy = fwd * sth + left * cth;
      const double hn = std::hypot(hx, hy);
      const geom::Vec2 dir{hx / hn, hy / hn};
      const double slope = vert / hn;
      const double stretch = std::sqrt(1.0 + slope * slope);
      const double max_t = range / stretch;
      if (!(dir == cached_dir)) {
        hits = detail::cast_horizontal(origin, dir, boxes, range);
        cached_dir = dir;
      }

      double t_hit = std::numeric_limits<double>::infinity();
      bool canopy = false;
      if (slope < 0.0) t_hit = z0 / -slope;  // ground
      for (const auto& [box, fp] : hits) {
        if (box.t_in >= t_hit) break;
        // Portion of the footprint interval where the ray is within [0, height].
        double lo = std::max(box.t_in, 0.0);
        double hi = box.t_out;
        if (slope > 0.0) {
          hi = std::min(hi, (fp->height - z0) / slope);
        } else if (slope < 0.0) {
          hi = std::min(hi, z0 / -slope);
          lo = std::max(lo, (z0 - fp->height) / -slope);
        } else if (z0 > fp->height) {
          continue;
        }
        if (lo <= hi && lo < t_hit) {
          t_hit = lo;
          canopy = true;
        }
      }
      if (t_hit <= max_t && t_hit * stretch < range) {
        const double dist = t_hit * stretch;
        out.depth.cells(v, u) = static_cast<float>(dist);
        out.seg.cells(v, u) = canopy ? 1 : 0;
      }
    }
  }

  if (options.flip_probability > 0.0) {
    SplitMix64 rng(mix_seed(options.noise_seed, static_cast<std::uint64_t>(options.timestamp)));
    for (auto& c : out.seg.cells.cells()) {
      if (rng.uniform() < options.flip_probability) c = c != 0 ? 0 : 1;
    }
  }
  return out;
}

}  // namespace vinerow::sim
