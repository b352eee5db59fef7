#pragma once

// Pixel-domain preprocessing: fusion of consecutive segmentation masks,
// depth-based line-of-sight gating and the control map handed to SPC.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>

#include "vinerow/error.hpp"
#include "vinerow/grid.hpp"

namespace vinerow::raster {

inline constexpr std::size_t kDefaultFrameSize = 224;

/// Binary segmentation mask for one frame. 1 = vine/obstacle, 0 = free.
struct SegMap {
  BinaryGrid cells;
  std::int64_t timestamp = 0;

  std::size_t width() const noexcept { return cells.width(); }
  std::size_t height() const noexcept { return cells.height(); }
};

/// Per-pixel metric depth. Cells equal to `invalid_marker`, negative or
/// non-finite carry no depth return.
struct DepthMap {
  Grid<float> cells;
  float invalid_marker = 0.0F;

  std::size_t width() const noexcept { return cells.width(); }
  std::size_t height() const noexcept { return cells.height(); }

  bool valid(float v) const noexcept {
    return v != invalid_marker && std::isfinite(v) && v >= 0.0F;
  }
  bool valid(std::size_t row, std::size_t col) const noexcept { return valid(cells(row, col)); }
};

/// Sum of `window` consecutive masks; each cell lies in [0, window].
struct CumSegMap {
  Grid<std::uint16_t> cells;
  std::size_t window = 0;

  std::size_t width() const noexcept { return cells.width(); }
  std::size_t height() const noexcept { return cells.height(); }
};

/// Binary map consumed by SPC. 1 = obstacle, 0 = free space.
struct CtrlMap {
  BinaryGrid cells;

  std::size_t width() const noexcept { return cells.width(); }
  std::size_t height() const noexcept { return cells.height(); }
};

struct RasterConfig {
  std::size_t s_window = 3;
  double l_depth = 0.5;
  std::size_t fusion_threshold = 1;

  void validate() const {
    if (s_window < 1) throw ConfigError("s_window must be >= 1");
    if (!(l_depth > 0.0 && l_depth <= 1.0)) {
      throw ConfigError("l_depth must lie in (0, 1], got " + std::to_string(l_depth));
    }
    if (fusion_threshold < 1 || fusion_threshold > s_window) {
      throw ConfigError("fusion_threshold must lie in [1, s_window], got " +
                        std::to_string(fusion_threshold));
    }
  }
};

/// Cell-wise sum of exactly `expected_window` masks with consecutive
/// timestamps (oldest first).
inline CumSegMap fuse_segmentations(std::span<const SegMap> maps, std::size_t expected_window) {
  if (maps.size() != expected_window || expected_window == 0) {
    throw InputError("fuse_segmentations: expected " + std::to_string(expected_window) +
                     " maps, got " + std::to_string(maps.size()));
  }
  const auto& first = maps.front().cells;
  for (std::size_t n = 1; n < maps.size(); ++n) {
    require_same_shape(first, maps[n].cells, "fuse_segmentations");
    if (maps[n].timestamp != maps[n - 1].timestamp + 1) {
      throw InputError("fuse_segmentations: timestamps not consecutive (" +
                       std::to_string(maps[n - 1].timestamp) + " then " +
                       std::to_string(maps[n].timestamp) + ")");
    }
  }
  CumSegMap out{Grid<std::uint16_t>(first.width(), first.height()), expected_window};
  auto acc = out.cells.cells();
  for (const auto& m : maps) {
    auto src = m.cells.cells();
    for (std::size_t k = 0; k < acc.size(); ++k) {
      acc[k] = static_cast<std::uint16_t>(acc[k] + (src[k] != 0 ? 1 : 0));
    }
  }
  return out;
}

inline CumSegMap fuse_segmentations(std::span<const SegMap> maps) {
  return fuse_segmentations(maps, maps.size());
}

/// Largest valid depth; throws if the map has no valid cell.
inline float max_valid_depth(const DepthMap& depth) {
  float best = -1.0F;
  for (float v : depth.cells.cells()) {
    if (depth.valid(v) && v > best) best = v;
  }
  if (best < 0.0F) throw InputError("depth map has no valid cell");
  return best;
}

/// 1 where depth < l_depth * max(valid depth), 0 elsewhere (invalid cells are 0).
inline BinaryGrid depth_binary_mask(const DepthMap& depth, double l_depth) {
  if (!(l_depth > 0.0 && l_depth <= 1.0)) {
    throw InputError("l_depth must lie in (0, 1], got " + std::to_string(l_depth));
  }
  const double threshold = l_depth * static_cast<double>(max_valid_depth(depth));
  BinaryGrid out(depth.width(), depth.height());
  auto src = depth.cells.cells();
  auto dst = out.cells();
  for (std::size_t k = 0; k < src.size(); ++k) {
    dst[k] = (depth.valid(src[k]) && static_cast<double>(src[k]) < threshold) ? 1 : 0;
  }
  return out;
}

inline CtrlMap make_ctrl_map(const CumSegMap& cum, const BinaryGrid& depth_mask,
                             std::size_t fusion_threshold) {
  require_same_shape(cum.cells, depth_mask, "make_ctrl_map");
  if (fusion_threshold < 1) throw InputError("fusion_threshold must be >= 1");
  CtrlMap out{BinaryGrid(cum.width(), cum.height())};
  auto c = cum.cells.cells();
  auto m = depth_mask.cells();
  auto dst = out.cells.cells();
  for (std::size_t k = 0; k < c.size(); ++k) {
    dst[k] = (c[k] >= fusion_threshold && m[k] != 0) ? 1 : 0;
  }
  return out;
}

/// Fusion, depth gating and intersection in one call. `masks` holds the
/// window (oldest first); `depth` is the newest depth frame.
inline CtrlMap preprocess(std::span<const SegMap> masks, const DepthMap& depth,
                          const RasterConfig& config) {
  const CumSegMap cum = fuse_segmentations(masks, config.s_window);
  require_same_shape(cum.cells, depth.cells, "preprocess: depth vs masks");
  return make_ctrl_map(cum, depth_binary_mask(depth, config.l_depth), config.fusion_threshold);
}

}  // namespace vinerow::raster
