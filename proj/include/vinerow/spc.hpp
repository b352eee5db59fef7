#pragma once

// Segmentation-to-proportional-control: turns a binary control map into a
// smoothed (v_x, w_z) command by locating the free corridor in the column
// occupancy profile.
//
// Column coordinates are continuous: pixel column j spans [j, j+1), so a zero
// cluster over columns [start, end] has center (start + end + 1) / 2 and an
// entirely free frame of width w is centered at exactly w / 2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vinerow/error.hpp"
#include "vinerow/grid.hpp"
#include "vinerow/raster.hpp"

namespace vinerow::spc {

using raster::CtrlMap;

struct VelocityCommand {
  double v_x = 0.0;  // m/s along the robot x axis
  double w_z = 0.0;  // rad/s about the robot z axis (right-hand rule)

  friend bool operator==(const VelocityCommand&, const VelocityCommand&) = default;
};

/// Number of obstacle pixels per column.
struct ColumnProfile {
  std::vector<std::uint32_t> values;

  std::size_t width() const noexcept { return values.size(); }
};

/// Number of obstacle pixels per row.
struct RowProfile {
  std::vector<std::uint32_t> values;
};

/// Maximal run of zero columns, inclusive bounds.
struct ZeroCluster {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const noexcept { return end - start + 1; }
  double center() const noexcept { return 0.5 * static_cast<double>(start + end + 1); }
  bool contains(double x) const noexcept {
    return x >= static_cast<double>(start) && x <= static_cast<double>(end + 1);
  }
  /// Distance from x to the nearest cluster edge; 0 when contained.
  double edge_distance(double x) const noexcept {
    if (x < static_cast<double>(start)) return static_cast<double>(start) - x;
    if (x > static_cast<double>(end + 1)) return x - static_cast<double>(end + 1);
    return 0.0;
  }

  friend bool operator==(const ZeroCluster&, const ZeroCluster&) = default;
};

struct SpcConfig {
  double v_max = 1.0;
  double w_max = 1.0;
  double alpha_ema = 0.1;
  double th_noise_frac = 0.03;
  // Unset -> ceil(0.05 * w) and ceil(0.10 * w) respectively.
  std::optional<std::size_t> min_cluster_len;
  std::optional<std::size_t> pcc_near_tol;
  // Consecutive faults tolerated before SpcController publishes a zero command.
  std::size_t fault_timeout = 10;

  std::size_t min_cluster_len_for(std::size_t w) const {
    return min_cluster_len ? *min_cluster_len
                           : static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(w)));
  }
  std::size_t pcc_near_tol_for(std::size_t w) const {
    return pcc_near_tol ? *pcc_near_tol
                        : static_cast<std::size_t>(std::ceil(0.10 * static_cast<double>(w)));
  }

  void validate() const {
    if (!(v_max > 0.0)) throw ConfigError("v_max must be positive");
    if (!(w_max > 0.0)) throw ConfigError("w_max must be positive");
    if (!(alpha_ema > 0.0 && alpha_ema <= 1.0)) throw ConfigError("alpha_ema must lie in (0, 1]");
    if (!(th_noise_frac > 0.0)) throw ConfigError("th_noise_frac must be positive");
    if (min_cluster_len && *min_cluster_len == 0) throw ConfigError("min_cluster_len must be >= 1");
    if (pcc_near_tol && *pcc_near_tol == 0) throw ConfigError("pcc_near_tol must be >= 1");
  }
};

struct ControllerState {
  std::optional<double> previous_cluster_center;
  VelocityCommand ema;
  bool initial = true;
  std::uint64_t fault_count = 0;
  std::uint64_t step_count = 0;

  friend bool operator==(const ControllerState&, const ControllerState&) = default;
};

inline RowProfile row_histogram(const CtrlMap& map) {
  RowProfile out{std::vector<std::uint32_t>(map.height(), 0)};
  for (std::size_t i = 0; i < map.height(); ++i) {
    for (auto v : map.cells.row(i)) out.values[i] += v != 0 ? 1U : 0U;
  }
  return out;
}

/// Zeroes every row whose obstacle count is below th_noise_frac * max row count.
inline CtrlMap noise_reduction(const CtrlMap& map, double th_noise_frac) {
  const RowProfile g = row_histogram(map);
  const std::uint32_t peak =
      g.values.empty() ? 0 : *std::max_element(g.values.begin(), g.values.end());
  const double threshold = th_noise_frac * static_cast<double>(peak);
  CtrlMap out = map;
  for (std::size_t i = 0; i < map.height(); ++i) {
    if (static_cast<double>(g.values[i]) < threshold) {
      auto r = out.cells.row(i);
      std::fill(r.begin(), r.end(), std::uint8_t{0});
    }
  }
  return out;
}

inline ColumnProfile column_histogram(const CtrlMap& map) {
  ColumnProfile out{std::vector<std::uint32_t>(map.width(), 0)};
  for (std::size_t i = 0; i < map.height(); ++i) {
    auto r = map.cells.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out.values[j] += r[j] != 0 ? 1U : 0U;
  }
  return out;
}

/// Maximal zero runs, left to right, dropping runs shorter than min_cluster_len.
inline std::vector<ZeroCluster> find_zero_clusters(const ColumnProfile& profile,
                                                   std::size_t min_cluster_len) {
  std::vector<ZeroCluster> out;
  const auto& c = profile.values;
  std::size_t j = 0;
  while (j < c.size()) {
    if (c[j] != 0) {
      ++j;
      continue;
    }
    const std::size_t start = j;
    while (j < c.size() && c[j] == 0) ++j;
    ZeroCluster z{start, j - 1};
    if (z.length() >= min_cluster_len) out.push_back(z);
  }
  return out;
}

namespace detail {

inline double center_offset(const ZeroCluster& z, std::size_t w) {
  return std::abs(z.center() - 0.5 * static_cast<double>(w));
}

}  // namespace detail

/// Chooses the corridor to steer toward. Returns nullopt on a fault (no
/// cluster, no survivor of side removal, or no cluster at/near pcc).
inline std::optional<ZeroCluster> select_cluster(const std::vector<ZeroCluster>& clusters,
                                                 const ControllerState& state, std::size_t w,
                                                 std::size_t pcc_near_tol) {
  if (clusters.empty()) return std::nullopt;
  if (clusters.size() == 1) return clusters.front();

  if (state.initial || !state.previous_cluster_center) {
    std::optional<ZeroCluster> best;
    for (const auto& z : clusters) {
      if (z.start == 0 || z.end + 1 == w) continue;
      if (!best) {
        best = z;
        continue;
      }
      // Strict comparisons keep the leftmost on a full tie.
      if (z.length() > best->length() ||
          (z.length() == best->length() &&
           detail::center_offset(z, w) < detail::center_offset(*best, w))) {
        best = z;
      }
    }
    return best;
  }

  const double pcc = *state.previous_cluster_center;
  const auto tol = static_cast<double>(pcc_near_tol);
  std::optional<ZeroCluster> best;
  double best_dist = 0.0;
  for (const auto& z : clusters) {
    const double dist = z.edge_distance(pcc);
    if (dist > tol) continue;
    if (!best || dist < best_dist || (dist == best_dist && z.length() > best->length())) {
      best = z;
      best_dist = dist;
    }
  }
  return best;
}

/// Proportional laws on the normalized squared offset of the corridor center:
/// w_z = -sign(d) * w_max * r, v_x = v_max * (1 - r), r = d^2 / (w/2)^2.
inline VelocityCommand control_function(double x_c, std::size_t w, double v_max, double w_max) {
  const double half = 0.5 * static_cast<double>(w);
  const double d = x_c - half;
  const double r = (d * d) / (half * half);
  const double omega = d >= 0.0 ? -w_max * r : w_max * r;
  return {std::clamp(v_max * (1.0 - r), 0.0, v_max), std::clamp(omega, -w_max, w_max)};
}

inline VelocityCommand ema_update(ControllerState& state, const VelocityCommand& raw,
                                  double alpha) {
  state.ema.v_x = state.ema.v_x * (1.0 - alpha) + raw.v_x * alpha;
  state.ema.w_z = state.ema.w_z * (1.0 - alpha) + raw.w_z * alpha;
  return state.ema;
}

/// Everything one control iteration produced, for logging.
struct StepTrace {
  bool fault = true;
  std::optional<ZeroCluster> cluster;
  std::size_t cluster_count = 0;
  double x_c = 0.0;
  double d = 0.0;
  VelocityCommand raw;
  VelocityCommand ema;
};

inline StepTrace spc_step_traced(const CtrlMap& map, ControllerState& state,
                                 const SpcConfig& config, std::size_t expected_width = 0,
                                 std::size_t expected_height = 0) {
  if ((expected_width != 0 && map.width() != expected_width) ||
      (expected_height != 0 && map.height() != expected_height)) {
    throw DimensionError("spc_step: map is " + std::to_string(map.width()) + "x" +
                         std::to_string(map.height()) + ", expected " +
                         std::to_string(expected_width) + "x" + std::to_string(expected_height));
  }
  if (map.width() == 0) throw DimensionError("spc_step: empty map");
  const std::size_t w = map.width();
  ++state.step_count;

  const CtrlMap cleaned = noise_reduction(map, config.th_noise_frac);
  const auto clusters =
      find_zero_clusters(column_histogram(cleaned), config.min_cluster_len_for(w));
  StepTrace trace;
  trace.cluster_count = clusters.size();
  trace.cluster = select_cluster(clusters, state, w, config.pcc_near_tol_for(w));
  if (!trace.cluster) {
    ++state.fault_count;
    trace.ema = state.ema;
    return trace;
  }
  trace.fault = false;
  trace.x_c = trace.cluster->center();
  trace.d = trace.x_c - 0.5 * static_cast<double>(w);
  trace.raw = control_function(trace.x_c, w, config.v_max, config.w_max);
  trace.ema = ema_update(state, trace.raw, config.alpha_ema);
  state.previous_cluster_center = trace.x_c;
  state.initial = false;
  return trace;
}

/// One SPC iteration. nullopt means the frame was discarded (fault).
inline std::optional<VelocityCommand> spc_step(const CtrlMap& map, ControllerState& state,
                                               const SpcConfig& config,
                                               std::size_t expected_width = 0,
                                               std::size_t expected_height = 0) {
  const StepTrace t = spc_step_traced(map, state, config, expected_width, expected_height);
  if (t.fault) return std::nullopt;
  return t.ema;
}

/// Percentage of SPC iterations that produced no command.
inline double fault_rate(const ControllerState& state) {
  if (state.step_count == 0) throw InputError("fault_rate: no steps recorded");
  return 100.0 * static_cast<double>(state.fault_count) / static_cast<double>(state.step_count);
}

/// Wraps the controller state with the actuator-facing fault policy: a fault
/// re-publishes the last command; after more than `fault_timeout` consecutive
/// faults the published command drops to zero.
class SpcController {
 public:
  struct Output {
    VelocityCommand command;
    StepTrace trace;
    bool timed_out = false;
  };

  explicit SpcController(SpcConfig config, std::size_t width = 0, std::size_t height = 0)
      : config_(std::move(config)), width_(width), height_(height) {
    config_.validate();
  }

  Output step(const CtrlMap& map) {
    Output out;
    out.trace = spc_step_traced(map, state_, config_, width_, height_);
    if (!out.trace.fault) {
      consecutive_faults_ = 0;
      last_ = out.trace.ema;
    } else if (++consecutive_faults_ > config_.fault_timeout) {
      out.timed_out = true;
      last_ = {};
    }
    out.command = last_;
    return out;
  }

  const ControllerState& state() const noexcept { return state_; }
  const SpcConfig& config() const noexcept { return config_; }
  const VelocityCommand& last_published() const noexcept { return last_; }
  std::size_t consecutive_faults() const noexcept { return consecutive_faults_; }

 private:
  SpcConfig config_;
  std::size_t width_;
  std::size_t height_;
  ControllerState state_;
  VelocityCommand last_;
  std::size_t consecutive_faults_ = 0;
};

}  // namespace vinerow::spc
