#pragma once

// Ground-truth midline between the corridor rows, trajectory MAE and
// per-orientation controller statistics.

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vinerow/episode.hpp"
#include "vinerow/error.hpp"
#include "vinerow/geometry.hpp"
#include "vinerow/world.hpp"

namespace vinerow::eval {

using geom::Vec2;

/// c[0] + c[1] t + c[2] t^2 + c[3] t^3
struct Cubic {
  std::array<double, 4> c{};

  double operator()(double t) const noexcept { return ((c[3] * t + c[2]) * t + c[1]) * t + c[0]; }
};

namespace detail {

// Solves the 4x4 system a x = b by Gaussian elimination with partial pivoting.
inline std::array<double, 4> solve4(std::array<std::array<double, 4>, 4> a,
                                    std::array<double, 4> b) {
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (std::abs(a[piv][col]) < 1e-300) throw InputError("cubic fit: singular system");
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < 4; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int k = col; k < 4; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  std::array<double, 4> x{};
  for (int r = 3; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < 4; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

}  // namespace detail

/// Least-squares cubic through (t_k, v_k). The fit runs on t normalized to
/// [-1, 1]; the returned coefficients are in the original variable.
inline Cubic fit_cubic(std::span<const double> t, std::span<const double> v) {
  if (t.size() != v.size() || t.size() < 4) {
    throw InputError("fit_cubic needs at least 4 matching samples");
  }
  double lo = t[0];
  double hi = t[0];
  for (double x : t) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double mid = 0.5 * (lo + hi);
  const double half = hi > lo ? 0.5 * (hi - lo) : 1.0;
  std::array<std::array<double, 4>, 4> ata{};
  std::array<double, 4> atb{};
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double u = (t[k] - mid) / half;
    const std::array<double, 4> phi{1.0, u, u * u, u * u * u};
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) ata[i][j] += phi[i] * phi[j];
      atb[i] += phi[i] * v[k];
    }
  }
  const auto a = detail::solve4(ata, atb);
  // Expand sum a_i ((t - mid)/half)^i into powers of t.
  const double p = 1.0 / half;
  const double q = -mid / half;
  Cubic out;
  out.c[0] = a[0] + a[1] * q + a[2] * q * q + a[3] * q * q * q;
  out.c[1] = a[1] * p + 2.0 * a[2] * p * q + 3.0 * a[3] * p * q * q;
  out.c[2] = a[2] * p * p + 3.0 * a[3] * p * p * q;
  out.c[3] = a[3] * p * p * p;
  return out;
}

struct Midline {
  enum class Kind {
    kGraph,     // y = y_of(x) over x in [t_min, t_max]
    kArcLength  // (x_of(s), y_of(s)) over chord-length parameter s
  };

  Kind kind = Kind::kGraph;
  Cubic x_of;
  Cubic y_of;
  double t_min = 0.0;
  double t_max = 0.0;
  std::vector<Vec2> midpoints;
  /// Largest distance from a midpoint to the fitted curve.
  double max_residual = 0.0;
  /// Projection may extrapolate the fit this far past either end of the
  /// fitted range, so poses just beyond the first/last plant still get a
  /// lateral (not longitudinal) distance.
  double extension = 1.0;

  Vec2 point(double t) const noexcept {
    return kind == Kind::kGraph ? Vec2{t, y_of(t)} : Vec2{x_of(t), y_of(t)};
  }

  /// Nearest curve parameter to p: 1 cm sampling, then golden-section refinement.
  double project(Vec2 p) const {
    constexpr double kStep = 0.01;
    const double lo_t = t_min - extension;
    const double hi_t = t_max + extension;
    const auto n = static_cast<std::size_t>(std::ceil((hi_t - lo_t) / kStep));
    auto d2 = [&](double t) {
      const Vec2 q = point(t) - p;
      return q.dot(q);
    };
    double best_t = lo_t;
    double best = d2(lo_t);
    for (std::size_t k = 1; k <= n; ++k) {
      const double t = std::min(hi_t, lo_t + static_cast<double>(k) * kStep);
      const double v = d2(t);
      if (v < best) {
        best = v;
        best_t = t;
      }
    }
    double a = std::max(lo_t, best_t - kStep);
    double b = std::min(hi_t, best_t + kStep);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a);
    double e = a + g * (b - a);
    for (int it = 0; it < 60 && b - a > 1e-9; ++it) {
      if (d2(c) < d2(e)) {
        b = e;
      } else {
        a = c;
      }
      c = b - g * (b - a);
      e = a + g * (b - a);
    }
    const double t = 0.5 * (a + b);
    return d2(t) < best ? t : best_t;
  }

  double distance(Vec2 p) const { return (point(project(p)) - p).norm(); }
};

namespace detail {

inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double d1 = (b - a).cross(c - a);
  const double d2 = (b - a).cross(d - a);
  const double d3 = (d - c).cross(a - c);
  const double d4 = (d - c).cross(b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 &&
         d4 != 0;
}

}  // namespace detail

/// Midpoints between each point of row_a and its nearest point on row_b,
/// fitted with a cubic.
inline Midline compute_midline(std::span<const Vec2> row_a, std::span<const Vec2> row_b,
                               Midline::Kind kind) {
  if (row_a.size() < 2 || row_b.size() < 2) throw InputError("compute_midline: rows too short");
  for (std::size_t i = 0; i + 1 < row_a.size(); ++i) {
    for (std::size_t j = 0; j + 1 < row_b.size(); ++j) {
      if (detail::segments_intersect(row_a[i], row_a[i + 1], row_b[j], row_b[j + 1])) {
        throw InputError("compute_midline: rows intersect");
      }
    }
  }
  Midline m;
  m.kind = kind;
  for (const Vec2& p : row_a) {
    const Vec2 q = geom::closest_point_on_polyline(p, row_b);
    if ((q - p).norm() < 1e-9) throw InputError("compute_midline: rows touch");
    m.midpoints.push_back((p + q) * 0.5);
  }
  if (m.midpoints.size() < 4) throw InputError("compute_midline: need at least 4 row points");

  std::vector<double> t;
  std::vector<double> xs;
  std::vector<double> ys;
  double s = 0.0;
  for (std::size_t k = 0; k < m.midpoints.size(); ++k) {
    if (k > 0) s += (m.midpoints[k] - m.midpoints[k - 1]).norm();
    xs.push_back(m.midpoints[k].x);
    ys.push_back(m.midpoints[k].y);
    t.push_back(kind == Midline::Kind::kGraph ? m.midpoints[k].x : s);
  }
  if (kind == Midline::Kind::kGraph) {
    m.y_of = fit_cubic(xs, ys);
    m.x_of.c = {0.0, 1.0, 0.0, 0.0};
  } else {
    m.x_of = fit_cubic(t, xs);
    m.y_of = fit_cubic(t, ys);
  }
  m.t_min = *std::min_element(t.begin(), t.end());
  m.t_max = *std::max_element(t.begin(), t.end());
  for (const Vec2& p : m.midpoints) m.max_residual = std::max(m.max_residual, m.distance(p));
  return m;
}

/// Midline of the world's target corridor; straight worlds fit y(x), curved
/// worlds fit an arc-length parametrized cubic.
inline Midline compute_midline(const sim::World& world) {
  if (world.rows.size() < world.corridor + 2) throw InputError("world has no corridor row pair");
  return compute_midline(world.rows[world.corridor].plants,
                         world.rows[world.corridor + 1].plants,
                         world.curvature == 0.0 ? Midline::Kind::kGraph
                                                : Midline::Kind::kArcLength);
}

inline double trajectory_mae(std::span<const geom::Pose2D> poses, const Midline& midline) {
  if (poses.empty()) throw InputError("trajectory_mae: empty trajectory");
  double sum = 0.0;
  for (const auto& p : poses) sum += midline.distance(p.position());
  return sum / static_cast<double>(poses.size());
}

inline double trajectory_mae(const sim::EpisodeLog& log, const Midline& midline) {
  std::vector<geom::Pose2D> poses;
  poses.reserve(log.steps.size());
  for (const auto& s : log.steps) poses.push_back(s.pose);
  return trajectory_mae(poses, midline);
}

/// Sample mean and (n-1) standard deviation, accumulated with Welford's update.
struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) noexcept {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }
  double stddev() const noexcept {
    return count > 1 ? std::sqrt(m2 / static_cast<double>(count - 1)) : 0.0;
  }
};

/// One controller output as seen by the statistics (from a replay or episode).
struct ControlSample {
  bool fault = false;
  double x_c = 0.0;
  spc::VelocityCommand raw;
  spc::VelocityCommand ema;
};

struct ClassStats {
  Summary abscissa;
  Summary v_raw;
  Summary w_raw;
  Summary v_ema;
  Summary w_ema;
  std::size_t iterations = 0;
  std::size_t faults = 0;

  double fault_rate() const {
    return iterations == 0 ? 0.0
                           : 100.0 * static_cast<double>(faults) / static_cast<double>(iterations);
  }
};

using ClassLogs = std::map<std::string, std::vector<std::vector<ControlSample>>>;

/// Pools every non-fault sample of each class; faults only count toward FR.
inline std::map<std::string, ClassStats> orientation_stats(const ClassLogs& logs) {
  std::map<std::string, ClassStats> out;
  for (const auto& [label, runs] : logs) {
    if (runs.empty()) throw InputError("orientation_stats: class '" + label + "' has no logs");
    ClassStats st;
    for (const auto& run : runs) {
      for (const auto& s : run) {
        ++st.iterations;
        if (s.fault) {
          ++st.faults;
          continue;
        }
        st.abscissa.add(s.x_c);
        st.v_raw.add(s.raw.v_x);
        st.w_raw.add(s.raw.w_z);
        st.v_ema.add(s.ema.v_x);
        st.w_ema.add(s.ema.w_z);
      }
    }
    if (st.iterations == 0) throw InputError("orientation_stats: class '" + label + "' is empty");
    out.emplace(label, st);
  }
  return out;
}

inline std::vector<ControlSample> control_samples(const sim::EpisodeLog& log) {
  std::vector<ControlSample> out;
  for (const auto& s : log.steps) {
    if (s.warmup) continue;
    out.push_back({s.fault, s.x_c, s.raw, s.ema});
  }
  return out;
}

struct Metrics {
  double mae = 0.0;
  double fault_rate = 0.0;
  bool collision = false;
  sim::Outcome outcome = sim::Outcome::kTruncated;
  std::size_t steps = 0;
  std::size_t control_steps = 0;
  std::size_t faults = 0;
  std::map<std::string, ClassStats> per_class_stats;
};

inline Metrics episode_metrics(const sim::EpisodeLog& log, const Midline& midline) {
  Metrics m;
  m.outcome = log.outcome;
  m.collision = log.outcome == sim::Outcome::kCollision;
  m.steps = log.steps.size();
  m.control_steps = log.control_steps();
  m.faults = log.controller.fault_count;
  m.fault_rate = log.controller.step_count > 0 ? log.fault_rate() : 0.0;
  m.mae = log.steps.empty() ? 0.0 : trajectory_mae(log, midline);
  return m;
}

}  // namespace vinerow::eval
