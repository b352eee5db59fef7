#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "vinerow/rng.hpp"
#include "vinerow/spc.hpp"

using namespace vinerow;
using namespace vinerow::spc;

namespace {

CtrlMap map_from_rows(const std::vector<std::string>& rows) {
  CtrlMap m{BinaryGrid(rows.front().size(), rows.size())};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m.cells(i, j) = rows[i][j] == '1' ? 1 : 0;
  }
  return m;
}

/// Obstacles everywhere except columns [lo, hi].
CtrlMap band_map(std::size_t w, std::size_t h, std::size_t lo, std::size_t hi) {
  CtrlMap m{BinaryGrid(w, h)};
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) m.cells(i, j) = (j < lo || j > hi) ? 1 : 0;
  }
  return m;
}

/// Independent oracle: every maximal zero run, found by extending from each
/// run start.
std::vector<ZeroCluster> oracle_runs(const std::vector<std::uint32_t>& c, std::size_t min_len) {
  std::vector<ZeroCluster> out;
  for (std::size_t s = 0; s < c.size(); ++s) {
    if (c[s] != 0 || (s > 0 && c[s - 1] == 0)) continue;
    std::size_t e = s;
    while (e + 1 < c.size() && c[e + 1] == 0) ++e;
    if (e - s + 1 >= min_len) out.push_back({s, e});
  }
  return out;
}

}  // namespace

TEST(NoiseReduction, AllZeroUnchanged) {
  const CtrlMap m{BinaryGrid(5, 4)};
  EXPECT_EQ(noise_reduction(m, 0.03).cells, m.cells);
}

TEST(NoiseReduction, HandComputedThreshold) {
  // row sums 4,4,0,1; th = 0.3 * 4 = 1.2
  const auto m = map_from_rows({"1111", "1111", "0000", "0100"});
  const auto out = noise_reduction(m, 0.3);
  EXPECT_EQ(out.cells, map_from_rows({"1111", "1111", "0000", "0000"}).cells);
}

TEST(NoiseReduction, EqualRowsSurvive) {
  const auto m = map_from_rows({"1010", "0101", "1100"});
  EXPECT_EQ(noise_reduction(m, 1.0).cells, m.cells);
  EXPECT_EQ(noise_reduction(m, 0.5).cells, m.cells);
}

TEST(ColumnHistogram, Examples) {
  CtrlMap ones{BinaryGrid(6, 4)};
  for (auto& c : ones.cells.cells()) c = 1;
  for (auto v : column_histogram(ones).values) EXPECT_EQ(v, 4U);

  CtrlMap single{BinaryGrid(6, 4)};
  single.cells(2, 3) = 1;
  const auto p = column_histogram(single);
  for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(p.values[j], j == 3 ? 1U : 0U);

  SplitMix64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    CtrlMap m{BinaryGrid(8, 8)};
    for (auto& c : m.cells.cells()) c = rng.below(2);
    const auto prof = column_histogram(m);
    for (std::size_t j = 0; j < 8; ++j) {
      std::uint32_t s = 0;
      for (std::size_t i = 0; i < 8; ++i) s += m.cells(i, j);
      ASSERT_EQ(prof.values[j], s);
      ASSERT_LE(prof.values[j], 8U);
    }
  }
}

TEST(ZeroClusters, Examples) {
  const auto c = find_zero_clusters({{3, 0, 0, 0, 2, 0, 5}}, 2);
  ASSERT_EQ(c.size(), 1U);
  EXPECT_EQ(c[0].start, 1U);
  EXPECT_EQ(c[0].end, 3U);
  EXPECT_EQ(c[0].length(), 3U);
  // Center of the pixel extent [1, 4).
  EXPECT_DOUBLE_EQ(c[0].center(), 2.5);

  const auto all = find_zero_clusters({std::vector<std::uint32_t>(10, 0)}, 1);
  ASSERT_EQ(all.size(), 1U);
  EXPECT_EQ(all[0], (ZeroCluster{0, 9}));
  EXPECT_DOUBLE_EQ(all[0].center(), 5.0);

  EXPECT_TRUE(find_zero_clusters({{1, 2, 3}}, 1).empty());
  EXPECT_TRUE(find_zero_clusters({{}}, 1).empty());
}

TEST(ZeroClusters, MatchesRunOracle) {
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 5000; ++trial) {
    const std::size_t w = 1 + rng.below(64);
    std::vector<std::uint32_t> c(w);
    const double p_zero = rng.uniform();
    for (auto& v : c) v = rng.uniform() < p_zero ? 0 : 1 + static_cast<std::uint32_t>(rng.below(5));
    const std::size_t min_len = 1 + rng.below(6);
    ASSERT_EQ(find_zero_clusters({c}, min_len), oracle_runs(c, min_len));
  }
}

TEST(SelectCluster, SingleClusterIsReturned) {
  ControllerState s;
  const std::vector<ZeroCluster> one{{0, 50}};
  EXPECT_EQ(select_cluster(one, s, 224, 23), one.front());
  s.initial = false;
  s.previous_cluster_center = 200.0;
  EXPECT_EQ(select_cluster(one, s, 224, 23), one.front());
  EXPECT_FALSE(select_cluster({}, s, 224, 23).has_value());
}

TEST(SelectCluster, InitialDropsSidesAndTakesLongest) {
  ControllerState s;
  const std::vector<ZeroCluster> cl{{0, 20}, {60, 120}, {200, 223}};
  EXPECT_EQ(select_cluster(cl, s, 224, 23), (ZeroCluster{60, 120}));
  const std::vector<ZeroCluster> only_sides{{0, 20}, {200, 223}};
  EXPECT_FALSE(select_cluster(only_sides, s, 224, 23).has_value());
  const std::vector<ZeroCluster> lengths{{10, 30}, {40, 100}, {150, 160}};
  EXPECT_EQ(select_cluster(lengths, s, 224, 23), (ZeroCluster{40, 100}));
}

TEST(SelectCluster, InitialTiesPreferCenterThenLeft) {
  ControllerState s;
  // Equal lengths; the second is closer to w/2 = 50.
  const std::vector<ZeroCluster> a{{5, 14}, {45, 54}, {70, 79}};
  EXPECT_EQ(select_cluster(a, s, 100, 10), (ZeroCluster{45, 54}));
  // Symmetric about the center: leftmost wins.
  const std::vector<ZeroCluster> b{{20, 29}, {70, 79}};
  EXPECT_EQ(select_cluster(b, s, 100, 10), (ZeroCluster{20, 29}));
}

TEST(SelectCluster, TracksPreviousCenter) {
  ControllerState s;
  s.initial = false;
  s.previous_cluster_center = 90.0;
  const std::vector<ZeroCluster> cl{{10, 30}, {85, 130}};
  EXPECT_EQ(select_cluster(cl, s, 224, 23), (ZeroCluster{85, 130}));

  // Near but not inside: nearest edge wins.
  s.previous_cluster_center = 50.0;
  const std::vector<ZeroCluster> near{{10, 40}, {65, 100}};
  EXPECT_EQ(select_cluster(near, s, 224, 23), (ZeroCluster{10, 40}));
  // Equidistant edges: the longer cluster.
  s.previous_cluster_center = 53.0;
  const std::vector<ZeroCluster> tie{{10, 47}, {58, 120}};
  EXPECT_EQ(select_cluster(tie, s, 224, 23), (ZeroCluster{58, 120}));
  // Nothing within tolerance: fault.
  s.previous_cluster_center = 150.0;
  const std::vector<ZeroCluster> far{{10, 40}, {200, 223}};
  EXPECT_FALSE(select_cluster(far, s, 224, 23).has_value());
}

TEST(SelectCluster, PersistentPccIsStable) {
  ControllerState s;
  s.initial = false;
  s.previous_cluster_center = 100.0;
  const std::vector<ZeroCluster> cl{{5, 30}, {80, 120}, {160, 210}};
  for (int k = 0; k < 50; ++k) EXPECT_EQ(select_cluster(cl, s, 224, 23), (ZeroCluster{80, 120}));
}

TEST(ControlFunction, Examples) {
  const auto c = control_function(112.0, 224, 1.0, 1.0);
  EXPECT_EQ(c.v_x, 1.0);
  EXPECT_EQ(c.w_z, 0.0);
  const auto q = control_function(56.0, 224, 1.0, 1.0);
  EXPECT_EQ(q.v_x, 0.75);
  EXPECT_EQ(q.w_z, 0.25);
  const auto r = control_function(168.0, 224, 1.0, 1.0);
  EXPECT_EQ(r.v_x, 0.75);
  EXPECT_EQ(r.w_z, -0.25);
  // Left-orientation mean abscissa reported for real video.
  const auto left = control_function(44.42, 224, 1.0, 1.0);
  EXPECT_NEAR(left.w_z, 0.364, 5e-4);
  EXPECT_NEAR(left.v_x, 0.636, 5e-4);
}

TEST(ControlFunction, EnergyIdentityAndRange) {
  SplitMix64 rng(4);
  for (int k = 0; k < 10000; ++k) {
    const std::size_t w = 2 + rng.below(400);
    const double vmax = rng.uniform(0.1, 3.0);
    const double wmax = rng.uniform(0.1, 3.0);
    const double x = rng.uniform(0.0, static_cast<double>(w));
    const auto c = control_function(x, w, vmax, wmax);
    ASSERT_NEAR(c.v_x / vmax + std::abs(c.w_z) / wmax, 1.0, 1e-12);
    ASSERT_GE(c.v_x, 0.0);
    ASSERT_LE(c.v_x, vmax);
    ASSERT_LE(std::abs(c.w_z), wmax);
  }
}

TEST(Ema, Examples) {
  ControllerState s;
  const auto e = ema_update(s, {1.0, 0.0}, 0.1);
  EXPECT_DOUBLE_EQ(e.v_x, 0.1);
  EXPECT_EQ(e.w_z, 0.0);

  ControllerState one;
  one.ema = {0.3, -0.7};
  EXPECT_EQ(ema_update(one, {0.8, 0.2}, 1.0), (VelocityCommand{0.8, 0.2}));
}

TEST(Ema, ClosedFormAndContraction) {
  SplitMix64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const double r = rng.uniform(-1.0, 1.0);
    const double a = rng.uniform(0.01, 1.0);
    const std::size_t k = rng.below(201);
    ControllerState s;
    double prev_gap = std::abs(0.0 - r);
    for (std::size_t t = 0; t < k; ++t) {
      ema_update(s, {r, r}, a);
      const double gap = std::abs(s.ema.w_z - r);
      ASSERT_NEAR(gap, (1.0 - a) * prev_gap, 1e-12);
      prev_gap = gap;
    }
    const double closed = r * (1.0 - std::pow(1.0 - a, static_cast<double>(k)));
    EXPECT_NEAR(s.ema.v_x, closed, 1e-12);
  }
}

TEST(SpcStep, CenteredBandConverges) {
  const auto m = band_map(224, 40, 80, 143);  // extent [80, 144) centered on 112
  ControllerState s;
  SpcConfig cfg;
  std::optional<VelocityCommand> out;
  for (int k = 0; k < 200; ++k) out = spc_step(m, s, cfg);
  ASSERT_TRUE(out);
  EXPECT_NEAR(out->v_x, 1.0, 1e-6);
  EXPECT_NEAR(out->w_z, 0.0, 1e-12);
  EXPECT_FALSE(s.initial);
  EXPECT_EQ(s.previous_cluster_center, 112.0);
  EXPECT_EQ(fault_rate(s), 0.0);
}

TEST(SpcStep, BlockedMapIsAFaultThatTouchesOnlyCounters) {
  ControllerState s;
  SpcConfig cfg;
  spc_step(band_map(224, 40, 60, 130), s, cfg);
  CtrlMap blocked{BinaryGrid(224, 40)};
  for (auto& c : blocked.cells.cells()) c = 1;
  const ControllerState before = s;
  EXPECT_FALSE(spc_step(blocked, s, cfg).has_value());
  EXPECT_EQ(s.fault_count, before.fault_count + 1);
  EXPECT_EQ(s.step_count, before.step_count + 1);
  ControllerState restored = s;
  restored.fault_count = before.fault_count;
  restored.step_count = before.step_count;
  EXPECT_EQ(restored, before);
}

TEST(SpcStep, DimensionMismatchThrows) {
  ControllerState s;
  EXPECT_THROW(spc_step(band_map(100, 10, 40, 60), s, SpcConfig{}, 224, 224), DimensionError);
}

TEST(SpcStep, RangeSafetyOnRandomMaps) {
  SplitMix64 rng(77);
  SpcConfig cfg;
  cfg.v_max = 0.7;
  cfg.w_max = 0.4;
  ControllerState s;
  for (int k = 0; k < 500; ++k) {
    CtrlMap m{BinaryGrid(64, 16)};
    const double p = rng.uniform();
    for (auto& c : m.cells.cells()) c = rng.uniform() < p ? 1 : 0;
    const auto out = spc_step(m, s, cfg);
    ASSERT_GE(s.ema.v_x, 0.0);
    ASSERT_LE(s.ema.v_x, cfg.v_max);
    ASSERT_LE(std::abs(s.ema.w_z), cfg.w_max);
    if (out) {
      ASSERT_EQ(*out, s.ema);
    }
  }
}

TEST(FaultRate, Arithmetic) {
  ControllerState s;
  EXPECT_THROW(fault_rate(s), InputError);
  s.step_count = 100;
  EXPECT_EQ(fault_rate(s), 0.0);
  s.step_count = 400;
  s.fault_count = 1;
  EXPECT_DOUBLE_EQ(fault_rate(s), 0.25);
}

TEST(SpcController, RepublishesThenTimesOut) {
  SpcConfig cfg;
  cfg.fault_timeout = 3;
  SpcController ctl(cfg, 224, 20);
  const auto good = band_map(224, 20, 50, 150);
  CtrlMap blocked{BinaryGrid(224, 20)};
  for (auto& c : blocked.cells.cells()) c = 1;

  const auto first = ctl.step(good);
  EXPECT_FALSE(first.trace.fault);
  const VelocityCommand held = first.command;
  for (int k = 1; k <= 3; ++k) {
    const auto o = ctl.step(blocked);
    EXPECT_TRUE(o.trace.fault);
    EXPECT_FALSE(o.timed_out);
    EXPECT_EQ(o.command, held) << "fault " << k;
  }
  const auto late = ctl.step(blocked);
  EXPECT_TRUE(late.timed_out);
  EXPECT_EQ(late.command, (VelocityCommand{0.0, 0.0}));
  // Recovery resumes from the preserved EMA state.
  const auto back = ctl.step(good);
  EXPECT_FALSE(back.trace.fault);
  EXPECT_EQ(ctl.consecutive_faults(), 0U);
  EXPECT_GT(back.command.v_x, held.v_x);
  EXPECT_EQ(ctl.state().fault_count, 4U);
  EXPECT_EQ(ctl.state().step_count, 6U);
}

TEST(SpcConfig, DefaultsAndValidation) {
  SpcConfig c;
  EXPECT_EQ(c.min_cluster_len_for(224), 12U);
  EXPECT_EQ(c.pcc_near_tol_for(224), 23U);
  c.alpha_ema = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.alpha_ema = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.v_max = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}
