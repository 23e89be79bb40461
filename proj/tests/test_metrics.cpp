#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "d2dcache/metrics.hpp"
#include "d2dcache/mobility.hpp"
#include "support.hpp"

using namespace d2dcache;

namespace {

double log2_rate(double bandwidth, double rx_dbm, double psd_dbm_hz)
{
  const double noise_dbm = psd_dbm_hz + 10.0 * std::log10(bandwidth);
  return bandwidth * std::log2(1.0 + std::pow(10.0, (rx_dbm - noise_dbm) / 10.0));
}

Trace static_window(const std::vector<Point>& pts, double side = 250.0)
{
  Trace t(1, static_cast<int>(pts.size()), side);
  for (int n = 0; n < t.uts; ++n) t.at(0, n) = pts[n];
  return t;
}

PreferenceMatrix uniform_pref(int n, int m)
{
  return PreferenceMatrix{Matrix::Constant(n, m, 1.0 / m)};
}

}  // namespace

TEST(Welfare, Sums)
{
  Matrix v(2, 2);
  v << 4, 1, -2, 3;
  BinaryMatrix x = BinaryMatrix::Zero(2, 2);
  EXPECT_EQ(social_welfare(x, v), 0.0);
  x(0, 0) = 1;
  EXPECT_EQ(social_welfare(x, v), 4.0);
  x(1, 1) = 1;
  x(1, 0) = 1;
  EXPECT_EQ(social_welfare(x, v), 5.0);
  EXPECT_THROW(social_welfare(BinaryMatrix::Zero(1, 2), v), Error);
}

TEST(Offloading, Examples)
{
  const Matrix f = Matrix::Constant(2, 1, 1.0);
  BinaryMatrix reach = BinaryMatrix::Zero(2, 2);
  reach(0, 1) = reach(1, 0) = 1;
  BinaryMatrix x = BinaryMatrix::Zero(2, 1);
  EXPECT_EQ(offloading_ratio(x, f, reach), std::make_pair(0.0, 0.0));
  x(0, 0) = 1;
  const auto [self, reachable] = offloading_ratio(x, f, reach);
  EXPECT_DOUBLE_EQ(self, 0.5);
  EXPECT_DOUBLE_EQ(reachable, 1.0);
  x(1, 0) = 1;
  EXPECT_EQ(offloading_ratio(x, f, reach), std::make_pair(1.0, 1.0));
}

TEST(Delay, NoCachingMatchesClosedForm)
{
  const RadioParams radio;
  const double s = 8e6;
  // Two UTs 100 m apart, neither near the other; BS at (125, 125).
  const std::vector<Point> pts = {{125.0, 25.0}, {125.0, 225.0}};
  const auto rep = evaluate_placement(BinaryMatrix::Zero(2, 3), uniform_pref(2, 3), Matrix(),
                                      {static_window(pts)}, radio, s);
  // 100 m from the BS, two UTs share the cellular band.
  const double pl = 37.6 * std::log10(0.1) + 128.1;
  const double r_bs = log2_rate(radio.bandwidth_cellular_hz / 2, 43.0 - pl, -174.0);
  const double per_ut = s / r_bs + s / 1.5e6;
  EXPECT_NEAR(rep.avg_delay, per_ut, 1e-9 * per_ut);
  EXPECT_NEAR(rep.backhaul_delay, 8e6 / 1.5e6, 1e-12);
  EXPECT_NEAR(rep.backhaul_delay, 5.3333333333, 1e-9);
  EXPECT_EQ(rep.offloading_self, 0.0);
  EXPECT_EQ(rep.offloading_reachable, 0.0);
}

TEST(Delay, OwnCacheIsFree)
{
  PreferenceMatrix pref{Matrix::Zero(3, 3)};
  BinaryMatrix x = BinaryMatrix::Zero(3, 3);
  for (int n = 0; n < 3; ++n) {
    pref.f(n, n) = 1.0;
    x(n, n) = 1;
  }
  const auto rep = evaluate_placement(x, pref, Matrix(),
                                      {static_window({{10, 10}, {100, 100}, {200, 30}})},
                                      RadioParams{}, 8e6);
  EXPECT_EQ(rep.avg_delay, 0.0);
  EXPECT_EQ(rep.offloading_self, 1.0);
}

TEST(Delay, TwoUtsInContact)
{
  const RadioParams radio;
  const double s = 8e6;
  BinaryMatrix x = BinaryMatrix::Zero(2, 1);
  x(0, 0) = 1;
  const auto rep = evaluate_placement(x, uniform_pref(2, 1), Matrix(),
                                      {static_window({{50, 50}, {55, 50}})}, radio, s);
  EXPECT_DOUBLE_EQ(rep.offloading_self, 0.5);
  EXPECT_DOUBLE_EQ(rep.offloading_reachable, 1.0);
  // UT 1 fetches from UT 0 over a single D2D link, 5 m away.
  const double r = log2_rate(radio.bandwidth_d2d_hz, 23.0 - (40.0 * std::log10(0.005) + 148.0), -174.0);
  EXPECT_NEAR(rep.per_ut_delay[0], 0.0, 0.0);
  EXPECT_NEAR(rep.per_ut_delay[1], s / r, 1e-9 * s / r);
  EXPECT_NEAR(rep.avg_delay, 0.5 * s / r, 1e-9 * s / r);
}

TEST(Delay, ContactOnAnySlotAndWeakestSlotRate)
{
  const RadioParams radio;
  Trace t(3, 2, 250.0);
  t.at(0, 0) = {50, 50};
  t.at(0, 1) = {52, 50};
  t.at(1, 0) = {50, 50};
  t.at(1, 1) = {58, 50};
  t.at(2, 0) = {50, 50};
  t.at(2, 1) = {150, 50};
  BinaryMatrix x = BinaryMatrix::Zero(2, 1);
  x(0, 0) = 1;
  const auto rep = evaluate_placement(x, uniform_pref(2, 1), Matrix(), {t}, radio, 8e6);
  const double r = log2_rate(radio.bandwidth_d2d_hz, 23.0 - (40.0 * std::log10(0.008) + 148.0), -174.0);
  EXPECT_NEAR(rep.per_ut_delay[1], 8e6 / r, 1e-9 * 8e6 / r);
}

TEST(Delay, AveragesOverWindows)
{
  const RadioParams radio;
  BinaryMatrix x = BinaryMatrix::Zero(2, 1);
  x(0, 0) = 1;
  const Trace near = static_window({{50, 50}, {55, 50}});
  const Trace far = static_window({{50, 50}, {150, 50}});
  const auto a = evaluate_placement(x, uniform_pref(2, 1), Matrix(), {near}, radio, 8e6);
  const auto b = evaluate_placement(x, uniform_pref(2, 1), Matrix(), {far}, radio, 8e6);
  const auto both = evaluate_placement(x, uniform_pref(2, 1), Matrix(), {near, far}, radio, 8e6);
  EXPECT_NEAR(both.avg_delay, 0.5 * (a.avg_delay + b.avg_delay), 1e-12);
  EXPECT_NEAR(both.offloading_reachable, 0.75, 1e-12);
  EXPECT_THROW(evaluate_placement(x, uniform_pref(2, 1), Matrix(), {}, radio, 8e6), Error);
}

TEST(Delay, AddingACachedChunkNeverHurts)
{
  RandomStream rng(314);
  const Scenario sc = default_scenario();
  MobilityParams mp = sc.mobility;
  mp.homepoints_per_cluster = 4;
  mp.uts_per_homepoint = 1;
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto hp = generate_homepoints(mp, rng.split(static_cast<std::uint64_t>(trial)));
    std::vector<Trace> windows;
    for (int k = 0; k < 3; ++k) {
      windows.push_back(simulate_trace(mp, hp, 1, rng.split(static_cast<std::uint64_t>(1000 + trial * 3 + k))));
    }
    const int N = hp.ut_count();
    const int M = 4;
    ContentParams cp;
    cp.chunk_count = M;
    const auto pref = generate_preferences(cp, N, RandomStream(trial));
    BinaryMatrix x = BinaryMatrix::Zero(N, M);
    for (int n = 0; n < N; ++n) {
      if (rng.uniform() < 0.5) x(n, static_cast<int>(rng.uniform_index(M))) = 1;
    }
    const auto before = evaluate_placement(x, pref, Matrix(), windows, sc.radio, 8e6);
    // Fill one empty cache.
    for (int n = 0; n < N; ++n) {
      if (x.row(n).sum() != 0) continue;
      BinaryMatrix y = x;
      y(n, static_cast<int>(rng.uniform_index(M))) = 1;
      const auto after = evaluate_placement(y, pref, Matrix(), windows, sc.radio, 8e6);
      EXPECT_LE(after.avg_delay, before.avg_delay + 1e-9) << "trial " << trial;
      EXPECT_GE(after.offloading_self, before.offloading_self - 1e-12);
      EXPECT_GE(after.offloading_reachable, before.offloading_reachable - 1e-12);
      ++checked;
      break;
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(Delay, InvariantsOnRandomPlacements)
{
  RandomStream rng(7);
  const Scenario sc = default_scenario();
  const auto hp = generate_homepoints(sc.mobility, rng.split("h"));
  std::vector<Trace> windows;
  for (int k = 0; k < 4; ++k) windows.push_back(simulate_trace(sc.mobility, hp, 1, rng.split(static_cast<std::uint64_t>(k))));
  const auto pref = generate_preferences(sc.content, sc.ut_count(), rng.split("p"));
  for (int trial = 0; trial < 10; ++trial) {
    BinaryMatrix x = BinaryMatrix::Zero(sc.ut_count(), sc.chunk_count());
    for (int n = 0; n < sc.ut_count(); ++n) x(n, static_cast<int>(rng.uniform_index(sc.chunk_count()))) = 1;
    const auto rep = evaluate_placement(x, pref, Matrix(), windows, sc.radio, sc.content.chunk_size_bits);
    EXPECT_GE(rep.avg_delay, 0.0);
    EXPECT_GE(rep.offloading_self, 0.0);
    EXPECT_LE(rep.offloading_self, rep.offloading_reachable);
    EXPECT_LE(rep.offloading_reachable, 1.0);
    EXPECT_LE(rep.backhaul_delay, rep.avg_delay);
  }
}
