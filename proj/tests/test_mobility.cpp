#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "d2dcache/geometry.hpp"
#include "d2dcache/mobility.hpp"
#include "d2dcache/scenario.hpp"

using namespace d2dcache;

TEST(Torus, WrapDistanceTakesShortPath)
{
  EXPECT_NEAR(wrap_distance({1, 1}, {249, 249}, 250), std::sqrt(8.0), 1e-12);
  EXPECT_NEAR(wrap_distance({10, 0}, {20, 0}, 250), 10.0, 1e-12);
  EXPECT_NEAR(wrap_distance({0, 0}, {125, 125}, 250), 125.0 * std::numbers::sqrt2, 1e-12);
  EXPECT_DOUBLE_EQ(wrap_coordinate(-1.0, 250.0), 249.0);
  EXPECT_DOUBLE_EQ(wrap_coordinate(250.0, 250.0), 0.0);
}

TEST(Torus, MeanAcrossTheSeam)
{
  const std::vector<Point> pts = {{249.0, 10.0}, {1.0, 10.0}};
  const Point m = torus_mean(pts, 250.0);
  EXPECT_NEAR(wrap_distance(m, {0.0, 10.0}, 250.0), 0.0, 1e-9);
}

TEST(Homepoints, LayoutAndIndexing)
{
  MobilityParams mp;
  mp.cluster_count = 3;
  mp.homepoints_per_cluster = 4;
  mp.uts_per_homepoint = 2;
  const auto hp = generate_homepoints(mp, RandomStream(11));
  ASSERT_EQ(hp.cluster_centers.size(), 3U);
  ASSERT_EQ(hp.homepoints.size(), 12U);
  ASSERT_EQ(hp.ut_count(), 24);
  for (int n = 0; n < hp.ut_count(); ++n) {
    EXPECT_EQ(hp.ut_homepoint[n], n / 2);
    EXPECT_EQ(hp.ut_cluster[n], n / 8);
  }
  for (int h = 0; h < 12; ++h) {
    const Point c = hp.cluster_centers[h / 4];
    EXPECT_LE(wrap_distance(hp.homepoints[h], c, mp.coverage_radius_m),
              mp.cluster_radius_m + 1e-9);
  }
}

namespace {

/// Angle of the circle of radius rho that lies inside the square cell [-side/2, side/2]^2.
double arc_inside_square(double rho, double side)
{
  const double half = 0.5 * side;
  if (rho <= half) return 2.0 * std::numbers::pi;
  if (rho >= half * std::numbers::sqrt2) return 0.0;
  return 2.0 * std::numbers::pi - 8.0 * std::acos(half / rho);
}

/// CDF of the wrap distance for density proportional to min(1, d^-delta) over the torus.
struct DistanceCdfOracle
{
  std::vector<double> grid;
  std::vector<double> cdf;

  DistanceCdfOracle(double delta, double side)
  {
    const double top = 0.5 * side * std::numbers::sqrt2;
    const int n = 200000;
    grid.push_back(0.0);
    cdf.push_back(0.0);
    // [0, 1]: s = 1 and the full circle fits.
    const int inner = 2000;
    for (int i = 1; i <= inner; ++i) {
      const double r = static_cast<double>(i) / inner;
      grid.push_back(r);
      cdf.push_back(std::numbers::pi * r * r);
    }
    // [1, top]: log-spaced trapezoid of rho^(1 - delta) * arc(rho).
    const double lt = std::log(top);
    double prev_r = 1.0;
    double prev_g = arc_inside_square(1.0, side);
    for (int i = 1; i <= n; ++i) {
      const double r = std::exp(lt * i / n);
      const double g = std::pow(r, 1.0 - delta) * arc_inside_square(r, side);
      cdf.push_back(cdf.back() + 0.5 * (g + prev_g) * (r - prev_r));
      grid.push_back(r);
      prev_r = r;
      prev_g = g;
    }
    for (double& c : cdf) c /= cdf.back();
  }

  [[nodiscard]] double operator()(double r) const
  {
    const auto it = std::upper_bound(grid.begin(), grid.end(), r);
    if (it == grid.begin()) return 0.0;
    if (it == grid.end()) return 1.0;
    const auto i = static_cast<std::size_t>(it - grid.begin());
    const double t = (r - grid[i - 1]) / (grid[i] - grid[i - 1]);
    return cdf[i - 1] + t * (cdf[i] - cdf[i - 1]);
  }
};

double kolmogorov_distance(std::vector<double> samples, const DistanceCdfOracle& cdf)
{
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  return d;
}

}  // namespace

TEST(RadialLaw, WrapDistanceMatchesQuadratureOracle)
{
  for (double delta : {2.5, 1.5, 3.5}) {
    const double side = 250.0;
    const DistanceCdfOracle oracle(delta, side);
    RandomStream rng(2024);
    const Point home{3.0, 200.0};
    std::vector<double> d;
    d.reserve(200000);
    for (int i = 0; i < 200000; ++i) {
      d.push_back(wrap_distance(sample_position(home, delta, side, rng), home, side));
    }
    EXPECT_LE(kolmogorov_distance(d, oracle), 0.01) << "delta " << delta;
  }
}

TEST(RadialLaw, InverseCdfIsMonotone)
{
  const RadialLaw law(2.5, 250.0);
  double prev = law.radius(0.0);
  EXPECT_EQ(prev, 0.0);
  for (int i = 1; i < 1000; ++i) {
    const double r = law.radius(i / 1000.0);
    EXPECT_GE(r, prev);
    prev = r;
  }
  EXPECT_LE(prev, 250.0 / std::numbers::sqrt2 + 1e-9);
  EXPECT_DOUBLE_EQ(law.s(0.5), 1.0);
  EXPECT_NEAR(law.s(4.0), std::pow(4.0, -2.5), 1e-15);
}

TEST(Trace, DeterministicAndInsideArea)
{
  const Scenario sc = default_scenario();
  const auto hp = generate_homepoints(sc.mobility, RandomStream(1).split("h"));
  const Trace a = simulate_trace(sc.mobility, hp, 30, RandomStream(1).split("t"));
  const Trace b = simulate_trace(sc.mobility, hp, 30, RandomStream(1).split("t"));
  ASSERT_EQ(a.positions.size(), 30U * 40U);
  for (std::size_t i = 0; i < a.positions.size(); ++i) {
    EXPECT_EQ(a.positions[i].x, b.positions[i].x);
    EXPECT_EQ(a.positions[i].y, b.positions[i].y);
    EXPECT_GE(a.positions[i].x, 0.0);
    EXPECT_LT(a.positions[i].x, 250.0);
    EXPECT_GE(a.positions[i].y, 0.0);
    EXPECT_LT(a.positions[i].y, 250.0);
  }
  std::ostringstream os;
  write_trace_csv(os, a);
  EXPECT_EQ(os.str().rfind("slot,ut,x_m,y_m\n", 0), 0U);
}

TEST(Encounter, SymmetricZeroDiagonalAndConsistent)
{
  const Scenario sc = default_scenario();
  const auto hp = generate_homepoints(sc.mobility, RandomStream(4).split("h"));
  const Trace t = simulate_trace(sc.mobility, hp, 200, RandomStream(4).split("t"));
  const auto em = encounter_matrix(t, sc.radio);
  const auto ps = compute_pair_statistics(t, sc.radio);
  for (int a = 0; a < em.size(); ++a) {
    EXPECT_EQ(em.e(a, a), 0.0);
    for (int b = 0; b < em.size(); ++b) {
      EXPECT_EQ(em.e(a, b), em.e(b, a));
      EXPECT_GE(em.e(a, b), 0.0);
      EXPECT_LE(em.e(a, b), 1.0);
      EXPECT_DOUBLE_EQ(em.e(a, b), ps.encounter(a, b));
    }
  }
  // UTs sharing a home-point meet more often than UTs in different clusters.
  double same = 0.0, cross = 0.0;
  int ns = 0, nc = 0;
  for (int a = 0; a < em.size(); ++a) {
    for (int b = a + 1; b < em.size(); ++b) {
      if (hp.ut_homepoint[a] == hp.ut_homepoint[b]) {
        same += em.e(a, b);
        ++ns;
      } else if (hp.ut_cluster[a] != hp.ut_cluster[b]) {
        cross += em.e(a, b);
        ++nc;
      }
    }
  }
  EXPECT_GT(same / ns, cross / nc);
}

TEST(Encounter, MeanInClusterByHand)
{
  EncounterMatrix em{Matrix::Zero(5, 5)};
  auto set = [&](int a, int b, double v) { em.e(a, b) = em.e(b, a) = v; };
  set(0, 1, 0.2);
  set(0, 2, 0.4);
  set(1, 2, 0.6);
  set(3, 4, 0.9);
  set(0, 3, 0.7);  // cross-cluster, ignored
  // cluster 0: (0.2 + 0.4 + 0.6) / 3 = 0.4; cluster 1: 0.9; average 0.65.
  EXPECT_NEAR(mean_in_cluster_encounter(em, std::vector<int>{0, 0, 0, 1, 1}), 0.65, 1e-15);
  EXPECT_THROW(mean_in_cluster_encounter(em, std::vector<int>{0, 0, 0, 0, 1}), Error);
}

TEST(Conflict, StrictThreshold)
{
  EncounterMatrix em{Matrix::Zero(3, 3)};
  em.e(0, 1) = em.e(1, 0) = 0.5;
  em.e(1, 2) = em.e(2, 1) = 0.25;
  const auto g = conflict_matrix(em, 0.25);
  EXPECT_EQ(g.E(0, 1), 1);
  EXPECT_EQ(g.E(1, 0), 1);
  EXPECT_EQ(g.E(1, 2), 0);
  EXPECT_EQ(g.E(0, 2), 0);
  EXPECT_EQ(g.E(0, 0), 0);
  EXPECT_EQ(conflict_matrix(em, 1.0).E.sum(), 0);
  EXPECT_THROW(conflict_matrix(em, 1.5), Error);
  EXPECT_THROW(conflict_matrix(em, -0.1), Error);
}

TEST(Conflict, ExpansionBlocks)
{
  RandomStream rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_index(5));
    const int chunks = 1 + static_cast<int>(rng.uniform_index(4));
    BinaryMatrix E = BinaryMatrix::Zero(n, n);
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        if (rng.uniform() < 0.5) E(a, b) = E(b, a) = 1;
      }
    }
    const auto x = expand_conflict(E, chunks);
    ASSERT_EQ(x.Xi.rows(), n * chunks);
    for (int i = 0; i < n * chunks; ++i) {
      for (int j = 0; j < n * chunks; ++j) {
        const int mi = i / n, ni = i % n, mj = j / n, nj = j % n;
        const int want = mi == mj ? E(ni, nj) : (ni == nj ? 1 : 0);
        ASSERT_EQ(x.Xi(i, j), want);
      }
    }
  }
}
