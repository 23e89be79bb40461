#pragma once

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "d2dcache/errors.hpp"
#include "d2dcache/geometry.hpp"
#include "d2dcache/radio.hpp"
#include "d2dcache/rng.hpp"
#include "d2dcache/scenario.hpp"

namespace d2dcache {

/// Cluster centers, home-points, and the UT to home-point/cluster maps.
struct HomePointAssignment
{
  std::vector<Point> cluster_centers;
  std::vector<Point> homepoints;
  std::vector<int> ut_homepoint;
  std::vector<int> ut_cluster;

  [[nodiscard]] int ut_count() const noexcept { return static_cast<int>(ut_homepoint.size()); }
};

/// Symmetric matrix of encounter probabilities with zero diagonal.
struct EncounterMatrix
{
  Matrix e;

  [[nodiscard]] int size() const noexcept { return static_cast<int>(e.rows()); }
};

/// Binary "cache conflict" relation: E(n, n') = 1 iff e(n, n') > gamma.
struct ConflictGraph
{
  BinaryMatrix E;
  double gamma_used = 0.0;

  [[nodiscard]] int size() const noexcept { return static_cast<int>(E.rows()); }
};

/// The MN x MN block expansion: E on diagonal blocks, identity elsewhere.
struct ExpandedConflict
{
  BinaryMatrix Xi;
};

/**
 * Places C cluster centers uniformly over the area, H home-points uniformly
 * in the disk of radius R' around each center, and n_h UTs on each
 * home-point. UT indices run cluster-major, then home-point, then occupant.
 */
inline HomePointAssignment generate_homepoints(const MobilityParams& mp, RandomStream rng)
{
  const double side = mp.coverage_radius_m;
  HomePointAssignment out;
  for (int c = 0; c < mp.cluster_count; ++c) {
    out.cluster_centers.push_back({rng.uniform(0.0, side), rng.uniform(0.0, side)});
  }
  for (int c = 0; c < mp.cluster_count; ++c) {
    const Point center = out.cluster_centers[c];
    for (int h = 0; h < mp.homepoints_per_cluster; ++h) {
      const double r = mp.cluster_radius_m * std::sqrt(rng.uniform());
      const double phi = 2.0 * std::numbers::pi * rng.uniform();
      out.homepoints.push_back({wrap_coordinate(center.x + r * std::cos(phi), side),
                                wrap_coordinate(center.y + r * std::sin(phi), side)});
      const int hp_index = static_cast<int>(out.homepoints.size()) - 1;
      for (int k = 0; k < mp.uts_per_homepoint; ++k) {
        out.ut_homepoint.push_back(hp_index);
        out.ut_cluster.push_back(c);
      }
    }
  }
  return out;
}

/**
 * Radial law of the displacement from the home-point.
 *
 * The unnormalized density in wrap distance is s(d) = min(1, d^-delta); the
 * polar radius is drawn from s(rho) * rho on [0, side / sqrt 2] by inverse
 * CDF and the point is kept only when it falls inside the torus cell
 * centered at the home-point. The kept draws then have density
 * proportional to s(d) over the whole network area.
 */
class RadialLaw
{
public:
  RadialLaw(double delta, double side)
    : delta_(delta), rho_max_(side / std::numbers::sqrt2)
  {
    inner_mass_ = 0.5 * std::pow(std::min(rho_max_, 1.0), 2);
    outer_mass_ = rho_max_ > 1.0 ? tail_integral(rho_max_) : 0.0;
  }

  /// Inverse CDF of the polar radius for u in [0, 1).
  [[nodiscard]] double radius(double u) const noexcept
  {
    const double target = u * (inner_mass_ + outer_mass_);
    if (target <= inner_mass_) return std::sqrt(2.0 * target);
    const double t = target - inner_mass_;
    const double k = 2.0 - delta_;
    if (std::abs(k) < 1e-12) return std::exp(t);
    return std::pow(1.0 + k * t, 1.0 / k);
  }

  /// Unnormalized density s(d).
  [[nodiscard]] double s(double d) const noexcept
  {
    return d <= 1.0 ? 1.0 : std::pow(d, -delta_);
  }

private:
  /// Integral of rho^(1 - delta) from 1 to rho.
  [[nodiscard]] double tail_integral(double rho) const noexcept
  {
    const double k = 2.0 - delta_;
    if (std::abs(k) < 1e-12) return std::log(rho);
    return (std::pow(rho, k) - 1.0) / k;
  }

  double delta_;
  double rho_max_;
  double inner_mass_ = 0.0;
  double outer_mass_ = 0.0;
};

/// Offset from the home-point drawn from the radial law (torus-cell restricted).
inline Point sample_offset(const RadialLaw& law, double side, RandomStream& rng)
{
  const double half = 0.5 * side;
  for (;;) {
    const double rho = law.radius(rng.uniform());
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double dx = rho * std::cos(phi);
    const double dy = rho * std::sin(phi);
    if (std::abs(dx) < half && std::abs(dy) < half) return {dx, dy};
  }
}

/// One position around `homepoint` with density proportional to min(1, d^-delta).
inline Point sample_position(Point homepoint, double delta, double side, RandomStream& rng)
{
  const RadialLaw law(delta, side);
  const Point off = sample_offset(law, side, rng);
  return {wrap_coordinate(homepoint.x + off.x, side), wrap_coordinate(homepoint.y + off.y, side)};
}

/// `slots` i.i.d. snapshots of every UT around its home-point.
inline Trace simulate_trace(const MobilityParams& mp, const HomePointAssignment& hp, int slots,
                            RandomStream rng)
{
  const double side = mp.coverage_radius_m;
  const RadialLaw law(mp.decay_exponent, side);
  Trace trace(slots, hp.ut_count(), side, rng.split("shadowing").seed());
  for (int t = 0; t < slots; ++t) {
    for (int n = 0; n < hp.ut_count(); ++n) {
      const Point home = hp.homepoints[hp.ut_homepoint[n]];
      const Point off = sample_offset(law, side, rng);
      trace.at(t, n) = {wrap_coordinate(home.x + off.x, side),
                        wrap_coordinate(home.y + off.y, side)};
    }
  }
  return trace;
}

inline Trace simulate_trace(const Scenario& sc, const HomePointAssignment& hp, RandomStream rng)
{
  return simulate_trace(sc.mobility, hp, sc.mobility.slot_count, rng);
}

/// e(n, n') = fraction of slots in which the D2D received power exceeds K.
inline EncounterMatrix encounter_matrix(const Trace& trace, const RadioParams& radio)
{
  if (trace.slots < 1) throw Error("encounter_matrix: empty trace");
  const int n = trace.uts;
  EncounterMatrix out{Matrix::Zero(n, n)};
  for (int t = 0; t < trace.slots; ++t) {
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        if (in_contact(link_rx_power_dbm(trace, t, a, b, radio), radio)) out.e(a, b) += 1.0;
      }
    }
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      out.e(a, b) /= trace.slots;
      out.e(b, a) = out.e(a, b);
    }
  }
  return out;
}

/// Average over clusters of the mean pairwise in-cluster encounter probability.
inline double mean_in_cluster_encounter(const EncounterMatrix& em,
                                        const std::vector<int>& ut_cluster)
{
  int clusters = 0;
  for (int c : ut_cluster) clusters = std::max(clusters, c + 1);
  if (clusters == 0) throw Error("mean_in_cluster_encounter: no UTs");
  std::vector<double> sum(clusters, 0.0);
  std::vector<long> pairs(clusters, 0);
  const int n = static_cast<int>(ut_cluster.size());
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (ut_cluster[a] != ut_cluster[b]) continue;
      sum[ut_cluster[a]] += em.e(a, b);
      pairs[ut_cluster[a]] += 1;
    }
  }
  double total = 0.0;
  for (int c = 0; c < clusters; ++c) {
    if (pairs[c] == 0) {
      throw Error("mean_in_cluster_encounter: cluster " + std::to_string(c) +
                  " has fewer than two UTs");
    }
    total += sum[c] / static_cast<double>(pairs[c]);
  }
  return total / clusters;
}

inline double mean_in_cluster_encounter(const EncounterMatrix& em, const HomePointAssignment& hp)
{
  return mean_in_cluster_encounter(em, hp.ut_cluster);
}

inline ConflictGraph conflict_matrix(const EncounterMatrix& em, double gamma)
{
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("conflict_matrix: gamma must lie in [0, 1]");
  const int n = em.size();
  ConflictGraph g{BinaryMatrix::Zero(n, n), gamma};
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a != b && em.e(a, b) > gamma) g.E(a, b) = 1;
    }
  }
  return g;
}

inline ExpandedConflict expand_conflict(const BinaryMatrix& E, int chunks)
{
  const auto n = E.rows();
  ExpandedConflict out{BinaryMatrix::Zero(n * chunks, n * chunks)};
  for (int i = 0; i < chunks; ++i) {
    for (int j = 0; j < chunks; ++j) {
      if (i == j) {
        out.Xi.block(i * n, j * n, n, n) = E;
      } else {
        out.Xi.block(i * n, j * n, n, n) = BinaryMatrix::Identity(n, n);
      }
    }
  }
  return out;
}

inline ExpandedConflict expand_conflict(const ConflictGraph& g, int chunks)
{
  return expand_conflict(g.E, chunks);
}

/// CSV with columns slot,ut,x_m,y_m.
inline void write_trace_csv(std::ostream& os, const Trace& trace)
{
  os << "slot,ut,x_m,y_m\n";
  os.precision(17);
  for (int t = 0; t < trace.slots; ++t) {
    for (int n = 0; n < trace.uts; ++n) {
      const auto& p = trace.at(t, n);
      os << t << ',' << n << ',' << p.x << ',' << p.y << '\n';
    }
  }
}

}  // namespace d2dcache
