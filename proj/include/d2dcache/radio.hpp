#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "d2dcache/errors.hpp"
#include "d2dcache/geometry.hpp"
#include "d2dcache/rng.hpp"
#include "d2dcache/scenario.hpp"

namespace d2dcache {

// ---------------------------------------------------------------------------
// Unit conversions
// ---------------------------------------------------------------------------

inline double db_to_linear(double db) noexcept { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) noexcept { return 10.0 * std::log10(lin); }
inline double dbm_to_mw(double dbm) noexcept { return db_to_linear(dbm); }
inline double mw_to_dbm(double mw) noexcept { return linear_to_db(mw); }

/// Pathloss floor distance, 1 m.
inline constexpr double kMinLinkDistanceKm = 1e-3;

// ---------------------------------------------------------------------------
// Pathloss
// ---------------------------------------------------------------------------

/// BS to UT pathloss in dB; d in km.
inline double pathloss_bs_db(double d_km)
{
  if (!(d_km > 0.0)) throw Error("pathloss_bs_db: distance must be > 0");
  return 37.6 * std::log10(d_km) + 128.1;
}

/// D2D pathloss in dB; d in km, clamped below at 1 m.
inline double pathloss_d2d_db(double d_km) noexcept
{
  return 40.0 * std::log10(std::max(d_km, kMinLinkDistanceKm)) + 148.0;
}

// ---------------------------------------------------------------------------
// Rates
// ---------------------------------------------------------------------------

inline double shannon_rate(double bandwidth_hz, double snr) noexcept
{
  return bandwidth_hz * std::log2(1.0 + snr);
}

/// Thermal noise in mW over `bandwidth_hz`.
inline double noise_power_mw(double noise_psd_dbm_hz, double bandwidth_hz) noexcept
{
  return dbm_to_mw(noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz));
}

/// D2D rate for a given received power with the band split over `pairs` links.
inline double rate_d2d_from_rx(double rx_dbm, int pairs, const RadioParams& radio) noexcept
{
  const double share = radio.bandwidth_d2d_hz / std::max(pairs, 1);
  const double snr =
      dbm_to_mw(rx_dbm) / (radio.interference_d2d_mw + noise_power_mw(radio.noise_psd_dbm_hz, share));
  return shannon_rate(share, snr);
}

inline double rate_cellular_from_rx(double rx_dbm, int users, const RadioParams& radio) noexcept
{
  const double share = radio.bandwidth_cellular_hz / std::max(users, 1);
  const double snr = dbm_to_mw(rx_dbm) /
                     (radio.interference_cellular_mw + noise_power_mw(radio.noise_psd_dbm_hz, share));
  return shannon_rate(share, snr);
}

/// Deterministic D2D received power in dBm at distance d (km).
inline double d2d_rx_power_dbm(double d_km, const RadioParams& radio) noexcept
{
  return radio.tx_power_d2d_dbm - pathloss_d2d_db(d_km);
}

inline double bs_rx_power_dbm(double d_km, const RadioParams& radio)
{
  return radio.tx_power_bs_dbm - pathloss_bs_db(d_km);
}

/// Rate between two UTs d km apart, sharing the D2D band with `pairs` links.
inline double rate_d2d(double d_km, int pairs, const RadioParams& radio)
{
  if (pairs < 1) throw Error("rate_d2d: pair count must be >= 1");
  return rate_d2d_from_rx(d2d_rx_power_dbm(d_km, radio), pairs, radio);
}

/// Rate from the BS to a UT d km away, sharing the cellular band with `users` UTs.
inline double rate_cellular(double d_km, int users, const RadioParams& radio)
{
  if (users < 1) throw Error("rate_cellular: user count must be >= 1");
  return rate_cellular_from_rx(bs_rx_power_dbm(d_km, radio), users, radio);
}

// ---------------------------------------------------------------------------
// Trace-driven link quantities
// ---------------------------------------------------------------------------

/// D2D received power between UTs a and b in one slot; includes shadowing when enabled.
inline double link_rx_power_dbm(const Trace& trace, int slot, int a, int b,
                                const RadioParams& radio)
{
  const double d_km = trace.distance(slot, a, b) / 1000.0;
  double rx = d2d_rx_power_dbm(d_km, radio);
  if (radio.shadowing_sigma_db > 0.0) {
    const auto lo = static_cast<std::uint64_t>(std::min(a, b));
    const auto hi = static_cast<std::uint64_t>(std::max(a, b));
    rx -= radio.shadowing_sigma_db *
          keyed_normal(trace.shadow_seed, static_cast<std::uint64_t>(slot), lo, hi);
  }
  return rx;
}

/// Contact means the D2D received power exceeds the minimum level K.
inline bool in_contact(double rx_dbm, const RadioParams& radio) noexcept
{
  return rx_dbm > radio.min_rx_power_dbm;
}

struct RateSummary
{
  /// Average over all slots; out-of-contact slots count as rate 0.
  double mean_rate = 0.0;
  /// Minimum over contact slots only; empty when there was no contact.
  std::optional<double> min_contact_rate;
  int contact_slots = 0;
};

/// Rate statistics for one UT pair at full D2D bandwidth.
inline RateSummary rate_summary_pair(const Trace& trace, int a, int b, const RadioParams& radio)
{
  RateSummary out;
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trace.slots; ++t) {
    const double rx = link_rx_power_dbm(trace, t, a, b, radio);
    if (!in_contact(rx, radio)) continue;
    const double r = rate_d2d_from_rx(rx, 1, radio);
    sum += r;
    lo = std::min(lo, r);
    ++out.contact_slots;
  }
  out.mean_rate = trace.slots > 0 ? sum / trace.slots : 0.0;
  if (out.contact_slots > 0) out.min_contact_rate = lo;
  return out;
}

/// All-pairs link statistics from one trace pass.
struct PairStatistics
{
  Matrix encounter;     ///< fraction of slots in contact
  Matrix mean_rate;     ///< bit/s, N_D = 1, zero when out of contact
  Matrix min_rx_dbm;    ///< lowest received power over contact slots; -inf if none
  Eigen::MatrixXi contact_slots;

  [[nodiscard]] int size() const noexcept { return static_cast<int>(encounter.rows()); }
};

inline PairStatistics compute_pair_statistics(const Trace& trace, const RadioParams& radio)
{
  const int n = trace.uts;
  PairStatistics ps;
  ps.encounter = Matrix::Zero(n, n);
  ps.mean_rate = Matrix::Zero(n, n);
  ps.min_rx_dbm = Matrix::Constant(n, n, -std::numeric_limits<double>::infinity());
  ps.contact_slots = Eigen::MatrixXi::Zero(n, n);
  Matrix min_rx = Matrix::Constant(n, n, std::numeric_limits<double>::infinity());
  for (int t = 0; t < trace.slots; ++t) {
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        const double rx = link_rx_power_dbm(trace, t, a, b, radio);
        if (!in_contact(rx, radio)) continue;
        ps.contact_slots(a, b) += 1;
        ps.mean_rate(a, b) += rate_d2d_from_rx(rx, 1, radio);
        min_rx(a, b) = std::min(min_rx(a, b), rx);
      }
    }
  }
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const int c = ps.contact_slots(a, b);
      ps.contact_slots(b, a) = c;
      ps.encounter(a, b) = ps.encounter(b, a) = static_cast<double>(c) / trace.slots;
      ps.mean_rate(a, b) = ps.mean_rate(b, a) = ps.mean_rate(a, b) / trace.slots;
      if (c > 0) ps.min_rx_dbm(a, b) = ps.min_rx_dbm(b, a) = min_rx(a, b);
    }
  }
  return ps;
}

}  // namespace d2dcache
