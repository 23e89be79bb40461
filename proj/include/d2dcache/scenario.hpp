#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "d2dcache/errors.hpp"

namespace d2dcache {

inline constexpr int kScenarioSchemaVersion = 1;

/// Radio constants. Powers in dBm, bandwidths in Hz, interference in mW.
struct RadioParams
{
  double carrier_freq_hz = 2e9;
  double bandwidth_cellular_hz = 20e6;
  double bandwidth_d2d_hz = 10e6;
  double backhaul_rate_bps = 1.5e6;
  double tx_power_d2d_dbm = 23.0;
  double tx_power_bs_dbm = 43.0;
  double noise_psd_dbm_hz = -174.0;
  double interference_cellular_mw = 0.0;
  double interference_d2d_mw = 0.0;
  double min_rx_power_dbm = -50.0;
  /// Log-normal shadowing on D2D links; 0 disables it.
  double shadowing_sigma_db = 0.0;

  bool operator==(const RadioParams&) const = default;
};

/// Clustered random mobility. Lengths in meters.
struct MobilityParams
{
  double coverage_radius_m = 250.0;
  double cluster_radius_m = 30.0;
  int cluster_count = 2;
  int homepoints_per_cluster = 10;
  int uts_per_homepoint = 2;
  double decay_exponent = 2.5;
  int slot_count = 1000;
  /// Delivery-phase evaluation: number of independent windows and slots per window.
  int eval_windows = 20;
  int eval_slots = 1;

  [[nodiscard]] int ut_count() const noexcept
  {
    return cluster_count * homepoints_per_cluster * uts_per_homepoint;
  }

  bool operator==(const MobilityParams&) const = default;
};

enum class PreferenceMode { homogeneous, perturbed };

/// Catalog and cost model. Sizes in bits.
struct ContentParams
{
  int chunk_count = 30;
  double chunk_size_bits = 8e6;
  double ut_cache_size_bits = 8e6;
  double zipf_alpha = 1.0;
  double unit_transmission_cost = 1e-6;
  double unit_cache_cost = 1.0;
  PreferenceMode preference_mode = PreferenceMode::homogeneous;
  int preference_swaps = 0;

  /// Number of whole chunks a UT can hold.
  [[nodiscard]] int chunks_per_ut() const
  {
    return static_cast<int>(std::floor(ut_cache_size_bits / chunk_size_bits + 1e-9));
  }

  bool operator==(const ContentParams&) const = default;
};

/// Conflict threshold: a fixed probability, or the mean in-cluster encounter.
struct GammaMode
{
  std::optional<double> fixed;  // empty => mean_in_cluster

  static GammaMode mean_in_cluster() { return {}; }
  static GammaMode fixed_value(double g) { return {g}; }
  [[nodiscard]] bool is_mean_in_cluster() const noexcept { return !fixed.has_value(); }

  bool operator==(const GammaMode&) const = default;
};

struct AuctionParams
{
  GammaMode gamma;
  double sdp_gap_tol = 1.49e-8;
  int sdp_max_iterations = 200;
  double rounding_threshold = 1e-5;
  int sublease_enum_limit = 12;
  /// Plain enumeration up to this size; branch-and-bound up to the hard limit.
  int exact_limit = 24;
  int exact_hard_limit = 40;

  bool operator==(const AuctionParams&) const = default;
};

struct Scenario
{
  RadioParams radio;
  MobilityParams mobility;
  ContentParams content;
  AuctionParams auction;
  std::uint64_t seed = 1;

  [[nodiscard]] int ut_count() const noexcept { return mobility.ut_count(); }
  [[nodiscard]] int chunk_count() const noexcept { return content.chunk_count; }

  bool operator==(const Scenario&) const = default;
};

namespace detail {

inline void require(bool ok, const char* field, const char* what)
{
  if (!ok) throw ValidationError(field, what);
}

inline bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace detail

/// Throws ValidationError naming the first field that breaks an invariant.
inline void validate(const Scenario& sc)
{
  using detail::finite_positive;
  using detail::require;
  const auto& r = sc.radio;
  require(finite_positive(r.carrier_freq_hz), "radio.carrier_freq_hz", "must be > 0");
  require(finite_positive(r.bandwidth_cellular_hz), "radio.bandwidth_cellular_hz", "must be > 0");
  require(finite_positive(r.bandwidth_d2d_hz), "radio.bandwidth_d2d_hz", "must be > 0");
  require(finite_positive(r.backhaul_rate_bps), "radio.backhaul_rate_bps", "must be > 0");
  require(std::isfinite(r.tx_power_d2d_dbm), "radio.tx_power_d2d_dbm", "must be finite");
  require(std::isfinite(r.tx_power_bs_dbm), "radio.tx_power_bs_dbm", "must be finite");
  require(std::isfinite(r.min_rx_power_dbm), "radio.min_rx_power_dbm", "must be finite");
  {
    // Noise power over the narrower band must be a finite positive number.
    const double lo = r.noise_psd_dbm_hz + 10.0 * std::log10(std::min(r.bandwidth_cellular_hz,
                                                                      r.bandwidth_d2d_hz));
    require(std::isfinite(r.noise_psd_dbm_hz) && std::isfinite(lo) &&
                finite_positive(std::pow(10.0, lo / 10.0)),
            "radio.noise_psd_dbm_hz", "noise power must be finite and > 0");
  }
  require(std::isfinite(r.interference_cellular_mw) && r.interference_cellular_mw >= 0.0,
          "radio.interference_cellular_mw", "must be >= 0");
  require(std::isfinite(r.interference_d2d_mw) && r.interference_d2d_mw >= 0.0,
          "radio.interference_d2d_mw", "must be >= 0");
  require(std::isfinite(r.shadowing_sigma_db) && r.shadowing_sigma_db >= 0.0,
          "radio.shadowing_sigma_db", "must be >= 0");

  const auto& m = sc.mobility;
  require(finite_positive(m.coverage_radius_m), "mobility.coverage_radius_m", "must be > 0");
  require(finite_positive(m.cluster_radius_m), "mobility.cluster_radius_m", "must be > 0");
  require(m.cluster_radius_m < m.coverage_radius_m, "mobility.cluster_radius_m",
          "cluster radius R' must be smaller than coverage radius R");
  require(m.cluster_count >= 1, "mobility.cluster_count", "must be >= 1");
  require(m.homepoints_per_cluster >= 1, "mobility.homepoints_per_cluster", "must be >= 1");
  require(m.uts_per_homepoint >= 1, "mobility.uts_per_homepoint", "must be >= 1");
  require(finite_positive(m.decay_exponent), "mobility.decay_exponent", "must be > 0");
  require(m.slot_count >= 1, "mobility.slot_count", "must be >= 1");
  require(m.eval_windows >= 1, "mobility.eval_windows", "must be >= 1");
  require(m.eval_slots >= 1, "mobility.eval_slots", "must be >= 1");

  const auto& c = sc.content;
  require(c.chunk_count >= 1, "content.chunk_count", "must be >= 1");
  require(finite_positive(c.chunk_size_bits), "content.chunk_size_bits", "must be > 0");
  require(std::isfinite(c.ut_cache_size_bits) && c.ut_cache_size_bits >= c.chunk_size_bits,
          "content.ut_cache_size_bits", "must be >= chunk_size_bits");
  require(std::isfinite(c.zipf_alpha) && c.zipf_alpha >= 0.0, "content.zipf_alpha",
          "must be >= 0");
  require(std::isfinite(c.unit_transmission_cost) && c.unit_transmission_cost >= 0.0,
          "content.unit_transmission_cost", "must be >= 0");
  require(std::isfinite(c.unit_cache_cost) && c.unit_cache_cost >= 0.0,
          "content.unit_cache_cost", "must be >= 0");
  require(c.preference_swaps >= 0, "content.preference_swaps", "must be >= 0");

  const auto& a = sc.auction;
  if (a.gamma.fixed) {
    require(*a.gamma.fixed >= 0.0 && *a.gamma.fixed <= 1.0, "auction.gamma",
            "fixed gamma must lie in [0, 1]");
  }
  require(finite_positive(a.sdp_gap_tol), "auction.sdp_gap_tol", "must be > 0");
  require(a.sdp_max_iterations >= 1, "auction.sdp_max_iterations", "must be >= 1");
  require(finite_positive(a.rounding_threshold), "auction.rounding_threshold", "must be > 0");
  require(a.sublease_enum_limit >= 0, "auction.sublease_enum_limit", "must be >= 0");
  require(a.exact_limit >= 1 && a.exact_limit <= a.exact_hard_limit, "auction.exact_limit",
          "must lie in [1, exact_hard_limit]");
  require(a.exact_hard_limit <= 64, "auction.exact_hard_limit", "must be <= 64");
}

/// Defaults used when a scenario file omits a field.
inline Scenario default_scenario()
{
  return Scenario{};
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const Scenario& sc)
{
  using nlohmann::json;
  const auto& r = sc.radio;
  const auto& m = sc.mobility;
  const auto& c = sc.content;
  const auto& a = sc.auction;
  json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["seed"] = sc.seed;
  j["radio"] = {
      {"carrier_freq_hz", r.carrier_freq_hz},
      {"bandwidth_cellular_hz", r.bandwidth_cellular_hz},
      {"bandwidth_d2d_hz", r.bandwidth_d2d_hz},
      {"backhaul_rate_bps", r.backhaul_rate_bps},
      {"tx_power_d2d_dbm", r.tx_power_d2d_dbm},
      {"tx_power_bs_dbm", r.tx_power_bs_dbm},
      {"noise_psd_dbm_hz", r.noise_psd_dbm_hz},
      {"interference_cellular_mw", r.interference_cellular_mw},
      {"interference_d2d_mw", r.interference_d2d_mw},
      {"min_rx_power_dbm", r.min_rx_power_dbm},
      {"shadowing_sigma_db", r.shadowing_sigma_db},
  };
  j["mobility"] = {
      {"coverage_radius_m", m.coverage_radius_m},
      {"cluster_radius_m", m.cluster_radius_m},
      {"cluster_count", m.cluster_count},
      {"homepoints_per_cluster", m.homepoints_per_cluster},
      {"uts_per_homepoint", m.uts_per_homepoint},
      {"decay_exponent", m.decay_exponent},
      {"slot_count", m.slot_count},
      {"eval_windows", m.eval_windows},
      {"eval_slots", m.eval_slots},
  };
  j["content"] = {
      {"chunk_count", c.chunk_count},
      {"chunk_size_bits", c.chunk_size_bits},
      {"ut_cache_size_bits", c.ut_cache_size_bits},
      {"zipf_alpha", c.zipf_alpha},
      {"unit_transmission_cost", c.unit_transmission_cost},
      {"unit_cache_cost", c.unit_cache_cost},
      {"preference_mode",
       c.preference_mode == PreferenceMode::homogeneous ? "homogeneous" : "perturbed"},
      {"preference_swaps", c.preference_swaps},
  };
  json gamma = a.gamma.fixed ? json(*a.gamma.fixed) : json("mean_in_cluster");
  j["auction"] = {
      {"gamma", gamma},
      {"sdp_gap_tol", a.sdp_gap_tol},
      {"sdp_max_iterations", a.sdp_max_iterations},
      {"rounding_threshold", a.rounding_threshold},
      {"sublease_enum_limit", a.sublease_enum_limit},
      {"exact_limit", a.exact_limit},
      {"exact_hard_limit", a.exact_hard_limit},
  };
  return j;
}

namespace detail {

template <typename T>
void read_field(const nlohmann::json& section, const char* section_name, const char* key,
                T& out)
{
  auto it = section.find(key);
  if (it == section.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string(section_name) + "." + key, e.what());
  }
}

inline const nlohmann::json& section_or_empty(const nlohmann::json& j, const char* name)
{
  static const nlohmann::json empty = nlohmann::json::object();
  auto it = j.find(name);
  if (it == j.end()) return empty;
  if (!it->is_object()) throw ValidationError(name, "must be an object");
  return *it;
}

}  // namespace detail

/// Builds and validates a Scenario; missing fields keep their defaults.
inline Scenario from_json(const nlohmann::json& j)
{
  using detail::read_field;
  if (!j.is_object()) throw ParseError("scenario document must be a JSON object");
  if (auto it = j.find("schema_version"); it != j.end()) {
    if (!it->is_number_integer() || it->get<int>() != kScenarioSchemaVersion) {
      throw ValidationError("schema_version", "unsupported schema version");
    }
  }
  Scenario sc = default_scenario();
  read_field(j, "", "seed", sc.seed);

  const auto& r = detail::section_or_empty(j, "radio");
  read_field(r, "radio", "carrier_freq_hz", sc.radio.carrier_freq_hz);
  read_field(r, "radio", "bandwidth_cellular_hz", sc.radio.bandwidth_cellular_hz);
  read_field(r, "radio", "bandwidth_d2d_hz", sc.radio.bandwidth_d2d_hz);
  read_field(r, "radio", "backhaul_rate_bps", sc.radio.backhaul_rate_bps);
  read_field(r, "radio", "tx_power_d2d_dbm", sc.radio.tx_power_d2d_dbm);
  read_field(r, "radio", "tx_power_bs_dbm", sc.radio.tx_power_bs_dbm);
  read_field(r, "radio", "noise_psd_dbm_hz", sc.radio.noise_psd_dbm_hz);
  read_field(r, "radio", "interference_cellular_mw", sc.radio.interference_cellular_mw);
  read_field(r, "radio", "interference_d2d_mw", sc.radio.interference_d2d_mw);
  read_field(r, "radio", "min_rx_power_dbm", sc.radio.min_rx_power_dbm);
  read_field(r, "radio", "shadowing_sigma_db", sc.radio.shadowing_sigma_db);

  const auto& m = detail::section_or_empty(j, "mobility");
  read_field(m, "mobility", "coverage_radius_m", sc.mobility.coverage_radius_m);
  read_field(m, "mobility", "cluster_radius_m", sc.mobility.cluster_radius_m);
  read_field(m, "mobility", "cluster_count", sc.mobility.cluster_count);
  read_field(m, "mobility", "homepoints_per_cluster", sc.mobility.homepoints_per_cluster);
  read_field(m, "mobility", "uts_per_homepoint", sc.mobility.uts_per_homepoint);
  read_field(m, "mobility", "decay_exponent", sc.mobility.decay_exponent);
  read_field(m, "mobility", "slot_count", sc.mobility.slot_count);
  read_field(m, "mobility", "eval_windows", sc.mobility.eval_windows);
  read_field(m, "mobility", "eval_slots", sc.mobility.eval_slots);

  const auto& c = detail::section_or_empty(j, "content");
  read_field(c, "content", "chunk_count", sc.content.chunk_count);
  read_field(c, "content", "chunk_size_bits", sc.content.chunk_size_bits);
  read_field(c, "content", "ut_cache_size_bits", sc.content.ut_cache_size_bits);
  read_field(c, "content", "zipf_alpha", sc.content.zipf_alpha);
  read_field(c, "content", "unit_transmission_cost", sc.content.unit_transmission_cost);
  read_field(c, "content", "unit_cache_cost", sc.content.unit_cache_cost);
  read_field(c, "content", "preference_swaps", sc.content.preference_swaps);
  if (auto it = c.find("preference_mode"); it != c.end()) {
    const std::string mode = it->is_string() ? it->get<std::string>() : "";
    if (mode == "homogeneous") {
      sc.content.preference_mode = PreferenceMode::homogeneous;
    } else if (mode == "perturbed") {
      sc.content.preference_mode = PreferenceMode::perturbed;
    } else {
      throw ValidationError("content.preference_mode", "expected homogeneous or perturbed");
    }
  }

  const auto& a = detail::section_or_empty(j, "auction");
  if (auto it = a.find("gamma"); it != a.end()) {
    if (it->is_number()) {
      sc.auction.gamma = GammaMode::fixed_value(it->get<double>());
    } else if (it->is_string() && it->get<std::string>() == "mean_in_cluster") {
      sc.auction.gamma = GammaMode::mean_in_cluster();
    } else {
      throw ValidationError("auction.gamma", "expected a number or \"mean_in_cluster\"");
    }
  }
  read_field(a, "auction", "sdp_gap_tol", sc.auction.sdp_gap_tol);
  read_field(a, "auction", "sdp_max_iterations", sc.auction.sdp_max_iterations);
  read_field(a, "auction", "rounding_threshold", sc.auction.rounding_threshold);
  read_field(a, "auction", "sublease_enum_limit", sc.auction.sublease_enum_limit);
  read_field(a, "auction", "exact_limit", sc.auction.exact_limit);
  read_field(a, "auction", "exact_hard_limit", sc.auction.exact_hard_limit);

  validate(sc);
  return sc;
}

/// Canonical text form: sorted keys, two-space indent, trailing newline.
inline std::string serialize(const Scenario& sc)
{
  return to_json(sc).dump(2) + "\n";
}

inline Scenario parse_scenario(const std::string& text)
{
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("scenario parse failure: ") + e.what());
  }
  return from_json(j);
}

inline Scenario load_scenario(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

inline void save_scenario(const Scenario& sc, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write scenario file: " + path.string());
  out << serialize(sc);
}

}  // namespace d2dcache
