#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "d2dcache/auction.hpp"
#include "d2dcache/errors.hpp"
#include "d2dcache/metrics.hpp"
#include "d2dcache/mobility.hpp"
#include "d2dcache/radio.hpp"
#include "d2dcache/rng.hpp"
#include "d2dcache/scenario.hpp"
#include "d2dcache/valuation.hpp"

namespace d2dcache {

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

/// Each UT caches `capacity` distinct uniformly random chunks; conflicts are ignored.
inline Placement baseline_random(int uts, int chunks, int capacity, RandomStream rng)
{
  Placement pl = Placement::empty(uts, chunks);
  const int take = std::min(capacity, chunks);
  std::vector<int> pool(chunks);
  for (int n = 0; n < uts; ++n) {
    std::iota(pool.begin(), pool.end(), 0);
    for (int k = 0; k < take; ++k) {
      const auto j = k + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(chunks - k)));
      std::swap(pool[k], pool[j]);
      pl.x(n, pool[k]) = 1;
    }
  }
  return pl;
}

/**
 * Chunks in popularity order; each claims, among UTs with free cache space
 * and positive value, a conflict-free set built greedily by descending value.
 */
inline Placement baseline_greedy_pop(const ValueVector& values, const BinaryMatrix& E,
                                     const Vector& F, int capacity)
{
  const int N = values.uts();
  const int M = values.chunks();
  Placement pl = Placement::empty(N, M);
  std::vector<int> held(N, 0);
  for (int m : popularity_order(F)) {
    std::vector<int> cand;
    for (int n = 0; n < N; ++n) {
      if (held[n] < capacity && values.v(n, m) > 0.0) cand.push_back(n);
    }
    std::stable_sort(cand.begin(), cand.end(),
                     [&](int a, int b) { return values.v(a, m) > values.v(b, m); });
    std::vector<int> chosen;
    for (int n : cand) {
      bool ok = true;
      for (int c : chosen) ok = ok && !(E(n, c) || E(c, n));
      if (ok) chosen.push_back(n);
    }
    for (int n : chosen) {
      pl.x(n, m) = 1;
      ++held[n];
    }
  }
  refresh(pl, values.v);
  return pl;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

/// Everything an algorithm needs for one (scenario, seed) cell.
struct World
{
  Scenario scenario;
  std::uint64_t seed = 0;
  HomePointAssignment homepoints;
  PairStatistics pairs;
  EncounterMatrix encounter;
  ConflictGraph conflicts;
  PreferenceMatrix preferences;
  Vector local_popularity;
  ValueVector values;
  std::vector<Trace> delivery_windows;
};

inline double resolve_gamma(const GammaMode& g, const EncounterMatrix& em,
                            const HomePointAssignment& hp)
{
  return g.is_mean_in_cluster() ? mean_in_cluster_encounter(em, hp) : *g.fixed;
}

inline World build_world(const Scenario& sc, std::uint64_t seed)
{
  validate(sc);
  World w;
  w.scenario = sc;
  w.seed = seed;
  const RandomStream root(seed);
  w.homepoints = generate_homepoints(sc.mobility, root.split("mobility.homepoints"));
  const Trace trace = simulate_trace(sc, w.homepoints, root.split("mobility.trace"));
  w.pairs = compute_pair_statistics(trace, sc.radio);
  w.encounter = EncounterMatrix{w.pairs.encounter};
  const double gamma = resolve_gamma(sc.auction.gamma, w.encounter, w.homepoints);
  w.conflicts = conflict_matrix(w.encounter, gamma);
  w.preferences =
      generate_preferences(sc.content, sc.ut_count(), root.split("valuation.preferences"));
  w.local_popularity = local_popularity(w.preferences);
  w.values = build_value_vector(w.preferences, w.pairs.mean_rate, w.encounter, w.conflicts,
                                sc.content);
  const RandomStream eval = root.split("mobility.eval");
  for (int k = 0; k < sc.mobility.eval_windows; ++k) {
    w.delivery_windows.push_back(
        simulate_trace(sc.mobility, w.homepoints, sc.mobility.eval_slots, eval.split(static_cast<std::uint64_t>(k))));
  }
  return w;
}

inline const std::vector<std::string>& known_algorithms()
{
  static const std::vector<std::string> names{"moac", "mrac", "exact", "random", "greedy_pop", "none"};
  return names;
}

struct AlgorithmResult
{
  std::string algorithm;
  Placement placement;
  std::optional<AuctionOutcome> outcome;
  MetricsReport metrics;
  bool feasible = true;
  bool prices_ok = true;
  std::string feasibility_note;
};

inline AlgorithmResult run_algorithm(const World& w, const std::string& algo)
{
  const auto& sc = w.scenario;
  const int N = sc.ut_count();
  const int M = sc.chunk_count();
  const int h = sc.content.chunks_per_ut();
  AlgorithmResult r;
  r.algorithm = algo;
  if (algo == "moac" || algo == "exact") {
    r.outcome = moac(w.values, w.conflicts, sc.auction, h,
                     algo == "exact" ? PlacementSolver::exact : PlacementSolver::sdp);
  } else if (algo == "mrac") {
    r.outcome = mrac(w.values, w.conflicts, w.local_popularity, sc.auction, h);
  } else if (algo == "random") {
    r.placement = baseline_random(N, M, h, RandomStream(w.seed).split("baseline.random"));
    refresh(r.placement, w.values.v);
  } else if (algo == "greedy_pop") {
    r.placement = baseline_greedy_pop(w.values, w.conflicts.E, w.local_popularity, h);
  } else if (algo == "none") {
    r.placement = Placement::empty(N, M);
  } else {
    throw Error("unknown algorithm '" + algo + "'");
  }
  if (r.outcome) {
    r.placement = r.outcome->placement;
    r.prices_ok = prices_valid(r.outcome->prices, w.values.v);
  }
  // Random caching ignores conflicts by construction; only capacity applies to it.
  const BinaryMatrix none = BinaryMatrix::Zero(N, N);
  r.feasible = placement_feasible(r.placement, algo == "random" ? none : w.conflicts.E, h,
                                  &r.feasibility_note);
  r.metrics = evaluate_placement(r.placement.x, w.preferences, w.values.v, w.delivery_windows,
                                 sc.radio, sc.content.chunk_size_bits);
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Applies one sweep value; N is realized through the home-point count per cluster.
inline void apply_sweep(Scenario& sc, const std::string& var, const std::string& value)
{
  auto number = [&](const std::string& s) {
    std::size_t used = 0;
    double d = 0.0;
    try {
      d = std::stod(s, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != s.size()) throw ParseError("sweep value '" + s + "' is not a number");
    return d;
  };
  if (var == "M") {
    const double m = number(value);
    if (m < 1 || m != std::floor(m)) throw ParseError("sweep M needs a positive integer");
    sc.content.chunk_count = static_cast<int>(m);
  } else if (var == "N") {
    const double n = number(value);
    const int per = sc.mobility.cluster_count * sc.mobility.uts_per_homepoint;
    if (n < 1 || n != std::floor(n) || static_cast<int>(n) % per != 0) {
      throw ParseError("sweep N=" + value + " must be a multiple of clusters * UTs per home-point (" +
                       std::to_string(per) + ")");
    }
    sc.mobility.homepoints_per_cluster = static_cast<int>(n) / per;
  } else if (var == "alpha") {
    sc.content.zipf_alpha = number(value);
  } else if (var == "gamma") {
    if (value == "mean" || value == "mean_in_cluster" || value == "e_mean") {
      sc.auction.gamma = GammaMode::mean_in_cluster();
    } else {
      sc.auction.gamma = GammaMode::fixed_value(number(value));
    }
  } else {
    throw ParseError("unknown sweep variable '" + var + "' (expected M, N, alpha or gamma)");
  }
}

struct ExperimentPlan
{
  Scenario scenario = default_scenario();
  std::string sweep_var = "M";
  std::vector<std::string> sweep_values;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> algorithms;
  std::filesystem::path output;
  int workers = 1;
  std::optional<std::filesystem::path> dump_dir;
  bool timing = false;

  void validate() const
  {
    if (sweep_values.empty()) throw ValidationError("sweep", "needs at least one value");
    if (seeds.empty()) throw ValidationError("seeds", "needs at least one seed");
    if (algorithms.empty()) throw ValidationError("algos", "needs at least one algorithm");
    for (const auto& a : algorithms) {
      const auto& k = known_algorithms();
      if (std::find(k.begin(), k.end(), a) == k.end()) {
        throw ValidationError("algos", "unknown algorithm '" + a + "'");
      }
    }
    if (workers < 1) throw ValidationError("workers", "must be >= 1");
  }
};

struct ResultRow
{
  std::string algorithm;
  std::string sweep_value;
  std::size_t sweep_index = 0;
  std::size_t seed_index = 0;
  std::size_t algo_index = 0;
  std::uint64_t seed = 0;
  double gamma_used = 0.0;
  double welfare = 0.0;
  double delay_s = 0.0;
  double backhaul_s = 0.0;
  double offload_self = 0.0;
  double offload_reach = 0.0;
  int cached_pairs = 0;
  std::optional<double> welfare_ratio_exact;
  std::string solver;
  int sdp_iterations = 0;
  double sdp_gap = 0.0;
  bool exact_fallback = false;
  int rounds = 0;
  int sublease_adjusted = 0;
  int unpriceable = 0;
  bool feasible = true;
  bool prices_ok = true;
  double wall_time_ms = 0.0;
  std::string error;
};

namespace detail {

inline std::string fmt(double v)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_escape(const std::string& s)
{
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Writes to a sibling temporary and renames it over `path`.
inline void atomic_write(const std::filesystem::path& path, const std::string& content)
{
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write " + tmp.string());
    os << content;
    os.flush();
    if (!os) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

/// Runs every algorithm of one (sweep value, seed) cell on a shared world.
inline std::vector<ResultRow> run_cell(const ExperimentPlan& plan, std::size_t si, std::size_t ki)
{
  std::vector<ResultRow> rows;
  Scenario sc = plan.scenario;
  std::string cell_error;
  std::optional<World> world;
  try {
    apply_sweep(sc, plan.sweep_var, plan.sweep_values[si]);
    world = build_world(sc, plan.seeds[ki]);
    if (plan.dump_dir) {
      std::ostringstream os;
      write_instance_csv(os, stacked_instance(world->values, world->conflicts.E,
                                              std::max(1, sc.content.chunks_per_ut())));
      detail::atomic_write(*plan.dump_dir / ("instance_" + plan.sweep_var + "_" +
                                             plan.sweep_values[si] + "_seed" +
                                             std::to_string(plan.seeds[ki]) + ".csv"),
                           os.str());
    }
  } catch (const std::exception& e) {
    cell_error = e.what();
  }
  for (std::size_t ai = 0; ai < plan.algorithms.size(); ++ai) {
    ResultRow row;
    row.algorithm = plan.algorithms[ai];
    row.sweep_value = plan.sweep_values[si];
    row.sweep_index = si;
    row.seed_index = ki;
    row.algo_index = ai;
    row.seed = plan.seeds[ki];
    if (!world) {
      row.error = cell_error;
      rows.push_back(row);
      continue;
    }
    row.gamma_used = world->conflicts.gamma_used;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const auto r = run_algorithm(*world, row.algorithm);
      row.welfare = r.metrics.welfare;
      row.delay_s = r.metrics.avg_delay;
      row.backhaul_s = r.metrics.backhaul_delay;
      row.offload_self = r.metrics.offloading_self;
      row.offload_reach = r.metrics.offloading_reachable;
      row.cached_pairs = static_cast<int>(r.placement.x.cast<int>().sum());
      row.feasible = r.feasible;
      row.prices_ok = r.prices_ok;
      row.solver = "none";
      if (r.outcome) {
        const auto& d = r.outcome->diagnostics;
        row.solver = d.solver;
        row.sdp_iterations = d.sdp_iterations;
        row.sdp_gap = d.sdp_max_gap;
        row.exact_fallback = d.exact_fallback;
        row.rounds = d.rounds;
        row.sublease_adjusted = d.sublease_adjusted;
        row.unpriceable = d.unpriceable;
      }
      if (!r.feasible) row.error = "infeasible placement: " + r.feasibility_note;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    row.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(row);
  }
  // Ratio to the exact oracle of the same cell, when it ran.
  const ResultRow* exact = nullptr;
  for (const auto& r : rows) {
    if (r.algorithm == "exact" && r.error.empty()) exact = &r;
  }
  if (exact) {
    for (auto& r : rows) {
      if (!r.error.empty()) continue;
      r.welfare_ratio_exact = exact->welfare > 0.0 ? r.welfare / exact->welfare : 1.0;
    }
  }
  return rows;
}

struct ExperimentResult
{
  std::vector<ResultRow> rows;
  int errors = 0;
};

inline std::string rows_csv(const ExperimentPlan& plan, const std::vector<ResultRow>& rows)
{
  using detail::fmt;
  std::ostringstream os;
  os << "algorithm," << "sweep_var,sweep_value,seed,gamma_used,welfare,delay_s,backhaul_s,"
     << "offload_self,offload_reach,cached_pairs,welfare_ratio_exact,solver,sdp_iterations,"
     << "sdp_gap,exact_fallback,rounds,sublease_adjusted,unpriceable,feasible,prices_ok,";
  if (plan.timing) os << "wall_time_ms,";
  os << "error\n";
  for (const auto& r : rows) {
    os << r.algorithm << ',' << plan.sweep_var << ',' << detail::csv_escape(r.sweep_value) << ','
       << r.seed << ',' << fmt(r.gamma_used) << ',' << fmt(r.welfare) << ',' << fmt(r.delay_s)
       << ',' << fmt(r.backhaul_s) << ',' << fmt(r.offload_self) << ',' << fmt(r.offload_reach)
       << ',' << r.cached_pairs << ','
       << (r.welfare_ratio_exact ? fmt(*r.welfare_ratio_exact) : std::string()) << ','
       << r.solver << ',' << r.sdp_iterations << ',' << fmt(r.sdp_gap) << ','
       << int(r.exact_fallback) << ',' << r.rounds << ',' << r.sublease_adjusted << ','
       << r.unpriceable << ',' << int(r.feasible) << ',' << int(r.prices_ok) << ',';
    if (plan.timing) os << fmt(r.wall_time_ms) << ',';
    os << detail::csv_escape(r.error) << '\n';
  }
  return os.str();
}

/// Mean and sample standard deviation per (sweep value, algorithm) over error-free rows.
inline std::string summary_csv(const ExperimentPlan& plan, const std::vector<ResultRow>& rows)
{
  using detail::fmt;
  std::ostringstream os;
  os << "sweep_var,sweep_value,algorithm,n,welfare_mean,welfare_std,delay_mean,delay_std,"
     << "offload_self_mean,offload_self_std,offload_reach_mean,offload_reach_std\n";
  for (std::size_t si = 0; si < plan.sweep_values.size(); ++si) {
    for (std::size_t ai = 0; ai < plan.algorithms.size(); ++ai) {
      std::vector<const ResultRow*> sel;
      for (const auto& r : rows) {
        if (r.sweep_index == si && r.algo_index == ai && r.error.empty()) sel.push_back(&r);
      }
      auto stats = [&](auto getter) {
        double mean = 0.0;
        for (auto* r : sel) mean += getter(*r);
        if (!sel.empty()) mean /= static_cast<double>(sel.size());
        double var = 0.0;
        for (auto* r : sel) var += std::pow(getter(*r) - mean, 2);
        const double sd = sel.size() > 1 ? std::sqrt(var / static_cast<double>(sel.size() - 1)) : 0.0;
        return fmt(mean) + "," + fmt(sd);
      };
      os << plan.sweep_var << ',' << detail::csv_escape(plan.sweep_values[si]) << ','
         << plan.algorithms[ai] << ',' << sel.size() << ','
         << stats([](const ResultRow& r) { return r.welfare; }) << ','
         << stats([](const ResultRow& r) { return r.delay_s; }) << ','
         << stats([](const ResultRow& r) { return r.offload_self; }) << ','
         << stats([](const ResultRow& r) { return r.offload_reach; }) << '\n';
    }
  }
  return os.str();
}

inline std::filesystem::path summary_path(const std::filesystem::path& out)
{
  auto p = out;
  p.replace_extension();
  p += ".summary.csv";
  return p;
}

/**
 * Evaluates every (sweep value, seed) cell on up to `plan.workers` threads.
 * Rows are ordered by sweep value, seed, then algorithm, independently of
 * scheduling. When `plan.output` is set, rows and the summary are written
 * atomically.
 */
inline ExperimentResult run_experiment(const ExperimentPlan& plan)
{
  plan.validate();
  const std::size_t cells = plan.sweep_values.size() * plan.seeds.size();
  std::vector<std::vector<ResultRow>> per_cell(cells);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < cells; c = next++) {
      per_cell[c] = run_cell(plan, c / plan.seeds.size(), c % plan.seeds.size());
    }
  };
  const int threads = std::min<int>(plan.workers, static_cast<int>(std::max<std::size_t>(cells, 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  ExperimentResult res;
  for (auto& cell : per_cell) {
    for (auto& r : cell) {
      if (!r.error.empty()) ++res.errors;
      res.rows.push_back(std::move(r));
    }
  }
  if (!plan.output.empty()) {
    detail::atomic_write(plan.output, rows_csv(plan, res.rows));
    detail::atomic_write(summary_path(plan.output), summary_csv(plan, res.rows));
  }
  return res;
}

}  // namespace d2dcache
