// Batch experiment runner: scenario sweeps over seeds and placement algorithms.

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "d2dcache/experiment.hpp"
#include "d2dcache/scenario.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s)
{
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// "10" means seeds 1..10; "3,5,9" is an explicit list; "4..7" is a range.
std::vector<std::uint64_t> parse_seeds(const std::string& s)
{
  std::vector<std::uint64_t> out;
  if (const auto dots = s.find(".."); dots != std::string::npos) {
    const auto lo = std::stoull(s.substr(0, dots));
    const auto hi = std::stoull(s.substr(dots + 2));
    for (auto k = lo; k <= hi; ++k) out.push_back(k);
  } else if (s.find(',') == std::string::npos) {
    const auto n = std::stoull(s);
    for (std::uint64_t k = 1; k <= n; ++k) out.push_back(k);
  } else {
    for (const auto& item : split_list(s)) out.push_back(std::stoull(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"D2D cache placement experiments"};
  std::string scenario_path;
  std::string sweep = "M=30";
  std::string seeds = "1";
  std::string algos = "mrac,none";
  std::string out;
  std::string dump_dir;
  int workers = 1;
  bool timing = false;
  bool print_default = false;

  app.add_option("--scenario", scenario_path, "Scenario JSON; omitted fields keep their defaults");
  app.add_option("--sweep", sweep, "Sweep as var=v1,v2,... with var one of M, N, alpha, gamma");
  app.add_option("--seeds", seeds, "Seed count n (seeds 1..n), a list a,b,c, or a range a..b");
  app.add_option("--algos", algos, "Comma list from moac, mrac, exact, random, greedy_pop, none");
  app.add_option("--out", out, "Output CSV; a .summary.csv is written next to it");
  app.add_option("--workers", workers, "Concurrent (sweep value, seed) cells")->check(CLI::PositiveNumber);
  app.add_option("--dump-instances", dump_dir, "Directory for stacked instance CSV dumps");
  app.add_flag("--timing", timing, "Add a wall_time_ms column (makes output non-reproducible)");
  app.add_flag("--print-default-scenario", print_default, "Print the default scenario JSON and exit");
  CLI11_PARSE(app, argc, argv);

  try {
    if (print_default) {
      std::cout << d2dcache::serialize(d2dcache::default_scenario());
      return 0;
    }
    d2dcache::ExperimentPlan plan;
    if (!scenario_path.empty()) plan.scenario = d2dcache::load_scenario(scenario_path);
    const auto eq = sweep.find('=');
    if (eq == std::string::npos) throw d2dcache::ParseError("--sweep expects var=v1,v2,...");
    plan.sweep_var = sweep.substr(0, eq);
    plan.sweep_values = split_list(sweep.substr(eq + 1));
    plan.seeds = parse_seeds(seeds);
    plan.algorithms = split_list(algos);
    plan.output = out;
    plan.workers = workers;
    plan.timing = timing;
    if (!dump_dir.empty()) plan.dump_dir = dump_dir;

    const auto res = d2dcache::run_experiment(plan);
    if (out.empty()) {
      std::cout << d2dcache::rows_csv(plan, res.rows);
    } else {
      std::cerr << "wrote " << res.rows.size() << " rows to " << out << " and "
                << d2dcache::summary_path(plan.output).string() << "\n";
    }
    for (const auto& r : res.rows) {
      if (!r.error.empty()) {
        std::cerr << "error: " << r.algorithm << " " << plan.sweep_var << "=" << r.sweep_value
                  << " seed " << r.seed << ": " << r.error << "\n";
      }
    }
    return res.errors == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "d2dcache_cli: " << e.what() << "\n";
    return 1;
  }
}
