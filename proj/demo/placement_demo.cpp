// Small end-to-end run: 12 UTs in two clusters, 3 chunks, MOAC and MRAC side by side.

#include <iomanip>
#include <iostream>

#include "d2dcache/experiment.hpp"

int main()
{
  using namespace d2dcache;
  Scenario sc = default_scenario();
  sc.mobility.homepoints_per_cluster = 6;
  sc.mobility.uts_per_homepoint = 1;
  sc.content.chunk_count = 3;

  const World w = build_world(sc, 7);
  std::cout << "UTs " << sc.ut_count() << ", chunks " << sc.chunk_count() << ", gamma "
            << std::setprecision(4) << w.conflicts.gamma_used << "\n\n";

  for (const char* algo : {"moac", "mrac", "none"}) {
    const auto r = run_algorithm(w, algo);
    std::cout << algo << ": welfare " << std::setprecision(6) << r.metrics.welfare << ", delay "
              << r.metrics.avg_delay << " s, offloading " << r.metrics.offloading_reachable
              << "\n";
    if (!r.outcome) continue;
    for (int m = 0; m < sc.chunk_count(); ++m) {
      std::cout << "  chunk " << m << ":";
      for (int n : r.placement.winner_sets[m]) {
        std::cout << " UT" << n << " (v " << w.values.v(n, m) << ", p "
                  << r.outcome->prices.p(n, m) << ")";
      }
      std::cout << "\n";
    }
  }
  return 0;
}
