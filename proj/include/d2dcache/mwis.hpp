#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "d2dcache/errors.hpp"
#include "d2dcache/geometry.hpp"
#include "d2dcache/sdp.hpp"

namespace d2dcache {

/// Weighted independent set instance: nonnegative values and a symmetric conflict relation.
struct WisInstance
{
  Vector values;
  BinaryMatrix conflicts;

  [[nodiscard]] int size() const noexcept { return static_cast<int>(values.size()); }

  void validate() const
  {
    const auto L = values.size();
    if (conflicts.rows() != L || conflicts.cols() != L) {
      throw Error("WisInstance: conflict matrix must be " + std::to_string(L) + "x" +
                  std::to_string(L));
    }
    for (Eigen::Index i = 0; i < L; ++i) {
      if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
        throw Error("WisInstance: value " + std::to_string(i) + " must be finite and >= 0");
      }
      if (conflicts(i, i)) throw Error("WisInstance: conflict diagonal must be zero");
      for (Eigen::Index j = i + 1; j < L; ++j) {
        if (conflicts(i, j) != conflicts(j, i)) throw Error("WisInstance: conflicts not symmetric");
      }
    }
  }
};

struct Selection
{
  std::vector<std::uint8_t> chi;
  double welfare = 0.0;

  [[nodiscard]] std::vector<int> members() const
  {
    std::vector<int> out;
    for (std::size_t i = 0; i < chi.size(); ++i) {
      if (chi[i]) out.push_back(static_cast<int>(i));
    }
    return out;
  }
};

inline double selection_welfare(const WisInstance& inst, const std::vector<std::uint8_t>& chi)
{
  double w = 0.0;
  for (int i = 0; i < inst.size(); ++i) {
    if (chi[i]) w += inst.values[i];
  }
  return w;
}

inline bool is_independent(const WisInstance& inst, const std::vector<std::uint8_t>& chi)
{
  for (int i = 0; i < inst.size(); ++i) {
    if (!chi[i]) continue;
    for (int j = i + 1; j < inst.size(); ++j) {
      if (chi[j] && inst.conflicts(i, j)) return false;
    }
  }
  return true;
}

struct ExactOptions
{
  int exact_limit = 24;
  int hard_limit = 40;
};

/// Greedy by descending value (ties: lower index); a feasible lower bound.
inline Selection solve_greedy(const WisInstance& inst)
{
  const int L = inst.size();
  std::vector<int> order(L);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return inst.values[a] > inst.values[b]; });
  Selection sel{std::vector<std::uint8_t>(L, 0), 0.0};
  for (int i : order) {
    if (!(inst.values[i] > 0.0)) break;
    bool ok = true;
    for (int j = 0; j < L && ok; ++j) ok = !(sel.chi[j] && inst.conflicts(i, j));
    if (ok) sel.chi[i] = 1;
  }
  sel.welfare = selection_welfare(inst, sel.chi);
  return sel;
}

namespace detail {

/**
 * Depth-first search over positive-value vertices in index order, excluding
 * before including, so complete assignments are visited in increasing
 * lexicographic order of chi. The incumbent is only replaced on a strict
 * improvement, which makes the first optimum found the lexicographically
 * smallest one. Pruning uses a static clique partition: an independent set
 * takes at most one member of each clique.
 */
class ExactSearch
{
public:
  ExactSearch(const WisInstance& inst, const std::vector<int>& active, double lower_bound)
    : k_(static_cast<int>(active.size())), active_(active)
  {
    val_.resize(k_);
    adj_.assign(k_, 0);
    double total = 0.0;
    for (int a = 0; a < k_; ++a) {
      val_[a] = inst.values[active[a]];
      total += val_[a];
      for (int b = 0; b < k_; ++b) {
        if (a != b && inst.conflicts(active[a], active[b])) adj_[a] |= bit(b);
      }
    }
    eps_ = 1e-12 * std::max(1.0, total);
    floor_ = lower_bound - eps_;
    build_cliques();
  }

  std::vector<std::uint8_t> run()
  {
    const std::uint64_t all = k_ == 64 ? ~0ULL : (bit(k_) - 1);
    dfs(0, 0, all, 0.0);
    std::vector<std::uint8_t> chi(k_, 0);
    for (int a = 0; a < k_; ++a) chi[a] = (best_set_ >> a) & 1U;
    return chi;
  }

private:
  static std::uint64_t bit(int i) { return 1ULL << i; }

  void build_cliques()
  {
    clique_of_.assign(k_, -1);
    std::vector<std::uint64_t> members;
    for (int a = 0; a < k_; ++a) {
      bool placed = false;
      for (std::size_t c = 0; c < members.size() && !placed; ++c) {
        if ((members[c] & ~adj_[a]) == 0) {
          members[c] |= bit(a);
          clique_of_[a] = static_cast<int>(c);
          placed = true;
        }
      }
      if (!placed) {
        clique_of_[a] = static_cast<int>(members.size());
        members.push_back(bit(a));
      }
    }
    clique_max_.assign(members.size(), 0.0);
  }

  /// Sum over cliques of the largest candidate value inside each clique.
  double bound(std::uint64_t cand)
  {
    std::fill(clique_max_.begin(), clique_max_.end(), 0.0);
    double sum = 0.0;
    while (cand) {
      const int a = std::countr_zero(cand);
      cand &= cand - 1;
      double& m = clique_max_[clique_of_[a]];
      if (val_[a] > m) {
        sum += val_[a] - m;
        m = val_[a];
      }
    }
    return sum;
  }

  void dfs(int i, std::uint64_t chosen, std::uint64_t cand, double cur)
  {
    cand &= ~(bit(i) - 1);
    if (i >= k_ || cand == 0) {
      if (!has_best_ ? cur >= floor_ : cur > best_ + eps_) {
        has_best_ = true;
        best_ = cur;
        best_set_ = chosen;
      }
      return;
    }
    const double ub = cur + bound(cand);
    if (has_best_ ? ub <= best_ + eps_ : ub < floor_) return;
    const int a = std::countr_zero(cand);
    dfs(a + 1, chosen, cand & ~bit(a), cur);
    dfs(a + 1, chosen | bit(a), cand & ~bit(a) & ~adj_[a], cur + val_[a]);
  }

  int k_;
  std::vector<int> active_;
  std::vector<double> val_;
  std::vector<std::uint64_t> adj_;
  std::vector<int> clique_of_;
  std::vector<double> clique_max_;
  double eps_ = 0.0;
  double floor_ = 0.0;
  bool has_best_ = false;
  double best_ = 0.0;
  std::uint64_t best_set_ = 0;
};

}  // namespace detail

/**
 * Globally optimal independent set; ties go to the lexicographically
 * smallest chi. Zero-value vertices never enter the search, so the size
 * limits apply to the positive-value vertices. Above `exact_limit` the
 * search is seeded with the greedy welfare as a lower bound.
 */
inline Selection solve_exact(const WisInstance& inst, ExactOptions opt = {})
{
  inst.validate();
  const int L = inst.size();
  std::vector<int> active;
  for (int i = 0; i < L; ++i) {
    if (inst.values[i] > 0.0) active.push_back(i);
  }
  const int k = static_cast<int>(active.size());
  if (k > opt.hard_limit || k > 64) {
    throw Error("solve_exact: " + std::to_string(k) + " positive-value vertices exceed the exact limit of " +
                std::to_string(opt.hard_limit) + "; use solve_sdp with round_solution instead");
  }
  Selection sel{std::vector<std::uint8_t>(L, 0), 0.0};
  if (k == 0) return sel;
  const double lower = k > opt.exact_limit ? solve_greedy(inst).welfare : 0.0;
  const auto chi = detail::ExactSearch(inst, active, lower).run();
  for (int a = 0; a < k; ++a) sel.chi[active[a]] = chi[a];
  sel.welfare = selection_welfare(inst, sel.chi);
  return sel;
}

/**
 * Thresholds diag(S), repairs conflicts by repeatedly dropping the lowest
 * valued conflicting vertex (ties: higher index first), then adds free
 * positive-value vertices by descending value.
 */
inline Selection round_solution(const SdpSolution& sol, const WisInstance& inst,
                                double threshold = 1e-5)
{
  const int L = inst.size();
  if (sol.S.rows() != L || sol.S.cols() != L) throw Error("round_solution: S dimension mismatch");
  Selection sel{std::vector<std::uint8_t>(L, 0), 0.0};
  for (int i = 0; i < L; ++i) {
    if (sol.S(i, i) > threshold && inst.values[i] > 0.0) sel.chi[i] = 1;
  }
  auto conflicts_with_selected = [&](int i) {
    for (int j = 0; j < L; ++j) {
      if (j != i && sel.chi[j] && inst.conflicts(i, j)) return true;
    }
    return false;
  };

  std::vector<int> asc(L);
  std::iota(asc.begin(), asc.end(), 0);
  std::sort(asc.begin(), asc.end(), [&](int a, int b) {
    if (inst.values[a] != inst.values[b]) return inst.values[a] < inst.values[b];
    return a > b;
  });
  for (int i : asc) {
    if (sel.chi[i] && conflicts_with_selected(i)) sel.chi[i] = 0;
  }
  for (auto it = asc.rbegin(); it != asc.rend(); ++it) {
    const int i = *it;
    if (!sel.chi[i] && inst.values[i] > 0.0 && !conflicts_with_selected(i)) sel.chi[i] = 1;
  }
  sel.welfare = selection_welfare(inst, sel.chi);
  return sel;
}

inline SdpSolution solve_sdp(const WisInstance& inst, SdpOptions opt = {})
{
  inst.validate();
  return solve_sdp(inst.values, inst.conflicts, opt);
}

/// Restriction of an instance to `vertices`, in the given order.
inline WisInstance sub_instance(const WisInstance& inst, const std::vector<int>& vertices)
{
  const int k = static_cast<int>(vertices.size());
  WisInstance out{Vector(k), BinaryMatrix::Zero(k, k)};
  for (int a = 0; a < k; ++a) {
    out.values[a] = inst.values[vertices[a]];
    for (int b = 0; b < k; ++b) out.conflicts(a, b) = inst.conflicts(vertices[a], vertices[b]);
  }
  return out;
}

/// CSV rows `value,i,v` and `edge,i,j` (i < j), preceded by a `kind,a,b` header.
inline void write_instance_csv(std::ostream& os, const WisInstance& inst)
{
  std::ostringstream buf;
  buf.precision(17);
  buf << "kind,a,b\n";
  for (int i = 0; i < inst.size(); ++i) buf << "value," << i << ',' << inst.values[i] << '\n';
  for (int i = 0; i < inst.size(); ++i) {
    for (int j = i + 1; j < inst.size(); ++j) {
      if (inst.conflicts(i, j)) buf << "edge," << i << ',' << j << '\n';
    }
  }
  os << buf.str();
}

inline WisInstance read_instance_csv(std::istream& is)
{
  std::vector<std::pair<int, double>> values;
  std::vector<std::pair<int, int>> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "kind,a,b") continue;
    std::istringstream row(line);
    std::string kind, a, b;
    if (!std::getline(row, kind, ',') || !std::getline(row, a, ',') || !std::getline(row, b)) {
      throw ParseError("instance csv line " + std::to_string(lineno) + ": expected three fields");
    }
    try {
      if (kind == "value") {
        values.emplace_back(std::stoi(a), std::stod(b));
      } else if (kind == "edge") {
        edges.emplace_back(std::stoi(a), std::stoi(b));
      } else {
        throw ParseError("instance csv line " + std::to_string(lineno) + ": unknown kind '" + kind + "'");
      }
    } catch (const std::logic_error&) {
      throw ParseError("instance csv line " + std::to_string(lineno) + ": bad number");
    }
  }
  const int L = static_cast<int>(values.size());
  WisInstance inst{Vector::Zero(L), BinaryMatrix::Zero(L, L)};
  std::vector<bool> seen(L, false);
  for (auto [i, v] : values) {
    if (i < 0 || i >= L || seen[i]) throw ParseError("instance csv: value indices must be 0..L-1, once each");
    seen[i] = true;
    inst.values[i] = v;
  }
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= L || j >= L || i == j) throw ParseError("instance csv: bad edge");
    inst.conflicts(i, j) = inst.conflicts(j, i) = 1;
  }
  inst.validate();
  return inst;
}

}  // namespace d2dcache
