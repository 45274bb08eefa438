#pragma once

#include <functional>
#include <set>
#include <vector>

#include "ccsd/complex.hpp"
#include "ccsd/common.hpp"

namespace ccsd {

/// Plain graph as node features plus a binary symmetric adjacency.
struct Graph {
  Mat X;  // n x f0
  Mat A;  // n x n
  int n() const { return static_cast<int>(A.rows()); }
};

enum class LiftMethod { ring, path };

struct LiftSpec {
  LiftMethod method = LiftMethod::ring;
  std::vector<int> source_nodes;  // path lift; empty means all nodes
  int path_length = 3;            // path lift; k >= 1
  DimConstraints constraints;
};

namespace detail {

/// All chordless (induced) cycles of length <= max_len, as sorted node sets.
/// The DFS keeps the invariant that a new vertex is adjacent to the path head
/// only, so the emitted vertex sets induce exactly one cycle.
inline std::vector<std::vector<int>> chordless_cycles(const Mat& A, int max_len) {
  const int n = static_cast<int>(A.rows());
  std::vector<std::vector<int>> out;
  std::vector<int> path;
  std::vector<std::uint8_t> on_path(n, 0);
  auto adj = [&](int a, int b) { return A(a, b) != 0.0; };

  std::function<void(int)> dfs = [&](int s) {
    const int u = path.back();
    for (int v = s + 1; v < n; ++v) {
      if (on_path[v] || !adj(u, v)) continue;
      if (path.size() == 1) {
        // first step away from s; adjacency to s is the path edge, not a chord
        path.push_back(v);
        on_path[v] = 1;
        dfs(s);
        on_path[v] = 0;
        path.pop_back();
        continue;
      }
      bool chord = false;
      for (std::size_t i = 1; i + 1 < path.size(); ++i)
        if (adj(v, path[i])) {
          chord = true;
          break;
        }
      if (chord) continue;
      if (adj(v, s)) {
        // closing edge exists: a chordless cycle ends here, never extends
        if (path.size() + 1 >= 3 && path[1] < v) {
          std::vector<int> cyc = path;
          cyc.push_back(v);
          std::sort(cyc.begin(), cyc.end());
          out.push_back(std::move(cyc));
        }
        continue;
      }
      if (static_cast<int>(path.size()) + 1 < max_len) {
        path.push_back(v);
        on_path[v] = 1;
        dfs(s);
        on_path[v] = 0;
        path.pop_back();
      }
    }
  };

  for (int s = 0; s < n; ++s) {
    path.assign(1, s);
    std::fill(on_path.begin(), on_path.end(), 0);
    on_path[s] = 1;
    dfs(s);
  }
  return out;
}

/// Node sets of simple paths with exactly k nodes starting at a source.
inline std::set<std::vector<int>> path_node_sets(const Mat& A, const std::vector<int>& sources,
                                                 int k) {
  const int n = static_cast<int>(A.rows());
  std::set<std::vector<int>> out;
  if (k > n || k < 1) return out;
  std::vector<int> path;
  std::vector<std::uint8_t> on_path(n, 0);
  std::function<void()> dfs = [&]() {
    if (static_cast<int>(path.size()) == k) {
      std::vector<int> s = path;
      std::sort(s.begin(), s.end());
      out.insert(std::move(s));
      return;
    }
    const int u = path.back();
    for (int v = 0; v < n; ++v) {
      if (on_path[v] || A(u, v) == 0.0) continue;
      path.push_back(v);
      on_path[v] = 1;
      dfs();
      on_path[v] = 0;
      path.pop_back();
    }
  };
  for (int s : sources) {
    require(s >= 0 && s < n, "lift_path: source node out of range");
    path.assign(1, s);
    std::fill(on_path.begin(), on_path.end(), 0);
    on_path[s] = 1;
    dfs();
  }
  return out;
}

inline ComplexTensor build_lifted(const Graph& g, const DimConstraints& c,
                                  const std::vector<std::vector<int>>& cell_sets) {
  check_adjacency_binary(g.A);
  ComplexTensor cc = ComplexTensor::zeros(g.n(), c, static_cast<int>(g.X.cols()), 1, 1);
  cc.X = g.X;
  cc.A[0] = g.A;
  std::vector<Cell> cells;
  for (const auto& nodes : cell_sets) {
    const int sz = static_cast<int>(nodes.size());
    if (sz < c.d_min || sz > c.d_max) continue;
    cells.push_back(Cell{nodes, {1.0}});
  }
  cc.set_cells(cells);
  return cc;
}

}  // namespace detail

/// Rank-2 cells are the chordless cycles of the graph with cardinality inside
/// the constraint window.
inline ComplexTensor lift_ring(const Graph& g, const DimConstraints& c) {
  return detail::build_lifted(g, c, detail::chordless_cycles(g.A, c.d_max));
}

/// Rank-2 cells are node sets of simple k-node paths starting at a source
/// node; distinct paths over one node set yield a single cell.
inline ComplexTensor lift_path(const Graph& g, const LiftSpec& spec) {
  require(spec.method == LiftMethod::path, "lift_path: spec.method must be path");
  require(spec.path_length >= 1, "lift_path: path length must be >= 1");
  std::vector<int> sources = spec.source_nodes;
  if (sources.empty()) {
    sources.resize(g.n());
    for (int i = 0; i < g.n(); ++i) sources[i] = i;
  }
  const auto sets = detail::path_node_sets(g.A, sources, spec.path_length);
  return detail::build_lifted(g, spec.constraints,
                              std::vector<std::vector<int>>(sets.begin(), sets.end()));
}

inline ComplexTensor lift(const Graph& g, const LiftSpec& spec) {
  return spec.method == LiftMethod::ring ? lift_ring(g, spec.constraints) : lift_path(g, spec);
}

}  // namespace ccsd
