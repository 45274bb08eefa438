#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "ccsd/common.hpp"

namespace ccsd {

/// Cardinality bounds for rank-2 cells. Nodes and edges are fixed at
/// cardinality 1 and 2, so a rank-2 cell must have at least 3 nodes.
struct DimConstraints {
  int d_min = 3;
  int d_max = 3;

  void validate() const {
    require(d_min >= 3, "DimConstraints: d_min must be >= 3");
    require(d_min <= d_max, "DimConstraints: d_min must be <= d_max");
  }
  bool operator==(const DimConstraints&) const = default;
};

inline std::int64_t binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline std::int64_t num_edge_slots(int n) { return binomial(n, 2); }

/// Flat index of edge (i, j), i < j, under the lexicographic ordering
/// (0,1), (0,2), ..., (0,n-1), (1,2), ..., (n-2,n-1).
inline std::int64_t edge_index(int i, int j, int n) {
  require(0 <= i && i < j && j < n, "edge_index: need 0 <= i < j < n");
  return static_cast<std::int64_t>(i) * n - static_cast<std::int64_t>(i) * (i + 1) / 2 +
         (j - i - 1);
}

inline std::pair<int, int> edge_pair(std::int64_t idx, int n) {
  require(idx >= 0 && idx < num_edge_slots(n), "edge_pair: index out of range");
  int i = 0;
  std::int64_t base = 0;
  while (base + (n - 1 - i) <= idx) {
    base += n - 1 - i;
    ++i;
  }
  int j = static_cast<int>(idx - base) + i + 1;
  return {i, j};
}

/// Maximum number of rank-2 cells on n nodes under the given constraints:
/// sum of C(n, k) for k in [d_min, d_max]. Terms with k > n vanish.
inline std::int64_t cell_count(int n, const DimConstraints& c) {
  c.validate();
  require(n >= 1, "cell_count: n must be >= 1");
  std::int64_t total = 0;
  for (int k = c.d_min; k <= c.d_max; ++k) total += binomial(n, k);
  return total;
}

/// Bijection between candidate rank-2 cells (node subsets with cardinality in
/// [d_min, d_max]) and flat column indices. Cells are ordered by cardinality
/// ascending, then lexicographically on the sorted node tuple.
class CellIndex {
 public:
  CellIndex(int n, DimConstraints c) : n_(n), c_(c) {
    c_.validate();
    require(n >= 1, "CellIndex: n must be >= 1");
    std::int64_t base = 0;
    for (int k = c_.d_min; k <= c_.d_max; ++k) {
      card_offset_.push_back(base);
      base += binomial(n_, k);
    }
    total_ = base;
  }

  int n() const { return n_; }
  const DimConstraints& constraints() const { return c_; }
  std::int64_t total() const { return total_; }

  /// Flat index of a cell given as a set of node ids (any order, no dups).
  std::int64_t index_of(std::vector<int> nodes) const {
    std::sort(nodes.begin(), nodes.end());
    const int k = static_cast<int>(nodes.size());
    require(k >= c_.d_min && k <= c_.d_max, "CellIndex: cardinality out of bounds");
    require(nodes.front() >= 0 && nodes.back() < n_, "CellIndex: node id out of range");
    for (int i = 1; i < k; ++i) require(nodes[i] != nodes[i - 1], "CellIndex: duplicate node");
    // lexicographic rank of the k-combination
    std::int64_t rank = 0;
    int prev = -1;
    for (int i = 0; i < k; ++i) {
      for (int v = prev + 1; v < nodes[i]; ++v) rank += binomial(n_ - 1 - v, k - 1 - i);
      prev = nodes[i];
    }
    return card_offset_[k - c_.d_min] + rank;
  }

  /// Sorted node set of the cell at a flat index.
  std::vector<int> nodes_of(std::int64_t idx) const {
    require(idx >= 0 && idx < total_, "CellIndex: index out of range");
    int k = c_.d_min;
    while (k < c_.d_max && idx >= card_offset_[k - c_.d_min] + binomial(n_, k)) ++k;
    std::int64_t rank = idx - card_offset_[k - c_.d_min];
    std::vector<int> nodes(k);
    int v = 0;
    for (int i = 0; i < k; ++i) {
      while (true) {
        const std::int64_t cnt = binomial(n_ - 1 - v, k - 1 - i);
        if (rank < cnt) break;
        rank -= cnt;
        ++v;
      }
      nodes[i] = v++;
    }
    return nodes;
  }

 private:
  int n_;
  DimConstraints c_;
  std::vector<std::int64_t> card_offset_;
  std::int64_t total_ = 0;
};

/// Structural support of the rank-2 incidence tensor: mask[e, j] is true iff
/// both endpoints of edge slot e belong to the node set of candidate cell j.
/// Column supports are kept as index lists for sparse traversals.
struct CellEdgeMask {
  std::int64_t m = 0;  // edge slots, C(n,2)
  std::int64_t K = 0;  // candidate cells
  std::vector<std::uint8_t> dense;              // row-major m*K
  std::vector<std::vector<std::int32_t>> cols;  // edge ids per cell

  bool at(std::int64_t e, std::int64_t j) const { return dense[e * K + j] != 0; }
};

inline CellEdgeMask cell_edge_mask(int n, const DimConstraints& c) {
  CellIndex ci(n, c);
  CellEdgeMask mask;
  mask.m = num_edge_slots(n);
  mask.K = ci.total();
  mask.dense.assign(static_cast<std::size_t>(mask.m * mask.K), 0);
  mask.cols.resize(mask.K);
  for (std::int64_t j = 0; j < mask.K; ++j) {
    const auto nodes = ci.nodes_of(j);
    auto& col = mask.cols[j];
    col.reserve(nodes.size() * (nodes.size() - 1) / 2);
    for (std::size_t a = 0; a < nodes.size(); ++a)
      for (std::size_t b = a + 1; b < nodes.size(); ++b) {
        const std::int64_t e = edge_index(nodes[a], nodes[b], n);
        mask.dense[e * mask.K + j] = 1;
        col.push_back(static_cast<std::int32_t>(e));
      }
  }
  return mask;
}

}  // namespace ccsd
