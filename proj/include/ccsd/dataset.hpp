#pragma once

#include <string>
#include <vector>

#include "ccsd/lift.hpp"
#include "ccsd/rng.hpp"

namespace ccsd {

/// Degree one-hot node features, clipped at the feature width.
inline Mat degree_one_hot(const Mat& A, int f0) {
  const int n = static_cast<int>(A.rows());
  Mat X = Mat::Zero(n, f0);
  for (int i = 0; i < n; ++i) {
    const int deg = static_cast<int>(A.row(i).sum());
    X(i, std::min(deg, f0 - 1)) = 1.0;
  }
  return X;
}

/// Synthetic two-community graphs: node count uniform in [min_n, max_n],
/// communities of sizes ceil(n/2) and floor(n/2), intra-community edges with
/// probability p_intra and inter-community edges with p_inter per node pair.
inline std::vector<Graph> gen_community_small(std::uint64_t seed, int count = 100,
                                              int min_n = 12, int max_n = 19, int f0 = 10,
                                              double p_intra = 0.7, double p_inter = 0.05) {
  Rng rng(seed);
  std::vector<Graph> out;
  out.reserve(count);
  for (int g = 0; g < count; ++g) {
    const int n = static_cast<int>(rng.uniform_int(min_n, max_n));
    const int first = (n + 1) / 2;
    Mat A = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const bool same = (i < first) == (j < first);
        if (rng.bernoulli(same ? p_intra : p_inter)) A(i, j) = A(j, i) = 1.0;
      }
    Graph graph;
    graph.A = A;
    graph.X = degree_one_hot(A, f0);
    out.push_back(std::move(graph));
  }
  return out;
}

/// 2-D grid graphs with rows and columns uniform in [min_side, max_side].
inline std::vector<Graph> gen_grid_small(std::uint64_t seed, int count = 100, int min_side = 4,
                                         int max_side = 7, int f0 = 5) {
  Rng rng(seed);
  std::vector<Graph> out;
  out.reserve(count);
  for (int g = 0; g < count; ++g) {
    const int rows = static_cast<int>(rng.uniform_int(min_side, max_side));
    const int cols = static_cast<int>(rng.uniform_int(min_side, max_side));
    const int n = rows * cols;
    Mat A = Mat::Zero(n, n);
    auto id = [&](int r, int c) { return r * cols + c; };
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        if (r + 1 < rows) A(id(r, c), id(r + 1, c)) = A(id(r + 1, c), id(r, c)) = 1.0;
        if (c + 1 < cols) A(id(r, c), id(r, c + 1)) = A(id(r, c + 1), id(r, c)) = 1.0;
      }
    Graph graph;
    graph.A = A;
    graph.X = degree_one_hot(A, f0);
    out.push_back(std::move(graph));
  }
  return out;
}

/// Empirical distribution of active node counts.
class EmpiricalNodeDist {
 public:
  explicit EmpiricalNodeDist(const std::vector<ComplexTensor>& set) {
    require(!set.empty(), "EmpiricalNodeDist: empty set");
    for (const auto& cc : set) counts_.push_back(cc.active_nodes());
    std::sort(counts_.begin(), counts_.end());
  }

  int sample(Rng& rng) const {
    return counts_[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(counts_.size()) - 1))];
  }
  int min() const { return counts_.front(); }
  int max() const { return counts_.back(); }

 private:
  std::vector<int> counts_;  // one entry per training complex
};

/// Deterministic head/tail split by a fraction.
inline std::pair<std::vector<ComplexTensor>, std::vector<ComplexTensor>> split_dataset(
    const std::vector<ComplexTensor>& all, double train_fraction) {
  require(train_fraction > 0.0 && train_fraction < 1.0,
          "split_dataset: fraction must lie in (0,1)");
  const std::size_t cut = std::max<std::size_t>(
      1, static_cast<std::size_t>(train_fraction * static_cast<double>(all.size())));
  std::vector<ComplexTensor> train(all.begin(), all.begin() + cut);
  std::vector<ComplexTensor> test(all.begin() + cut, all.end());
  return {std::move(train), std::move(test)};
}

}  // namespace ccsd
