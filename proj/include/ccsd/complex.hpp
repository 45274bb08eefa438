#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccsd/cells.hpp"
#include "ccsd/common.hpp"

namespace ccsd {

/// A rank-2 cell given extensionally: its node set plus feature vector.
struct Cell {
  std::vector<int> nodes;
  std::vector<double> feature;  // length f2
};

/// Tensor representation of a dimension-2 constrained featured combinatorial
/// complex: node features X [n x f0], edge features A [n x n x f1] (symmetric,
/// zero diagonal), and the rank-2 incidence F [C(n,2) x K x f2]. Channels are
/// stored as separate matrices. node_mask marks active nodes when the complex
/// is embedded into max-n tensors for batching.
struct ComplexTensor {
  int n = 0;
  int f0 = 1, f1 = 1, f2 = 1;
  Mat X;                       // n x f0
  std::vector<Mat> A;          // f1 matrices, n x n
  std::vector<Mat> F;          // f2 matrices, m x K
  DimConstraints constraints;
  std::vector<std::uint8_t> node_mask;  // length n, 1 = active

  std::int64_t m() const { return num_edge_slots(n); }
  std::int64_t K() const { return cell_count(n, constraints); }
  int active_nodes() const {
    int c = 0;
    for (auto b : node_mask) c += b ? 1 : 0;
    return c;
  }

  static ComplexTensor zeros(int n, DimConstraints c, int f0 = 1, int f1 = 1, int f2 = 1) {
    ComplexTensor cc;
    cc.n = n;
    cc.f0 = f0;
    cc.f1 = f1;
    cc.f2 = f2;
    cc.constraints = c;
    cc.X = Mat::Zero(n, f0);
    cc.A.assign(f1, Mat::Zero(n, n));
    const std::int64_t m = num_edge_slots(n), K = cell_count(n, c);
    cc.F.assign(f2, Mat::Zero(m, K));
    cc.node_mask.assign(n, 1);
    return cc;
  }

  /// Write a list of rank-2 cells into F (columns chosen via CellIndex).
  void set_cells(const std::vector<Cell>& cells) {
    CellIndex ci(n, constraints);
    for (auto& fm : F) fm.setZero();
    for (const auto& cell : cells) {
      require(static_cast<int>(cell.feature.size()) == f2,
              "set_cells: feature width mismatch");
      const std::int64_t j = ci.index_of(cell.nodes);
      std::vector<int> sorted = cell.nodes;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t a = 0; a < sorted.size(); ++a)
        for (std::size_t b = a + 1; b < sorted.size(); ++b) {
          const std::int64_t e = edge_index(sorted[a], sorted[b], n);
          for (int c = 0; c < f2; ++c) F[c](e, j) = cell.feature[c];
        }
    }
  }

  /// Extract rank-2 cells from the nonzero columns of F. The feature vector is
  /// read from the first nonzero row of the column.
  std::vector<Cell> cells() const {
    CellIndex ci(n, constraints);
    std::vector<Cell> out;
    const std::int64_t m_ = m(), K_ = K();
    for (std::int64_t j = 0; j < K_; ++j) {
      for (std::int64_t e = 0; e < m_; ++e) {
        bool nz = false;
        for (int c = 0; c < f2; ++c) nz = nz || F[c](e, j) != 0.0;
        if (nz) {
          Cell cell;
          cell.nodes = ci.nodes_of(j);
          cell.feature.resize(f2);
          for (int c = 0; c < f2; ++c) cell.feature[c] = F[c](e, j);
          out.push_back(std::move(cell));
          break;
        }
      }
    }
    return out;
  }

  /// Re-embed into tensors of size n_max >= n with a node mask. Cell columns
  /// are re-indexed against CellIndex(n_max).
  ComplexTensor padded(int n_max) const {
    require(n_max >= n, "padded: n_max must be >= n");
    ComplexTensor out = zeros(n_max, constraints, f0, f1, f2);
    out.X.topRows(n) = X;
    for (int c = 0; c < f1; ++c) out.A[c].topLeftCorner(n, n) = A[c];
    out.set_cells(cells());
    std::fill(out.node_mask.begin() + n, out.node_mask.end(), 0);
    return out;
  }

  /// Violations of the quantized-state contract; empty means valid.
  std::vector<std::string> quantized_state_violations(double tol = 0.0) const {
    std::vector<std::string> bad;
    for (int c = 0; c < f1; ++c) {
      if (!A[c].isApprox(A[c].transpose(), tol))
        bad.push_back("A channel " + std::to_string(c) + " not symmetric");
      if (A[c].diagonal().cwiseAbs().maxCoeff() > tol)
        bad.push_back("A channel " + std::to_string(c) + " has nonzero diagonal");
    }
    CellIndex ci(n, constraints);
    const std::int64_t m_ = m(), K_ = K();
    for (std::int64_t j = 0; j < K_; ++j) {
      const auto nodes = ci.nodes_of(j);
      bool cell_masked = false;
      for (int v : nodes) cell_masked = cell_masked || !node_mask[v];
      std::vector<std::uint8_t> in_cell(m_, 0);
      for (std::size_t a = 0; a < nodes.size(); ++a)
        for (std::size_t b = a + 1; b < nodes.size(); ++b)
          in_cell[edge_index(nodes[a], nodes[b], n)] = 1;
      bool have_ref = false;
      std::vector<double> ref(f2, 0.0);
      for (std::int64_t e = 0; e < m_; ++e) {
        bool nz = false;
        for (int c = 0; c < f2; ++c) nz = nz || F[c](e, j) != 0.0;
        if (!nz) continue;
        if (cell_masked) {
          bad.push_back("F column " + std::to_string(j) + " touches a masked node");
          break;
        }
        if (!in_cell[e]) {
          bad.push_back("F column " + std::to_string(j) + " has support outside its cell");
          break;
        }
        if (!have_ref) {
          for (int c = 0; c < f2; ++c) ref[c] = F[c](e, j);
          have_ref = true;
        } else {
          for (int c = 0; c < f2; ++c)
            if (F[c](e, j) != ref[c]) {
              bad.push_back("F column " + std::to_string(j) + " is not column-constant");
              e = m_;
              break;
            }
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      if (node_mask[i]) continue;
      if (X.row(i).cwiseAbs().maxCoeff() > tol) bad.push_back("masked node has X features");
      for (int c = 0; c < f1; ++c)
        if (A[c].row(i).cwiseAbs().maxCoeff() > tol || A[c].col(i).cwiseAbs().maxCoeff() > tol)
          bad.push_back("masked node has incident A entries");
    }
    return bad;
  }
};

}  // namespace ccsd
