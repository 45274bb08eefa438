#pragma once

#include <vector>

#include "ccsd/cells.hpp"
#include "ccsd/common.hpp"

namespace ccsd {

/// Hodge dual of a symmetric zero-diagonal adjacency: the C(n,2)-vector of
/// edge values a_{0,1}, a_{0,2}, ..., a_{n-2,n-1}, i.e. the diagonal of the
/// dual matrix in edge-slot order.
inline Vec hodge_dual(const Mat& A) {
  check_adjacency(A);
  const int n = static_cast<int>(A.rows());
  Vec d(num_edge_slots(n));
  std::int64_t e = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d(e++) = A(i, j);
  return d;
}

inline Mat hodge_dual_dense(const Mat& A) {
  const Vec d = hodge_dual(A);
  Mat H = Mat::Zero(d.size(), d.size());
  H.diagonal() = d;
  return H;
}

inline Mat hodge_dual_inverse(const Vec& diag, int n) {
  require(diag.size() == num_edge_slots(n), "hodge_dual_inverse: size mismatch");
  Mat A = Mat::Zero(n, n);
  std::int64_t e = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      A(i, j) = diag(e);
      A(j, i) = diag(e);
      ++e;
    }
  return A;
}

/// Channelled matrix {A^1, ..., A^p}.
inline std::vector<Mat> higher_order_adjacency(const Mat& A, int p) {
  require(p >= 1, "higher_order_adjacency: p must be >= 1");
  require(A.rows() == A.cols(), "higher_order_adjacency: A must be square");
  std::vector<Mat> powers;
  powers.reserve(p);
  powers.push_back(A);
  for (int i = 1; i < p; ++i) powers.push_back(powers.back() * A);
  return powers;
}

/// Hodge Laplacian L(F) = F F^T. Multi-channel inputs are reduced by summing
/// channels first, which preserves symmetry and positive semidefiniteness.
inline Mat hodge_laplacian(const std::vector<Mat>& F) {
  require(!F.empty(), "hodge_laplacian: no channels");
  Mat sum = F[0];
  for (std::size_t c = 1; c < F.size(); ++c) sum += F[c];
  return sum * sum.transpose();
}

inline Mat hodge_laplacian(const Mat& F) { return F * F.transpose(); }

/// Channelled matrix {H^0 F, ..., H^{p-1} F} with H = L(F); channel 0 is F.
inline std::vector<Mat> higher_order_incidence(const Mat& F, int p) {
  require(p >= 1, "higher_order_incidence: p must be >= 1");
  std::vector<Mat> out;
  out.reserve(p);
  out.push_back(F);
  if (p > 1) {
    const Mat H = hodge_laplacian(F);
    for (int i = 1; i < p; ++i) out.push_back(H * out.back());
  }
  return out;
}

/// Same value as hodge_laplacian(F) for an F supported on the mask, but
/// assembled column-by-column over the structural supports. F entries off the
/// mask are ignored (treated as zero).
inline Mat hodge_laplacian_masked(const Mat& F, const CellEdgeMask& mask) {
  require(F.rows() == mask.m && F.cols() == mask.K, "hodge_laplacian_masked: shape mismatch");
  Mat H = Mat::Zero(mask.m, mask.m);
  for (std::int64_t j = 0; j < mask.K; ++j) {
    const auto& col = mask.cols[j];
    for (std::size_t a = 0; a < col.size(); ++a) {
      const double fa = F(col[a], j);
      if (fa == 0.0) continue;
      for (std::size_t b = 0; b < col.size(); ++b) H(col[a], col[b]) += fa * F(col[b], j);
    }
  }
  return H;
}

/// Mask-aware equivalent of higher_order_incidence: H is assembled sparsely
/// and H*F uses the column supports, so the cost scales with the support size
/// rather than with m^2 K.
inline std::vector<Mat> higher_order_incidence_masked(const Mat& F, int p,
                                                      const CellEdgeMask& mask) {
  require(p >= 1, "higher_order_incidence_masked: p must be >= 1");
  std::vector<Mat> out;
  out.reserve(p);
  Mat F0 = Mat::Zero(mask.m, mask.K);
  for (std::int64_t j = 0; j < mask.K; ++j)
    for (auto e : mask.cols[j]) F0(e, j) = F(e, j);
  out.push_back(F0);
  if (p > 1) {
    const Mat H = hodge_laplacian_masked(F, mask);
    for (int i = 1; i < p; ++i) {
      const Mat& prev = out.back();
      Mat next = Mat::Zero(mask.m, mask.K);
      if (i == 1) {
        // first power: prev = F0 is still mask-supported
        for (std::int64_t j = 0; j < mask.K; ++j)
          for (auto e : mask.cols[j]) {
            const double f = prev(e, j);
            if (f != 0.0) next.col(j) += f * H.col(e);
          }
      } else {
        next.noalias() = H * prev;
      }
      out.push_back(std::move(next));
    }
  }
  return out;
}

}  // namespace ccsd
