#pragma once

#include <vector>

#include "ccsd/cells.hpp"
#include "ccsd/common.hpp"

namespace ccsd {

enum class QuantizeMode { binary, bond };

/// binary: 1{x > 0.5}. bond: (-inf,0.5] -> 0, (0.5,1.5) -> 1, [1.5,2.5) -> 2,
/// [2.5,inf) -> 3. The boundary x = 0.5 maps to 0 in both modes.
inline double quantize_value(double x, QuantizeMode mode) {
  if (mode == QuantizeMode::binary) return x > 0.5 ? 1.0 : 0.0;
  if (x <= 0.5) return 0.0;
  if (x < 1.5) return 1.0;
  if (x < 2.5) return 2.0;
  return 3.0;
}

/// Symmetrize as (A + A^T)/2, quantize entrywise, force a zero diagonal.
inline Mat quantize_adjacency(const Mat& A_raw, QuantizeMode mode) {
  require(A_raw.rows() == A_raw.cols(), "quantize_adjacency: A must be square");
  Mat A = 0.5 * (A_raw + A_raw.transpose());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) A(i, j) = quantize_value(A(i, j), mode);
  A.diagonal().setZero();
  return A;
}

inline std::vector<Mat> quantize_adjacency(const std::vector<Mat>& A_raw, QuantizeMode mode) {
  std::vector<Mat> out;
  out.reserve(A_raw.size());
  for (const auto& ch : A_raw) out.push_back(quantize_adjacency(ch, mode));
  return out;
}

/// Edge presence across channels, used as the support condition for cells.
inline bool edge_present(const std::vector<Mat>& A_quant, int i, int j) {
  for (const auto& ch : A_quant)
    if (ch(i, j) != 0.0) return true;
  return false;
}

/// Per column: entries outside the structural mask are zeroed; the column is
/// activated iff the mean of the masked raw entries exceeds the threshold and
/// every edge of the cell exists in the quantized adjacency. An activated
/// column is set to one common quantized value per channel, so the result
/// always satisfies the column-constant and structural-support invariants.
inline std::vector<Mat> quantize_incidence(const std::vector<Mat>& F_raw,
                                           const std::vector<Mat>& A_quant,
                                           const CellEdgeMask& mask, double threshold,
                                           QuantizeMode mode = QuantizeMode::binary) {
  require(!F_raw.empty(), "quantize_incidence: no channels");
  require(F_raw[0].rows() == mask.m && F_raw[0].cols() == mask.K,
          "quantize_incidence: shape mismatch");
  const int n = static_cast<int>(A_quant.at(0).rows());
  const int f2 = static_cast<int>(F_raw.size());
  std::vector<Mat> out(f2, Mat::Zero(mask.m, mask.K));
  for (std::int64_t j = 0; j < mask.K; ++j) {
    const auto& col = mask.cols[j];
    if (col.empty()) continue;
    std::vector<double> mean(f2, 0.0);
    for (int c = 0; c < f2; ++c) {
      for (auto e : col) mean[c] += F_raw[c](e, j);
      mean[c] /= static_cast<double>(col.size());
    }
    double activation = mean[0];
    for (int c = 1; c < f2; ++c) activation = std::max(activation, mean[c]);
    if (activation <= threshold) continue;
    bool supported = true;
    for (auto e : col) {
      const auto [a, b] = edge_pair(e, n);
      if (!edge_present(A_quant, a, b)) {
        supported = false;
        break;
      }
    }
    if (!supported) continue;
    for (int c = 0; c < f2; ++c) {
      const double v = quantize_value(mean[c], mode);
      for (auto e : col) out[c](e, j) = v;
    }
  }
  return out;
}

}  // namespace ccsd
