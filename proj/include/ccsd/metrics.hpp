#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ccsd/complex.hpp"
#include "ccsd/hodge.hpp"
#include "ccsd/quantize.hpp"

namespace ccsd::metrics {

/// Bin masses plus an explicit normalization state.
struct Histogram {
  std::vector<double> values;
  bool normalized = false;

  double total() const { return std::accumulate(values.begin(), values.end(), 0.0); }

  Histogram& normalize() {
    const double s = total();
    if (s > 0.0)
      for (auto& v : values) v /= s;
    normalized = true;
    return *this;
  }
};

/// Exact 1-D optimal transport with unit ground distance: the absolute sum of
/// the CDF differences.
inline double emd_1d(const Histogram& p, const Histogram& q) {
  require(p.values.size() == q.values.size(), "emd_1d: support length mismatch");
  double cum = 0.0, out = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    cum += p.values[i] - q.values[i];
    out += std::abs(cum);
  }
  return out;
}

inline double gaussian_kernel(const std::vector<double>& x, const std::vector<double>& y,
                              double sigma) {
  require(sigma > 0.0, "gaussian_kernel: sigma must be positive");
  require(x.size() == y.size(), "gaussian_kernel: length mismatch");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
  return std::exp(-d2 / (2.0 * sigma * sigma));
}

inline double gaussian_emd_kernel(const Histogram& x, const Histogram& y, double sigma) {
  require(sigma > 0.0, "gaussian_emd_kernel: sigma must be positive");
  return std::exp(-emd_1d(x, y) / (2.0 * sigma * sigma));
}

enum class KernelKind { gaussian, gaussian_emd };

namespace detail {

inline std::vector<Histogram> padded(std::vector<Histogram> hs, std::size_t len) {
  for (auto& h : hs) h.values.resize(len, 0.0);
  return hs;
}

inline double discrepancy(const std::vector<Histogram>& X, const std::vector<Histogram>& Y,
                          KernelKind kernel, double sigma) {
  double acc = 0.0;
  for (const auto& x : X)
    for (const auto& y : Y)
      acc += kernel == KernelKind::gaussian ? gaussian_kernel(x.values, y.values, sigma)
                                            : gaussian_emd_kernel(x, y, sigma);
  return acc / (static_cast<double>(X.size()) * static_cast<double>(Y.size()));
}

}  // namespace detail

/// MMD between two sets of histograms with a mean-normalized discrepancy,
/// clamped at zero against round-off. Histograms are zero-padded to a common
/// support; with the EMD kernel they are normalized to probability vectors.
inline double mmd(std::vector<Histogram> P, std::vector<Histogram> Q, KernelKind kernel,
                  double sigma) {
  require(!P.empty() && !Q.empty(), "mmd: empty histogram set");
  std::size_t len = 0;
  for (const auto& h : P) len = std::max(len, h.values.size());
  for (const auto& h : Q) len = std::max(len, h.values.size());
  P = detail::padded(std::move(P), len);
  Q = detail::padded(std::move(Q), len);
  if (kernel == KernelKind::gaussian_emd) {
    for (auto& h : P) h.normalize();
    for (auto& h : Q) h.normalize();
  }
  const double d = detail::discrepancy(P, P, kernel, sigma) +
                   detail::discrepancy(Q, Q, kernel, sigma) -
                   2.0 * detail::discrepancy(P, Q, kernel, sigma);
  return std::max(0.0, d);
}

/// Node degree counts over the full support [0, n-1].
inline Histogram degree_histogram(const Mat& A) {
  check_adjacency_binary(A);
  const int n = static_cast<int>(A.rows());
  Histogram h;
  h.values.assign(std::max(1, n), 0.0);
  for (int i = 0; i < n; ++i) h.values[static_cast<int>(A.row(i).sum())] += 1.0;
  return h;
}

/// Clustering coefficients 2 T(i) / (deg (deg - 1)) binned uniformly on [0,1].
inline Histogram clustering_histogram(const Mat& A, int bins = 100) {
  check_adjacency_binary(A);
  require(bins >= 1, "clustering_histogram: bins must be >= 1");
  const int n = static_cast<int>(A.rows());
  Histogram h;
  h.values.assign(bins, 0.0);
  for (int i = 0; i < n; ++i) {
    const double deg = A.row(i).sum();
    double c = 0.0;
    if (deg >= 2.0) {
      int tri = 0;
      for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k)
          if (A(i, j) != 0.0 && A(i, k) != 0.0 && A(j, k) != 0.0) ++tri;
      c = 2.0 * tri / (deg * (deg - 1.0));
    }
    const int bin = std::min(bins - 1, static_cast<int>(c * bins));
    h.values[bin] += 1.0;
  }
  return h;
}

/// Per-node counts of the connected 4-node graphlet orbits (ids 4..14 in the
/// standard numbering), via the orbit equation system of the counting
/// algorithm of Hocevar and Demsar.
inline std::vector<std::array<std::int64_t, 11>> orbit_counts(const Mat& A) {
  check_adjacency_binary(A);
  const int n = static_cast<int>(A.rows());
  std::vector<std::vector<int>> adj(n);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (A(i, j) != 0.0) {
        adj[i].push_back(j);
        adj[j].push_back(i);
        edges.emplace_back(i, j);
      }
  std::vector<int> deg(n);
  for (int i = 0; i < n; ++i) deg[i] = static_cast<int>(adj[i].size());
  auto adjacent = [&](int a, int b) { return A(a, b) != 0.0; };

  // triangles over each edge
  const int m = static_cast<int>(edges.size());
  std::vector<int> tri(m, 0);
  std::vector<std::vector<std::pair<int, int>>> inc(n);  // (neighbour, edge id)
  for (int e = 0; e < m; ++e) {
    const auto [x, y] = edges[e];
    inc[x].emplace_back(y, e);
    inc[y].emplace_back(x, e);
    for (int z = 0; z < n; ++z)
      if (adjacent(x, z) && adjacent(y, z)) ++tri[e];
  }

  // complete graphlets (K4) per node
  std::vector<std::int64_t> c4(n, 0);
  for (const auto& [x, y] : edges) {
    std::vector<int> common;
    for (int z = 0; z < n; ++z)
      if (z != x && z != y && adjacent(x, z) && adjacent(y, z)) common.push_back(z);
    for (std::size_t i = 0; i < common.size(); ++i)
      for (std::size_t j = i + 1; j < common.size(); ++j)
        if (adjacent(common[i], common[j])) {
          ++c4[x];
          ++c4[y];
          ++c4[common[i]];
          ++c4[common[j]];
        }
  }
  // every K4 is seen from each of its 6 edges, incrementing all four nodes,
  // so each node is counted 6 times per K4
  for (int i = 0; i < n; ++i) c4[i] /= 6;

  std::vector<std::array<std::int64_t, 11>> orbits(n);
  std::vector<std::int64_t> common(n, 0);
  for (int x = 0; x < n; ++x) {
    orbits[x].fill(0);
    std::fill(common.begin(), common.end(), 0);
    std::int64_t f_12_14 = 0, f_10_13 = 0, f_13_14 = 0, f_11_13 = 0;
    std::int64_t f_7_11 = 0, f_5_8 = 0, f_6_9 = 0, f_9_12 = 0, f_4_8 = 0, f_8_12 = 0;
    const std::int64_t f_14 = c4[x];
    std::int64_t orbit2 = 0, orbit3 = 0, orbit1 = 0;

    for (const auto& [y, ey] : inc[x]) {
      for (const auto& [z, ez] : inc[y]) {
        if (z == x) continue;
        if (adjacent(x, z)) {
          if (z < y) {
            f_12_14 += tri[ez] - 1;
            f_10_13 += (deg[y] - 1 - tri[ez]) + (deg[z] - 1 - tri[ez]);
          }
        } else {
          ++common[z];
        }
      }
    }
    for (std::size_t i1 = 0; i1 < inc[x].size(); ++i1) {
      const auto [y, ey] = inc[x][i1];
      for (std::size_t i2 = i1 + 1; i2 < inc[x].size(); ++i2) {
        const auto [z, ez] = inc[x][i2];
        if (adjacent(y, z)) {
          ++orbit3;
          f_13_14 += (tri[ey] - 1) + (tri[ez] - 1);
          f_11_13 += (deg[x] - 1 - tri[ey]) + (deg[x] - 1 - tri[ez]);
        } else {
          ++orbit2;
          f_7_11 += (deg[x] - 1 - tri[ey] - 1) + (deg[x] - 1 - tri[ez] - 1);
          f_5_8 += (deg[y] - 1 - tri[ey]) + (deg[z] - 1 - tri[ez]);
        }
      }
    }
    for (const auto& [y, ey] : inc[x]) {
      for (const auto& [z, ez] : inc[y]) {
        if (z == x) continue;
        if (!adjacent(x, z)) {
          ++orbit1;
          f_6_9 += deg[y] - 1 - tri[ey] - 1;
          f_9_12 += tri[ez];
          f_4_8 += deg[z] - 1 - tri[ez];
          f_8_12 += common[z] - 1;
        }
      }
    }
    (void)orbit1;
    (void)orbit2;
    (void)orbit3;

    auto& o = orbits[x];
    o[14 - 4] = f_14;
    o[13 - 4] = (f_13_14 - 6 * f_14) / 2;
    o[12 - 4] = f_12_14 - 3 * f_14;
    o[11 - 4] = (f_11_13 - f_13_14 + 6 * f_14) / 2;
    o[10 - 4] = f_10_13 - f_13_14 + 6 * f_14;
    o[9 - 4] = (f_9_12 - 2 * f_12_14 + 6 * f_14) / 2;
    o[8 - 4] = (f_8_12 - 2 * f_12_14 + 6 * f_14) / 2;
    o[7 - 4] = (f_13_14 + f_7_11 - f_11_13 - 6 * f_14) / 6;
    o[6 - 4] = (2 * f_12_14 + f_6_9 - f_9_12 - 6 * f_14) / 2;
    o[5 - 4] = 2 * f_12_14 + f_5_8 - f_8_12 - 6 * f_14;
    o[4 - 4] = 2 * f_12_14 + f_4_8 - f_8_12 - 6 * f_14;
  }
  return orbits;
}

/// Mean orbit-count vector of a graph (the graph-level orbit statistic).
inline std::vector<double> orbit_statistic(const Mat& A) {
  const auto counts = orbit_counts(A);
  std::vector<double> mean(11, 0.0);
  if (counts.empty()) return mean;
  for (const auto& row : counts)
    for (int k = 0; k < 11; ++k) mean[k] += static_cast<double>(row[k]);
  for (auto& v : mean) v /= static_cast<double>(counts.size());
  return mean;
}

/// Rank-r metric: cell counts per cardinality when features are scalar, or
/// per feature channel with a nonzero column otherwise.
inline Histogram rank_r_metric(const ComplexTensor& cc, int r) {
  require(r >= 0 && r <= 2, "rank_r_metric: rank out of range");
  Histogram h;
  if (r == 0) {
    if (cc.f0 == 1) {
      h.values.assign(1, static_cast<double>(cc.active_nodes()));
    } else {
      h.values.assign(cc.f0, 0.0);
      for (int i = 0; i < cc.n; ++i) {
        if (!cc.node_mask[i]) continue;
        for (int k = 0; k < cc.f0; ++k)
          if (cc.X(i, k) != 0.0) h.values[k] += 1.0;
      }
    }
    return h;
  }
  if (r == 1) {
    if (cc.f1 == 1) {
      h.values.assign(1, 0.0);
      for (int i = 0; i < cc.n; ++i)
        for (int j = i + 1; j < cc.n; ++j)
          if (cc.A[0](i, j) != 0.0) h.values[0] += 1.0;
    } else {
      h.values.assign(cc.f1, 0.0);
      for (int i = 0; i < cc.n; ++i)
        for (int j = i + 1; j < cc.n; ++j)
          for (int k = 0; k < cc.f1; ++k)
            if (cc.A[k](i, j) != 0.0) h.values[k] += 1.0;
    }
    return h;
  }
  const auto cells = cc.cells();
  if (cc.f2 == 1) {
    const auto& c = cc.constraints;
    h.values.assign(c.d_max - c.d_min + 1, 0.0);
    for (const auto& cell : cells)
      h.values[static_cast<int>(cell.nodes.size()) - c.d_min] += 1.0;
  } else {
    h.values.assign(cc.f2, 0.0);
    for (const auto& cell : cells)
      for (int k = 0; k < cc.f2; ++k)
        if (cell.feature[k] != 0.0) h.values[k] += 1.0;
  }
  return h;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations; descending.
inline Vec symmetric_eigenvalues(Mat A, double tol = 1e-10, int max_sweeps = 64) {
  require(A.rows() == A.cols(), "symmetric_eigenvalues: matrix must be square");
  const Eigen::Index n = A.rows();
  if (n == 0) return Vec();
  auto off_norm = [&]() {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) s += 2.0 * A(i, j) * A(i, j);
    return std::sqrt(s);
  };
  int sweep = 0;
  while (off_norm() > tol) {
    if (++sweep > max_sweeps)
      throw std::runtime_error(
          "symmetric_eigenvalues: Jacobi failed to converge; off-diagonal norm " +
          std::to_string(off_norm()) + " after " + std::to_string(max_sweeps) + " sweeps");
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (A(p, q) == 0.0) continue;
        const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = A(k, p), akq = A(k, q);
          A(k, p) = c * akp - s * akq;
          A(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = A(p, k), aqk = A(q, k);
          A(p, k) = c * apk - s * aqk;
          A(q, k) = s * apk + c * aqk;
        }
      }
  }
  Vec ev = A.diagonal();
  std::sort(ev.data(), ev.data() + n, std::greater<double>());
  return ev;
}

/// Hodge Laplacian spectrum of the complex, eigenvalues descending.
inline Vec hodge_spectrum(const ComplexTensor& cc) {
  return symmetric_eigenvalues(hodge_laplacian(cc.F));
}

/// Brute-force Hodge Laplacians distance: minimum over all node permutations
/// (with the induced cell permutations) of the Frobenius distance between the
/// rank-2 Hodge Laplacians. Factorial search, only for tiny instances.
inline double hodge_distance_oracle(const ComplexTensor& cc1, const ComplexTensor& cc2,
                                    int max_n = 6) {
  require(cc1.n == cc2.n, "hodge_distance_oracle: node counts differ");
  require(cc1.constraints == cc2.constraints, "hodge_distance_oracle: constraints differ");
  require(cc1.n <= max_n, "hodge_distance_oracle: instance too large for factorial search");
  const int n = cc1.n;
  const Mat H2 = hodge_laplacian(cc2.F);
  CellIndex ci(n, cc1.constraints);
  const auto cells1 = cc1.cells();

  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  double best = std::numeric_limits<double>::infinity();
  do {
    std::vector<Cell> mapped;
    mapped.reserve(cells1.size());
    for (const auto& cell : cells1) {
      Cell c = cell;
      for (auto& v : c.nodes) v = perm[v];
      mapped.push_back(std::move(c));
    }
    ComplexTensor tmp = ComplexTensor::zeros(n, cc1.constraints, 1, 1, cc1.f2);
    tmp.set_cells(mapped);
    const double d = (hodge_laplacian(tmp.F) - H2).norm();
    best = std::min(best, d);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

struct MetricConfig {
  double sigma_degree = 1.0;
  double sigma_cluster = 1.0;
  double sigma_orbit = 1.0;
  double sigma_rank2 = 1.0;
  double sigma_spectrum = 1.0;
  int cluster_bins = 100;
};

struct MetricReport {
  double degree_mmd = 0.0;
  double cluster_mmd = 0.0;
  double orbit_mmd = 0.0;
  double rank2_mmd = 0.0;
  double hodge_spectrum_mmd = 0.0;
  double average = 0.0;

  std::vector<std::pair<std::string, double>> entries() const {
    return {{"degree_mmd", degree_mmd},
            {"cluster_mmd", cluster_mmd},
            {"orbit_mmd", orbit_mmd},
            {"rank2_mmd", rank2_mmd},
            {"hodge_spectrum_mmd", hodge_spectrum_mmd},
            {"average", average}};
  }
};

/// Binary adjacency of the active subgraph (edge present when any channel is
/// nonzero).
inline Mat active_adjacency(const ComplexTensor& cc) {
  std::vector<int> idx;
  for (int i = 0; i < cc.n; ++i)
    if (cc.node_mask[i]) idx.push_back(i);
  Mat A = Mat::Zero(idx.size(), idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b)
      if (edge_present(cc.A, idx[a], idx[b])) A(a, b) = A(b, a) = 1.0;
  return A;
}

/// Graph- and complex-level MMDs between a generated and a reference set.
/// Degree and clustering use the Gaussian-EMD kernel; orbit and spectrum
/// statistics use the plain Gaussian kernel; rank-2 histograms use
/// Gaussian-EMD.
inline MetricReport evaluate(const std::vector<ComplexTensor>& generated,
                             const std::vector<ComplexTensor>& reference,
                             const MetricConfig& cfg = {}) {
  require(!generated.empty() && !reference.empty(), "evaluate: empty sample set");
  auto stats = [&](const std::vector<ComplexTensor>& set) {
    struct Stats {
      std::vector<Histogram> degree, cluster, rank2, spectrum, orbit;
    } s;
    for (const auto& cc : set) {
      const Mat A = active_adjacency(cc);
      s.degree.push_back(degree_histogram(A));
      s.cluster.push_back(clustering_histogram(A, cfg.cluster_bins));
      s.rank2.push_back(rank_r_metric(cc, 2));
      const Vec ev = hodge_spectrum(cc);
      Histogram hs;
      hs.values.assign(ev.data(), ev.data() + ev.size());
      s.spectrum.push_back(std::move(hs));
      Histogram ho;
      ho.values = orbit_statistic(A);
      s.orbit.push_back(std::move(ho));
    }
    return s;
  };
  const auto gen = stats(generated), ref = stats(reference);
  MetricReport report;
  report.degree_mmd = mmd(gen.degree, ref.degree, KernelKind::gaussian_emd, cfg.sigma_degree);
  report.cluster_mmd =
      mmd(gen.cluster, ref.cluster, KernelKind::gaussian_emd, cfg.sigma_cluster);
  report.orbit_mmd = mmd(gen.orbit, ref.orbit, KernelKind::gaussian, cfg.sigma_orbit);
  report.rank2_mmd = mmd(gen.rank2, ref.rank2, KernelKind::gaussian_emd, cfg.sigma_rank2);
  report.hodge_spectrum_mmd =
      mmd(gen.spectrum, ref.spectrum, KernelKind::gaussian, cfg.sigma_spectrum);
  report.average = (report.degree_mmd + report.cluster_mmd + report.orbit_mmd +
                    report.rank2_mmd + report.hodge_spectrum_mmd) /
                   5.0;
  return report;
}

}  // namespace ccsd::metrics
