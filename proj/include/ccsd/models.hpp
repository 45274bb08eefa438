#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ccsd/complex.hpp"
#include "ccsd/hodge.hpp"
#include "ccsd/layers.hpp"

namespace ccsd::nn {

/// Tensor geometry shared by the three score networks.
struct CcShape {
  int n = 0;
  int f0 = 1, f1 = 1, f2 = 1;
  DimConstraints constraints;
  CellEdgeMask mask;  // structural support of F
  std::shared_ptr<CellIndex> cell_index;

  static CcShape make(int n, DimConstraints c, int f0 = 1, int f1 = 1, int f2 = 1) {
    CcShape s;
    s.n = n;
    s.f0 = f0;
    s.f1 = f1;
    s.f2 = f2;
    s.constraints = c;
    s.mask = cell_edge_mask(n, c);
    s.cell_index = std::make_shared<CellIndex>(n, c);
    return s;
  }
  std::int64_t m() const { return mask.m; }
  std::int64_t K() const { return mask.K; }
};

namespace detail {

inline Vec node_mask_vec(const std::vector<std::uint8_t>& mask) {
  Vec v(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) v(static_cast<Eigen::Index>(i)) = mask[i];
  return v;
}

inline Mat adj_mask(const std::vector<std::uint8_t>& mask) {
  const Vec v = node_mask_vec(mask);
  Mat m = v * v.transpose();
  m.diagonal().setZero();
  return m;
}

/// Active-entry mask of F: rows at edges between active nodes, columns at
/// cells whose nodes are all active, optionally restricted to the structural
/// support.
inline Mat incidence_mask(const CcShape& shape, const std::vector<std::uint8_t>& node_mask,
                          bool structural) {
  Mat out = Mat::Zero(shape.m(), shape.K());
  std::vector<std::uint8_t> cell_active(shape.K(), 1);
  for (std::int64_t j = 0; j < shape.K(); ++j)
    for (int v : shape.cell_index->nodes_of(j))
      if (!node_mask[v]) {
        cell_active[j] = 0;
        break;
      }
  if (structural) {
    for (std::int64_t j = 0; j < shape.K(); ++j) {
      if (!cell_active[j]) continue;
      for (auto e : shape.mask.cols[j]) out(e, j) = 1.0;
    }
  } else {
    std::vector<std::uint8_t> edge_active(shape.m(), 1);
    for (std::int64_t e = 0; e < shape.m(); ++e) {
      const auto [a, b] = edge_pair(e, shape.n);
      edge_active[e] = node_mask[a] && node_mask[b];
    }
    for (std::int64_t j = 0; j < shape.K(); ++j)
      if (cell_active[j])
        for (std::int64_t e = 0; e < shape.m(); ++e)
          if (edge_active[e]) out(e, j) = 1.0;
  }
  return out;
}

inline Mat masked_rows(Mat x, const std::vector<std::uint8_t>& node_mask) {
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    if (!node_mask[i]) x.row(i).setZero();
  return x;
}

}  // namespace detail

struct ScoreNetXConfig {
  int num_layers = 3;
  Eigen::Index hidden = 32;
  int final_mlp_layers = 3;
};

/// Score network for the node features: chained graph convolutions whose
/// outputs are concatenated feature-wise and mapped back to the input width.
class ScoreNetworkX {
 public:
  ScoreNetworkX(const CcShape& shape, const ScoreNetXConfig& cfg, std::uint64_t seed)
      : shape_(shape), cfg_(cfg), store_(seed) {
    Eigen::Index in = shape.f0;
    for (int l = 0; l < cfg.num_layers; ++l) {
      theta_.push_back(store_.weight("gcn" + std::to_string(l) + ".w", in, cfg.hidden));
      in = cfg.hidden;
    }
    const Eigen::Index cat = shape.f0 + cfg.num_layers * cfg.hidden;
    final_ = Mlp(store_, "final", cfg.final_mlp_layers, cat, 2 * cat, shape.f0);
  }

  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

  ad::Tensor forward(const Mat& X, const std::vector<Mat>& A,
                     const std::vector<std::uint8_t>& node_mask) const {
    const Mat maskA = detail::adj_mask(node_mask);
    Mat A_sum = Mat::Zero(shape_.n, shape_.n);  // rank-1 structure for the convolutions
    for (const auto& ch : A) A_sum += ch;
    const ad::Tensor a_in = ad::Tensor::constant(A_sum.cwiseProduct(maskA));
    ad::Tensor h = ad::Tensor::constant(detail::masked_rows(X, node_mask));
    std::vector<ad::Tensor> cat{h};
    for (const auto& theta : theta_) {
      h = gcn(h, a_in, theta);
      cat.push_back(h);
    }
    ad::Tensor out = final_.forward(ad::concat_cols(cat));
    const ad::Tensor mvec = ad::Tensor::constant(detail::node_mask_vec(node_mask));
    return ad::scale_rows(out, mvec);
  }

 private:
  CcShape shape_;
  ScoreNetXConfig cfg_;
  ParamStore store_;
  std::vector<ad::Tensor> theta_;
  Mlp final_;
};

struct ScoreNetAConfig {
  int num_heads = 4;
  int c_init = 2;  // adjacency power channels fed to the first block
  int c_hid = 8;
  int c_final = 4;
  int num_blocks = 5;
  int mlp_layers = 2;
  Eigen::Index hidden = 32;
  bool baseline = false;
  int hodge_blocks = 1;
  int hodge_heads = 2;
  Eigen::Index hodge_attn_dim = 4;
  int hodge_c_hid = 2;
  int hodge_c_final = 2;
  int hodge_mlp_layers = 1;
  Eigen::Index hodge_mlp_hidden = 4;
  int final_mlp_layers = 2;
};

/// Score network for the adjacency: an attention track over adjacency powers
/// plus a Hodge track over the dual powers and the rank-2 incidence, joined
/// by a channel-MLP. The output is symmetrized with a zero diagonal.
class ScoreNetworkACC {
 public:
  ScoreNetworkACC(const CcShape& shape, const ScoreNetAConfig& cfg, std::uint64_t seed)
      : shape_(shape), cfg_(cfg), store_(seed) {
    const int cin_total = cfg.c_init * shape.f1;
    int channels = cin_total;
    Eigen::Index x_in = shape.f0;
    for (int l = 0; l < cfg.num_blocks; ++l) {
      const int out = l == cfg.num_blocks - 1 ? cfg.c_final : cfg.c_hid;
      att_.emplace_back(store_, "att" + std::to_string(l), channels, x_in, cfg.hidden,
                        cfg.hidden, out, cfg.num_heads, cfg.mlp_layers);
      channels = out;
      x_in = cfg.hidden;
    }
    int hodge_channels = cfg.c_init;
    for (int l = 0; l < cfg.hodge_blocks; ++l) {
      const int out = l == cfg.hodge_blocks - 1 ? cfg.hodge_c_final : cfg.hodge_c_hid;
      const std::string name = "hodge" + std::to_string(l);
      if (cfg.baseline)
        base_.emplace_back(store_, name, hodge_channels, out, cfg.hodge_c_hid,
                           cfg.hodge_mlp_layers, cfg.hodge_mlp_hidden);
      else
        hatt_.emplace_back(store_, name, hodge_channels, shape.K(), cfg.hodge_attn_dim, out,
                           cfg.hodge_c_hid, cfg.hodge_heads, cfg.hodge_mlp_layers,
                           cfg.hodge_mlp_hidden);
      hodge_channels = out;
    }
    int cat = cin_total + cfg.c_final;
    if (cfg.num_blocks > 1) cat += cfg.c_hid * (cfg.num_blocks - 1);
    for (int l = 0; l < cfg.hodge_blocks; ++l)
      cat += l == cfg.hodge_blocks - 1 ? cfg.hodge_c_final : cfg.hodge_c_hid;
    final_ = Mlp(store_, "final", cfg.final_mlp_layers, cat,
                 std::max<Eigen::Index>(cfg.hidden, 2 * cat), shape.f1);
  }

  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

  std::vector<ad::Tensor> forward(const Mat& X, const std::vector<Mat>& A,
                                  const std::vector<Mat>& F,
                                  const std::vector<std::uint8_t>& node_mask) const {
    const Mat maskA = detail::adj_mask(node_mask);
    const Mat maskF = detail::incidence_mask(shape_, node_mask, true);

    // adjacency power channels (constants)
    std::vector<ad::Tensor> a_channels;
    Mat a_sum = Mat::Zero(shape_.n, shape_.n);
    for (const auto& ch : A) {
      const Mat masked = ch.cwiseProduct(maskA);
      a_sum += masked;
      for (const auto& p : higher_order_adjacency(masked, cfg_.c_init))
        a_channels.push_back(ad::Tensor::constant(p));
    }
    std::vector<ad::Tensor> collect = a_channels;

    // attention track
    ad::Tensor x = ad::Tensor::constant(detail::masked_rows(X, node_mask));
    std::vector<ad::Tensor> adj = a_channels;
    for (const auto& layer : att_) {
      auto [x2, adj2] = layer.forward(x, adj);
      x = x2;
      adj = std::move(adj2);
      for (const auto& c : adj) collect.push_back(c);
    }

    // Hodge track: duals of the adjacency powers are diagonal channels
    if (cfg_.hodge_blocks > 0) {
      std::vector<HodgeChannel> hodge;
      for (const auto& p : higher_order_adjacency(a_sum, cfg_.c_init)) {
        HodgeChannel hc;
        hc.diag = ad::Tensor::constant(hodge_dual(symmetrized(p)));
        hodge.push_back(std::move(hc));
      }
      Mat f_in = Mat::Zero(shape_.m(), shape_.K());
      for (const auto& ch : F) f_in += ch;
      ad::Tensor f = ad::Tensor::constant(f_in.cwiseProduct(maskF));
      for (int l = 0; l < cfg_.hodge_blocks; ++l) {
        const bool need_f = l + 1 < cfg_.hodge_blocks;
        auto [h_out, f_out] = cfg_.baseline ? base_[l].forward(hodge, f, need_f)
                                            : hatt_[l].forward(hodge, f, need_f);
        for (const auto& h : h_out) collect.push_back(hodge_inverse_to_adj(h));
        hodge.clear();
        for (auto& h : h_out) {
          HodgeChannel hc;
          hc.mat = h;
          hodge.push_back(std::move(hc));
        }
        if (need_f) f = channel_sum(f_out);
      }
    }

    std::vector<ad::Tensor> outs = detail::channel_mlp(final_, collect, shape_.f1);
    std::vector<ad::Tensor> masked;
    const ad::Tensor maskA_t = ad::Tensor::constant(maskA);
    for (auto& o : outs) {
      ad::Tensor sym = ad::scalar_mul(ad::add(o, ad::transpose(o)), 0.5);
      masked.push_back(ad::mul(sym, maskA_t));
    }
    return masked;
  }

 private:
  static Mat symmetrized(const Mat& a) {
    Mat s = 0.5 * (a + a.transpose());
    s.diagonal().setZero();
    return s;
  }
  static ad::Tensor channel_sum(const std::vector<ad::Tensor>& chans) {
    ad::Tensor acc = chans.front();
    for (std::size_t i = 1; i < chans.size(); ++i) acc = ad::add(acc, chans[i]);
    return acc;
  }
  /// Diagonal of an m x m tensor scattered into a symmetric n x n adjacency.
  ad::Tensor hodge_inverse_to_adj(const ad::Tensor& h) const {
    const int n = shape_.n;
    auto ph = h.node();
    ad::Tensor out = ad::detail::make_op(n, n, {ph}, [ph, n](ad::Node& node) {
      if (!ph->requires_grad) return;
      auto pg = ph->g();
      auto ng = node.g();
      std::int64_t e = 0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          pg(e, e) += ng(i, j) + ng(j, i);
          ++e;
        }
    });
    auto v = out.node()->v();
    auto hv = ph->v();
    std::int64_t e = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        v(i, j) = hv(e, e);
        v(j, i) = hv(e, e);
        ++e;
      }
    return out;
  }

  CcShape shape_;
  ScoreNetAConfig cfg_;
  ParamStore store_;
  std::vector<AttLayer> att_;
  std::vector<HodgeAttLayer> hatt_;
  std::vector<HodgeBaselineLayer> base_;
  Mlp final_;
};

struct ScoreNetFConfig {
  int power = 2;
  int num_blocks = 2;
  int hidden_channels = 8;
  int mlp_layers = 1;
  int final_mlp_layers = 1;
  bool apply_mask = true;
};

/// Score network for the rank-2 incidence: higher-order incidence channels
/// chained through channel-axis MLPs, concatenated and mapped to the feature
/// width, then masked.
class ScoreNetworkF {
 public:
  ScoreNetworkF(const CcShape& shape, const ScoreNetFConfig& cfg, std::uint64_t seed)
      : shape_(shape), cfg_(cfg), store_(seed) {
    int channels = cfg.power * shape.f2;
    int cat = channels;
    for (int l = 0; l < cfg.num_blocks; ++l) {
      blocks_.emplace_back(store_, "hodge_net" + std::to_string(l), channels,
                           cfg.hidden_channels, cfg.mlp_layers, 2 * cfg.hidden_channels);
      channels = cfg.hidden_channels;
      cat += channels;
    }
    final_ = Mlp(store_, "final", cfg.final_mlp_layers, cat, 2 * cat, shape.f2);
  }

  ParamStore& store() { return store_; }
  const ParamStore& store() const { return store_; }

  std::vector<ad::Tensor> forward(const std::vector<Mat>& F,
                                  const std::vector<std::uint8_t>& node_mask) const {
    const Mat maskF = detail::incidence_mask(shape_, node_mask, cfg_.apply_mask);
    std::vector<ad::Tensor> k0;
    for (const auto& ch : F) {
      const Mat masked = ch.cwiseProduct(maskF);
      const auto chans = cfg_.apply_mask
                             ? higher_order_incidence_masked(masked, cfg_.power, shape_.mask)
                             : higher_order_incidence(masked, cfg_.power);
      for (const auto& c : chans) k0.push_back(ad::Tensor::constant(c));
    }
    std::vector<ad::Tensor> collect = k0;
    std::vector<ad::Tensor> cur = k0;
    for (const auto& block : blocks_) {
      cur = block.forward(cur);
      for (const auto& c : cur) collect.push_back(c);
    }
    auto outs = detail::channel_mlp(final_, collect, shape_.f2);
    const ad::Tensor maskF_t = ad::Tensor::constant(maskF);
    for (auto& o : outs) o = ad::mul(o, maskF_t);
    return outs;
  }

 private:
  CcShape shape_;
  ScoreNetFConfig cfg_;
  ParamStore store_;
  std::vector<HodgeNetwork> blocks_;
  Mlp final_;
};

}  // namespace ccsd::nn
