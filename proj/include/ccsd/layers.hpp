#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ccsd/ad.hpp"
#include "ccsd/cells.hpp"
#include "ccsd/rng.hpp"

namespace ccsd::nn {

/// Ordered registry of named parameter tensors. Parameters are created with
/// deterministic Glorot-uniform (weights) or zero (bias) initialization from
/// the store's stream, so one seed fixes every value bit-exactly.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed) : rng_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  ad::Tensor weight(const std::string& name, Eigen::Index fan_in, Eigen::Index fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Mat w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < fan_in; ++i)
      for (Eigen::Index j = 0; j < fan_out; ++j) w(i, j) = rng_.uniform(-a, a);
    return track(name, ad::Tensor::variable(w));
  }

  ad::Tensor bias(const std::string& name, Eigen::Index dim) {
    return track(name, ad::Tensor::variable(Mat::Zero(1, dim)));
  }

  const std::vector<std::pair<std::string, ad::Tensor>>& params() const { return params_; }
  std::vector<std::pair<std::string, ad::Tensor>>& params() { return params_; }

  std::int64_t count() const {
    std::int64_t c = 0;
    for (const auto& [name, t] : params_) c += t.rows() * t.cols();
    return c;
  }

  void zero_grad() {
    for (auto& [name, t] : params_) t.zero_grad();
  }

 private:
  ad::Tensor track(const std::string& name, ad::Tensor t) {
    for (const auto& [n, unused] : params_)
      require(n != name, "ParamStore: duplicate parameter name " + name);
    params_.emplace_back(name, t);
    return t;
  }
  Rng rng_;
  std::uint64_t seed_;
  std::vector<std::pair<std::string, ad::Tensor>> params_;
};

/// Multi-layer perceptron with tanh hidden activations and a linear output.
/// One layer means a single linear map.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParamStore& store, const std::string& prefix, int num_layers, Eigen::Index in,
      Eigen::Index hidden, Eigen::Index out) {
    require(num_layers >= 1, "Mlp: need at least one layer");
    for (int l = 0; l < num_layers; ++l) {
      const Eigen::Index din = l == 0 ? in : hidden;
      const Eigen::Index dout = l == num_layers - 1 ? out : hidden;
      const std::string base = prefix + ".l" + std::to_string(l);
      w_.push_back(store.weight(base + ".w", din, dout));
      b_.push_back(store.bias(base + ".b", dout));
    }
  }

  ad::Tensor forward(const ad::Tensor& x) const {
    ad::Tensor h = x;
    for (std::size_t l = 0; l < w_.size(); ++l) {
      h = ad::add_rowvec(ad::matmul(h, w_[l]), b_[l]);
      if (l + 1 < w_.size()) h = ad::tanh(h);
    }
    return h;
  }

 private:
  std::vector<ad::Tensor> w_, b_;
};

/// Graph convolution D^{-1/2} (A+I) D^{-1/2} X Theta. Degrees are clamped at
/// one, which is exact for nonnegative adjacencies and keeps the map defined
/// on attention-produced channels.
inline ad::Tensor gcn(const ad::Tensor& X, const ad::Tensor& A, const ad::Tensor& theta) {
  require(A.rows() == A.cols() && A.rows() == X.rows(), "gcn: shape mismatch");
  const ad::Tensor eye = ad::Tensor::constant(Mat::Identity(A.rows(), A.rows()));
  const ad::Tensor a_hat = ad::add(A, eye);
  const ad::Tensor dis = ad::safe_rsqrt(ad::clamp_min(ad::row_sum(a_hat), 1.0));
  const ad::Tensor norm = ad::scale_cols(ad::scale_rows(a_hat, dis), dis);
  return ad::matmul(norm, ad::matmul(X, theta));
}

/// Hodge convolution D^{-1/2} H D^{-1/2} F Theta with D the row sums of H.
/// Rows with non-positive degree are zeroed (pseudo-inverse convention).
inline ad::Tensor hcn(const ad::Tensor& H, const ad::Tensor& F, const ad::Tensor& theta) {
  require(H.rows() == H.cols() && H.rows() == F.rows(), "hcn: shape mismatch");
  const ad::Tensor dis = ad::safe_rsqrt(ad::row_sum(H));
  const ad::Tensor norm = ad::scale_cols(ad::scale_rows(H, dis), dis);
  return ad::matmul(norm, ad::matmul(F, theta));
}

/// A Hodge-dual channel: either a dense m x m tensor or, for duals of
/// adjacency powers, just the diagonal as an m x 1 tensor.
struct HodgeChannel {
  ad::Tensor mat;   // dense m x m, or undefined
  ad::Tensor diag;  // m x 1, or undefined
  bool is_diag() const { return diag.defined(); }
  Eigen::Index m() const { return is_diag() ? diag.rows() : mat.rows(); }
};

/// H * F for a Hodge channel; the diagonal form is a row scaling.
inline ad::Tensor hodge_apply(const HodgeChannel& H, const ad::Tensor& F) {
  return H.is_diag() ? ad::scale_rows(F, H.diag) : ad::matmul(H.mat, F);
}

/// hcn specialized to a Hodge channel. For a diagonal channel the degree
/// matrix equals the channel itself, so the normalized operator reduces to an
/// indicator row scaling.
inline ad::Tensor hcn(const HodgeChannel& H, const ad::Tensor& F, const ad::Tensor& theta) {
  if (!H.is_diag()) return hcn(H.mat, F, theta);
  const ad::Tensor dis = ad::safe_rsqrt(H.diag);
  const ad::Tensor indicator = ad::mul(ad::mul(dis, dis), H.diag);  // 1 where diag>0
  return ad::scale_rows(ad::matmul(F, theta), indicator);
}

namespace detail {

/// Scaled multi-head product: mean over heads of Q_h K_h^T / sqrt(dim_out),
/// then symmetrization.
inline ad::Tensor attention_map(const ad::Tensor& Q, const ad::Tensor& K, int num_heads,
                                Eigen::Index dim_out) {
  require(Q.cols() % num_heads == 0, "attention: heads must divide the channel dim");
  const Eigen::Index d = Q.cols() / num_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim_out));
  ad::Tensor acc;
  for (int h = 0; h < num_heads; ++h) {
    const ad::Tensor qh = ad::slice_cols(Q, h * d, d);
    const ad::Tensor kh = ad::slice_cols(K, h * d, d);
    const ad::Tensor e = ad::matmul(qh, ad::transpose(kh));
    acc = acc.defined() ? ad::add(acc, e) : e;
  }
  acc = ad::scalar_mul(acc, scale / num_heads);
  return ad::scalar_mul(ad::add(acc, ad::transpose(acc)), 0.5);
}

/// Apply an MLP along the channel axis of a stack of equally-shaped matrices:
/// flatten each to a column, concatenate, map, split back.
inline std::vector<ad::Tensor> channel_mlp(const Mlp& mlp, const std::vector<ad::Tensor>& chans,
                                           Eigen::Index out_channels) {
  require(!chans.empty(), "channel_mlp: no channels");
  const Eigen::Index r = chans[0].rows(), c = chans[0].cols();
  std::vector<ad::Tensor> flat;
  flat.reserve(chans.size());
  for (const auto& ch : chans) flat.push_back(ad::reshape(ch, r * c, 1));
  const ad::Tensor mixed = mlp.forward(ad::concat_cols(flat));
  require(mixed.cols() == out_channels, "channel_mlp: unexpected output width");
  std::vector<ad::Tensor> out;
  out.reserve(out_channels);
  for (Eigen::Index k = 0; k < out_channels; ++k)
    out.push_back(ad::reshape(ad::slice_cols(mixed, k, 1), r, c));
  return out;
}

}  // namespace detail

/// Graph multi-head attention block: value = GCN(X, A); the attention map is
/// the symmetrized scaled product of two further GCN outputs split head-wise.
class Gmh {
 public:
  Gmh() = default;
  Gmh(ParamStore& store, const std::string& prefix, Eigen::Index in_dim, Eigen::Index attn_dim,
      Eigen::Index out_dim, int num_heads)
      : heads_(num_heads), out_dim_(out_dim) {
    require(attn_dim % num_heads == 0, "Gmh: heads must divide attn_dim");
    tq_ = store.weight(prefix + ".q", in_dim, attn_dim);
    tk_ = store.weight(prefix + ".k", in_dim, attn_dim);
    tv_ = store.weight(prefix + ".v", in_dim, out_dim);
  }

  std::pair<ad::Tensor, ad::Tensor> forward(const ad::Tensor& X, const ad::Tensor& A) const {
    const ad::Tensor value = gcn(X, A, tv_);
    const ad::Tensor Q = gcn(X, A, tq_);
    const ad::Tensor K = gcn(X, A, tk_);
    return {value, detail::attention_map(Q, K, heads_, out_dim_)};
  }

 private:
  int heads_ = 1;
  Eigen::Index out_dim_ = 1;
  ad::Tensor tq_, tk_, tv_;
};

/// Attention layer over a channel stack of adjacencies: one GMH per channel,
/// X' = tanh(MLP over concatenated values), A' = channel-MLP over the
/// attention maps (linear output, no tanh).
class AttLayer {
 public:
  AttLayer() = default;
  AttLayer(ParamStore& store, const std::string& prefix, int in_channels, Eigen::Index x_in,
           Eigen::Index attn_dim, Eigen::Index x_out, int out_channels, int num_heads,
           int mlp_layers)
      : out_channels_(out_channels) {
    for (int k = 0; k < in_channels; ++k)
      gmh_.emplace_back(store, prefix + ".gmh" + std::to_string(k), x_in, attn_dim, x_out,
                        num_heads);
    const Eigen::Index cat = static_cast<Eigen::Index>(in_channels) * x_out;
    mlp_x_ = Mlp(store, prefix + ".mlp_x", mlp_layers, cat, 2 * x_out, x_out);
    const Eigen::Index hidden = 2 * std::max(in_channels, out_channels);
    mlp_a_ = Mlp(store, prefix + ".mlp_a", mlp_layers, in_channels, hidden, out_channels);
  }

  std::pair<ad::Tensor, std::vector<ad::Tensor>> forward(
      const ad::Tensor& X, const std::vector<ad::Tensor>& A_channels) const {
    require(A_channels.size() == gmh_.size(), "AttLayer: channel count mismatch");
    std::vector<ad::Tensor> values, attns;
    for (std::size_t k = 0; k < gmh_.size(); ++k) {
      auto [v, a] = gmh_[k].forward(X, A_channels[k]);
      values.push_back(v);
      attns.push_back(a);
    }
    const ad::Tensor x_out = ad::tanh(mlp_x_.forward(ad::concat_cols(values)));
    auto a_out = detail::channel_mlp(mlp_a_, attns, out_channels_);
    return {x_out, std::move(a_out)};
  }

 private:
  int out_channels_ = 1;
  std::vector<Gmh> gmh_;
  Mlp mlp_x_, mlp_a_;
};

/// Hodge multi-head attention block: value = H F; the Hodge attention map is
/// the symmetrized scaled product of two HCN outputs split head-wise.
class Hccmh {
 public:
  Hccmh() = default;
  Hccmh(ParamStore& store, const std::string& prefix, Eigen::Index f_in, Eigen::Index attn_dim,
        int num_heads)
      : heads_(num_heads), attn_dim_(attn_dim) {
    require(attn_dim % num_heads == 0, "Hccmh: heads must divide attn_dim");
    tq_ = store.weight(prefix + ".q", f_in, attn_dim);
    tk_ = store.weight(prefix + ".k", f_in, attn_dim);
  }

  std::pair<ad::Tensor, ad::Tensor> forward(const HodgeChannel& H, const ad::Tensor& F,
                                            bool need_value) const {
    ad::Tensor value;
    if (need_value) value = hodge_apply(H, F);
    const ad::Tensor Q = hcn(H, F, tq_);
    const ad::Tensor K = hcn(H, F, tk_);
    return {value, detail::attention_map(Q, K, heads_, attn_dim_)};
  }

 private:
  int heads_ = 1;
  Eigen::Index attn_dim_ = 1;
  ad::Tensor tq_, tk_;
};

/// Hodge attention layer: one HCCMH per Hodge channel, H' = tanh(channel-MLP
/// of the attention maps), F' = channel-MLP of the values.
class HodgeAttLayer {
 public:
  HodgeAttLayer() = default;
  HodgeAttLayer(ParamStore& store, const std::string& prefix, int in_channels,
                Eigen::Index f_in, Eigen::Index attn_dim, int out_channels, int f_out_channels,
                int num_heads, int mlp_layers, Eigen::Index mlp_hidden)
      : out_channels_(out_channels), f_out_channels_(f_out_channels) {
    for (int k = 0; k < in_channels; ++k)
      hccmh_.emplace_back(store, prefix + ".hccmh" + std::to_string(k), f_in, attn_dim,
                          num_heads);
    mlp_h_ = Mlp(store, prefix + ".mlp_h", mlp_layers, in_channels, mlp_hidden, out_channels);
    mlp_f_ = Mlp(store, prefix + ".mlp_f", mlp_layers, in_channels, mlp_hidden, f_out_channels);
  }

  /// need_f: the F' output is skipped when no later block consumes it.
  std::pair<std::vector<ad::Tensor>, std::vector<ad::Tensor>> forward(
      const std::vector<HodgeChannel>& H_channels, const ad::Tensor& F, bool need_f) const {
    require(H_channels.size() == hccmh_.size(), "HodgeAttLayer: channel count mismatch");
    std::vector<ad::Tensor> values, attns;
    for (std::size_t k = 0; k < hccmh_.size(); ++k) {
      auto [v, a] = hccmh_[k].forward(H_channels[k], F, need_f);
      if (need_f) values.push_back(v);
      attns.push_back(a);
    }
    std::vector<ad::Tensor> h_out = detail::channel_mlp(mlp_h_, attns, out_channels_);
    for (auto& h : h_out) h = ad::tanh(h);
    std::vector<ad::Tensor> f_out;
    if (need_f) f_out = detail::channel_mlp(mlp_f_, values, f_out_channels_);
    return {std::move(h_out), std::move(f_out)};
  }

 private:
  int out_channels_ = 1, f_out_channels_ = 1;
  std::vector<Hccmh> hccmh_;
  Mlp mlp_h_, mlp_f_;
};

/// Baseline replacement for the Hodge attention layer: channel-wise MLPs on
/// the Hodge channels and on the values, no attention products.
class HodgeBaselineLayer {
 public:
  HodgeBaselineLayer() = default;
  HodgeBaselineLayer(ParamStore& store, const std::string& prefix, int in_channels,
                     int out_channels, int f_out_channels, int mlp_layers,
                     Eigen::Index mlp_hidden)
      : out_channels_(out_channels), f_out_channels_(f_out_channels) {
    mlp_h_ = Mlp(store, prefix + ".mlp_h", mlp_layers, in_channels, mlp_hidden, out_channels);
    mlp_f_ = Mlp(store, prefix + ".mlp_f", mlp_layers, in_channels, mlp_hidden, f_out_channels);
  }

  std::pair<std::vector<ad::Tensor>, std::vector<ad::Tensor>> forward(
      const std::vector<HodgeChannel>& H_channels, const ad::Tensor& F, bool need_f) const {
    std::vector<ad::Tensor> h_dense, values;
    for (const auto& H : H_channels) {
      h_dense.push_back(H.is_diag()
                            ? ad::Tensor::constant(Mat(H.diag.value().col(0).asDiagonal()))
                            : H.mat);
      if (need_f) values.push_back(hodge_apply(H, F));
    }
    std::vector<ad::Tensor> h_out = detail::channel_mlp(mlp_h_, h_dense, out_channels_);
    for (auto& h : h_out) h = ad::tanh(h);
    std::vector<ad::Tensor> f_out;
    if (need_f) f_out = detail::channel_mlp(mlp_f_, values, f_out_channels_);
    return {std::move(h_out), std::move(f_out)};
  }

 private:
  int out_channels_ = 1, f_out_channels_ = 1;
  Mlp mlp_h_, mlp_f_;
};

/// MLP applied along the channel axis of a higher-order incidence stack.
class HodgeNetwork {
 public:
  HodgeNetwork() = default;
  HodgeNetwork(ParamStore& store, const std::string& prefix, int in_channels, int out_channels,
               int mlp_layers, Eigen::Index mlp_hidden)
      : out_channels_(out_channels) {
    mlp_ = Mlp(store, prefix + ".mlp", mlp_layers, in_channels, mlp_hidden, out_channels);
  }

  std::vector<ad::Tensor> forward(const std::vector<ad::Tensor>& channels) const {
    return detail::channel_mlp(mlp_, channels, out_channels_);
  }

 private:
  int out_channels_ = 1;
  Mlp mlp_;
};

}  // namespace ccsd::nn
