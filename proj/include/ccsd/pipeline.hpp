#pragma once

#include <atomic>
#include <thread>
#include <vector>

#include "ccsd/dataset.hpp"
#include "ccsd/quantize.hpp"
#include "ccsd/sampler.hpp"
#include "ccsd/training.hpp"

namespace ccsd::pipeline {

/// Per-element masks and noise shapes for one embedded complex.
struct ElementMasks {
  std::vector<std::uint8_t> node_mask;
  Mat mask_x, mask_a, mask_f;
  std::array<RankSetup, 3> setup;

  ElementMasks(const nn::CcShape& shape, int active, const std::array<SdeSpec, 3>& specs,
               bool hodge_mask) {
    node_mask.assign(shape.n, 1);
    for (int i = active; i < shape.n; ++i) node_mask[i] = 0;
    mask_x = nn::detail::node_mask_vec(node_mask) * Eigen::RowVectorXd::Ones(shape.f0);
    mask_a = nn::detail::adj_mask(node_mask);
    mask_f = nn::detail::incidence_mask(shape, node_mask, hodge_mask);
    setup[0] = RankSetup{specs[0], NoiseShape{false, &mask_x}};
    setup[1] = RankSetup{specs[1], NoiseShape{true, &mask_a}};
    setup[2] = RankSetup{specs[2], NoiseShape{false, &mask_f}};
  }
};

inline double prior_std(const SdeSpec& spec) {
  return spec.kind == SdeSpec::Kind::VE ? spec.sigma_max : 1.0;
}

/// Draw the t = T prior for one rank, respecting the noise structure.
inline std::vector<Mat> sample_prior(const SdeSpec& spec, const NoiseShape& shape,
                                     Eigen::Index rows, Eigen::Index cols, int channels,
                                     Rng& rng) {
  std::vector<Mat> out;
  for (int c = 0; c < channels; ++c)
    out.push_back(prior_std(spec) * draw_noise(rows, cols, shape, rng));
  return out;
}

/// Score callback over the full joint state for one embedded element.
inline SystemScoreFn model_scores(const nn::ScoreModels& models,
                                  const std::vector<std::uint8_t>& node_mask) {
  return [&models, node_mask](const SystemState& st, double /*t*/) {
    SystemState out;
    out[0] = {models.x->forward(st[0][0], st[1], node_mask).value()};
    const auto a = models.a->forward(st[0][0], st[1], st[2], node_mask);
    for (const auto& ch : a) out[1].push_back(ch.value());
    const auto f = models.f->forward(st[2], node_mask);
    for (const auto& ch : f) out[2].push_back(ch.value());
    return out;
  };
}

/// Generate one quantized complex from the reverse-time system.
inline ComplexTensor sample_one(const nn::ScoreModels& models,
                                const std::array<SdeSpec, 3>& specs, const SamplerConfig& cfg,
                                int active_nodes, QuantizeMode mode, double threshold,
                                Rng rng) {
  const auto& shape = models.shape;
  ElementMasks masks(shape, active_nodes, specs, models.apply_hodge_mask);

  SystemState state;
  state[0] = sample_prior(specs[0], masks.setup[0].shape, shape.n, shape.f0, 1, rng);
  state[1] = sample_prior(specs[1], masks.setup[1].shape, shape.n, shape.n, shape.f1, rng);
  state[2] = sample_prior(specs[2], masks.setup[2].shape, shape.m(), shape.K(), shape.f2, rng);

  const auto raw =
      solve_reverse(model_scores(models, masks.node_mask), std::move(state), cfg, masks.setup,
                    rng);

  ComplexTensor cc = ComplexTensor::zeros(shape.n, shape.constraints, shape.f0, shape.f1,
                                          shape.f2);
  cc.node_mask = masks.node_mask;
  cc.X = raw[0][0];
  cc.A = quantize_adjacency(raw[1], mode);
  for (auto& ch : cc.A) ch = ch.cwiseProduct(masks.mask_a);
  cc.F = quantize_incidence(raw[2], cc.A, shape.mask, threshold, mode);
  return cc;
}

/// Batch generation: node counts drawn per element from the empirical
/// distribution, elements integrated independently on split streams
/// (optionally in parallel; the result is identical either way).
inline std::vector<ComplexTensor> sample(const nn::ScoreModels& models,
                                         const std::array<SdeSpec, 3>& specs,
                                         const SamplerConfig& cfg,
                                         const EmpiricalNodeDist& node_dist, int batch,
                                         QuantizeMode mode, double threshold,
                                         int num_threads = 2) {
  cfg.validate();
  Rng root(cfg.seed);
  std::vector<int> sizes;
  Rng size_rng = root.split("node-counts");
  for (int b = 0; b < batch; ++b) sizes.push_back(node_dist.sample(size_rng));

  std::vector<ComplexTensor> out(batch, ComplexTensor{});
  std::atomic<int> next{0};
  auto worker = [&]() {
    while (true) {
      const int b = next.fetch_add(1);
      if (b >= batch) return;
      out[b] = sample_one(models, specs, cfg, sizes[b], mode, threshold,
                          root.split(static_cast<std::uint64_t>(b)));
    }
  };
  if (num_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < num_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return out;
}

/// Mask of known entries spanning all three ranks.
struct KnownMask {
  Mat x;                  // n x f0, 1 = known
  std::vector<Mat> a, f;  // per channel
};


/// Conditional completion: unknown entries follow the reverse step while
/// known entries are re-drawn from the forward kernel around the observed
/// values at each time, and restored exactly at the end.
inline ComplexTensor impute_with_scores(const SystemScoreFn& scores, const nn::CcShape& shape,
                                        const std::array<SdeSpec, 3>& specs,
                                        const SamplerConfig& cfg, const ComplexTensor& observed,
                                        const KnownMask& known, bool hodge_mask,
                                        QuantizeMode mode, double threshold, Rng rng) {
  cfg.validate();
  require(known.x.rows() == shape.n && known.x.cols() == shape.f0,
          "impute: known-mask shape mismatch");
  require(static_cast<int>(known.a.size()) == shape.f1 &&
              static_cast<int>(known.f.size()) == shape.f2,
          "impute: known-mask channel mismatch");
  ElementMasks masks(shape, observed.active_nodes(), specs, hodge_mask);

  SystemState state;
  state[0] = sample_prior(specs[0], masks.setup[0].shape, shape.n, shape.f0, 1, rng);
  state[1] = sample_prior(specs[1], masks.setup[1].shape, shape.n, shape.n, shape.f1, rng);
  state[2] = sample_prior(specs[2], masks.setup[2].shape, shape.m(), shape.K(), shape.f2, rng);

  auto known_of = [&](int r, int c) -> const Mat& {
    return r == 0 ? known.x : r == 1 ? known.a[c] : known.f[c];
  };
  auto observed_of = [&](int r, int c) -> const Mat& {
    return r == 0 ? observed.X : r == 1 ? observed.A[c] : observed.F[c];
  };

  // overwrite known entries with a forward-perturbed version of the observed
  // values at time t
  auto project_known = [&](SystemState& st, double t) {
    for (int r = 0; r < 3; ++r) {
      const auto k = perturbation_kernel(specs[r], t);
      for (std::size_t c = 0; c < st[r].size(); ++c) {
        const Mat z = draw_noise(st[r][c].rows(), st[r][c].cols(), masks.setup[r].shape, rng);
        const Mat resampled = k.mean_coeff * observed_of(r, static_cast<int>(c)) + k.std * z;
        const Mat& km = known_of(r, static_cast<int>(c));
        st[r][c] = km.cwiseProduct(resampled) + (1.0 - km.array()).matrix().cwiseProduct(st[r][c]);
      }
    }
  };

  // manual predictor-corrector loop so known entries can be projected at
  // every time step
  const double T = specs[0].T;
  const double h = (T - cfg.eps_final) / cfg.num_steps;
  for (int step = 0; step < cfg.num_steps; ++step) {
    const double t = T - step * h;
    project_known(state, t);
    if (cfg.corrector == Corrector::langevin) {
      SystemState sc = scores(state, t);
      for (int r = 0; r < 3; ++r) {
        if (masks.setup[r].shape.support)
          for (auto& ch : sc[r]) ch.array() *= masks.setup[r].shape.support->array();
        for (std::size_t c = 0; c < state[r].size(); ++c)
          state[r][c] =
              langevin_correct(state[r][c], t, sc[r][c], cfg, masks.setup[r].shape, rng);
      }
    }
    SystemState sc = scores(state, t);
    for (int r = 0; r < 3; ++r) {
      if (masks.setup[r].shape.support)
        for (auto& ch : sc[r]) ch.array() *= masks.setup[r].shape.support->array();
      for (std::size_t c = 0; c < state[r].size(); ++c)
        state[r][c] = predictor_step(state[r][c], t, -h, sc[r][c], specs[r], cfg.predictor,
                                     masks.setup[r].shape, rng);
    }
  }
  // exact restoration of the known entries before quantization
  for (int r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < state[r].size(); ++c) {
      const Mat& km = known_of(r, static_cast<int>(c));
      state[r][c] = km.cwiseProduct(observed_of(r, static_cast<int>(c))) +
                    (1.0 - km.array()).matrix().cwiseProduct(state[r][c]);
    }

  ComplexTensor cc = ComplexTensor::zeros(shape.n, shape.constraints, shape.f0, shape.f1,
                                          shape.f2);
  cc.node_mask = masks.node_mask;
  cc.X = state[0][0];
  cc.A = quantize_adjacency(state[1], mode);
  for (auto& ch : cc.A) ch = ch.cwiseProduct(masks.mask_a);
  cc.F = quantize_incidence(state[2], cc.A, shape.mask, threshold, mode);
  return cc;
}

inline ComplexTensor impute(const nn::ScoreModels& models, const std::array<SdeSpec, 3>& specs,
                            const SamplerConfig& cfg, const ComplexTensor& observed,
                            const KnownMask& known, QuantizeMode mode, double threshold,
                            Rng rng) {
  ElementMasks masks(models.shape, observed.active_nodes(), specs, models.apply_hodge_mask);
  return impute_with_scores(model_scores(models, masks.node_mask), models.shape, specs, cfg,
                            observed, known, models.apply_hodge_mask, mode, threshold, rng);
}

}  // namespace ccsd::pipeline
