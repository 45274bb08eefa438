#pragma once

#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "ccsd/models.hpp"
#include "ccsd/sampler.hpp"
#include "ccsd/sde.hpp"

namespace ccsd::nn {

struct TrainConfig {
  double lr = 1e-2;
  double weight_decay = 1e-4;
  int batch_size = 128;
  int epochs = 100;
  double ema_decay = 0.0;  // 0 disables the moving average
  double gamma_x = 0.0, gamma_a = 0.0, gamma_f = 0.0;
  std::uint64_t seed = 42;
  int eval_interval = 5;  // epochs between test-loss evaluations
  bool parallel_models = true;

  void validate() const {
    require(lr > 0.0, "TrainConfig: lr must be positive");
    require(batch_size >= 1, "TrainConfig: batch_size must be >= 1");
    require(epochs >= 1, "TrainConfig: epochs must be >= 1");
    require(ema_decay == 0.0 || (ema_decay > 0.0 && ema_decay < 1.0),
            "TrainConfig: ema_decay must lie in (0, 1)");
    require(gamma_x >= 0.0 && gamma_a >= 0.0 && gamma_f >= 0.0,
            "TrainConfig: penalization weights must be >= 0");
  }
};

/// The three partial score networks plus the shared tensor geometry.
struct ScoreModels {
  CcShape shape;
  std::unique_ptr<ScoreNetworkX> x;
  std::unique_ptr<ScoreNetworkACC> a;
  std::unique_ptr<ScoreNetworkF> f;
  bool apply_hodge_mask = true;

  std::vector<ad::Tensor> forward_rank(int r, const Mat& X, const std::vector<Mat>& A,
                                       const std::vector<Mat>& F,
                                       const std::vector<std::uint8_t>& mask) const {
    switch (r) {
      case 0:
        return {x->forward(X, A, mask)};
      case 1:
        return a->forward(X, A, F, mask);
      case 2:
        return f->forward(F, mask);
    }
    throw std::invalid_argument("forward_rank: rank out of range");
  }

  ParamStore& store(int r) {
    switch (r) {
      case 0:
        return x->store();
      case 1:
        return a->store();
      default:
        return f->store();
    }
  }
};

/// One jointly-perturbed complex: all ranks noised at the same t.
struct PerturbedElement {
  double t = 0.0;
  Mat X_t;
  std::vector<Mat> A_t, F_t;
  std::vector<Mat> eps_x, eps_a, eps_f;  // eps_x holds one channel
  double std_x = 0.0, std_a = 0.0, std_f = 0.0;
  std::vector<std::uint8_t> node_mask;
  Mat mask_x, mask_a, mask_f;  // active-entry masks per rank

  const std::vector<Mat>& eps(int r) const { return r == 0 ? eps_x : r == 1 ? eps_a : eps_f; }
  double std(int r) const { return r == 0 ? std_x : r == 1 ? std_a : std_f; }
  const Mat& mask(int r) const { return r == 0 ? mask_x : r == 1 ? mask_a : mask_f; }
};

inline PerturbedElement perturb_complex(const ComplexTensor& cc, const CcShape& shape,
                                        const std::array<SdeSpec, 3>& specs, double t,
                                        bool hodge_mask, Rng& rng) {
  PerturbedElement el;
  el.t = t;
  el.node_mask = cc.node_mask;
  el.mask_x = detail::node_mask_vec(cc.node_mask) * Eigen::RowVectorXd::Ones(shape.f0);
  el.mask_a = detail::adj_mask(cc.node_mask);
  el.mask_f = detail::incidence_mask(shape, cc.node_mask, hodge_mask);

  const auto kx = perturbation_kernel(specs[0], t);
  const auto ka = perturbation_kernel(specs[1], t);
  const auto kf = perturbation_kernel(specs[2], t);
  el.std_x = kx.std;
  el.std_a = ka.std;
  el.std_f = kf.std;

  NoiseShape sx{false, &el.mask_x};
  el.eps_x.push_back(draw_noise(shape.n, shape.f0, sx, rng));
  el.X_t = kx.mean_coeff * cc.X + kx.std * el.eps_x[0];

  NoiseShape sa{true, &el.mask_a};
  for (const auto& ch : cc.A) {
    el.eps_a.push_back(draw_noise(shape.n, shape.n, sa, rng));
    el.A_t.push_back(ka.mean_coeff * ch + ka.std * el.eps_a.back());
  }
  NoiseShape sf{false, &el.mask_f};
  for (const auto& ch : cc.F) {
    el.eps_f.push_back(draw_noise(shape.m(), shape.K(), sf, rng));
    el.F_t.push_back(kf.mean_coeff * ch + kf.std * el.eps_f.back());
  }
  return el;
}

/// lambda(t) = std(t)^2 weighted denoising loss for one element and one rank:
/// mean over unmasked entries of (s*std + eps)^2, plus gamma * mean of s^2.
inline ad::Tensor dsm_element_loss(const std::vector<ad::Tensor>& scores,
                                   const std::vector<Mat>& eps, double std, const Mat& mask,
                                   double gamma) {
  require(scores.size() == eps.size(), "dsm_element_loss: channel mismatch");
  const double count = std::max(1.0, mask.sum() * static_cast<double>(scores.size()));
  const ad::Tensor mask_t = ad::Tensor::constant(mask);
  ad::Tensor acc;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    const ad::Tensor resid =
        ad::add(ad::scalar_mul(scores[c], std), ad::Tensor::constant(eps[c]));
    ad::Tensor term = ad::sum(ad::mul(ad::mul(resid, resid), mask_t));
    if (gamma > 0.0)
      term = ad::add(term,
                     ad::scalar_mul(ad::sum(ad::mul(ad::mul(scores[c], scores[c]), mask_t)),
                                    gamma));
    acc = acc.defined() ? ad::add(acc, term) : term;
  }
  return ad::scalar_mul(acc, 1.0 / count);
}

/// Batch DSM loss for rank r (graph retained for backward).
inline ad::Tensor dsm_loss(int r, const ScoreModels& models,
                           const std::vector<PerturbedElement>& batch, double gamma) {
  require(!batch.empty(), "dsm_loss: empty batch");
  ad::Tensor acc;
  for (const auto& el : batch) {
    const auto scores = models.forward_rank(r, el.X_t, el.A_t, el.F_t, el.node_mask);
    const ad::Tensor term = dsm_element_loss(scores, el.eps(r), el.std(r), el.mask(r), gamma);
    acc = acc.defined() ? ad::add(acc, term) : term;
  }
  return ad::scalar_mul(acc, 1.0 / static_cast<double>(batch.size()));
}

/// Adam with decoupled weight decay; beta = (0.9, 0.999), eps = 1e-8.
class Adam {
 public:
  Adam(double lr, double weight_decay) : lr_(lr), wd_(weight_decay) {}

  void step(ParamStore& store) {
    auto& params = store.params();
    if (m_.empty()) {
      for (const auto& [name, p] : params) {
        m_.push_back(Mat::Zero(p.rows(), p.cols()));
        v_.push_back(Mat::Zero(p.rows(), p.cols()));
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i].second;
      const Mat g = p.grad();
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
      const Mat m_hat = m_[i] / bc1;
      const Mat v_hat = v_[i] / bc2;
      Mat update = m_hat.array() / (v_hat.array().sqrt() + eps_);
      if (wd_ > 0.0) update += wd_ * p.value();
      p.set_value(p.value() - lr_ * update);
      p.zero_grad();
    }
  }

 private:
  double lr_, wd_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::int64_t t_ = 0;
  std::vector<Mat> m_, v_;
};

/// Exponential moving average of one parameter store.
class EmaState {
 public:
  void update(const ParamStore& store, double decay) {
    const auto& params = store.params();
    if (shadow_.empty())
      for (const auto& [name, p] : params) shadow_.push_back(p.value());
    else
      for (std::size_t i = 0; i < params.size(); ++i)
        shadow_[i] = decay * shadow_[i] + (1.0 - decay) * params[i].second.value();
  }

  bool empty() const { return shadow_.empty(); }
  const std::vector<Mat>& shadow() const { return shadow_; }

  void copy_to(ParamStore& store) const {
    require(shadow_.size() == store.params().size(), "EmaState: store mismatch");
    for (std::size_t i = 0; i < shadow_.size(); ++i) store.params()[i].second.set_value(shadow_[i]);
  }

 private:
  std::vector<Mat> shadow_;
};

inline void ema_update(EmaState& state, const ParamStore& store, double decay) {
  require(decay > 0.0 && decay < 1.0, "ema_update: decay must lie in (0,1)");
  state.update(store, decay);
}

struct LossRow {
  std::int64_t step = 0;
  double loss_x = 0.0, loss_a = 0.0, loss_f = 0.0;
  std::string split;  // "train" or "test"
};

struct TrainResult {
  std::vector<LossRow> curve;
  std::int64_t steps = 0;
  double best_test_loss = std::numeric_limits<double>::infinity();
};

/// Full training loop: joint perturbation per step, three independent
/// objectives and optimizers, optional EMA, deterministic under the seed.
/// on_checkpoint("best"|"final") fires when checkpoints should be persisted.
inline TrainResult train(
    ScoreModels& models, const std::vector<ComplexTensor>& train_set,
    const std::vector<ComplexTensor>& test_set, const TrainConfig& cfg,
    const std::array<SdeSpec, 3>& specs, std::array<EmaState, 3>* ema = nullptr,
    const std::function<void(const std::string&)>& on_checkpoint = nullptr,
    const std::function<void(const LossRow&)>& on_row = nullptr) {
  cfg.validate();
  require(!train_set.empty(), "train: empty training set");
  for (const auto& s : specs) s.validate();

  double eps_lo = 0.0;
  for (const auto& s : specs) eps_lo = std::max(eps_lo, s.recommended_eps());
  const double T = specs[0].T;

  Rng shuffle_rng = Rng(cfg.seed).split("shuffle");
  Rng noise_rng = Rng(cfg.seed).split("noise");

  std::array<std::unique_ptr<Adam>, 3> opt;
  for (int r = 0; r < 3; ++r) opt[r] = std::make_unique<Adam>(cfg.lr, cfg.weight_decay);
  const std::array<double, 3> gammas{cfg.gamma_x, cfg.gamma_a, cfg.gamma_f};

  TrainResult result;
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  auto make_batch = [&](const std::vector<const ComplexTensor*>& ccs, Rng& rng) {
    std::vector<PerturbedElement> batch;
    batch.reserve(ccs.size());
    for (const auto* cc : ccs) {
      const double t = rng.uniform(eps_lo, T);
      batch.push_back(
          perturb_complex(*cc, models.shape, specs, t, models.apply_hodge_mask, rng));
    }
    return batch;
  };

  auto eval_losses = [&](const std::vector<ComplexTensor>& set, Rng rng) {
    std::vector<const ComplexTensor*> all;
    for (const auto& cc : set) all.push_back(&cc);
    const auto batch = make_batch(all, rng);
    std::array<double, 3> out{};
    for (int r = 0; r < 3; ++r) out[r] = dsm_loss(r, models, batch, gammas[r]).scalar();
    return out;
  };

  std::int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // deterministic shuffle
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1)]);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::vector<const ComplexTensor*> ccs;
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i)
        ccs.push_back(&train_set[order[i]]);
      const auto batch = make_batch(ccs, noise_rng);

      std::array<double, 3> losses{};
      auto run_rank = [&](int r) {
        const ad::Tensor loss = dsm_loss(r, models, batch, gammas[r]);
        losses[r] = loss.scalar();
        ad::backward(loss);
        opt[r]->step(models.store(r));
        if (ema && cfg.ema_decay > 0.0) (*ema)[r].update(models.store(r), cfg.ema_decay);
      };
      if (cfg.parallel_models) {
        std::array<std::thread, 3> threads;
        for (int r = 0; r < 3; ++r) threads[r] = std::thread(run_rank, r);
        for (auto& th : threads) th.join();
      } else {
        for (int r = 0; r < 3; ++r) run_rank(r);
      }
      for (int r = 0; r < 3; ++r)
        if (!std::isfinite(losses[r]))
          throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   " step " + std::to_string(step));
      LossRow row{step, losses[0], losses[1], losses[2], "train"};
      result.curve.push_back(row);
      if (on_row) on_row(row);
      ++step;
    }

    const bool last = epoch + 1 == cfg.epochs;
    if (!test_set.empty() && (epoch % cfg.eval_interval == 0 || last)) {
      const auto te = eval_losses(test_set, Rng(cfg.seed).split("eval"));
      LossRow row{step, te[0], te[1], te[2], "test"};
      result.curve.push_back(row);
      if (on_row) on_row(row);
      const double total = te[0] + te[1] + te[2];
      if (total < result.best_test_loss) {
        result.best_test_loss = total;
        if (on_checkpoint) on_checkpoint("best");
      }
    }
  }
  result.steps = step;
  if (on_checkpoint) on_checkpoint("final");
  return result;
}

}  // namespace ccsd::nn
