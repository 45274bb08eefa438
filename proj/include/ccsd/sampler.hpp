#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <iostream>
#include <vector>

#include "ccsd/rng.hpp"
#include "ccsd/sde.hpp"

namespace ccsd {

enum class Predictor { euler_maruyama, reverse_diffusion, ode_flow };
enum class Corrector { none, langevin };

struct SamplerConfig {
  Predictor predictor = Predictor::euler_maruyama;
  Corrector corrector = Corrector::none;
  double snr = 0.1;
  double scale_coeff = 0.7;
  int num_steps = 1000;
  double eps_final = 1e-3;
  std::uint64_t seed = 0;

  void validate() const {
    require(num_steps >= 1, "SamplerConfig: num_steps must be >= 1");
    require(eps_final > 0.0, "SamplerConfig: eps_final must be positive");
    if (corrector == Corrector::langevin)
      require(snr > 0.0, "SamplerConfig: snr must be positive with langevin");
  }
};

/// Structure of the noise injected into one diffused tensor: plain i.i.d.,
/// upper-triangle-mirrored symmetric (adjacency states), and/or restricted to
/// a 0/1 support matrix (structural and node masks).
struct NoiseShape {
  bool symmetric = false;
  const Mat* support = nullptr;  // same shape as the state; nullptr = all ones
};

inline Mat draw_noise(Eigen::Index rows, Eigen::Index cols, const NoiseShape& shape, Rng& rng) {
  Mat z(rows, cols);
  if (shape.symmetric) {
    require(rows == cols, "draw_noise: symmetric noise needs a square shape");
    z.setZero();
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = i + 1; j < cols; ++j) z(i, j) = z(j, i) = rng.normal();
  } else {
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) z(i, j) = rng.normal();
  }
  if (shape.support) z.array() *= shape.support->array();
  return z;
}

/// One reverse-time predictor step from t to t + dt (dt < 0).
inline Mat predictor_step(const Mat& x, double t, double dt, const Mat& score,
                          const SdeSpec& spec, Predictor kind, const NoiseShape& shape,
                          Rng& rng) {
  require(dt < 0.0, "predictor_step: dt must be negative");
  require(score.rows() == x.rows() && score.cols() == x.cols(),
          "predictor_step: score shape mismatch");
  const auto [fc, g] = drift_diffusion_coeffs(spec, t);
  const double h = -dt;
  switch (kind) {
    case Predictor::euler_maruyama: {
      Mat out = x + (fc * x - g * g * score) * dt;
      if (g != 0.0) out += g * std::sqrt(h) * draw_noise(x.rows(), x.cols(), shape, rng);
      return out;
    }
    case Predictor::reverse_diffusion: {
      // discrete ancestral variant: mean update with the transition-matched
      // noise scale
      double G2;          // squared discrete noise scale
      Mat mean;
      if (spec.kind == SdeSpec::Kind::VP) {
        const double beta_step = spec.beta(t) * h;
        G2 = beta_step;
        mean = (2.0 - std::sqrt(1.0 - beta_step)) * x + beta_step * score;
      } else if (spec.kind == SdeSpec::Kind::VE) {
        const double s1 = spec.sigma(t), s0 = spec.sigma(std::max(0.0, t - h));
        G2 = std::max(0.0, s1 * s1 - s0 * s0);
        mean = x + G2 * score;
      } else {
        G2 = g * g * h;
        mean = x - fc * x * h + G2 * score;
      }
      if (G2 > 0.0) mean += std::sqrt(G2) * draw_noise(x.rows(), x.cols(), shape, rng);
      return mean;
    }
    case Predictor::ode_flow:
      return x + (fc * x - 0.5 * g * g * score) * dt;
  }
  throw std::invalid_argument("predictor_step: unknown predictor");
}

/// Langevin correction x <- x + a*score + scale*sqrt(2a)*z with
/// a = 2 (snr ||z|| / ||score||)^2. Skipped with a warning if the score
/// vanishes.
inline Mat langevin_correct(const Mat& x, double /*t*/, const Mat& score,
                            const SamplerConfig& cfg, const NoiseShape& shape, Rng& rng) {
  require(cfg.corrector == Corrector::langevin, "langevin_correct: corrector not langevin");
  const Mat z = draw_noise(x.rows(), x.cols(), shape, rng);
  const double score_norm = score.norm();
  if (score_norm == 0.0) {
    std::cerr << "langevin_correct: zero score norm, skipping step\n";
    return x;
  }
  const double ratio = cfg.snr * z.norm() / score_norm;
  const double alpha = 2.0 * ratio * ratio;
  return x + alpha * score + cfg.scale_coeff * std::sqrt(2.0 * alpha) * z;
}

/// Joint state of the three diffused tensors; each rank is a channel stack.
using RankState = std::vector<Mat>;
using SystemState = std::array<RankState, 3>;

/// Partial scores for all ranks evaluated on one joint state at time t.
using SystemScoreFn = std::function<SystemState(const SystemState&, double)>;

struct RankSetup {
  SdeSpec spec;
  NoiseShape shape;
};

namespace detail {

inline void mask_scores(SystemState& scores, const std::array<RankSetup, 3>& setup) {
  for (int r = 0; r < 3; ++r)
    if (setup[r].shape.support)
      for (auto& ch : scores[r]) ch.array() *= setup[r].shape.support->array();
}

inline void check_finite(const SystemState& state, int step) {
  for (const auto& rank : state)
    for (const auto& ch : rank)
      if (!ch.allFinite())
        throw std::runtime_error("solve_reverse: non-finite state at step " +
                                 std::to_string(step));
}

}  // namespace detail

/// Integrate the reverse-time system jointly from T down to eps_final on a
/// uniform grid. All partial scores are evaluated on the same joint state
/// before any tensor is updated (Jacobi update), so the trajectory does not
/// depend on rank ordering. Noise is drawn in fixed rank order from the given
/// stream.
inline SystemState solve_reverse(const SystemScoreFn& scores, SystemState state,
                                 const SamplerConfig& cfg, const std::array<RankSetup, 3>& setup,
                                 Rng& rng) {
  cfg.validate();
  for (const auto& s : setup) s.spec.validate();
  const double T = setup[0].spec.T;
  for (const auto& s : setup)
    require(s.spec.T == T, "solve_reverse: ranks must share the time horizon");
  const double h = (T - cfg.eps_final) / cfg.num_steps;
  for (int step = 0; step < cfg.num_steps; ++step) {
    const double t = T - step * h;
    if (cfg.corrector == Corrector::langevin) {
      SystemState sc = scores(state, t);
      detail::mask_scores(sc, setup);
      for (int r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < state[r].size(); ++c)
          state[r][c] = langevin_correct(state[r][c], t, sc[r][c], cfg, setup[r].shape, rng);
      detail::check_finite(state, step);
    }
    SystemState sc = scores(state, t);
    detail::mask_scores(sc, setup);
    for (int r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < state[r].size(); ++c)
        state[r][c] = predictor_step(state[r][c], t, -h, sc[r][c], setup[r].spec, cfg.predictor,
                                     setup[r].shape, rng);
    detail::check_finite(state, step);
  }
  return state;
}

}  // namespace ccsd
