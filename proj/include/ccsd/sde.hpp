#pragma once

#include <cmath>
#include <utility>

#include "ccsd/common.hpp"

namespace ccsd {

/// Gaussian transition kernel of a forward SDE: p_0t(x_t | x_0) =
/// N(mean_coeff * x_0, std^2).
struct TransitionKernel {
  double mean_coeff = 1.0;
  double std = 0.0;
};

/// Forward diffusion specification. VP and sub-VP use the linear beta
/// schedule beta(t) = beta_min + t (beta_max - beta_min); VE uses the
/// geometric sigma schedule sigma(t) = sigma_min (sigma_max/sigma_min)^t.
struct SdeSpec {
  enum class Kind { VP, VE, subVP };
  Kind kind = Kind::VP;
  double beta_min = 0.1, beta_max = 1.0;
  double sigma_min = 0.1, sigma_max = 1.0;
  double T = 1.0;
  int num_steps = 1000;

  void validate() const {
    require(T > 0.0, "SdeSpec: T must be positive");
    require(num_steps >= 1, "SdeSpec: num_steps must be >= 1");
    if (kind == Kind::VE) {
      require(sigma_min > 0.0 && sigma_min < sigma_max, "SdeSpec: need 0 < sigma_min < sigma_max");
    } else {
      require(beta_min > 0.0 && beta_min < beta_max, "SdeSpec: need 0 < beta_min < beta_max");
    }
  }

  double beta(double t) const { return beta_min + t * (beta_max - beta_min); }
  double beta_integral(double t) const {
    return t * beta_min + 0.5 * t * t * (beta_max - beta_min);
  }
  double sigma(double t) const { return sigma_min * std::pow(sigma_max / sigma_min, t); }

  /// Lower integration cutoff that avoids the std(t) -> 0 singularity.
  double recommended_eps() const { return kind == Kind::VE ? 1e-5 : 1e-3; }
};

/// Drift factor and diffusion coefficient at time t: f_t(x) = drift_coeff * x,
/// g_t scalar.
inline std::pair<double, double> drift_diffusion_coeffs(const SdeSpec& spec, double t) {
  spec.validate();
  require(t >= 0.0 && t <= spec.T, "drift_diffusion: t outside [0, T]");
  switch (spec.kind) {
    case SdeSpec::Kind::VP:
      return {-0.5 * spec.beta(t), std::sqrt(spec.beta(t))};
    case SdeSpec::Kind::VE: {
      const double g = spec.sigma(t) * std::sqrt(2.0 * std::log(spec.sigma_max / spec.sigma_min));
      return {0.0, g};
    }
    case SdeSpec::Kind::subVP: {
      const double b = spec.beta(t);
      const double g = std::sqrt(b * (1.0 - std::exp(-2.0 * spec.beta_integral(t))));
      return {-0.5 * b, g};
    }
  }
  throw std::invalid_argument("drift_diffusion: unknown SDE kind");
}

inline std::pair<Mat, double> drift_diffusion(const SdeSpec& spec, const Mat& x, double t) {
  const auto [c, g] = drift_diffusion_coeffs(spec, t);
  return {c * x, g};
}

inline TransitionKernel perturbation_kernel(const SdeSpec& spec, double t) {
  spec.validate();
  require(t >= 0.0 && t <= spec.T, "perturbation_kernel: t outside [0, T]");
  TransitionKernel k;
  switch (spec.kind) {
    case SdeSpec::Kind::VP: {
      const double log_mean = -0.5 * spec.beta_integral(t);
      k.mean_coeff = std::exp(log_mean);
      k.std = std::sqrt(std::max(0.0, 1.0 - std::exp(2.0 * log_mean)));
      break;
    }
    case SdeSpec::Kind::VE:
      k.mean_coeff = 1.0;
      k.std = spec.sigma(t);
      break;
    case SdeSpec::Kind::subVP: {
      const double ib = spec.beta_integral(t);
      k.mean_coeff = std::exp(-0.5 * ib);
      k.std = 1.0 - std::exp(-ib);
      break;
    }
  }
  return k;
}

/// Forward-perturb x0 at time t with the given standard-normal noise and
/// return (x_t, exact score of the transition kernel at x_t).
inline std::pair<Mat, Mat> perturb(const Mat& x0, const SdeSpec& spec, double t,
                                   const Mat& noise) {
  require(noise.rows() == x0.rows() && noise.cols() == x0.cols(),
          "perturb: noise shape mismatch");
  const TransitionKernel k = perturbation_kernel(spec, t);
  require(k.std > 0.0, "perturb: std(t) = 0, score target undefined");
  Mat x_t = k.mean_coeff * x0 + k.std * noise;
  Mat target = (-1.0 / k.std) * noise;
  return {std::move(x_t), std::move(target)};
}

}  // namespace ccsd
