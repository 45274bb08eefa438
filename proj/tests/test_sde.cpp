#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "ccsd/sampler.hpp"
#include "ccsd/sde.hpp"
#include "test_util.hpp"

using namespace ccsd;
using Catch::Approx;

namespace {

SdeSpec vp_spec(double bmin = 0.1, double bmax = 1.0) {
  SdeSpec s;
  s.kind = SdeSpec::Kind::VP;
  s.beta_min = bmin;
  s.beta_max = bmax;
  return s;
}

SdeSpec ve_spec(double smin = 0.1, double smax = 2.0) {
  SdeSpec s;
  s.kind = SdeSpec::Kind::VE;
  s.sigma_min = smin;
  s.sigma_max = smax;
  return s;
}

SdeSpec subvp_spec(double bmin = 0.1, double bmax = 1.0) {
  SdeSpec s = vp_spec(bmin, bmax);
  s.kind = SdeSpec::Kind::subVP;
  return s;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  double sum = f(a) + f(b);
  const double h = (b - a) / n;
  for (int i = 1; i < n; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace

TEST_CASE("drift and diffusion coefficients") {
  SECTION("VP drift is linear through the origin") {
    const auto [f, g] = drift_diffusion(vp_spec(), Mat::Zero(3, 3), 0.5);
    CHECK(f.isZero(0.0));
    (void)g;
  }
  SECTION("VP endpoint of the linear schedule") {
    const auto [c, g] = drift_diffusion_coeffs(vp_spec(0.1, 1.0), 1.0);
    CHECK(c == Approx(-0.5));
    CHECK(g == Approx(1.0));
  }
  SECTION("VE diffusion at t=0") {
    const double smin = 0.1, smax = 2.0;
    const auto [c, g] = drift_diffusion_coeffs(ve_spec(smin, smax), 0.0);
    CHECK(c == 0.0);
    CHECK(g == Approx(smin * std::sqrt(2.0 * std::log(smax / smin))));
  }
  SECTION("sub-VP diffusion vanishes at t=0") {
    const auto [c, g] = drift_diffusion_coeffs(subvp_spec(), 0.0);
    CHECK(c == Approx(-0.05));
    CHECK(g == Approx(0.0));
  }
  SECTION("time domain is enforced") {
    CHECK_THROWS(drift_diffusion_coeffs(vp_spec(), -0.1));
    CHECK_THROWS(drift_diffusion_coeffs(vp_spec(), 1.1));
  }
}

TEST_CASE("perturbation kernels") {
  SECTION("VP at t=0 is the identity kernel") {
    const auto k = perturbation_kernel(vp_spec(), 0.0);
    CHECK(k.mean_coeff == Approx(1.0));
    CHECK(k.std == Approx(0.0));
  }
  SECTION("VP closed form at t=1 and quadrature cross-check") {
    const auto spec = vp_spec(0.1, 1.0);
    const auto k = perturbation_kernel(spec, 1.0);
    CHECK(k.mean_coeff == Approx(std::exp(-0.275)).epsilon(1e-10));
    CHECK(k.std * k.std == Approx(1.0 - std::exp(-0.55)).epsilon(1e-10));
    const double quad = simpson([&](double u) { return spec.beta(u); }, 0.0, 1.0, 200);
    CHECK(spec.beta_integral(1.0) == Approx(quad).epsilon(1e-8));
  }
  SECTION("VE kernel follows the geometric schedule") {
    const auto spec = ve_spec(0.1, 2.0);
    CHECK(perturbation_kernel(spec, 0.0).std == Approx(0.1));
    CHECK(perturbation_kernel(spec, 1.0).std == Approx(2.0));
    CHECK(perturbation_kernel(spec, 0.5).mean_coeff == 1.0);
  }
  SECTION("sub-VP std is below the VP std") {
    const auto vp = perturbation_kernel(vp_spec(), 0.7);
    const auto sub = perturbation_kernel(subvp_spec(), 0.7);
    CHECK(sub.std < vp.std);
    CHECK(sub.mean_coeff == Approx(vp.mean_coeff));
  }
  SECTION("kernel matches Monte-Carlo moments of perturbed samples") {
    Rng rng(99);
    const auto spec = vp_spec();
    const auto k = perturbation_kernel(spec, 0.5);
    const int N = 10000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < N; ++i) {
      Mat x0 = Mat::Ones(1, 1);
      Mat z(1, 1);
      z(0, 0) = rng.normal();
      const auto [xt, target] = perturb(x0, spec, 0.5, z);
      sum += xt(0, 0);
      sq += xt(0, 0) * xt(0, 0);
    }
    const double mean = sum / N;
    const double stdev = std::sqrt(sq / N - mean * mean);
    const double se_mean = k.std / std::sqrt(N);
    const double se_std = k.std / std::sqrt(2.0 * N);
    CHECK(std::abs(mean - k.mean_coeff) < 4.0 * se_mean);
    CHECK(std::abs(stdev - k.std) < 4.0 * se_std);
  }
  SECTION("domain errors") {
    CHECK_THROWS(perturbation_kernel(vp_spec(), 1.5));
    CHECK_THROWS(perturbation_kernel(vp_spec(), -0.001));
  }
}

TEST_CASE("perturb returns the exact kernel score") {
  const auto spec = vp_spec();
  SECTION("zero noise keeps the scaled mean and zero target") {
    Mat x0 = Mat::Ones(2, 3) * 1.7;
    const auto [xt, target] = perturb(x0, spec, 0.8, Mat::Zero(2, 3));
    const auto k = perturbation_kernel(spec, 0.8);
    CHECK((xt - k.mean_coeff * x0).norm() < 1e-14);
    CHECK(target.isZero(0.0));
  }
  SECTION("score_target times std equals minus the noise") {
    Rng rng(5);
    Mat x0(3, 2), z(3, 2);
    for (Eigen::Index i = 0; i < x0.size(); ++i) {
      x0(i) = rng.normal();
      z(i) = rng.normal();
    }
    const auto k = perturbation_kernel(spec, 0.6);
    const auto [xt, target] = perturb(x0, spec, 0.6, z);
    CHECK((k.std * target + z).lpNorm<Eigen::Infinity>() < 1e-12);
  }
  SECTION("matches the analytic Gaussian gradient") {
    Rng rng(6);
    Mat x0(1, 1), z(1, 1);
    x0(0, 0) = 0.4;
    z(0, 0) = rng.normal();
    const double t = 0.37;
    const auto k = perturbation_kernel(spec, t);
    const auto [xt, target] = perturb(x0, spec, t, z);
    // d/dx log N(x; m*x0, s^2) = -(x - m*x0)/s^2
    const double grad = -(xt(0, 0) - k.mean_coeff * x0(0, 0)) / (k.std * k.std);
    CHECK(target(0, 0) == Approx(grad).epsilon(1e-6));
  }
  SECTION("score target undefined at t=0 under VP") {
    CHECK_THROWS(perturb(Mat::Ones(1, 1), spec, 0.0, Mat::Zero(1, 1)));
  }
}

TEST_CASE("predictor steps") {
  Rng rng(44);
  Mat x(4, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
  x = (0.5 * (x + x.transpose())).eval();
  x.diagonal().setZero();
  Mat score = -x;  // any symmetric field
  const double t = 0.9, dt = -1e-3;

  SECTION("euler-maruyama matches its formula") {
    Rng r1(7), r2(7);
    NoiseShape shape{.symmetric = true};
    const auto spec = vp_spec();
    const Mat out = predictor_step(x, t, dt, score, spec, Predictor::euler_maruyama, shape, r1);
    const auto [fc, g] = drift_diffusion_coeffs(spec, t);
    const Mat z = draw_noise(4, 4, shape, r2);
    const Mat expect = x + (fc * x - g * g * score) * dt + g * std::sqrt(-dt) * z;
    CHECK((out - expect).lpNorm<Eigen::Infinity>() < 1e-14);
  }
  SECTION("ode flow is deterministic and noise-free") {
    Rng r1(7);
    const auto spec = ve_spec();
    const Mat out = predictor_step(x, t, dt, score, spec, Predictor::ode_flow, {}, r1);
    const auto [fc, g] = drift_diffusion_coeffs(spec, t);
    CHECK((out - (x + (fc * x - 0.5 * g * g * score) * dt)).lpNorm<Eigen::Infinity>() < 1e-14);
  }
  SECTION("vanishing diffusion reduces to the deterministic Euler step") {
    Rng r1(7);
    const auto spec = ve_spec(1.0, 1.0 + 1e-12);  // g ~ 0
    const Mat out = predictor_step(x, t, dt, score, spec, Predictor::euler_maruyama, {}, r1);
    CHECK((out - x).lpNorm<Eigen::Infinity>() < 1e-6);
  }
  SECTION("adjacency symmetry is preserved exactly by every predictor") {
    NoiseShape shape{.symmetric = true};
    for (auto kind : {Predictor::euler_maruyama, Predictor::reverse_diffusion,
                      Predictor::ode_flow}) {
      for (const auto& spec : {vp_spec(), ve_spec(), subvp_spec()}) {
        Rng r(kVersion[0] + static_cast<int>(kind));
        Mat cur = x;
        for (int i = 0; i < 5; ++i) {
          cur = predictor_step(cur, t - i * 1e-3, dt, -cur, spec, kind, shape, r);
          CHECK((cur - cur.transpose().eval()).lpNorm<Eigen::Infinity>() == 0.0);
        }
      }
    }
  }
  SECTION("dt must be negative") {
    Rng r(1);
    CHECK_THROWS(predictor_step(x, t, 1e-3, score, vp_spec(), Predictor::euler_maruyama, {}, r));
  }
}

TEST_CASE("langevin corrector") {
  SamplerConfig cfg;
  cfg.corrector = Corrector::langevin;
  cfg.snr = 0.2;
  cfg.scale_coeff = 1.0;

  SECTION("aligned score gives alpha = 2 snr^2") {
    Rng r1(31), r2(31);
    Mat x = Mat::Ones(3, 3);
    const Mat z = draw_noise(3, 3, {}, r2);  // same stream as inside the call
    const Mat out = langevin_correct(x, 0.5, z, cfg, {}, r1);
    const double alpha = 2.0 * cfg.snr * cfg.snr;
    const Mat expect = x + alpha * z + cfg.scale_coeff * std::sqrt(2.0 * alpha) * z;
    CHECK((out - expect).lpNorm<Eigen::Infinity>() < 1e-12);
  }
  SECTION("snr -> 0 makes the step the identity") {
    Rng r(3);
    cfg.snr = 1e-12;
    Mat x = Mat::Ones(2, 2);
    Mat s = Mat::Ones(2, 2) * 3.0;
    CHECK((langevin_correct(x, 0.5, s, cfg, {}, r) - x).lpNorm<Eigen::Infinity>() < 1e-9);
  }
  SECTION("zero score skips the step") {
    Rng r(3);
    Mat x = Mat::Ones(2, 2);
    CHECK(langevin_correct(x, 0.5, Mat::Zero(2, 2), cfg, {}, r) == x);
  }
  SECTION("repeated correction approaches the target Gaussian") {
    const auto spec = vp_spec();
    const double t = 0.5;
    const double sigma = perturbation_kernel(spec, t).std;
    cfg.snr = 0.15;
    Rng r(123);
    const int N = 8000;
    Mat x(1, N);
    for (int i = 0; i < N; ++i) x(0, i) = 1.5 + 0.5 * r.normal();
    for (int iter = 0; iter < 500; ++iter) {
      const Mat score = -x / (sigma * sigma);
      x = langevin_correct(x, t, score, cfg, {}, r);
    }
    const double mean = x.mean();
    const double stdev = std::sqrt((x.array() - mean).square().mean());
    CHECK(std::abs(mean) < 0.03 * sigma);
    CHECK(std::abs(stdev - sigma) / sigma < 0.03);
  }
}

TEST_CASE("solve_reverse recovers a Gaussian target from analytic scores") {
  const double mu = 1.5, sigma0 = 0.5;
  auto run = [&](const SdeSpec& spec, Predictor pred, Corrector corr) {
    SamplerConfig cfg;
    cfg.predictor = pred;
    cfg.corrector = corr;
    cfg.snr = 0.1;
    cfg.scale_coeff = 1.0;
    cfg.num_steps = 1000;
    cfg.eps_final = spec.recommended_eps();
    auto scores = [&](const SystemState& st, double t) {
      const auto k = perturbation_kernel(spec, t);
      const double var = k.mean_coeff * k.mean_coeff * sigma0 * sigma0 + k.std * k.std;
      SystemState out;
      for (int r = 0; r < 3; ++r)
        for (const auto& ch : st[r])
          out[r].push_back((-(ch.array() - k.mean_coeff * mu) / var).matrix());
      return out;
    };
    Rng rng(2024);
    const double prior_std = spec.kind == SdeSpec::Kind::VE ? spec.sigma_max : 1.0;
    SystemState state;
    std::array<RankSetup, 3> setup;
    for (int r = 0; r < 3; ++r) {
      state[r].push_back(prior_std * draw_noise(25, 80, {}, rng));
      setup[r] = RankSetup{spec, {}};
    }
    const auto out = solve_reverse(scores, state, cfg, setup, rng);
    for (int r = 0; r < 3; ++r) {
      const double mean = out[r][0].mean();
      const double stdev = std::sqrt((out[r][0].array() - mean).square().mean());
      CHECK(std::abs(mean - mu) < 0.03 * std::abs(mu) + 0.02);
      CHECK(std::abs(stdev - sigma0) / sigma0 < 0.05);
    }
  };
  SECTION("VP") {
    run(vp_spec(0.1, 20.0), Predictor::euler_maruyama, Corrector::none);
    run(vp_spec(0.1, 20.0), Predictor::ode_flow, Corrector::none);
  }
  SECTION("VE") {
    run(ve_spec(0.01, 20.0), Predictor::reverse_diffusion, Corrector::langevin);
    run(ve_spec(0.01, 20.0), Predictor::ode_flow, Corrector::none);
  }
  SECTION("subVP") {
    run(subvp_spec(0.1, 20.0), Predictor::euler_maruyama, Corrector::langevin);
  }
}

TEST_CASE("solve_reverse with zero scores under the VE ODE leaves the prior") {
  SamplerConfig cfg;
  cfg.predictor = Predictor::ode_flow;
  cfg.num_steps = 50;
  cfg.eps_final = 1e-5;
  auto scores = [&](const SystemState& st, double) {
    SystemState out;
    for (int r = 0; r < 3; ++r)
      for (const auto& ch : st[r]) out[r].push_back(Mat::Zero(ch.rows(), ch.cols()));
    return out;
  };
  Rng rng(8);
  SystemState state;
  std::array<RankSetup, 3> setup;
  for (int r = 0; r < 3; ++r) {
    state[r].push_back(draw_noise(4, 4, {}, rng));
    setup[r] = RankSetup{ve_spec(), {}};
  }
  const auto before = state;
  const auto out = solve_reverse(scores, state, cfg, setup, rng);
  for (int r = 0; r < 3; ++r)
    CHECK((out[r][0] - before[r][0]).lpNorm<Eigen::Infinity>() < 1e-12);  // VE drift is zero
}

TEST_CASE("solve_reverse uses a Jacobi update") {
  // rank-0 score depends on the rank-1 state; one step must consume the
  // pre-update rank-1 state
  SamplerConfig cfg;
  cfg.predictor = Predictor::ode_flow;
  cfg.num_steps = 1;
  cfg.eps_final = 0.5;
  const auto spec = vp_spec();
  auto scores = [&](const SystemState& st, double) {
    SystemState out;
    out[0].push_back(st[1][0]);       // depends on rank 1
    out[1].push_back(st[0][0]);       // depends on rank 0
    out[2].push_back(st[2][0] * 2.0);
    return out;
  };
  Rng rng(9);
  SystemState state;
  state[0].push_back(Mat::Ones(1, 1) * 2.0);
  state[1].push_back(Mat::Ones(1, 1) * -3.0);
  state[2].push_back(Mat::Ones(1, 1) * 5.0);
  std::array<RankSetup, 3> setup{RankSetup{spec, {}}, RankSetup{spec, {}}, RankSetup{spec, {}}};
  const auto out = solve_reverse(scores, state, cfg, setup, rng);
  const double dt = -(spec.T - cfg.eps_final);
  const auto [fc, g] = drift_diffusion_coeffs(spec, 1.0);
  const double x0 = 2.0 + (fc * 2.0 - 0.5 * g * g * (-3.0)) * dt;
  const double x1 = -3.0 + (fc * -3.0 - 0.5 * g * g * 2.0) * dt;
  CHECK(out[0][0](0, 0) == Approx(x0).margin(1e-14));
  CHECK(out[1][0](0, 0) == Approx(x1).margin(1e-14));
}

TEST_CASE("solve_reverse aborts on non-finite states") {
  SamplerConfig cfg;
  cfg.predictor = Predictor::euler_maruyama;
  cfg.num_steps = 3;
  cfg.eps_final = 0.1;
  auto scores = [&](const SystemState& st, double) {
    SystemState out;
    for (int r = 0; r < 3; ++r)
      for (const auto& ch : st[r])
        out[r].push_back(Mat::Constant(ch.rows(), ch.cols(),
                                       std::numeric_limits<double>::quiet_NaN()));
    return out;
  };
  Rng rng(4);
  SystemState state;
  std::array<RankSetup, 3> setup;
  for (int r = 0; r < 3; ++r) {
    state[r].push_back(Mat::Ones(2, 2));
    setup[r] = RankSetup{vp_spec(), {}};
  }
  CHECK_THROWS_AS(solve_reverse(scores, state, cfg, setup, rng), std::runtime_error);
}

TEST_CASE("fixed seeds give bit-identical trajectories") {
  auto run = [&](std::uint64_t seed) {
    SamplerConfig cfg;
    cfg.predictor = Predictor::euler_maruyama;
    cfg.corrector = Corrector::langevin;
    cfg.snr = 0.1;
    cfg.num_steps = 20;
    cfg.eps_final = 1e-3;
    auto scores = [&](const SystemState& st, double) {
      SystemState out;
      for (int r = 0; r < 3; ++r)
        for (const auto& ch : st[r]) out[r].push_back(-ch);
      return out;
    };
    Rng rng(seed);
    SystemState state;
    std::array<RankSetup, 3> setup;
    for (int r = 0; r < 3; ++r) {
      state[r].push_back(draw_noise(5, 5, {}, rng));
      setup[r] = RankSetup{vp_spec(), {}};
    }
    return solve_reverse(scores, state, cfg, setup, rng);
  };
  const auto a = run(77), b = run(77), c = run(78);
  for (int r = 0; r < 3; ++r) {
    CHECK(a[r][0] == b[r][0]);
    CHECK(a[r][0] != c[r][0]);
  }
}
