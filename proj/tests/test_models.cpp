#include <catch2/catch_amalgamated.hpp>

#include "ccsd/models.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

using namespace ccsd;
using namespace ccsd::nn;

namespace {

Mat random_mat(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = rng.normal();
  return m;
}

struct TestInputs {
  Mat X;
  std::vector<Mat> A;
  std::vector<Mat> F;
  std::vector<std::uint8_t> mask;
};

TestInputs random_inputs(const CcShape& shape, Rng& rng, int active = -1) {
  TestInputs in;
  in.X = random_mat(shape.n, shape.f0, rng);
  for (int c = 0; c < shape.f1; ++c) in.A.push_back(testutil::random_symmetric(shape.n, rng));
  for (int c = 0; c < shape.f2; ++c) in.F.push_back(random_mat(shape.m(), shape.K(), rng));
  in.mask.assign(shape.n, 1);
  if (active > 0)
    for (int i = active; i < shape.n; ++i) in.mask[i] = 0;
  return in;
}

ScoreNetAConfig small_a_config(bool baseline = false, int hodge_blocks = 1) {
  ScoreNetAConfig cfg;
  cfg.num_heads = 2;
  cfg.c_init = 2;
  cfg.c_hid = 3;
  cfg.c_final = 2;
  cfg.num_blocks = 2;
  cfg.mlp_layers = 2;
  cfg.hidden = 4;
  cfg.baseline = baseline;
  cfg.hodge_blocks = hodge_blocks;
  cfg.hodge_heads = 2;
  cfg.hodge_attn_dim = 4;
  cfg.hodge_c_hid = 2;
  cfg.hodge_c_final = 2;
  cfg.hodge_mlp_layers = 1;
  cfg.hodge_mlp_hidden = 4;
  cfg.final_mlp_layers = 2;
  return cfg;
}

}  // namespace

TEST_CASE("score network X") {
  const auto shape = CcShape::make(6, {3, 3}, 3);
  ScoreNetXConfig cfg;
  cfg.num_layers = 2;
  cfg.hidden = 5;
  ScoreNetworkX model(shape, cfg, 7);
  Rng rng(1);
  auto in = random_inputs(shape, rng);

  SECTION("output shape matches the node features") {
    const auto out = model.forward(in.X, in.A, in.mask);
    CHECK(out.rows() == 6);
    CHECK(out.cols() == 3);
  }
  SECTION("no graph convolutions degenerates to an MLP of X") {
    ScoreNetXConfig c0;
    c0.num_layers = 0;
    c0.hidden = 5;
    ScoreNetworkX mlp_only(shape, c0, 7);
    const auto out = mlp_only.forward(in.X, in.A, in.mask);
    const auto out2 = mlp_only.forward(in.X, {testutil::random_symmetric(6, rng)}, in.mask);
    CHECK(out.value() == out2.value());  // adjacency is unused
  }
  SECTION("permutation equivariance") {
    Rng prng(2);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<int> perm(6);
      for (int i = 0; i < 6; ++i) perm[i] = i;
      for (int i = 5; i > 0; --i)
        std::swap(perm[i], perm[static_cast<int>(prng.uniform_int(0, i))]);
      Mat P = Mat::Zero(6, 6);
      for (int i = 0; i < 6; ++i) P(perm[i], i) = 1.0;
      const Mat base = model.forward(in.X, in.A, in.mask).value();
      const Mat permuted =
          model.forward(P * in.X, {P * in.A[0] * P.transpose()}, in.mask).value();
      CHECK((permuted - P * base).lpNorm<Eigen::Infinity>() < 1e-9);
    }
  }
  SECTION("masked nodes produce zero scores and do not influence others") {
    auto in2 = random_inputs(shape, rng, 4);
    const Mat out = model.forward(in2.X, in2.A, in2.mask).value();
    CHECK(out.bottomRows(2).isZero(0.0));
    auto in3 = in2;
    in3.X.bottomRows(2).setConstant(99.0);
    in3.A[0].col(5).setConstant(7.0);
    in3.A[0].row(5).setConstant(7.0);
    const Mat out3 = model.forward(in3.X, in3.A, in3.mask).value();
    CHECK((out3 - out).lpNorm<Eigen::Infinity>() == 0.0);
  }
  SECTION("passes finite differences") {
    Rng pick(3);
    auto build = [&]() {
      Rng w(92);
      return testutil::weighted_sum(model.forward(in.X, in.A, in.mask), w);
    };
    CHECK(testutil::gradcheck(model.store(), build, 30, pick).max_rel_err < 1e-4);
  }
  SECTION("deterministic initialization and forward") {
    ScoreNetworkX m2(shape, cfg, 7);
    CHECK(m2.forward(in.X, in.A, in.mask).value() == model.forward(in.X, in.A, in.mask).value());
  }
}

TEST_CASE("score network A (attention + Hodge tracks)") {
  const auto shape = CcShape::make(5, {3, 3}, 2);
  ScoreNetworkACC model(shape, small_a_config(), 11);
  Rng rng(4);
  auto in = random_inputs(shape, rng);

  SECTION("output is symmetric with a zero diagonal") {
    const auto out = model.forward(in.X, in.A, in.F, in.mask);
    REQUIRE(out.size() == 1);
    const Mat o = out[0].value();
    CHECK(o.rows() == 5);
    CHECK((o - o.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(o.diagonal().isZero(0.0));
  }
  SECTION("zero hodge blocks recovers the pure-graph architecture") {
    ScoreNetworkACC pure(shape, small_a_config(false, 0), 11);
    for (const auto& [name, t] : pure.store().params())
      CHECK(name.find("hodge") == std::string::npos);
    const auto out = pure.forward(in.X, in.A, in.F, in.mask);
    const auto out2 = pure.forward(in.X, in.A, {random_mat(shape.m(), shape.K(), rng)}, in.mask);
    CHECK(out[0].value() == out2[0].value());  // F is unused without the Hodge track
  }
  SECTION("passes finite differences") {
    Rng pick(5);
    auto build = [&]() {
      Rng w(91);
      return testutil::weighted_sum(model.forward(in.X, in.A, in.F, in.mask)[0], w);
    };
    const auto rep = testutil::gradcheck(model.store(), build, 30, pick);
    INFO("max rel err " << rep.max_rel_err);
    CHECK(rep.max_rel_err < 1e-4);
  }
  SECTION("masked nodes stay zero") {
    auto in2 = random_inputs(shape, rng, 4);
    const Mat o = model.forward(in2.X, in2.A, in2.F, in2.mask)[0].value();
    CHECK(o.row(4).isZero(0.0));
    CHECK(o.col(4).isZero(0.0));
  }
}

TEST_CASE("score network A baseline variant") {
  const auto shape = CcShape::make(5, {3, 3}, 2);
  ScoreNetworkACC model(shape, small_a_config(true, 2), 13);
  Rng rng(6);
  auto in = random_inputs(shape, rng);

  SECTION("same output contract") {
    const Mat o = model.forward(in.X, in.A, in.F, in.mask)[0].value();
    CHECK((o - o.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(o.diagonal().isZero(0.0));
  }
  SECTION("parameter count is the same order as the attention variant") {
    ScoreNetworkACC attn(shape, small_a_config(false, 2), 13);
    const double ratio = static_cast<double>(model.store().count()) /
                         static_cast<double>(attn.store().count());
    CHECK(ratio > 0.2);
    CHECK(ratio < 5.0);
  }
  SECTION("passes finite differences") {
    Rng pick(7);
    auto build = [&]() {
      Rng w(90);
      return testutil::weighted_sum(model.forward(in.X, in.A, in.F, in.mask)[0], w);
    };
    CHECK(testutil::gradcheck(model.store(), build, 30, pick).max_rel_err < 1e-4);
  }
}

TEST_CASE("score network F") {
  const auto shape = CcShape::make(5, {3, 4});
  ScoreNetFConfig cfg;
  cfg.power = 2;
  cfg.num_blocks = 2;
  cfg.hidden_channels = 3;
  cfg.mlp_layers = 1;
  ScoreNetworkF model(shape, cfg, 17);
  Rng rng(8);
  auto in = random_inputs(shape, rng);

  SECTION("output shape and mask support") {
    const auto out = model.forward(in.F, in.mask);
    REQUIRE(out.size() == 1);
    const Mat o = out[0].value();
    CHECK(o.rows() == shape.m());
    CHECK(o.cols() == shape.K());
    for (std::int64_t e = 0; e < shape.m(); ++e)
      for (std::int64_t j = 0; j < shape.K(); ++j)
        if (!shape.mask.at(e, j)) CHECK(o(e, j) == 0.0);
  }
  SECTION("zero incidence gives a bias-constant field inside the mask") {
    const Mat o = model.forward({Mat::Zero(shape.m(), shape.K())}, in.mask)[0].value();
    double ref = 0.0;
    bool have = false;
    for (std::int64_t e = 0; e < shape.m(); ++e)
      for (std::int64_t j = 0; j < shape.K(); ++j) {
        if (!shape.mask.at(e, j)) continue;
        if (!have) {
          ref = o(e, j);
          have = true;
        }
        CHECK(o(e, j) == ref);
      }
  }
  SECTION("masked and unmasked higher-order routes agree") {
    ScoreNetFConfig cfg2 = cfg;
    cfg2.apply_mask = false;
    ScoreNetworkF unmasked(shape, cfg2, 17);
    // with F supported on the mask both models see the same channels
    Mat F = Mat::Zero(shape.m(), shape.K());
    for (std::int64_t j = 0; j < shape.K(); ++j)
      for (auto e : shape.mask.cols[j]) F(e, j) = rng.normal();
    const Mat a = model.forward({F}, in.mask)[0].value();
    const Mat b = unmasked.forward({F}, in.mask)[0].value();
    // they agree on the mask support (the unmasked model also emits scores
    // off-support)
    for (std::int64_t j = 0; j < shape.K(); ++j)
      for (auto e : shape.mask.cols[j]) CHECK(a(e, j) == Catch::Approx(b(e, j)).epsilon(1e-12));
  }
  SECTION("passes finite differences") {
    Rng pick(9);
    auto build = [&]() {
      Rng w(89);
      return testutil::weighted_sum(model.forward(in.F, in.mask)[0], w);
    };
    CHECK(testutil::gradcheck(model.store(), build, 30, pick).max_rel_err < 1e-4);
  }
}
