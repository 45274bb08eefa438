#include <catch2/catch_amalgamated.hpp>

#include "ccsd/quantize.hpp"
#include "test_util.hpp"

using namespace ccsd;

TEST_CASE("bond quantization thresholds") {
  CHECK(quantize_value(0.4, QuantizeMode::bond) == 0.0);
  CHECK(quantize_value(1.2, QuantizeMode::bond) == 1.0);
  CHECK(quantize_value(2.0, QuantizeMode::bond) == 2.0);
  CHECK(quantize_value(3.7, QuantizeMode::bond) == 3.0);
  CHECK(quantize_value(0.5, QuantizeMode::bond) == 0.0);
  CHECK(quantize_value(1.5, QuantizeMode::bond) == 2.0);
  CHECK(quantize_value(2.5, QuantizeMode::bond) == 3.0);
}

TEST_CASE("binary quantization is strict at the boundary") {
  CHECK(quantize_value(0.5, QuantizeMode::binary) == 0.0);
  CHECK(quantize_value(0.5001, QuantizeMode::binary) == 1.0);
}

TEST_CASE("adjacency quantization symmetrizes and zeroes the diagonal") {
  Rng rng(17);
  Mat raw(4, 4);
  for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) = rng.normal() + 0.5;
  const Mat q = quantize_adjacency(raw, QuantizeMode::binary);
  CHECK(q == q.transpose().eval());
  CHECK(q.diagonal().isZero(0.0));
  for (Eigen::Index i = 0; i < q.size(); ++i) CHECK((q(i) == 0.0 || q(i) == 1.0));
  // symmetric input stays symmetric
  const Mat sym = 0.5 * (raw + raw.transpose());
  CHECK(quantize_adjacency(sym, QuantizeMode::binary) == q);
}

TEST_CASE("incidence quantization activates supported columns") {
  const int n = 3;
  const auto mask = cell_edge_mask(n, {3, 3});
  Mat A = Mat::Zero(n, n);
  A(0, 1) = A(1, 0) = 1.0;
  A(0, 2) = A(2, 0) = 1.0;
  A(1, 2) = A(2, 1) = 1.0;
  Mat F_raw = Mat::Zero(mask.m, mask.K);
  F_raw(0, 0) = 0.9;
  F_raw(1, 0) = 0.8;
  F_raw(2, 0) = 0.7;

  SECTION("mean above threshold with all edges present") {
    const auto q = quantize_incidence({F_raw}, {A}, mask, 0.5);
    CHECK(q[0](0, 0) == 1.0);
    CHECK(q[0](1, 0) == 1.0);
    CHECK(q[0](2, 0) == 1.0);
  }
  SECTION("missing boundary edge kills the column") {
    Mat A2 = A;
    A2(1, 2) = A2(2, 1) = 0.0;
    const auto q = quantize_incidence({F_raw}, {A2}, mask, 0.5);
    CHECK(q[0].isZero(0.0));
  }
  SECTION("mean below threshold kills the column") {
    Mat low = 0.3 * F_raw;
    const auto q = quantize_incidence({low}, {A}, mask, 0.5);
    CHECK(q[0].isZero(0.0));
  }
  SECTION("all-zero raw tensor stays zero") {
    const auto q = quantize_incidence({Mat::Zero(mask.m, mask.K)}, {A}, mask, 0.5);
    CHECK(q[0].isZero(0.0));
  }
}

TEST_CASE("quantized incidence always satisfies the state contract") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + static_cast<int>(rng.uniform_int(0, 3));
    const DimConstraints c{3, 4};
    const auto mask = cell_edge_mask(n, c);
    Mat raw(n, n);
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) = rng.normal() * 0.8 + 0.4;
    const Mat A = quantize_adjacency(raw, QuantizeMode::binary);
    Mat F_raw(mask.m, mask.K);
    for (Eigen::Index i = 0; i < F_raw.size(); ++i) F_raw(i) = rng.normal() * 0.6 + 0.3;
    ComplexTensor cc = ComplexTensor::zeros(n, c);
    cc.A[0] = A;
    cc.F = quantize_incidence({F_raw}, {A}, mask, 0.5);
    CHECK(cc.quantized_state_violations().empty());
  }
}
