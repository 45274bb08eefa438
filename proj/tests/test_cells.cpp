#include <catch2/catch_amalgamated.hpp>

#include "ccsd/cells.hpp"

using namespace ccsd;

TEST_CASE("edge_index matches lexicographic enumeration") {
  CHECK(edge_index(0, 1, 4) == 0);
  CHECK(edge_index(0, 3, 4) == 2);
  CHECK(edge_index(1, 2, 4) == 3);
  CHECK(edge_index(2, 3, 4) == 5);
  CHECK(num_edge_slots(9) == 36);
}

TEST_CASE("edge_index round trips for all pairs") {
  for (int n = 2; n <= 6; ++n) {
    std::int64_t expected = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const auto idx = edge_index(i, j, n);
        CHECK(idx == expected++);
        CHECK(edge_pair(idx, n) == std::pair<int, int>{i, j});
      }
    CHECK(expected == num_edge_slots(n));
  }
}

TEST_CASE("edge_index rejects bad arguments") {
  CHECK_THROWS(edge_index(1, 1, 4));
  CHECK_THROWS(edge_index(2, 1, 4));
  CHECK_THROWS(edge_index(0, 4, 4));
  CHECK_THROWS(edge_pair(6, 4));
}

TEST_CASE("cell_count sums binomials over the cardinality window") {
  CHECK(cell_count(15, {3, 9}) == 27703);
  CHECK(cell_count(3, {3, 3}) == 1);
  CHECK(cell_count(4, {3, 5}) == binomial(4, 3) + binomial(4, 4));  // k > n drops out
  std::int64_t powerset = 0;
  for (int k = 0; k <= 15; ++k) powerset += binomial(15, k);
  CHECK(powerset == 32768);
}

TEST_CASE("CellIndex orders by cardinality then lexicographically") {
  CellIndex ci(4, {3, 4});
  CHECK(ci.total() == cell_count(4, {3, 4}));
  CHECK(ci.index_of({0, 1, 2}) == 0);
  CHECK(ci.index_of({0, 1, 3}) == 1);
  CHECK(ci.index_of({0, 2, 3}) == 2);
  CHECK(ci.index_of({1, 2, 3}) == 3);
  CHECK(ci.index_of({0, 1, 2, 3}) == 4);
  CHECK(ci.index_of({2, 0, 1}) == 0);  // order-insensitive
}

TEST_CASE("CellIndex bijection is exhaustive for small n") {
  for (int n = 3; n <= 8; ++n) {
    for (int dmax = 3; dmax <= 4; ++dmax) {
      if (dmax > n) continue;
      CellIndex ci(n, {3, dmax});
      CHECK(ci.total() == cell_count(n, {3, dmax}));
      for (std::int64_t j = 0; j < ci.total(); ++j) {
        const auto nodes = ci.nodes_of(j);
        CHECK(ci.index_of(nodes) == j);
      }
    }
  }
}

TEST_CASE("cell_edge_mask marks exactly the within-cell edges") {
  SECTION("triangle on 3 nodes") {
    const auto mask = cell_edge_mask(3, {3, 3});
    REQUIRE(mask.m == 3);
    REQUIRE(mask.K == 1);
    for (std::int64_t e = 0; e < 3; ++e) CHECK(mask.at(e, 0));
  }
  SECTION("cell {0,1,2} in n=4") {
    const auto mask = cell_edge_mask(4, {3, 3});
    CellIndex ci(4, {3, 3});
    const auto j = ci.index_of({0, 1, 2});
    CHECK(mask.at(edge_index(0, 1, 4), j));
    CHECK(mask.at(edge_index(0, 2, 4), j));
    CHECK(mask.at(edge_index(1, 2, 4), j));
    CHECK_FALSE(mask.at(edge_index(0, 3, 4), j));
    CHECK_FALSE(mask.at(edge_index(1, 3, 4), j));
    CHECK_FALSE(mask.at(edge_index(2, 3, 4), j));
  }
  SECTION("column sums equal C(|S|,2)") {
    for (int n = 4; n <= 7; ++n) {
      const auto mask = cell_edge_mask(n, {3, std::min(n, 4)});
      CellIndex ci(n, {3, std::min(n, 4)});
      for (std::int64_t j = 0; j < mask.K; ++j) {
        const auto sz = static_cast<int>(ci.nodes_of(j).size());
        std::int64_t colsum = 0;
        for (std::int64_t e = 0; e < mask.m; ++e) colsum += mask.at(e, j) ? 1 : 0;
        CHECK(colsum == binomial(sz, 2));
        CHECK(colsum == static_cast<std::int64_t>(mask.cols[j].size()));
      }
    }
  }
}

TEST_CASE("DimConstraints validation") {
  CHECK_THROWS(cell_count(5, {2, 3}));
  CHECK_THROWS(cell_count(5, {4, 3}));
  CHECK_THROWS(cell_count(0, {3, 3}));
}
