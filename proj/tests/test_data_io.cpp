#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>

#include "ccsd/config.hpp"
#include "ccsd/dataset.hpp"
#include "ccsd/io.hpp"
#include "ccsd/metrics.hpp"
#include "test_util.hpp"

using namespace ccsd;
using Catch::Approx;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("community-small generator") {
  const auto graphs = gen_community_small(7);
  CHECK(graphs.size() == 100);
  for (const auto& g : graphs) {
    CHECK(g.n() >= 12);
    CHECK(g.n() <= 19);
    check_adjacency_binary(g.A);
    CHECK(g.X.rows() == g.n());
    CHECK(g.X.cols() == 10);
  }
  // seeded determinism
  const auto again = gen_community_small(7);
  for (std::size_t i = 0; i < graphs.size(); ++i) CHECK(graphs[i].A == again[i].A);
  const auto other = gen_community_small(8);
  bool differ = false;
  for (std::size_t i = 0; i < graphs.size(); ++i) differ = differ || graphs[i].A != other[i].A;
  CHECK(differ);
  // two communities: intra density well above inter density on average
  double intra = 0.0, inter = 0.0, intra_pairs = 0.0, inter_pairs = 0.0;
  for (const auto& g : graphs) {
    const int first = (g.n() + 1) / 2;
    for (int i = 0; i < g.n(); ++i)
      for (int j = i + 1; j < g.n(); ++j) {
        const bool same = (i < first) == (j < first);
        (same ? intra : inter) += g.A(i, j);
        (same ? intra_pairs : inter_pairs) += 1.0;
      }
  }
  CHECK(intra / intra_pairs == Approx(0.7).margin(0.05));
  CHECK(inter / inter_pairs == Approx(0.05).margin(0.02));
}

TEST_CASE("grid-small generator") {
  const auto graphs = gen_grid_small(3);
  CHECK(graphs.size() == 100);
  int max_nodes = 0;
  for (const auto& g : graphs) {
    max_nodes = std::max(max_nodes, g.n());
    CHECK(g.n() >= 16);
    CHECK(g.n() <= 49);
    check_adjacency_binary(g.A);
    // grids are triangle-free: clustering mass concentrated at zero
    const auto h = metrics::clustering_histogram(g.A, 10);
    CHECK(h.values[0] == static_cast<double>(g.n()));
  }
  CHECK(max_nodes <= 49);
  // a 4x4 grid has 16 nodes and 24 edges
  Mat a44;
  for (const auto& g : graphs)
    if (g.n() == 16) a44 = g.A;
  if (a44.size() > 0) CHECK(a44.sum() / 2 == 24);
}

TEST_CASE("empirical node distribution") {
  Rng rng(5);
  std::vector<ComplexTensor> set;
  for (int n : {4, 5, 5, 6}) set.push_back(testutil::random_complex(n, {3, 3}, rng, 0.2));
  EmpiricalNodeDist dist(set);
  CHECK(dist.min() == 4);
  CHECK(dist.max() == 6);
  Rng draw(9);
  for (int i = 0; i < 50; ++i) {
    const int n = dist.sample(draw);
    CHECK(n >= 4);
    CHECK(n <= 6);
  }
}

TEST_CASE("dataset file round trip") {
  Rng rng(11);
  std::vector<ComplexTensor> set;
  for (int i = 0; i < 50; ++i)
    set.push_back(testutil::random_complex(4 + static_cast<int>(rng.uniform_int(0, 3)), {3, 4},
                                           rng, 0.25, 2, 1, 1));
  const std::string path = temp_path("ccsd_ds_roundtrip.jsonl");
  io::DatasetMeta meta{3, 4, 2, 1, 1, 7};
  io::write_dataset(path, set, meta);
  const auto [loaded, meta2] = io::read_dataset(path);
  REQUIRE(loaded.size() == set.size());
  CHECK(meta2.d_min == 3);
  CHECK(meta2.d_max == 4);
  CHECK(meta2.max_n == 7);
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(loaded[i].X == set[i].X);
    CHECK(loaded[i].A[0] == set[i].A[0]);
    CHECK(loaded[i].F[0] == set[i].F[0]);
  }
  std::remove(path.c_str());
}

TEST_CASE("dataset files with featured adjacency use the dense form") {
  Rng rng(13);
  auto cc = testutil::random_complex(5, {3, 3}, rng, 0.3, 1, 3, 1);
  const std::string path = temp_path("ccsd_ds_dense.jsonl");
  io::write_dataset(path, {cc}, io::DatasetMeta{3, 3, 1, 3, 1, 5});
  const auto [loaded, meta] = io::read_dataset(path);
  for (int c = 0; c < 3; ++c) CHECK(loaded[0].A[c] == cc.A[c]);
  std::remove(path.c_str());
}

TEST_CASE("malformed dataset records carry line numbers") {
  const std::string path = temp_path("ccsd_ds_bad.jsonl");
  {
    std::ofstream out(path);
    out << R"({"format":"ccsd-dataset","version":1,"d_min":3,"d_max":3,"f0":1,"f1":1,"f2":1,)"
        << R"("max_n":5})" << "\n";
    out << "{not json}\n";
  }
  try {
    io::read_dataset(path);
    FAIL("expected a parse error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("checkpoint round trip is bit-exact") {
  Rng rng(17);
  nn::ParamStore store(23);
  store.weight("layer.w", 7, 5);
  store.bias("layer.b", 5);
  const std::string path = temp_path("ccsd_ckpt.bin");
  io::CheckpointHeader header{0xfeedbeef, 42, "{\"kind\":\"VP\"}"};
  io::write_checkpoint(path, header, io::snapshot(store));
  const auto [h2, tensors] = io::read_checkpoint(path);
  CHECK(h2.spec_hash == 0xfeedbeef);
  CHECK(h2.seed == 42);
  CHECK(h2.sde_json == header.sde_json);

  nn::ParamStore other(99);  // different init, then restored
  other.weight("layer.w", 7, 5);
  other.bias("layer.b", 5);
  io::restore(other, tensors);
  for (std::size_t i = 0; i < store.params().size(); ++i)
    CHECK(other.params()[i].second.value() == store.params()[i].second.value());
  std::remove(path.c_str());
}

TEST_CASE("restore refuses missing tensors") {
  nn::ParamStore store(1);
  store.weight("w", 2, 2);
  CHECK_THROWS(io::restore(store, {}));
}

TEST_CASE("config parser") {
  const std::string text = R"(
# a comment
top = 1
[alpha]
s = "hello"   # trailing comment
flag = true
rate = 2.5e-1
[alpha.beta]
ints = [1, 2, 3]
)";
  const auto tree = cfg::KeyTree::parse_string(text);
  CHECK(tree.get<std::int64_t>("top") == 1);
  CHECK(tree.get<std::string>("alpha.s") == "hello");
  CHECK(tree.get<bool>("alpha.flag") == true);
  CHECK(tree.get<double>("alpha.rate") == Approx(0.25));
  CHECK(tree.get<std::vector<double>>("alpha.beta.ints")->size() == 3);
  CHECK_FALSE(tree.has("alpha.missing"));
  CHECK_THROWS(cfg::KeyTree::parse_string("key 1"));      // no equals
  CHECK_THROWS(cfg::KeyTree::parse_string("[sec\nk=1")); // unterminated section
}

TEST_CASE("config loader lists every missing key at once") {
  const auto tree = cfg::KeyTree::parse_string(R"(
[dataset]
name = "community_small"
seed = 42
)");
  try {
    cfg::load_config(tree);
    FAIL("expected missing-key error");
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    CHECK(msg.find("dataset.max_n") != std::string::npos);
    CHECK(msg.find("model.x.num_layers") != std::string::npos);
    CHECK(msg.find("sde.x.kind") != std::string::npos);
    CHECK(msg.find("sampler.snr") != std::string::npos);
    CHECK(msg.find("train.lr") != std::string::npos);
  }
}

TEST_CASE("spec hash changes with the architecture") {
  const std::string base = R"(
[dataset]
name = "community_small"
seed = 42
max_n = 20
max_feat = 10
[lift]
method = "path"
k = 3
d_min = 3
d_max = 3
[model.x]
num_layers = 3
hidden = 16
[model.a]
heads = 4
c_init = 2
c_hid = 4
c_final = 2
num_blocks = 5
hidden = 16
hodge_blocks = 1
[model.f]
power = 2
mlp_layers = 1
apply_hodge_mask = true
[sde.x]
kind = "VP"
beta_min = 0.1
beta_max = 1.0
[sde.a]
kind = "VP"
beta_min = 0.1
beta_max = 1.0
[sde.f]
kind = "VP"
beta_min = 0.1
beta_max = 1.0
[sampler]
predictor = "euler_maruyama"
corrector = "langevin"
snr = 0.05
scale_coeff = 0.7
num_steps = 100
seed = 42
[train]
lr = 0.01
weight_decay = 1e-4
batch_size = 8
epochs = 10
seed = 42
)";
  auto tree = cfg::KeyTree::parse_string(base);
  const auto cfg1 = cfg::load_config(tree);
  tree.set("model.x.hidden", std::int64_t{32});
  const auto cfg2 = cfg::load_config(tree);
  CHECK(cfg::spec_hash(cfg1) != cfg::spec_hash(cfg2));
  CHECK(cfg::spec_hash(cfg1) == cfg::spec_hash(cfg1));
}
