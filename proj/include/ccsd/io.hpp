#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "ccsd/complex.hpp"
#include "ccsd/layers.hpp"

namespace ccsd::io {

using json = nlohmann::json;

struct DatasetMeta {
  int d_min = 3, d_max = 3;
  int f0 = 1, f1 = 1, f2 = 1;
  int max_n = 0;
};

/// Dataset container format: one JSON object per line. The first line is a
/// header with the shared geometry; each following line is one complex with
/// its node features, edges (edge list for binary single-channel adjacencies,
/// dense otherwise) and rank-2 cells.
inline void write_dataset(const std::string& path, const std::vector<ComplexTensor>& set,
                          const DatasetMeta& meta) {
  std::ofstream out(path);
  require(out.good(), "write_dataset: cannot open " + path);
  json header{{"format", "ccsd-dataset"}, {"version", 1},     {"d_min", meta.d_min},
              {"d_max", meta.d_max},      {"f0", meta.f0},    {"f1", meta.f1},
              {"f2", meta.f2},            {"max_n", meta.max_n}};
  out << header.dump() << "\n";
  for (const auto& cc : set) {
    json rec;
    const int n = cc.active_nodes();
    rec["n"] = n;
    std::vector<std::vector<double>> x(n, std::vector<double>(cc.f0, 0.0));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < cc.f0; ++k) x[i][k] = cc.X(i, k);
    rec["x"] = x;
    bool binary = cc.f1 == 1;
    if (binary)
      for (int i = 0; i < n && binary; ++i)
        for (int j = i + 1; j < n && binary; ++j)
          binary = cc.A[0](i, j) == 0.0 || cc.A[0](i, j) == 1.0;
    if (binary) {
      std::vector<std::array<int, 2>> edges;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (cc.A[0](i, j) != 0.0) edges.push_back({i, j});
      rec["edges"] = edges;
    } else {
      std::vector<std::vector<std::vector<double>>> a(
          n, std::vector<std::vector<double>>(n, std::vector<double>(cc.f1, 0.0)));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int c = 0; c < cc.f1; ++c) a[i][j][c] = cc.A[c](i, j);
      rec["a"] = a;
    }
    json cells = json::array();
    for (const auto& cell : cc.cells())
      cells.push_back(json{{"nodes", cell.nodes}, {"feature", cell.feature}});
    rec["cells_2"] = cells;
    out << rec.dump() << "\n";
  }
  require(out.good(), "write_dataset: write failed for " + path);
}

inline std::pair<std::vector<ComplexTensor>, DatasetMeta> read_dataset(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "read_dataset: cannot open " + path);
  std::string line;
  int line_no = 0;
  auto parse = [&](const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
      throw std::runtime_error("read_dataset: malformed record at " + path + ":" +
                               std::to_string(line_no));
    return j;
  };
  require(static_cast<bool>(std::getline(in, line)), "read_dataset: empty file " + path);
  ++line_no;
  const json header = parse(line);
  if (!header.contains("format") || header["format"] != "ccsd-dataset")
    throw std::runtime_error("read_dataset: missing header at " + path + ":1");
  DatasetMeta meta;
  meta.d_min = header.at("d_min");
  meta.d_max = header.at("d_max");
  meta.f0 = header.at("f0");
  meta.f1 = header.at("f1");
  meta.f2 = header.at("f2");
  meta.max_n = header.at("max_n");

  std::vector<ComplexTensor> set;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json rec = parse(line);
    try {
      const int n = rec.at("n");
      ComplexTensor cc =
          ComplexTensor::zeros(n, {meta.d_min, meta.d_max}, meta.f0, meta.f1, meta.f2);
      const auto& x = rec.at("x");
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < meta.f0; ++k) cc.X(i, k) = x.at(i).at(k).get<double>();
      if (rec.contains("edges")) {
        for (const auto& e : rec["edges"]) {
          const int i = e.at(0), j = e.at(1);
          cc.A[0](i, j) = cc.A[0](j, i) = 1.0;
        }
      } else {
        const auto& a = rec.at("a");
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int c = 0; c < meta.f1; ++c) cc.A[c](i, j) = a.at(i).at(j).at(c).get<double>();
      }
      std::vector<Cell> cells;
      for (const auto& c : rec.at("cells_2"))
        cells.push_back(Cell{c.at("nodes").get<std::vector<int>>(),
                             c.at("feature").get<std::vector<double>>()});
      cc.set_cells(cells);
      set.push_back(std::move(cc));
    } catch (const json::exception& e) {
      throw std::runtime_error("read_dataset: malformed record at " + path + ":" +
                               std::to_string(line_no) + " (" + e.what() + ")");
    }
  }
  return {std::move(set), meta};
}

// ---------------------------------------------------------------------------
// checkpoint container: little-endian binary with a JSON header and raw
// 64-bit-real tensors, bit-exact on round trip
// ---------------------------------------------------------------------------

inline constexpr char kCheckpointMagic[8] = {'C', 'C', 'S', 'D', 'C', 'K', 'P', '1'};

struct CheckpointHeader {
  std::uint64_t spec_hash = 0;
  std::uint64_t seed = 0;
  std::string sde_json;  // serialized SDE specs
};

struct NamedTensor {
  std::string name;
  Mat value;
};

inline void write_checkpoint(const std::string& path, const CheckpointHeader& header,
                             const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "write_checkpoint: cannot open " + path);
  out.write(kCheckpointMagic, 8);
  json h{{"version", 1},
         {"spec_hash", header.spec_hash},
         {"seed", header.seed},
         {"sde", header.sde_json}};
  const std::string hs = h.dump();
  const std::uint64_t hlen = hs.size();
  out.write(reinterpret_cast<const char*>(&hlen), 8);
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  const std::uint64_t count = tensors.size();
  out.write(reinterpret_cast<const char*>(&count), 8);
  for (const auto& t : tensors) {
    const std::uint32_t nlen = static_cast<std::uint32_t>(t.name.size());
    out.write(reinterpret_cast<const char*>(&nlen), 4);
    out.write(t.name.data(), nlen);
    const std::uint64_t rows = t.value.rows(), cols = t.value.cols();
    out.write(reinterpret_cast<const char*>(&rows), 8);
    out.write(reinterpret_cast<const char*>(&cols), 8);
    for (Eigen::Index i = 0; i < t.value.rows(); ++i)
      for (Eigen::Index j = 0; j < t.value.cols(); ++j) {
        const double v = t.value(i, j);
        out.write(reinterpret_cast<const char*>(&v), 8);
      }
  }
  require(out.good(), "write_checkpoint: write failed for " + path);
}

inline std::pair<CheckpointHeader, std::vector<NamedTensor>> read_checkpoint(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "read_checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  require(in.good() && std::memcmp(magic, kCheckpointMagic, 8) == 0,
          "read_checkpoint: bad magic in " + path);
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 8);
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  const json h = json::parse(hs);
  require(h.at("version") == 1, "read_checkpoint: unsupported version");
  CheckpointHeader header;
  header.spec_hash = h.at("spec_hash");
  header.seed = h.at("seed");
  header.sde_json = h.at("sde");
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), 8);
  std::vector<NamedTensor> tensors;
  for (std::uint64_t k = 0; k < count; ++k) {
    std::uint32_t nlen = 0;
    in.read(reinterpret_cast<char*>(&nlen), 4);
    std::string name(nlen, '\0');
    in.read(name.data(), nlen);
    std::uint64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), 8);
    in.read(reinterpret_cast<char*>(&cols), 8);
    Mat value(rows, cols);
    for (std::uint64_t i = 0; i < rows; ++i)
      for (std::uint64_t j = 0; j < cols; ++j) {
        double v = 0.0;
        in.read(reinterpret_cast<char*>(&v), 8);
        value(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      }
    require(in.good(), "read_checkpoint: truncated tensor data in " + path);
    tensors.push_back({std::move(name), std::move(value)});
  }
  return {std::move(header), std::move(tensors)};
}

/// Store -> named tensors, with an optional name prefix (e.g. "ema.").
inline std::vector<NamedTensor> snapshot(const nn::ParamStore& store,
                                         const std::string& prefix = "") {
  std::vector<NamedTensor> out;
  for (const auto& [name, t] : store.params()) out.push_back({prefix + name, t.value()});
  return out;
}

/// Load values back into a store; every parameter must be present.
inline void restore(nn::ParamStore& store, const std::vector<NamedTensor>& tensors,
                    const std::string& prefix = "") {
  for (auto& [name, t] : store.params()) {
    bool found = false;
    for (const auto& nt : tensors)
      if (nt.name == prefix + name) {
        require(nt.value.rows() == t.rows() && nt.value.cols() == t.cols(),
                "restore: shape mismatch for " + nt.name);
        t.set_value(nt.value);
        found = true;
        break;
      }
    require(found, "restore: missing tensor " + prefix + name);
  }
}

/// Full-precision decimal formatting so text outputs round-trip bit-exactly.
inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace ccsd::io
