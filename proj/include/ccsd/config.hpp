#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "ccsd/common.hpp"
#include "ccsd/lift.hpp"
#include "ccsd/metrics.hpp"
#include "ccsd/models.hpp"
#include "ccsd/quantize.hpp"
#include "ccsd/sampler.hpp"
#include "ccsd/sde.hpp"
#include "ccsd/training.hpp"

namespace ccsd::cfg {

using Value = std::variant<bool, std::int64_t, double, std::string, std::vector<double>>;

/// Flat key-value tree with dotted paths, parsed from a TOML-style text file:
/// [section.sub] headers, key = value lines, strings, numbers, booleans,
/// scalar arrays, and # comments.
class KeyTree {
 public:
  static KeyTree parse_file(const std::string& path);
  static KeyTree parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::map<std::string, Value>& all() const { return values_; }

  void set(const std::string& key, Value v) { values_[key] = std::move(v); }

  template <typename T>
  std::optional<T> get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    if constexpr (std::is_same_v<T, double>) {
      if (const auto* i = std::get_if<std::int64_t>(&it->second))
        return static_cast<double>(*i);
    }
    if constexpr (std::is_same_v<T, std::int64_t>) {
      if (const auto* d = std::get_if<double>(&it->second))
        return static_cast<std::int64_t>(*d);
    }
    const T* v = std::get_if<T>(&it->second);
    require(v != nullptr, "config key '" + key + "' has the wrong type");
    return *v;
  }

 private:
  std::map<std::string, Value> values_;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

inline Value parse_scalar(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  require(!s.empty(), "empty value at " + where);
  if (s.front() == '"') {
    require(s.size() >= 2 && s.back() == '"', "unterminated string at " + where);
    return s.substr(1, s.size() - 2);
  }
  if (s == "true") return true;
  if (s == "false") return false;
  try {
    std::size_t pos = 0;
    if (s.find_first_of(".eE") == std::string::npos) {
      const std::int64_t i = std::stoll(s, &pos);
      if (pos == s.size()) return i;
    }
    const double d = std::stod(s, &pos);
    require(pos == s.size(), "trailing characters at " + where);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse value '" + s + "' at " + where);
  }
}

}  // namespace detail

inline KeyTree KeyTree::parse_string(const std::string& text, const std::string& origin) {
  KeyTree tree;
  std::istringstream in(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    line = detail::trim(detail::strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']', "unterminated section header at " + where);
      section = detail::trim(line.substr(1, line.size() - 2));
      require(!section.empty(), "empty section name at " + where);
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, "expected key = value at " + where);
    const std::string key = detail::trim(line.substr(0, eq));
    require(!key.empty(), "empty key at " + where);
    const std::string raw = detail::trim(line.substr(eq + 1));
    const std::string full = section.empty() ? key : section + "." + key;
    if (!raw.empty() && raw.front() == '[') {
      require(raw.back() == ']', "unterminated array at " + where);
      std::vector<double> arr;
      std::string body = raw.substr(1, raw.size() - 2);
      std::istringstream items(body);
      std::string item;
      while (std::getline(items, item, ',')) {
        item = detail::trim(item);
        if (item.empty()) continue;
        const Value v = detail::parse_scalar(item, where);
        if (const auto* d = std::get_if<double>(&v))
          arr.push_back(*d);
        else if (const auto* i = std::get_if<std::int64_t>(&v))
          arr.push_back(static_cast<double>(*i));
        else
          throw std::invalid_argument("array elements must be numbers at " + where);
      }
      tree.values_[full] = std::move(arr);
    } else {
      tree.values_[full] = detail::parse_scalar(raw, where);
    }
  }
  return tree;
}

inline KeyTree KeyTree::parse_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

// ---------------------------------------------------------------------------
// typed application config
// ---------------------------------------------------------------------------

struct DatasetConfig {
  std::string name;  // community_small | grid_small | file
  std::string file;  // when name == "file"
  int count = 100;
  std::uint64_t seed = 42;
  int min_n = 12, max_n = 20;
  int max_feat = 10;
  double train_fraction = 0.8;
  double p_intra = 0.7, p_inter = 0.05;
  int min_side = 4, max_side = 7;
};

struct EvalConfig {
  metrics::MetricConfig metrics;
  QuantizeMode quantize = QuantizeMode::binary;
  double threshold = 0.5;
};

struct AppConfig {
  DatasetConfig dataset;
  LiftSpec lift;
  std::uint64_t model_seed = 0;
  nn::ScoreNetXConfig model_x;
  nn::ScoreNetAConfig model_a;
  nn::ScoreNetFConfig model_f;
  std::array<SdeSpec, 3> sde;
  SamplerConfig sampler;
  nn::TrainConfig train;
  EvalConfig eval;
};

namespace detail {

class Reader {
 public:
  explicit Reader(const KeyTree& tree) : tree_(tree) {}

  template <typename T>
  T required(const std::string& key) {
    const auto v = tree_.get<T>(key);
    if (!v) {
      missing_.push_back(key);
      return T{};
    }
    return *v;
  }
  template <typename T>
  T fallback(const std::string& key, T def) {
    const auto v = tree_.get<T>(key);
    return v ? *v : def;
  }

  const std::vector<std::string>& missing() const { return missing_; }

 private:
  const KeyTree& tree_;
  std::vector<std::string> missing_;
};

inline SdeSpec read_sde(Reader& r, const std::string& prefix) {
  SdeSpec s;
  const std::string kind = r.required<std::string>(prefix + ".kind");
  if (kind == "VP")
    s.kind = SdeSpec::Kind::VP;
  else if (kind == "VE")
    s.kind = SdeSpec::Kind::VE;
  else if (kind == "subVP")
    s.kind = SdeSpec::Kind::subVP;
  else if (!kind.empty())
    throw std::invalid_argument("unknown SDE kind '" + kind + "' for " + prefix);
  if (s.kind == SdeSpec::Kind::VE) {
    s.sigma_min = r.required<double>(prefix + ".sigma_min");
    s.sigma_max = r.required<double>(prefix + ".sigma_max");
  } else {
    s.beta_min = r.required<double>(prefix + ".beta_min");
    s.beta_max = r.required<double>(prefix + ".beta_max");
  }
  s.num_steps = static_cast<int>(r.fallback<std::int64_t>(prefix + ".num_steps", 1000));
  return s;
}

}  // namespace detail

/// Build the typed config, reporting every missing required key at once.
inline AppConfig load_config(const KeyTree& tree) {
  detail::Reader r(tree);
  AppConfig cfg;

  cfg.dataset.name = r.required<std::string>("dataset.name");
  cfg.dataset.count = static_cast<int>(r.fallback<std::int64_t>("dataset.count", 100));
  cfg.dataset.seed = static_cast<std::uint64_t>(r.required<std::int64_t>("dataset.seed"));
  cfg.dataset.min_n = static_cast<int>(r.fallback<std::int64_t>("dataset.min_n", 12));
  cfg.dataset.max_n = static_cast<int>(r.required<std::int64_t>("dataset.max_n"));
  cfg.dataset.max_feat = static_cast<int>(r.required<std::int64_t>("dataset.max_feat"));
  cfg.dataset.train_fraction = r.fallback<double>("dataset.train_fraction", 0.8);
  cfg.dataset.p_intra = r.fallback<double>("dataset.p_intra", 0.7);
  cfg.dataset.p_inter = r.fallback<double>("dataset.p_inter", 0.05);
  cfg.dataset.min_side = static_cast<int>(r.fallback<std::int64_t>("dataset.min_side", 4));
  cfg.dataset.max_side = static_cast<int>(r.fallback<std::int64_t>("dataset.max_side", 7));
  if (cfg.dataset.name == "file") cfg.dataset.file = r.required<std::string>("dataset.file");

  const std::string method = r.required<std::string>("lift.method");
  if (method == "ring")
    cfg.lift.method = LiftMethod::ring;
  else if (method == "path")
    cfg.lift.method = LiftMethod::path;
  else if (!method.empty())
    throw std::invalid_argument("unknown lift method '" + method + "'");
  cfg.lift.path_length = static_cast<int>(r.fallback<std::int64_t>("lift.k", 3));
  cfg.lift.constraints.d_min = static_cast<int>(r.required<std::int64_t>("lift.d_min"));
  cfg.lift.constraints.d_max = static_cast<int>(r.required<std::int64_t>("lift.d_max"));
  if (const auto src = tree.get<std::vector<double>>("lift.sources"))
    for (double s : *src) cfg.lift.source_nodes.push_back(static_cast<int>(s));

  cfg.model_seed = static_cast<std::uint64_t>(r.fallback<std::int64_t>("model.seed", 0));
  cfg.model_x.num_layers = static_cast<int>(r.required<std::int64_t>("model.x.num_layers"));
  cfg.model_x.hidden = r.required<std::int64_t>("model.x.hidden");
  cfg.model_x.final_mlp_layers =
      static_cast<int>(r.fallback<std::int64_t>("model.x.final_mlp_layers", 3));

  cfg.model_a.num_heads = static_cast<int>(r.required<std::int64_t>("model.a.heads"));
  cfg.model_a.c_init = static_cast<int>(r.required<std::int64_t>("model.a.c_init"));
  cfg.model_a.c_hid = static_cast<int>(r.required<std::int64_t>("model.a.c_hid"));
  cfg.model_a.c_final = static_cast<int>(r.required<std::int64_t>("model.a.c_final"));
  cfg.model_a.num_blocks = static_cast<int>(r.required<std::int64_t>("model.a.num_blocks"));
  cfg.model_a.mlp_layers = static_cast<int>(r.fallback<std::int64_t>("model.a.mlp_layers", 2));
  cfg.model_a.hidden = r.required<std::int64_t>("model.a.hidden");
  cfg.model_a.baseline = r.fallback<bool>("model.a.baseline", false);
  cfg.model_a.hodge_blocks = static_cast<int>(r.required<std::int64_t>("model.a.hodge_blocks"));
  cfg.model_a.hodge_heads =
      static_cast<int>(r.fallback<std::int64_t>("model.a.hodge_heads", 2));
  cfg.model_a.hodge_attn_dim = r.fallback<std::int64_t>("model.a.hodge_attn_dim", 4);
  cfg.model_a.hodge_c_hid = static_cast<int>(r.fallback<std::int64_t>("model.a.hodge_c_hid", 2));
  cfg.model_a.hodge_c_final =
      static_cast<int>(r.fallback<std::int64_t>("model.a.hodge_c_final", 2));
  cfg.model_a.hodge_mlp_layers =
      static_cast<int>(r.fallback<std::int64_t>("model.a.hodge_mlp_layers", 1));
  cfg.model_a.hodge_mlp_hidden = r.fallback<std::int64_t>("model.a.hodge_mlp_hidden", 4);
  cfg.model_a.final_mlp_layers =
      static_cast<int>(r.fallback<std::int64_t>("model.a.final_mlp_layers", 2));

  cfg.model_f.power = static_cast<int>(r.required<std::int64_t>("model.f.power"));
  cfg.model_f.num_blocks = static_cast<int>(r.fallback<std::int64_t>("model.f.num_blocks", 2));
  cfg.model_f.hidden_channels =
      static_cast<int>(r.fallback<std::int64_t>("model.f.hidden_channels", 8));
  cfg.model_f.mlp_layers = static_cast<int>(r.required<std::int64_t>("model.f.mlp_layers"));
  cfg.model_f.final_mlp_layers =
      static_cast<int>(r.fallback<std::int64_t>("model.f.final_mlp_layers", 1));
  cfg.model_f.apply_mask = r.required<bool>("model.f.apply_hodge_mask");

  cfg.sde[0] = detail::read_sde(r, "sde.x");
  cfg.sde[1] = detail::read_sde(r, "sde.a");
  cfg.sde[2] = detail::read_sde(r, "sde.f");

  const std::string pred = r.required<std::string>("sampler.predictor");
  if (pred == "euler_maruyama")
    cfg.sampler.predictor = Predictor::euler_maruyama;
  else if (pred == "reverse_diffusion")
    cfg.sampler.predictor = Predictor::reverse_diffusion;
  else if (pred == "ode_flow")
    cfg.sampler.predictor = Predictor::ode_flow;
  else if (!pred.empty())
    throw std::invalid_argument("unknown predictor '" + pred + "'");
  const std::string corr = r.required<std::string>("sampler.corrector");
  if (corr == "none")
    cfg.sampler.corrector = Corrector::none;
  else if (corr == "langevin")
    cfg.sampler.corrector = Corrector::langevin;
  else if (!corr.empty())
    throw std::invalid_argument("unknown corrector '" + corr + "'");
  cfg.sampler.snr = r.required<double>("sampler.snr");
  cfg.sampler.scale_coeff = r.required<double>("sampler.scale_coeff");
  cfg.sampler.num_steps = static_cast<int>(r.required<std::int64_t>("sampler.num_steps"));
  cfg.sampler.seed = static_cast<std::uint64_t>(r.required<std::int64_t>("sampler.seed"));
  double eps_default = 0.0;
  for (const auto& s : cfg.sde) eps_default = std::max(eps_default, s.recommended_eps());
  cfg.sampler.eps_final = r.fallback<double>("sampler.eps_final", eps_default);

  cfg.train.lr = r.required<double>("train.lr");
  cfg.train.weight_decay = r.required<double>("train.weight_decay");
  cfg.train.batch_size = static_cast<int>(r.required<std::int64_t>("train.batch_size"));
  cfg.train.epochs = static_cast<int>(r.required<std::int64_t>("train.epochs"));
  cfg.train.ema_decay = r.fallback<double>("train.ema", 0.0);
  cfg.train.gamma_x = r.fallback<double>("train.gamma_x", 0.0);
  cfg.train.gamma_a = r.fallback<double>("train.gamma_a", 0.0);
  cfg.train.gamma_f = r.fallback<double>("train.gamma_f", 0.0);
  cfg.train.seed = static_cast<std::uint64_t>(r.required<std::int64_t>("train.seed"));
  cfg.train.eval_interval =
      static_cast<int>(r.fallback<std::int64_t>("train.eval_interval", 5));
  cfg.train.parallel_models = r.fallback<bool>("train.parallel_models", true);

  cfg.eval.metrics.sigma_degree = r.fallback<double>("eval.sigma_degree", 1.0);
  cfg.eval.metrics.sigma_cluster = r.fallback<double>("eval.sigma_cluster", 1.0);
  cfg.eval.metrics.sigma_orbit = r.fallback<double>("eval.sigma_orbit", 1.0);
  cfg.eval.metrics.sigma_rank2 = r.fallback<double>("eval.sigma_rank2", 1.0);
  cfg.eval.metrics.sigma_spectrum = r.fallback<double>("eval.sigma_spectrum", 1.0);
  cfg.eval.metrics.cluster_bins =
      static_cast<int>(r.fallback<std::int64_t>("eval.cluster_bins", 100));
  const std::string q = r.fallback<std::string>("eval.quantize", "binary");
  if (q == "binary")
    cfg.eval.quantize = QuantizeMode::binary;
  else if (q == "bond")
    cfg.eval.quantize = QuantizeMode::bond;
  else
    throw std::invalid_argument("unknown quantize mode '" + q + "'");
  cfg.eval.threshold = r.fallback<double>("eval.threshold", 0.5);

  if (!r.missing().empty()) {
    std::string msg = "config is missing required keys:";
    for (const auto& k : r.missing()) msg += "\n  - " + k;
    throw std::invalid_argument(msg);
  }
  return cfg;
}

/// Stable hash of the settings a checkpoint depends on, used to refuse
/// incompatible checkpoint/config pairs.
inline std::uint64_t spec_hash(const AppConfig& cfg) {
  std::ostringstream os;
  os << cfg.dataset.max_n << '|' << cfg.dataset.max_feat << '|' << cfg.lift.constraints.d_min
     << '|' << cfg.lift.constraints.d_max << '|' << cfg.model_x.num_layers << '|'
     << cfg.model_x.hidden << '|' << cfg.model_x.final_mlp_layers << '|'
     << cfg.model_a.num_heads << '|' << cfg.model_a.c_init << '|' << cfg.model_a.c_hid << '|'
     << cfg.model_a.c_final << '|' << cfg.model_a.num_blocks << '|' << cfg.model_a.mlp_layers
     << '|' << cfg.model_a.hidden << '|' << cfg.model_a.baseline << '|'
     << cfg.model_a.hodge_blocks << '|' << cfg.model_a.hodge_heads << '|'
     << cfg.model_a.hodge_attn_dim << '|' << cfg.model_a.hodge_c_hid << '|'
     << cfg.model_a.hodge_c_final << '|' << cfg.model_a.hodge_mlp_layers << '|'
     << cfg.model_a.hodge_mlp_hidden << '|' << cfg.model_a.final_mlp_layers << '|'
     << cfg.model_f.power << '|' << cfg.model_f.num_blocks << '|'
     << cfg.model_f.hidden_channels << '|' << cfg.model_f.mlp_layers << '|'
     << cfg.model_f.final_mlp_layers << '|' << cfg.model_f.apply_mask;
  for (const auto& s : cfg.sde)
    os << '|' << static_cast<int>(s.kind) << ',' << s.beta_min << ',' << s.beta_max << ','
       << s.sigma_min << ',' << s.sigma_max;
  return fnv1a(os.str());
}

}  // namespace ccsd::cfg
