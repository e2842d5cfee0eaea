#include "sfl/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace sfl {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out;
  in >> out;
  if (!in || !(in >> std::ws).eof())
    throw ConfigError(key + ": cannot parse value '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"name", [](auto& c, const auto& v) { c.name = v; }},
      {"root_seed",
       [](auto& c, const auto& v) {
         c.root_seed = parse_number<std::uint64_t>("root_seed", v);
       }},
      {"task",
       [](auto& c, const auto& v) {
         if (v != "classification" && v != "traffic")
           throw ConfigError("task: must be classification or traffic");
         c.task = v;
       }},
      {"n_clients",
       [](auto& c, const auto& v) {
         c.n_clients = parse_number<std::size_t>("n_clients", v);
       }},
      {"rounds",
       [](auto& c, const auto& v) {
         c.rounds = parse_number<std::size_t>("rounds", v);
       }},
      {"batch_size",
       [](auto& c, const auto& v) {
         c.batch_size = parse_number<std::size_t>("batch_size", v);
       }},
      {"threads",
       [](auto& c, const auto& v) {
         c.threads = parse_number<std::size_t>("threads", v);
       }},
      {"output_dir", [](auto& c, const auto& v) { c.output_dir = v; }},
      {"strategy.kind",
       [](auto& c, const auto& v) { c.strategy.kind = strategy_from_string(v); }},
      {"strategy.lambda0",
       [](auto& c, const auto& v) {
         c.strategy.lambda0 = parse_number<double>("strategy.lambda0", v);
       }},
      {"strategy.mu_prox",
       [](auto& c, const auto& v) {
         c.strategy.mu_prox = parse_number<double>("strategy.mu_prox", v);
       }},
      {"strategy.eta",
       [](auto& c, const auto& v) {
         c.strategy.eta = parse_number<double>("strategy.eta", v);
       }},
      {"strategy.s_local_steps",
       [](auto& c, const auto& v) {
         c.strategy.s_local_steps =
             parse_number<std::size_t>("strategy.s_local_steps", v);
       }},
      {"strategy.m_gcn_steps",
       [](auto& c, const auto& v) {
         c.strategy.m_gcn_steps =
             parse_number<std::size_t>("strategy.m_gcn_steps", v);
       }},
      {"strategy.gamma",
       [](auto& c, const auto& v) {
         c.strategy.gamma = parse_number<double>("strategy.gamma", v);
       }},
      {"strategy.tau",
       [](auto& c, const auto& v) {
         c.strategy.tau = parse_number<double>("strategy.tau", v);
       }},
      {"strategy.structure_every",
       [](auto& c, const auto& v) {
         c.strategy.structure_every =
             parse_number<std::size_t>("strategy.structure_every", v);
       }},
      {"strategy.init_local_from_global",
       [](auto& c, const auto& v) {
         c.strategy.init_local_from_global =
             parse_bool("strategy.init_local_from_global", v) ? 1 : 0;
       }},
      {"model.hidden_dim",
       [](auto& c, const auto& v) {
         c.model.hidden_dim = parse_number<std::size_t>("model.hidden_dim", v);
       }},
      {"graph.kind",
       [](auto& c, const auto& v) {
         if (v == "auto")
           c.graph_kind = GraphKind::auto_default;
         else if (v == "none")
           c.graph_kind = GraphKind::none;
         else if (v == "complete")
           c.graph_kind = GraphKind::complete;
         else if (v == "blocks")
           c.graph_kind = GraphKind::blocks;
         else if (v == "gaussian")
           c.graph_kind = GraphKind::gaussian;
         else
           throw ConfigError("graph.kind: must be auto|none|complete|blocks|gaussian");
       }},
      {"data.n_classes",
       [](auto& c, const auto& v) {
         c.data.n_classes = parse_number<std::size_t>("data.n_classes", v);
       }},
      {"data.input_dim",
       [](auto& c, const auto& v) {
         c.data.input_dim = parse_number<std::size_t>("data.input_dim", v);
       }},
      {"data.samples_per_class",
       [](auto& c, const auto& v) {
         c.data.samples_per_class =
             parse_number<std::size_t>("data.samples_per_class", v);
       }},
      {"data.cluster_spread",
       [](auto& c, const auto& v) {
         c.data.cluster_spread = parse_number<double>("data.cluster_spread", v);
       }},
      {"data.shards_k",
       [](auto& c, const auto& v) {
         c.data.shards_k = parse_number<std::size_t>("data.shards_k", v);
       }},
      {"data.n_blocks",
       [](auto& c, const auto& v) {
         c.data.n_blocks = parse_number<std::size_t>("data.n_blocks", v);
       }},
      {"data.t_len",
       [](auto& c, const auto& v) {
         c.data.t_len = parse_number<std::size_t>("data.t_len", v);
       }},
      {"data.noise",
       [](auto& c, const auto& v) {
         c.data.noise = parse_number<double>("data.noise", v);
       }},
      {"data.window",
       [](auto& c, const auto& v) {
         c.data.window = parse_number<std::size_t>("data.window", v);
       }},
      {"data.horizon",
       [](auto& c, const auto& v) {
         c.data.horizon = parse_number<std::size_t>("data.horizon", v);
       }},
      {"data.sigma",
       [](auto& c, const auto& v) {
         c.data.sigma = parse_number<double>("data.sigma", v);
       }},
      {"data.threshold",
       [](auto& c, const auto& v) {
         c.data.threshold = parse_number<double>("data.threshold", v);
       }},
      {"data.season_period",
       [](auto& c, const auto& v) {
         c.data.season_period = parse_number<double>("data.season_period", v);
       }},
      {"data.season_amp",
       [](auto& c, const auto& v) {
         c.data.season_amp = parse_number<double>("data.season_amp", v);
       }},
      {"data.ar_coeff",
       [](auto& c, const auto& v) {
         c.data.ar_coeff = parse_number<double>("data.ar_coeff", v);
       }},
      {"data.coupling",
       [](auto& c, const auto& v) {
         c.data.coupling = parse_number<double>("data.coupling", v);
       }},
      {"data.export_pool_path",
       [](auto& c, const auto& v) { c.data.export_pool_path = v; }},
  };
  return table;
}

}  // namespace

StrategyKind strategy_from_string(const std::string& s) {
  if (s == "local_only") return StrategyKind::local_only;
  if (s == "fedavg") return StrategyKind::fedavg;
  if (s == "fedprox") return StrategyKind::fedprox;
  if (s == "sfl") return StrategyKind::sfl;
  if (s == "sfl_star") return StrategyKind::sfl_star;
  throw ConfigError(
      "strategy.kind: must be local_only|fedavg|fedprox|sfl|sfl_star, got '" +
      s + "'");
}

std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::local_only: return "local_only";
    case StrategyKind::fedavg: return "fedavg";
    case StrategyKind::fedprox: return "fedprox";
    case StrategyKind::sfl: return "sfl";
    case StrategyKind::sfl_star: return "sfl_star";
  }
  return "?";
}

bool ExperimentConfig::init_from_global() const {
  if (strategy.init_local_from_global >= 0)
    return strategy.init_local_from_global == 1;
  return strategy.kind == StrategyKind::fedavg ||
         strategy.kind == StrategyKind::fedprox;
}

GraphKind ExperimentConfig::effective_graph_kind() const {
  if (graph_kind != GraphKind::auto_default) return graph_kind;
  if (task == "traffic") return GraphKind::gaussian;
  return data.n_blocks > 1 ? GraphKind::blocks : GraphKind::complete;
}

std::size_t ExperimentConfig::top_k() const {
  const auto k = static_cast<std::size_t>(
      std::llround(strategy.gamma * static_cast<double>(n_clients)));
  return std::max<std::size_t>(1, std::min(k, n_clients - 1));
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(n_clients >= 1, "n_clients: must be >= 1");
  require(batch_size >= 1, "batch_size: must be >= 1");
  require(threads >= 1, "threads: must be >= 1");
  require(strategy.eta >= 0.0, "strategy.eta: must be >= 0");
  require(strategy.lambda0 >= 0.0, "strategy.lambda0: must be >= 0");
  require(strategy.mu_prox >= 0.0, "strategy.mu_prox: must be >= 0");
  require(strategy.s_local_steps >= 1, "strategy.s_local_steps: must be >= 1");
  require(strategy.structure_every >= 1, "strategy.structure_every: must be >= 1");
  require(strategy.gamma > 0.0 && strategy.gamma <= 1.0,
          "strategy.gamma: must be in (0, 1]");
  require(strategy.tau > 0.0, "strategy.tau: must be > 0");
  if (strategy.kind == StrategyKind::sfl_star)
    require(n_clients >= 2, "n_clients: sfl_star needs >= 2 clients");
  require(task == "classification" || task == "traffic",
          "task: must be classification or traffic");
  if (task == "classification") {
    require(data.n_classes >= 2, "data.n_classes: must be >= 2");
    require(data.input_dim >= 2, "data.input_dim: must be >= 2");
    require(data.samples_per_class >= 1, "data.samples_per_class: must be >= 1");
    require(data.shards_k >= 1, "data.shards_k: must be >= 1");
    require(data.cluster_spread >= 0.0, "data.cluster_spread: must be >= 0");
    require(data.n_blocks >= 1, "data.n_blocks: must be >= 1");
    require(n_clients % data.n_blocks == 0,
            "data.n_blocks: must divide n_clients");
    require(data.n_classes % data.n_blocks == 0,
            "data.n_blocks: must divide data.n_classes");
    const std::size_t per_block_pool =
        (data.n_classes / data.n_blocks) * data.samples_per_class;
    const std::size_t per_block_shards =
        (n_clients / data.n_blocks) * data.shards_k;
    require(per_block_pool % per_block_shards == 0,
            "data.samples_per_class: per-block pool size (" +
                std::to_string(per_block_pool) +
                ") must be divisible by clients_per_block*shards_k (" +
                std::to_string(per_block_shards) + ")");
  } else {
    require(data.t_len >= 200, "data.t_len: must be >= 200");
    require(data.window >= 1, "data.window: must be >= 1");
    require(data.horizon >= 1, "data.horizon: must be >= 1");
    require(data.t_len > data.window + data.horizon,
            "data.t_len: must exceed window + horizon");
    require(data.sigma > 0.0, "data.sigma: must be > 0");
    require(data.threshold >= 0.0 && data.threshold < 1.0,
            "data.threshold: must be in [0, 1)");
    require(data.noise >= 0.0, "data.noise: must be >= 0");
    require(data.season_period > 0.0, "data.season_period: must be > 0");
    require(n_clients >= 2, "n_clients: traffic task needs >= 2 nodes");
  }
  if (effective_graph_kind() == GraphKind::blocks)
    require(data.n_blocks >= 1 && n_clients % data.n_blocks == 0,
            "data.n_blocks: must divide n_clients");
  if (strategy.kind == StrategyKind::sfl)
    require(effective_graph_kind() != GraphKind::gaussian || task == "traffic",
            "graph.kind: gaussian graphs need the traffic task");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  auto num = [](auto v) { return std::to_string(v); };
  auto real = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
  };
  std::string gk;
  switch (effective_graph_kind()) {
    case GraphKind::none: gk = "none"; break;
    case GraphKind::complete: gk = "complete"; break;
    case GraphKind::blocks: gk = "blocks"; break;
    case GraphKind::gaussian: gk = "gaussian"; break;
    case GraphKind::auto_default: gk = "auto"; break;
  }
  std::vector<std::pair<std::string, std::string>> kv = {
      {"name", name},
      {"root_seed", num(root_seed)},
      {"task", task},
      {"n_clients", num(n_clients)},
      {"rounds", num(rounds)},
      {"batch_size", num(batch_size)},
      {"threads", num(threads)},
      {"output_dir", output_dir},
      {"strategy.kind", to_string(strategy.kind)},
      {"strategy.lambda0", real(strategy.lambda0)},
      {"strategy.mu_prox", real(strategy.mu_prox)},
      {"strategy.eta", real(strategy.eta)},
      {"strategy.s_local_steps", num(strategy.s_local_steps)},
      {"strategy.m_gcn_steps", num(strategy.m_gcn_steps)},
      {"strategy.gamma", real(strategy.gamma)},
      {"strategy.tau", real(strategy.tau)},
      {"strategy.structure_every", num(strategy.structure_every)},
      {"strategy.init_local_from_global", init_from_global() ? "true" : "false"},
      {"model.hidden_dim", num(model.hidden_dim)},
      {"graph.kind", gk},
  };
  if (task == "classification") {
    kv.insert(kv.end(), {{"data.n_classes", num(data.n_classes)},
                         {"data.input_dim", num(data.input_dim)},
                         {"data.samples_per_class", num(data.samples_per_class)},
                         {"data.cluster_spread", real(data.cluster_spread)},
                         {"data.shards_k", num(data.shards_k)},
                         {"data.n_blocks", num(data.n_blocks)}});
  } else {
    kv.insert(kv.end(), {{"data.t_len", num(data.t_len)},
                         {"data.noise", real(data.noise)},
                         {"data.window", num(data.window)},
                         {"data.horizon", num(data.horizon)},
                         {"data.sigma", real(data.sigma)},
                         {"data.threshold", real(data.threshold)},
                         {"data.season_period", real(data.season_period)},
                         {"data.season_amp", real(data.season_amp)},
                         {"data.ar_coeff", real(data.ar_coeff)},
                         {"data.coupling", real(data.coupling)}});
  }
  return kv;
}

void set_config_key(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) {
    std::string nearest;
    std::size_t best = SIZE_MAX;
    for (const auto& [k, _] : table) {
      const std::size_t d = edit_distance(key, k);
      if (d < best) {
        best = d;
        nearest = k;
      }
    }
    throw ConfigError("unknown key '" + key + "' (nearest valid key: '" +
                      nearest + "')");
  }
  it->second(cfg, value);
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  ExperimentConfig cfg;
  if (const char* env = std::getenv("SFLSIM_OUTPUT_DIR")) cfg.output_dir = env;
  if (cfg.output_dir.empty()) cfg.output_dir = "out";

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    set_config_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void apply_overrides(ExperimentConfig& cfg,
                     const std::vector<std::string>& overrides) {
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override '" + ov + "': expected key=value");
    set_config_key(cfg, trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
  }
}

}  // namespace sfl
