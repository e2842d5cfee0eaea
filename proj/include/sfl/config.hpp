#pragma once
// Experiment configuration: flat `key = value` text files with dotted
// key names, documented defaults, and field-level validation.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sfl {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class StrategyKind { local_only, fedavg, fedprox, sfl, sfl_star };
enum class GraphKind { auto_default, none, complete, blocks, gaussian };

StrategyKind strategy_from_string(const std::string& s);
std::string to_string(StrategyKind k);

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t root_seed = 42;
  std::string task = "classification";  // classification | traffic
  std::size_t n_clients = 20;
  std::size_t rounds = 20;      // T
  std::size_t batch_size = 128;
  std::size_t threads = 1;
  std::string output_dir;       // default from SFLSIM_OUTPUT_DIR or ./out

  struct {
    StrategyKind kind = StrategyKind::fedavg;
    double lambda0 = 0.1;
    double mu_prox = 0.1;
    double eta = 0.05;
    std::size_t s_local_steps = 5;
    std::size_t m_gcn_steps = 2;
    double gamma = 0.2;          // top_k = max(1, round(gamma * N))
    double tau = 1.0;
    std::size_t structure_every = 1;
    int init_local_from_global = -1;  // -1 auto, 0 false, 1 true
  } strategy;

  struct {
    std::size_t hidden_dim = 0;
  } model;

  GraphKind graph_kind = GraphKind::auto_default;

  struct {
    // classification
    std::size_t n_classes = 10;
    std::size_t input_dim = 8;
    std::size_t samples_per_class = 100;
    double cluster_spread = 1.0;
    std::size_t shards_k = 2;
    std::size_t n_blocks = 1;
    // traffic
    std::size_t t_len = 300;
    double noise = 0.1;
    std::size_t window = 12;
    std::size_t horizon = 3;
    double sigma = 0.5;
    double threshold = 0.1;
    double season_period = 24.0;
    double season_amp = 1.0;
    double ar_coeff = 0.5;
    double coupling = 0.3;
    std::string export_pool_path;  // empty = no dump
  } data;

  // Resolved init_local_from_global (auto: true for fedavg/fedprox,
  // false for the personalized strategies).
  bool init_from_global() const;
  // Effective graph kind (auto: complete for classification unless
  // n_blocks > 1, gaussian for traffic).
  GraphKind effective_graph_kind() const;
  std::size_t top_k() const;

  // Throws ConfigError naming the offending field.
  void validate() const;
  // Ordered (key, value) echo of every field.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

// Parses a config file. Unknown keys are rejected with the nearest
// valid key named in the message.
ExperimentConfig parse_config(const std::string& path);

// Applies `key=value` override strings on top of a parsed config.
void apply_overrides(ExperimentConfig& cfg,
                     const std::vector<std::string>& overrides);

// Sets one field by its config key. Throws ConfigError on unknown key
// or malformed value.
void set_config_key(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value);

}  // namespace sfl
