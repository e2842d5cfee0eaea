#pragma once
// Shared test helpers: config builders and the independent FedAvg
// oracle used for trajectory equivalence checks.

#include <vector>

#include "sfl/config.hpp"
#include "sfl/flcore.hpp"

namespace sfl::testing {

inline ExperimentConfig small_classification_config() {
  ExperimentConfig cfg;
  cfg.task = "classification";
  cfg.n_clients = 4;
  cfg.rounds = 3;
  cfg.batch_size = 16;
  cfg.data.n_classes = 4;
  cfg.data.input_dim = 4;
  cfg.data.samples_per_class = 40;
  cfg.data.cluster_spread = 0.8;
  cfg.data.shards_k = 2;
  cfg.strategy.kind = StrategyKind::fedavg;
  cfg.strategy.eta = 0.1;
  cfg.strategy.s_local_steps = 3;
  return cfg;
}

inline ExperimentConfig small_traffic_config() {
  ExperimentConfig cfg;
  cfg.task = "traffic";
  cfg.n_clients = 6;
  cfg.rounds = 3;
  cfg.batch_size = 32;
  cfg.data.t_len = 240;
  cfg.data.window = 12;
  cfg.data.horizon = 2;
  cfg.strategy.kind = StrategyKind::sfl;
  return cfg;
}

// Minimal self-contained FedAvg: broadcast w, run s plain SGD steps per
// client on the same mini-batch schedule, then size-weighted average.
// Everything below is straight-line loops, independent of the engine's
// aggregation and update plumbing (the model gradient is shared).
struct FedAvgOracle {
  std::vector<ParamVector> run_w_trajectory(const ExperimentConfig& cfg) {
    FederationState state = build_federation(cfg);
    std::vector<ParamVector> trajectory;
    ParamVector w = state.w;
    for (std::size_t t = 0; t < cfg.rounds; ++t) {
      std::vector<ParamVector> locals(cfg.n_clients);
      for (std::size_t i = 0; i < cfg.n_clients; ++i) {
        Model m{state.spec, w};
        RngStream stream(cfg.root_seed, "batch", i, t);
        const auto perm = stream.permutation(state.clients[i].train.size());
        const std::size_t n = state.clients[i].train.size();
        const std::size_t bsz = cfg.batch_size < n ? cfg.batch_size : n;
        for (std::size_t step = 0; step < cfg.strategy.s_local_steps; ++step) {
          Batch batch;
          batch.inputs = DenseMatrix(bsz, state.clients[i].train.inputs.cols);
          batch.labels.resize(bsz);
          for (std::size_t r = 0; r < bsz; ++r) {
            const std::size_t idx = perm[(step * bsz + r) % n];
            for (std::size_t c = 0; c < batch.inputs.cols; ++c)
              batch.inputs.at(r, c) = state.clients[i].train.inputs.at(idx, c);
            batch.labels[r] = state.clients[i].train.labels[idx];
          }
          const ParamVector g = grad(m, batch);
          for (std::size_t j = 0; j < m.params.size(); ++j)
            m.params[j] = m.params[j] - cfg.strategy.eta * (g[j] + 0.0);
        }
        locals[i] = m.params;
      }
      ParamVector next(w.size(), 0.0);
      double wsum = 0.0;
      for (std::size_t i = 0; i < cfg.n_clients; ++i)
        wsum += double(state.clients[i].size);
      for (std::size_t i = 0; i < cfg.n_clients; ++i) {
        const double wi = double(state.clients[i].size);
        for (std::size_t j = 0; j < w.size(); ++j)
          next[j] += wi * locals[i][j];
      }
      for (double& v : next) v /= wsum;
      w = next;
      trajectory.push_back(w);
    }
    return trajectory;
  }
};

// w trajectory of the engine for comparison.
inline std::vector<ParamVector> engine_w_trajectory(const ExperimentConfig& cfg) {
  FederationState state = build_federation(cfg);
  std::vector<ParamVector> trajectory;
  for (std::size_t t = 0; t < cfg.rounds; ++t) {
    run_round(state, cfg);
    trajectory.push_back(state.w);
  }
  return trajectory;
}

}  // namespace sfl::testing
