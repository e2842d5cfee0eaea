#pragma once
// Federated round engine: proximal client updates, strategy-dispatched
// aggregation, the lambda warm-up, and optional structure learning.

#include "sfl/config.hpp"
#include "sfl/datagen.hpp"
#include "sfl/graph.hpp"
#include "sfl/metrics.hpp"
#include "sfl/models.hpp"

namespace sfl {

struct FederationState {
  std::size_t t = 0;
  ModelSpec spec;
  ParamVector w;                      // global model
  std::vector<ParamVector> v;         // persistent local models
  std::vector<ParamVector> u;         // graph-smoothed personalized models
  ClientGraph graph;
  std::vector<ClientDataset> clients;
};

struct RoundRecord {
  std::size_t round = 0;  // 0 = initial evaluation, before any update
  double lambda = 0.0;
  double wall_ms = 0.0;
  std::vector<double> train_loss;     // per client; empty at round 0
  std::vector<TaskMetrics> val;       // per client, serving model
  std::vector<TaskMetrics> test;
};

struct ExperimentResult {
  std::vector<RoundRecord> records;
  ClientGraph graph_initial;
  ClientGraph graph_final;
  std::uint64_t dataset_hash = 0;
  Task task = Task::classification;
  std::vector<std::pair<std::string, std::string>> config_echo;
  double total_wall_ms = 0.0;
};

// lambda = 1[t > 0] * lambda0 (round-0 warm-up).
double effective_lambda(std::size_t t, double lambda0);

struct ClientUpdateResult {
  ParamVector v;
  double mean_train_loss = 0.0;
};

// s_local_steps mini-batch proximal steps. Mini-batches come from a
// per-(client, round) permutation of the train split, consumed
// cyclically. Anchor weights by strategy: sfl/sfl_star use lambda on
// both (w, u); fedprox uses mu_prox on w only; fedavg/local_only none.
ClientUpdateResult client_update(const ClientDataset& client,
                                 const ParamVector& v, const ParamVector& w,
                                 const ParamVector& u,
                                 const ExperimentConfig& cfg, double lambda,
                                 RngStream& stream);

// Size-weighted mean of client models (FedAvg weighting).
ParamVector aggregate_fedavg(const std::vector<ParamVector>& v_list,
                             const std::vector<std::size_t>& sizes);

// u <- P^m stacked(v); w <- readout(u, sizes).
std::pair<std::vector<ParamVector>, ParamVector> aggregate_sfl(
    const FederationState& state, const ExperimentConfig& cfg);

RoundRecord run_round(FederationState& state, const ExperimentConfig& cfg);

// Builds data + graph + shared-init models from the config (no rounds run).
FederationState build_federation(const ExperimentConfig& cfg);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Fingerprint of all client datasets, strategy-independent by design.
std::uint64_t dataset_fingerprint(const std::vector<ClientDataset>& clients);

}  // namespace sfl
