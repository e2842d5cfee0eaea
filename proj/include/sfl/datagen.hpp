#pragma once
// Synthetic data: shard-partitioned non-IID classification pools and
// graph-correlated traffic-style series with sliding-window datasets.

#include "sfl/graph.hpp"
#include "sfl/models.hpp"
#include "sfl/numerics.hpp"

namespace sfl {

struct DataPool {
  Task task = Task::classification;
  DenseMatrix inputs;       // classification: M x dim
  std::vector<int> labels;  // classification
  DenseMatrix series;       // traffic: n_nodes x t_len
};

struct ClientDataset {
  int client_id = 0;
  Batch train, val, test;
  Normalization norm;       // identity for classification
  std::size_t size = 0;     // |D_i|: number of training samples
};

struct SensorField {
  DenseMatrix coords;    // N x 2, unit square
  DenseMatrix distance;  // N x N, symmetric, zero diagonal
};

// Gaussian class clusters: one unit-scale mean per class, isotropic
// spread, balanced labels.
DataPool gen_classification(std::size_t n_classes, std::size_t dim,
                            std::size_t samples_per_class,
                            double cluster_spread, RngStream& stream);

// Label-sorted pool cut into n_clients*k_shards equal contiguous shards,
// k per client via a random shard permutation; per-client stratified
// 70/20/10 split.
std::vector<ClientDataset> shard_partition(const DataPool& pool,
                                           std::size_t n_clients,
                                           std::size_t k_shards,
                                           RngStream& stream);

SensorField gen_sensor_field(std::size_t n_nodes, RngStream& stream);

struct SeriesParams {
  double ar_coeff = 0.5;       // weight on own previous value
  double coupling = 0.3;       // weight on row-normalized neighbor mean
  double season_period = 24.0;
  double season_amp = 1.0;     // global scale on per-node amplitudes
  double noise = 0.1;          // std of the innovation
};

// x_i(t+1) = ar x_i(t) + coupling sum_j P_ij x_j(t) + s_i sin(2 pi t / T) + eps
DataPool gen_traffic_series(const SensorField& field, const ClientGraph& graph,
                            std::size_t t_len, const SeriesParams& params,
                            RngStream& stream);

// Sliding windows per node (= per client), chronological 70/20/10 split,
// z-score fit on train inputs and applied everywhere.
std::vector<ClientDataset> windowize(const DataPool& pool, std::size_t window,
                                     std::size_t horizon,
                                     double train_ratio = 0.7,
                                     double val_ratio = 0.2);

// Self-describing text table dump of a pool (header line + rows).
void export_pool(const DataPool& pool, const std::string& path);

}  // namespace sfl
