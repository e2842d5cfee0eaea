#include "sfl/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace sfl {
namespace {

Batch gather_classification(const DataPool& pool,
                            const std::vector<std::size_t>& idx) {
  Batch b;
  b.inputs = DenseMatrix(idx.size(), pool.inputs.cols);
  b.labels.resize(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::copy(pool.inputs.row(idx[r]), pool.inputs.row(idx[r]) + pool.inputs.cols,
              b.inputs.row(r));
    b.labels[r] = pool.labels[idx[r]];
  }
  return b;
}

}  // namespace

DataPool gen_classification(std::size_t n_classes, std::size_t dim,
                            std::size_t samples_per_class,
                            double cluster_spread, RngStream& stream) {
  if (n_classes < 2 || dim < 2)
    throw std::invalid_argument("gen_classification: need n_classes >= 2, dim >= 2");
  DataPool pool;
  pool.task = Task::classification;
  const std::size_t m = n_classes * samples_per_class;
  pool.inputs = DenseMatrix(m, dim);
  pool.labels.resize(m);

  DenseMatrix means(n_classes, dim);
  for (double& v : means.values) v = stream.normal();

  std::size_t r = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t s = 0; s < samples_per_class; ++s, ++r) {
      pool.labels[r] = static_cast<int>(c);
      for (std::size_t d = 0; d < dim; ++d)
        pool.inputs.at(r, d) = means.at(c, d) + cluster_spread * stream.normal();
    }
  }
  return pool;
}

std::vector<ClientDataset> shard_partition(const DataPool& pool,
                                           std::size_t n_clients,
                                           std::size_t k_shards,
                                           RngStream& stream) {
  const std::size_t m = pool.labels.size();
  const std::size_t n_total_shards = n_clients * k_shards;
  if (n_total_shards == 0 || m % n_total_shards != 0)
    throw std::invalid_argument(
        "shard_partition: pool size must be divisible by n_clients*k_shards (" +
        std::to_string(m) + " % " + std::to_string(n_total_shards) + " != 0)");
  const std::size_t shard_size = m / n_total_shards;

  std::vector<std::size_t> by_label(m);
  for (std::size_t i = 0; i < m; ++i) by_label[i] = i;
  std::stable_sort(by_label.begin(), by_label.end(),
                   [&](std::size_t a, std::size_t b) {
                     return pool.labels[a] < pool.labels[b];
                   });

  const std::vector<std::size_t> shard_perm = stream.permutation(n_total_shards);

  std::vector<ClientDataset> out(n_clients);
  for (std::size_t c = 0; c < n_clients; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t s = 0; s < k_shards; ++s) {
      const std::size_t shard = shard_perm[c * k_shards + s];
      for (std::size_t j = 0; j < shard_size; ++j)
        idx.push_back(by_label[shard * shard_size + j]);
    }
    // stratified 70/20/10 per label
    std::vector<std::size_t> tr, va, te;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return pool.labels[a] < pool.labels[b];
    });
    std::size_t start = 0;
    while (start < idx.size()) {
      std::size_t end = start;
      while (end < idx.size() && pool.labels[idx[end]] == pool.labels[idx[start]])
        ++end;
      std::vector<std::size_t> group(idx.begin() + start, idx.begin() + end);
      const std::vector<std::size_t> perm = stream.permutation(group.size());
      const std::size_t g = group.size();
      const std::size_t n_tr = static_cast<std::size_t>(std::llround(0.7 * g));
      const std::size_t n_va = std::min(
          g - n_tr, static_cast<std::size_t>(std::llround(0.2 * g)));
      for (std::size_t j = 0; j < g; ++j) {
        const std::size_t p = group[perm[j]];
        if (j < n_tr)
          tr.push_back(p);
        else if (j < n_tr + n_va)
          va.push_back(p);
        else
          te.push_back(p);
      }
      start = end;
    }
    ClientDataset& ds = out[c];
    ds.client_id = static_cast<int>(c);
    ds.train = gather_classification(pool, tr);
    ds.val = gather_classification(pool, va);
    ds.test = gather_classification(pool, te);
    ds.size = tr.size();
  }
  return out;
}

SensorField gen_sensor_field(std::size_t n_nodes, RngStream& stream) {
  if (n_nodes < 2) throw std::invalid_argument("gen_sensor_field: need >= 2 nodes");
  SensorField f;
  f.coords = DenseMatrix(n_nodes, 2);
  for (double& v : f.coords.values) v = stream.uniform01();
  f.distance = DenseMatrix(n_nodes, n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    for (std::size_t j = i + 1; j < n_nodes; ++j) {
      const double dx = f.coords.at(i, 0) - f.coords.at(j, 0);
      const double dy = f.coords.at(i, 1) - f.coords.at(j, 1);
      const double d = std::sqrt(dx * dx + dy * dy);
      f.distance.at(i, j) = d;
      f.distance.at(j, i) = d;
    }
  }
  return f;
}

DataPool gen_traffic_series(const SensorField& field, const ClientGraph& graph,
                            std::size_t t_len, const SeriesParams& params,
                            RngStream& stream) {
  const std::size_t n = field.distance.rows;
  if (graph.n != n)
    throw std::invalid_argument("gen_traffic_series: graph/field size mismatch");

  // Row-normalized adjacency; isolated nodes get a zero row.
  DenseMatrix p = graph.adjacency;
  for (std::size_t i = 0; i < n; ++i) {
    double rowsum = 0.0;
    for (std::size_t j = 0; j < n; ++j) rowsum += p.at(i, j);
    if (rowsum > 0.0)
      for (std::size_t j = 0; j < n; ++j) p.at(i, j) /= rowsum;
  }

  std::vector<double> season_amp(n);
  for (double& a : season_amp) a = params.season_amp * (0.5 + stream.uniform01());

  DataPool pool;
  pool.task = Task::forecasting;
  pool.series = DenseMatrix(n, t_len);
  for (std::size_t i = 0; i < n; ++i) pool.series.at(i, 0) = stream.normal();

  for (std::size_t t = 0; t + 1 < t_len; ++t) {
    const double season =
        std::sin(2.0 * std::numbers::pi * static_cast<double>(t) /
                 params.season_period);
    for (std::size_t i = 0; i < n; ++i) {
      double neighbor = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        neighbor += p.at(i, j) * pool.series.at(j, t);
      pool.series.at(i, t + 1) = params.ar_coeff * pool.series.at(i, t) +
                                 params.coupling * neighbor +
                                 season_amp[i] * season +
                                 params.noise * stream.normal();
    }
  }
  return pool;
}

std::vector<ClientDataset> windowize(const DataPool& pool, std::size_t window,
                                     std::size_t horizon, double train_ratio,
                                     double val_ratio) {
  const std::size_t t_len = pool.series.cols;
  if (t_len <= window + horizon)
    throw std::invalid_argument("windowize: series too short for window+horizon");
  const std::size_t n_windows = t_len - window - horizon + 1;
  const std::size_t n = pool.series.rows;

  std::vector<ClientDataset> out(n);
  for (std::size_t node = 0; node < n; ++node) {
    const double* x = pool.series.row(node);
    std::size_t n_tr =
        static_cast<std::size_t>(std::llround(train_ratio * n_windows));
    n_tr = std::min(n_tr, n_windows);
    std::size_t n_va =
        static_cast<std::size_t>(std::llround(val_ratio * n_windows));
    n_va = std::min(n_va, n_windows - n_tr);
    const std::size_t n_te = n_windows - n_tr - n_va;

    // z-score on train inputs only, std floored at 1e-8
    // Stats over the train input matrix entries (overlapping windows
    // weight interior timesteps more; the normalized train inputs then
    // have exactly zero mean / unit std).
    Normalization norm;
    if (n_tr > 0) {
      const std::size_t n_vals = n_tr * window;
      double sum = 0.0;
      for (std::size_t t0 = 0; t0 < n_tr; ++t0)
        for (std::size_t j = 0; j < window; ++j) sum += x[t0 + j];
      norm.mean = sum / static_cast<double>(n_vals);
      double var = 0.0;
      for (std::size_t t0 = 0; t0 < n_tr; ++t0)
        for (std::size_t j = 0; j < window; ++j)
          var += (x[t0 + j] - norm.mean) * (x[t0 + j] - norm.mean);
      norm.stdev = std::max(std::sqrt(var / static_cast<double>(n_vals)), 1e-8);
    }

    auto make_split = [&](std::size_t from, std::size_t count) {
      Batch b;
      b.inputs = DenseMatrix(count, window);
      b.targets = DenseMatrix(count, horizon);
      for (std::size_t r = 0; r < count; ++r) {
        const std::size_t t0 = from + r;
        for (std::size_t j = 0; j < window; ++j)
          b.inputs.at(r, j) = (x[t0 + j] - norm.mean) / norm.stdev;
        for (std::size_t j = 0; j < horizon; ++j)
          b.targets.at(r, j) = (x[t0 + window + j] - norm.mean) / norm.stdev;
      }
      return b;
    };

    ClientDataset& ds = out[node];
    ds.client_id = static_cast<int>(node);
    ds.train = make_split(0, n_tr);
    ds.val = make_split(n_tr, n_va);
    ds.test = make_split(n_tr + n_va, n_te);
    ds.norm = norm;
    ds.size = n_tr;
  }
  return out;
}

void export_pool(const DataPool& pool, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_pool: cannot open " + path);
  char buf[32];
  auto put = [&](double v, bool last) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    out << buf << (last ? "" : " ");
  };
  if (pool.task == Task::classification) {
    out << "label";
    for (std::size_t d = 0; d < pool.inputs.cols; ++d) out << " f" << d;
    out << "\n";
    for (std::size_t r = 0; r < pool.inputs.rows; ++r) {
      out << pool.labels[r] << " ";
      for (std::size_t d = 0; d < pool.inputs.cols; ++d)
        put(pool.inputs.at(r, d), d + 1 == pool.inputs.cols);
      out << "\n";
    }
  } else {
    out << "node";
    for (std::size_t t = 0; t < pool.series.cols; ++t) out << " t" << t;
    out << "\n";
    for (std::size_t r = 0; r < pool.series.rows; ++r) {
      out << r << " ";
      for (std::size_t t = 0; t < pool.series.cols; ++t)
        put(pool.series.at(r, t), t + 1 == pool.series.cols);
      out << "\n";
    }
  }
}

}  // namespace sfl
