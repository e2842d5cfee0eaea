#include "sfl/flcore.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace sfl {
namespace {

Batch make_minibatch(const Batch& train, const std::vector<std::size_t>& perm,
                     std::size_t step, std::size_t batch_size) {
  const std::size_t n = train.size();
  const std::size_t b = std::min(batch_size, n);
  Batch out;
  out.inputs = DenseMatrix(b, train.inputs.cols);
  if (!train.labels.empty()) out.labels.resize(b);
  if (train.targets.rows > 0) out.targets = DenseMatrix(b, train.targets.cols);
  for (std::size_t r = 0; r < b; ++r) {
    const std::size_t idx = perm[(step * b + r) % n];
    std::copy(train.inputs.row(idx), train.inputs.row(idx) + train.inputs.cols,
              out.inputs.row(r));
    if (!train.labels.empty()) out.labels[r] = train.labels[idx];
    if (train.targets.rows > 0)
      std::copy(train.targets.row(idx),
                train.targets.row(idx) + train.targets.cols, out.targets.row(r));
  }
  return out;
}

bool personalized_serving(StrategyKind k) {
  return k == StrategyKind::sfl || k == StrategyKind::sfl_star ||
         k == StrategyKind::local_only;
}

void evaluate_clients(const FederationState& state, const ExperimentConfig& cfg,
                      RoundRecord& rec) {
  const bool personal = personalized_serving(cfg.strategy.kind);
  rec.val.resize(state.clients.size());
  rec.test.resize(state.clients.size());
  for (std::size_t i = 0; i < state.clients.size(); ++i) {
    const ClientDataset& ds = state.clients[i];
    Model serving{state.spec, personal ? state.v[i] : state.w};
    const Normalization* norm =
        state.spec.task == Task::forecasting ? &ds.norm : nullptr;
    if (ds.val.size() > 0) rec.val[i] = evaluate(serving, ds.val, norm);
    if (ds.test.size() > 0) rec.test[i] = evaluate(serving, ds.test, norm);
  }
}

ClientGraph build_graph(const ExperimentConfig& cfg, const SensorField* field) {
  switch (cfg.effective_graph_kind()) {
    case GraphKind::none:
      return ClientGraph::empty(cfg.n_clients);
    case GraphKind::complete:
      return ClientGraph::complete(cfg.n_clients);
    case GraphKind::blocks:
      return ClientGraph::blocks(cfg.n_clients, cfg.data.n_blocks);
    case GraphKind::gaussian:
      if (field == nullptr)
        throw ConfigError("graph.kind: gaussian graph needs the traffic task");
      return gaussian_kernel_adjacency(*field, cfg.data.sigma,
                                       cfg.data.threshold);
    case GraphKind::auto_default:
      break;
  }
  throw ConfigError("graph.kind: unresolved graph kind");
}

}  // namespace

double effective_lambda(std::size_t t, double lambda0) {
  return t > 0 ? lambda0 : 0.0;
}

ClientUpdateResult client_update(const ClientDataset& client,
                                 const ParamVector& v, const ParamVector& w,
                                 const ParamVector& u,
                                 const ExperimentConfig& cfg, double lambda,
                                 RngStream& stream) {
  if (v.size() != w.size() || v.size() != u.size())
    throw std::invalid_argument("client_update: parameter length mismatch");

  Model model;
  model.params = cfg.init_from_global() ? w : v;
  model.spec.task = cfg.task == "classification" ? Task::classification
                                                 : Task::forecasting;
  model.spec.input_dim = client.train.inputs.cols;
  model.spec.output_dim = model.spec.task == Task::classification
                              ? cfg.data.n_classes
                              : client.train.targets.cols;
  model.spec.hidden_dim = cfg.model.hidden_dim;

  const std::vector<std::size_t> perm = stream.permutation(client.train.size());
  double loss_sum = 0.0;
  for (std::size_t step = 0; step < cfg.strategy.s_local_steps; ++step) {
    const Batch batch = make_minibatch(client.train, perm, step, cfg.batch_size);
    loss_sum += forward_loss(model, batch).loss;
    switch (cfg.strategy.kind) {
      case StrategyKind::sfl:
      case StrategyKind::sfl_star:
        model = local_sgd_step(model, batch, cfg.strategy.eta, lambda, w, u);
        break;
      case StrategyKind::fedprox:
        // u-anchor at the current iterate contributes zero: only the
        // mu-weighted w-anchor is active.
        model = local_sgd_step(model, batch, cfg.strategy.eta,
                               cfg.strategy.mu_prox, w, model.params);
        break;
      case StrategyKind::fedavg:
      case StrategyKind::local_only:
        model = local_sgd_step(model, batch, cfg.strategy.eta, 0.0, w, u);
        break;
    }
  }
  return {std::move(model.params),
          loss_sum / static_cast<double>(cfg.strategy.s_local_steps)};
}

ParamVector aggregate_fedavg(const std::vector<ParamVector>& v_list,
                             const std::vector<std::size_t>& sizes) {
  std::vector<double> weights(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i)
    weights[i] = static_cast<double>(sizes[i]);
  return weighted_mean(v_list, weights);
}

std::pair<std::vector<ParamVector>, ParamVector> aggregate_sfl(
    const FederationState& state, const ExperimentConfig& cfg) {
  const std::size_t n = state.clients.size();
  if (state.graph.n != n)
    throw std::invalid_argument("aggregate_sfl: graph/client count mismatch");
  const std::size_t p = state.w.size();

  ParamStack stack(n, p);
  for (std::size_t i = 0; i < n; ++i)
    std::copy(state.v[i].begin(), state.v[i].end(), stack.row(i));

  const DenseMatrix pm = propagation_matrix(state.graph);
  const ParamStack smoothed =
      gcn_propagate(pm, stack, cfg.strategy.m_gcn_steps);

  std::vector<ParamVector> u(n);
  std::vector<std::size_t> sizes(n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i].assign(smoothed.row(i), smoothed.row(i) + p);
    sizes[i] = state.clients[i].size;
  }
  ParamVector w = readout(smoothed, sizes);
  return {std::move(u), std::move(w)};
}

RoundRecord run_round(FederationState& state, const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = state.clients.size();
  const double lam = effective_lambda(state.t, cfg.strategy.lambda0);

  std::vector<ParamVector> new_v(n);
  std::vector<double> losses(n);
  auto update_one = [&](std::size_t i) {
    RngStream stream(cfg.root_seed, "batch", i, state.t);
    ClientUpdateResult r = client_update(state.clients[i], state.v[i], state.w,
                                         state.u[i], cfg, lam, stream);
    new_v[i] = std::move(r.v);
    losses[i] = r.mean_train_loss;
  };

  const std::size_t n_threads = std::min<std::size_t>(cfg.threads, n);
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) update_one(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t tid = 0; tid < n_threads; ++tid) {
      pool.emplace_back([&, tid] {
        for (std::size_t i = tid; i < n; i += n_threads) update_one(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  state.v = std::move(new_v);

  std::vector<std::size_t> sizes(n);
  for (std::size_t i = 0; i < n; ++i) sizes[i] = state.clients[i].size;

  switch (cfg.strategy.kind) {
    case StrategyKind::fedavg:
    case StrategyKind::fedprox: {
      state.w = aggregate_fedavg(state.v, sizes);
      for (auto& u : state.u) u = state.w;
      break;
    }
    case StrategyKind::sfl:
    case StrategyKind::sfl_star: {
      auto [u, w] = aggregate_sfl(state, cfg);
      state.u = std::move(u);
      state.w = std::move(w);
      break;
    }
    case StrategyKind::local_only:
      break;
  }

  if (cfg.strategy.kind == StrategyKind::sfl_star && state.t > 0 &&
      state.t % cfg.strategy.structure_every == 0) {
    ParamStack stack(n, state.w.size());
    for (std::size_t i = 0; i < n; ++i)
      std::copy(state.v[i].begin(), state.v[i].end(), stack.row(i));
    state.graph = structure_learn(stack, cfg.strategy.tau, cfg.top_k());
  }

  state.t += 1;

  for (const ParamVector& v : state.v)
    if (!all_finite(v))
      throw std::runtime_error("run_round: client parameters diverged");
  if (!all_finite(state.w))
    throw std::runtime_error("run_round: global parameters diverged");

  RoundRecord rec;
  rec.round = state.t;
  rec.lambda = lam;
  rec.train_loss = std::move(losses);
  evaluate_clients(state, cfg, rec);
  rec.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return rec;
}

std::uint64_t dataset_fingerprint(const std::vector<ClientDataset>& clients) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix_doubles = [&](const std::vector<double>& v) {
    h = fnv1a(v.data(), v.size() * sizeof(double), h);
  };
  for (const ClientDataset& c : clients) {
    for (const Batch* b : {&c.train, &c.val, &c.test}) {
      mix_doubles(b->inputs.values);
      mix_doubles(b->targets.values);
      if (!b->labels.empty())
        h = fnv1a(b->labels.data(), b->labels.size() * sizeof(int), h);
    }
    mix_doubles({c.norm.mean, c.norm.stdev});
  }
  return h;
}

FederationState build_federation(const ExperimentConfig& cfg) {
  cfg.validate();
  FederationState state;

  if (cfg.task == "classification") {
    state.spec = ModelSpec{Task::classification, cfg.data.input_dim,
                           cfg.data.n_classes, cfg.model.hidden_dim};
    RngStream data_stream(cfg.root_seed, "data");
    const DataPool pool =
        gen_classification(cfg.data.n_classes, cfg.data.input_dim,
                           cfg.data.samples_per_class, cfg.data.cluster_spread,
                           data_stream);
    if (!cfg.data.export_pool_path.empty())
      export_pool(pool, cfg.data.export_pool_path);

    const std::size_t n_blocks = cfg.data.n_blocks;
    if (n_blocks == 1) {
      RngStream shard_stream(cfg.root_seed, "shard");
      state.clients =
          shard_partition(pool, cfg.n_clients, cfg.data.shards_k, shard_stream);
    } else {
      // Disjoint class subsets per block; shard partition within block.
      const std::size_t classes_per_block = cfg.data.n_classes / n_blocks;
      const std::size_t clients_per_block = cfg.n_clients / n_blocks;
      for (std::size_t b = 0; b < n_blocks; ++b) {
        DataPool sub;
        sub.task = Task::classification;
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < pool.labels.size(); ++r) {
          const auto c = static_cast<std::size_t>(pool.labels[r]);
          if (c / classes_per_block == b) rows.push_back(r);
        }
        sub.inputs = DenseMatrix(rows.size(), pool.inputs.cols);
        sub.labels.resize(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
          std::copy(pool.inputs.row(rows[r]),
                    pool.inputs.row(rows[r]) + pool.inputs.cols,
                    sub.inputs.row(r));
          sub.labels[r] = pool.labels[rows[r]];
        }
        RngStream shard_stream(cfg.root_seed, "shard", b);
        auto block_clients =
            shard_partition(sub, clients_per_block, cfg.data.shards_k,
                            shard_stream);
        for (auto& ds : block_clients) {
          ds.client_id = static_cast<int>(state.clients.size());
          state.clients.push_back(std::move(ds));
        }
      }
    }
    state.graph = build_graph(cfg, nullptr);
  } else {
    state.spec = ModelSpec{Task::forecasting, cfg.data.window,
                           cfg.data.horizon, cfg.model.hidden_dim};
    RngStream field_stream(cfg.root_seed, "field");
    const SensorField field = gen_sensor_field(cfg.n_clients, field_stream);
    const ClientGraph diffusion_graph =
        gaussian_kernel_adjacency(field, cfg.data.sigma, cfg.data.threshold);
    SeriesParams sp;
    sp.ar_coeff = cfg.data.ar_coeff;
    sp.coupling = cfg.data.coupling;
    sp.season_period = cfg.data.season_period;
    sp.season_amp = cfg.data.season_amp;
    sp.noise = cfg.data.noise;
    RngStream series_stream(cfg.root_seed, "series");
    const DataPool pool = gen_traffic_series(field, diffusion_graph,
                                             cfg.data.t_len, sp, series_stream);
    if (!cfg.data.export_pool_path.empty())
      export_pool(pool, cfg.data.export_pool_path);
    state.clients = windowize(pool, cfg.data.window, cfg.data.horizon);
    state.graph = cfg.effective_graph_kind() == GraphKind::gaussian
                      ? diffusion_graph
                      : build_graph(cfg, &field);
  }

  RngStream init_stream(cfg.root_seed, "init");
  const Model m0 = init_model(state.spec, init_stream);
  state.w = m0.params;
  state.v.assign(cfg.n_clients, m0.params);
  state.u.assign(cfg.n_clients, m0.params);
  state.t = 0;
  return state;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  FederationState state = build_federation(cfg);

  ExperimentResult result;
  result.task = state.spec.task;
  result.graph_initial = state.graph;
  result.dataset_hash = dataset_fingerprint(state.clients);
  result.config_echo = cfg.echo();

  RoundRecord initial;
  initial.round = 0;
  initial.lambda = 0.0;
  evaluate_clients(state, cfg, initial);
  result.records.push_back(std::move(initial));

  for (std::size_t t = 0; t < cfg.rounds; ++t)
    result.records.push_back(run_round(state, cfg));

  result.graph_final = state.graph;
  result.total_wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
  return result;
}

}  // namespace sfl
