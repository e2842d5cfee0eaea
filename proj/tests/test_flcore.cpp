#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "sfl/flcore.hpp"

using namespace sfl;
using namespace sfl::testing;

TEST_CASE("effective_lambda warm-up indicator") {
  CHECK(effective_lambda(0, 0.1) == 0.0);
  CHECK(effective_lambda(3, 0.1) == 0.1);
  CHECK(effective_lambda(7, 0.0) == 0.0);
}

TEST_CASE("aggregate_fedavg hand cases") {
  CHECK(aggregate_fedavg({{1}, {1}, {1}}, {2, 3, 5}) == ParamVector{1});
  CHECK(aggregate_fedavg({{0}, {2}}, {1, 1}) == ParamVector{1});
  CHECK(aggregate_fedavg({{4, 2}}, {9}) == ParamVector{4, 2});
}

TEST_CASE("client_update reductions") {
  ExperimentConfig cfg = small_classification_config();
  FederationState state = build_federation(cfg);
  const ClientDataset& client = state.clients[0];
  const std::size_t p = state.w.size();

  // eta = 0 returns the starting point unchanged
  {
    ExperimentConfig c = cfg;
    c.strategy.eta = 0.0;
    c.strategy.kind = StrategyKind::sfl;
    c.strategy.init_local_from_global = 0;
    RngStream s(c.root_seed, "batch", 0, 0);
    ParamVector v(p, 0.25);
    const auto r = client_update(client, v, state.w, state.u[0], c, 0.5, s);
    CHECK(r.v == v);
  }

  // s=1, lambda=0, init from global: one plain SGD step from w
  {
    ExperimentConfig c = cfg;
    c.strategy.kind = StrategyKind::fedavg;
    c.strategy.s_local_steps = 1;
    RngStream s1(c.root_seed, "batch", 0, 0);
    const auto r =
        client_update(client, state.v[0], state.w, state.u[0], c, 0.0, s1);

    RngStream s2(c.root_seed, "batch", 0, 0);
    const auto perm = s2.permutation(client.train.size());
    Batch batch;
    const std::size_t bsz = std::min<std::size_t>(c.batch_size, client.train.size());
    batch.inputs = DenseMatrix(bsz, client.train.inputs.cols);
    batch.labels.resize(bsz);
    for (std::size_t i = 0; i < bsz; ++i) {
      std::copy(client.train.inputs.row(perm[i]),
                client.train.inputs.row(perm[i]) + batch.inputs.cols,
                batch.inputs.row(i));
      batch.labels[i] = client.train.labels[perm[i]];
    }
    Model m{state.spec, state.w};
    const ParamVector g = grad(m, batch);
    for (std::size_t j = 0; j < p; ++j)
      CHECK(r.v[j] == state.w[j] - c.strategy.eta * g[j]);
  }

  // huge lambda, tiny eta: the update moves toward the anchor
  {
    ExperimentConfig c = cfg;
    c.strategy.kind = StrategyKind::sfl;
    c.strategy.init_local_from_global = 0;
    c.strategy.s_local_steps = 1;
    c.strategy.eta = 1e-4;
    ParamVector v(p, 1.0), anchor(p, 0.0);
    RngStream s(c.root_seed, "batch", 0, 1);
    const auto r = client_update(client, v, anchor, anchor, c, 1e3, s);
    CHECK(l2_distance(r.v, anchor) < l2_distance(v, anchor));
  }
}

TEST_CASE("aggregate_sfl hand cases") {
  ExperimentConfig cfg = small_classification_config();
  cfg.strategy.kind = StrategyKind::sfl;
  cfg.graph_kind = GraphKind::none;
  FederationState state = build_federation(cfg);
  RngStream rng(3, "perturb");
  for (auto& v : state.v)
    for (double& x : v) x = rng.normal();

  // empty graph: u_i == v_i, w == FedAvg of v
  {
    auto [u, w] = aggregate_sfl(state, cfg);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(u[i] == state.v[i]);
    std::vector<std::size_t> sizes;
    for (const auto& c : state.clients) sizes.push_back(c.size);
    CHECK(w == aggregate_fedavg(state.v, sizes));
  }

  // m=0: identity propagation
  {
    state.graph = ClientGraph::complete(cfg.n_clients);
    ExperimentConfig c0 = cfg;
    c0.strategy.m_gcn_steps = 0;
    auto [u, w] = aggregate_sfl(state, c0);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(u[i] == state.v[i]);
  }

  // complete graph, m=1: every u_i is the uniform mean of v
  {
    ExperimentConfig c1 = cfg;
    c1.strategy.m_gcn_steps = 1;
    auto [u, w] = aggregate_sfl(state, c1);
    const std::size_t p = state.w.size();
    for (std::size_t j = 0; j < p; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < cfg.n_clients; ++i) mean += state.v[i][j];
      mean /= double(cfg.n_clients);
      for (std::size_t i = 0; i < cfg.n_clients; ++i)
        CHECK(u[i][j] == doctest::Approx(mean).epsilon(1e-12));
    }
  }

  // graph/client mismatch
  state.graph = ClientGraph::complete(cfg.n_clients + 1);
  CHECK_THROWS_AS(aggregate_sfl(state, cfg), std::invalid_argument);
}

TEST_CASE("local_only never changes the global model") {
  ExperimentConfig cfg = small_classification_config();
  cfg.strategy.kind = StrategyKind::local_only;
  FederationState state = build_federation(cfg);
  const ParamVector w0 = state.w;
  for (int t = 0; t < 3; ++t) run_round(state, cfg);
  CHECK(state.w == w0);
}

TEST_CASE("fedavg trajectory is bit-identical to the oracle") {
  const ExperimentConfig cfg = small_classification_config();
  const auto oracle = FedAvgOracle{}.run_w_trajectory(cfg);
  const auto engine = engine_w_trajectory(cfg);
  REQUIRE(oracle.size() == engine.size());
  for (std::size_t t = 0; t < oracle.size(); ++t) CHECK(oracle[t] == engine[t]);
}

TEST_CASE("sfl with empty graph and lambda0=0 reduces to fedavg exactly") {
  ExperimentConfig fedavg = small_classification_config();
  ExperimentConfig sfl_cfg = fedavg;
  sfl_cfg.strategy.kind = StrategyKind::sfl;
  sfl_cfg.strategy.lambda0 = 0.0;
  sfl_cfg.strategy.init_local_from_global = 1;
  sfl_cfg.graph_kind = GraphKind::none;
  const auto a = engine_w_trajectory(fedavg);
  const auto b = engine_w_trajectory(sfl_cfg);
  for (std::size_t t = 0; t < a.size(); ++t) CHECK(a[t] == b[t]);
}

TEST_CASE("lambda warm-up: round 0 equals a lambda0=0 round") {
  ExperimentConfig cfg = small_classification_config();
  cfg.strategy.kind = StrategyKind::sfl;
  cfg.graph_kind = GraphKind::complete;
  cfg.strategy.lambda0 = 0.7;

  ExperimentConfig zero = cfg;
  zero.strategy.lambda0 = 0.0;

  FederationState s1 = build_federation(cfg);
  FederationState s2 = build_federation(zero);
  run_round(s1, cfg);
  run_round(s2, zero);
  for (std::size_t i = 0; i < cfg.n_clients; ++i) CHECK(s1.v[i] == s2.v[i]);

  // and from round 1 on, lambda actually bites
  run_round(s1, cfg);
  run_round(s2, zero);
  bool any_diff = false;
  for (std::size_t i = 0; i < cfg.n_clients; ++i) any_diff |= (s1.v[i] != s2.v[i]);
  CHECK(any_diff);
}

TEST_CASE("personalization persistence: v_i carries across rounds") {
  ExperimentConfig cfg = small_classification_config();
  cfg.strategy.kind = StrategyKind::sfl;
  cfg.graph_kind = GraphKind::complete;
  FederationState state = build_federation(cfg);
  run_round(state, cfg);
  const ParamVector v0_after_1 = state.v[0];
  run_round(state, cfg);
  // updated from its own previous value, not reset to w
  CHECK(state.v[0] != v0_after_1);
  CHECK_FALSE(cfg.init_from_global());
}

TEST_CASE("parallel and sequential client execution agree bit-for-bit") {
  for (const char* task : {"classification", "traffic"}) {
    ExperimentConfig cfg = std::string(task) == "classification"
                               ? small_classification_config()
                               : small_traffic_config();
    cfg.strategy.kind = StrategyKind::sfl;
    ExperimentConfig par = cfg;
    par.threads = 4;
    FederationState seq_state = build_federation(cfg);
    FederationState par_state = build_federation(par);
    for (int t = 0; t < 2; ++t) {
      run_round(seq_state, cfg);
      run_round(par_state, par);
    }
    CHECK(seq_state.w == par_state.w);
    for (std::size_t i = 0; i < cfg.n_clients; ++i) {
      CHECK(seq_state.v[i] == par_state.v[i]);
      CHECK(seq_state.u[i] == par_state.u[i]);
    }
  }
}

TEST_CASE("all strategies stay finite at default hyperparameters") {
  for (StrategyKind kind :
       {StrategyKind::local_only, StrategyKind::fedavg, StrategyKind::fedprox,
        StrategyKind::sfl, StrategyKind::sfl_star}) {
    ExperimentConfig cfg = small_classification_config();
    cfg.strategy.kind = kind;
    cfg.rounds = 5;
    const ExperimentResult r = run_experiment(cfg);  // throws on divergence
    CHECK(r.records.size() == 6);
  }
}

TEST_CASE("run_experiment T=0 emits only the initial evaluation") {
  ExperimentConfig cfg = small_classification_config();
  cfg.rounds = 0;
  const ExperimentResult r = run_experiment(cfg);
  CHECK(r.records.size() == 1);
  CHECK(r.records[0].round == 0);
  CHECK(r.records[0].train_loss.empty());
  CHECK(r.records[0].test.size() == cfg.n_clients);
}

TEST_CASE("run_experiment is deterministic") {
  ExperimentConfig cfg = small_classification_config();
  cfg.strategy.kind = StrategyKind::sfl_star;
  cfg.graph_kind = GraphKind::none;
  const ExperimentResult a = run_experiment(cfg);
  const ExperimentResult b = run_experiment(cfg);
  CHECK(a.dataset_hash == b.dataset_hash);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t t = 0; t < a.records.size(); ++t) {
    CHECK(a.records[t].train_loss == b.records[t].train_loss);
    for (std::size_t i = 0; i < a.records[t].test.size(); ++i)
      CHECK(a.records[t].test[i].accuracy == b.records[t].test[i].accuracy);
  }
  CHECK(a.graph_final.adjacency.values == b.graph_final.adjacency.values);
}

TEST_CASE("sfl_star learns a graph different from the initial empty one") {
  ExperimentConfig cfg = small_classification_config();
  cfg.strategy.kind = StrategyKind::sfl_star;
  cfg.graph_kind = GraphKind::none;
  cfg.rounds = 4;
  const ExperimentResult r = run_experiment(cfg);
  CHECK(r.graph_initial.adjacency.values !=
        r.graph_final.adjacency.values);
}

TEST_CASE("fedprox stays closer to the global model than fedavg") {
  ExperimentConfig fa = small_classification_config();
  fa.rounds = 1;
  ExperimentConfig fp = fa;
  fp.strategy.kind = StrategyKind::fedprox;
  fp.strategy.mu_prox = 5.0;

  FederationState sa = build_federation(fa);
  FederationState sp = build_federation(fp);
  const ParamVector w0 = sa.w;
  run_round(sa, fa);
  run_round(sp, fp);
  double drift_fa = 0, drift_fp = 0;
  for (std::size_t i = 0; i < fa.n_clients; ++i) {
    drift_fa += l2_distance(sa.v[i], w0);
    drift_fp += l2_distance(sp.v[i], w0);
  }
  CHECK(drift_fp < drift_fa);
}
