#include "sfl/output.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "sfl/kernels.hpp"

namespace fs = std::filesystem;

namespace sfl {
namespace {

std::string fmt9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp);
    out << content;
  }
  fs::rename(tmp, path);
}

struct MetricRow {
  const char* split;
  const std::vector<TaskMetrics>* metrics;
};

void append_metric_rows(std::ostringstream& csv, const RoundRecord& rec,
                        Task task) {
  const MetricRow rows[] = {{"val", &rec.val}, {"test", &rec.test}};
  for (const auto& [split, metrics] : rows) {
    for (std::size_t i = 0; i < metrics->size(); ++i) {
      const TaskMetrics& m = (*metrics)[i];
      if (task == Task::classification) {
        csv << rec.round << ',' << i << ',' << split << ",accuracy,"
            << fmt9(100.0 * m.accuracy) << '\n';
      } else {
        csv << rec.round << ',' << i << ',' << split << ",mae," << fmt9(m.mae)
            << '\n';
        csv << rec.round << ',' << i << ',' << split << ",rmse," << fmt9(m.rmse)
            << '\n';
        if (m.mape_defined)
          csv << rec.round << ',' << i << ',' << split << ",mape,"
              << fmt9(m.mape) << '\n';
      }
    }
  }
}

nlohmann::ordered_json summary_block(const ExperimentResult& result,
                                     const std::string& split) {
  nlohmann::ordered_json block;
  const RoundRecord& last = result.records.back();
  const auto& metrics = split == "val" ? last.val : last.test;
  if (metrics.empty()) return block;

  auto cohort_of = [&](auto select, bool higher) {
    std::vector<double> vals(metrics.size());
    for (std::size_t i = 0; i < metrics.size(); ++i) vals[i] = select(metrics[i]);
    const CohortSummary s = cohort_summary(vals, higher);
    return nlohmann::ordered_json{{"mean", s.mean},
                                  {"std", s.stddev},
                                  {"best5", s.best5},
                                  {"worst5", s.worst5},
                                  {"n_clients", s.n_clients}};
  };
  if (result.task == Task::classification) {
    block["accuracy"] =
        cohort_of([](const TaskMetrics& m) { return 100.0 * m.accuracy; }, true);
  } else {
    block["mae"] = cohort_of([](const TaskMetrics& m) { return m.mae; }, false);
    block["rmse"] = cohort_of([](const TaskMetrics& m) { return m.rmse; }, false);
    block["mape"] = cohort_of([](const TaskMetrics& m) { return m.mape; }, false);
  }
  return block;
}

std::string hash_hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

std::vector<double> final_test_metric(const ExperimentResult& result,
                                      const std::string& metric) {
  const auto& metrics = result.records.back().test;
  std::vector<double> vals(metrics.size());
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const TaskMetrics& m = metrics[i];
    if (metric == "accuracy")
      vals[i] = 100.0 * m.accuracy;
    else if (metric == "mae")
      vals[i] = m.mae;
    else if (metric == "rmse")
      vals[i] = m.rmse;
    else if (metric == "mape")
      vals[i] = m.mape;
    else
      throw std::invalid_argument("final_test_metric: unknown metric " + metric);
  }
  return vals;
}

std::string primary_metric(Task task) {
  return task == Task::classification ? "accuracy" : "mae";
}

bool primary_higher_is_better(Task task) {
  return task == Task::classification;
}

void write_run_outputs(const ExperimentResult& result, const std::string& dir) {
  fs::create_directories(dir);

  std::ostringstream csv;
  csv << "round,client_id,split,metric,value\n";
  for (const RoundRecord& rec : result.records) {
    for (std::size_t i = 0; i < rec.train_loss.size(); ++i)
      csv << rec.round << ',' << i << ",train,loss," << fmt9(rec.train_loss[i])
          << '\n';
    append_metric_rows(csv, rec, result.task);
  }
  atomic_write(dir + "/rounds.csv", csv.str());

  nlohmann::ordered_json summary;
  nlohmann::ordered_json config;
  for (const auto& [k, v] : result.config_echo) config[k] = v;
  summary["config"] = config;
  summary["dataset_hash"] = hash_hex(result.dataset_hash);
  summary["kernels"] = kernels::active().name;
  summary["total_wall_ms"] = result.total_wall_ms;
  summary["rounds_completed"] = result.records.size() - 1;
  summary["final"]["val"] = summary_block(result, "val");
  summary["final"]["test"] = summary_block(result, "test");
  atomic_write(dir + "/summary.json", summary.dump(2) + "\n");

  dump_adjacency(result.graph_initial, dir + "/graph_initial.txt");
  dump_adjacency(result.graph_final, dir + "/graph_learned.txt");
}

int cmd_run(const ExperimentConfig& cfg, const std::string& dir, bool quiet) {
  try {
    cfg.validate();
    const ExperimentResult result = run_experiment(cfg);
    write_run_outputs(result, dir);
    if (!quiet) {
      const std::string metric = primary_metric(result.task);
      const std::vector<double> vals = final_test_metric(result, metric);
      const CohortSummary s =
          cohort_summary(vals, primary_higher_is_better(result.task));
      std::cout << cfg.name << ": final test " << metric << " mean "
                << fmt9(s.mean) << " best5 " << fmt9(s.best5) << " worst5 "
                << fmt9(s.worst5) << " (" << fmt9(result.total_wall_ms)
                << " ms)\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    // no partial outputs: everything is written atomically after the run
    for (const char* f : {"rounds.csv.tmp", "summary.json.tmp"})
      fs::remove(fs::path(dir) / f);
    return 1;
  }
}

std::vector<CompareCell> run_compare_cells(
    const ExperimentConfig& base, const std::vector<std::string>& strategies,
    const std::vector<std::uint64_t>& seeds, const std::string& dir,
    bool quiet) {
  if (strategies.empty() || seeds.empty())
    throw ConfigError("compare: need at least one strategy and one seed");
  std::vector<CompareCell> cells;
  for (std::uint64_t seed : seeds) {
    std::uint64_t expected_hash = 0;
    bool first = true;
    for (const std::string& strat : strategies) {
      ExperimentConfig cfg = base;
      cfg.root_seed = seed;
      cfg.strategy.kind = strategy_from_string(strat);
      cfg.strategy.init_local_from_global = base.strategy.init_local_from_global;
      cfg.name = strat + "_seed" + std::to_string(seed);
      cfg.validate();
      const ExperimentResult result = run_experiment(cfg);
      write_run_outputs(result, dir + "/" + cfg.name);

      // data streams are keyed by seed only; verify
      if (first) {
        expected_hash = result.dataset_hash;
        first = false;
      } else if (result.dataset_hash != expected_hash) {
        throw std::runtime_error(
            "compare: dataset hash differs across strategies at seed " +
            std::to_string(seed));
      }

      const std::vector<double> vals =
          final_test_metric(result, primary_metric(result.task));
      const CohortSummary s =
          cohort_summary(vals, primary_higher_is_better(result.task));
      cells.push_back({strat, seed, s.mean, s.best5, s.worst5,
                       result.dataset_hash});
      if (!quiet)
        std::cout << cfg.name << ": mean " << fmt9(s.mean) << " best5 "
                  << fmt9(s.best5) << " worst5 " << fmt9(s.worst5) << "\n";
    }
  }
  return cells;
}

int cmd_compare(const ExperimentConfig& base,
                const std::vector<std::string>& strategies,
                const std::vector<std::uint64_t>& seeds, const std::string& dir,
                bool quiet) {
  try {
    fs::create_directories(dir);
    const std::vector<CompareCell> cells =
        run_compare_cells(base, strategies, seeds, dir, quiet);

    auto stat = [&](const std::string& strat, auto select) {
      std::vector<double> vals;
      for (const CompareCell& c : cells)
        if (c.strategy == strat) vals.push_back(select(c));
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      return std::pair<double, double>(
          mean, std::sqrt(var / static_cast<double>(vals.size())));
    };

    std::ostringstream txt, csvc;
    const bool classification = base.task == "classification";
    const char* metric = classification ? "accuracy" : "mae";
    txt << "strategy        Mean " << metric << "       Best 5%            Worst 5%\n";
    csvc << "strategy,metric,mean,mean_std,best5,best5_std,worst5,worst5_std\n";
    char line[256];
    for (const std::string& strat : strategies) {
      const auto [m, ms] = stat(strat, [](const CompareCell& c) { return c.mean; });
      const auto [b, bs] = stat(strat, [](const CompareCell& c) { return c.best5; });
      const auto [w, ws] = stat(strat, [](const CompareCell& c) { return c.worst5; });
      std::snprintf(line, sizeof(line),
                    "%-14s %8.2f +- %-6.2f %8.2f +- %-6.2f %8.2f +- %-6.2f\n",
                    strat.c_str(), m, ms, b, bs, w, ws);
      txt << line;
      csvc << strat << ',' << metric << ',' << fmt9(m) << ',' << fmt9(ms) << ','
           << fmt9(b) << ',' << fmt9(bs) << ',' << fmt9(w) << ',' << fmt9(ws)
           << '\n';
    }
    atomic_write(dir + "/comparison.txt", txt.str());
    atomic_write(dir + "/comparison.csv", csvc.str());
    if (!quiet) std::cout << txt.str();
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace sfl
