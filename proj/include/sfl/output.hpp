#pragma once
// File output for runs and multi-strategy comparisons: rounds.csv,
// summary.json, adjacency dumps, and the strategy x seed compare table.

#include <string>
#include <vector>

#include "sfl/config.hpp"
#include "sfl/flcore.hpp"

namespace sfl {

// Per-client values of the final-round test metric. Classification
// reports accuracy in percent; forecasting reports the named metric
// (mae, rmse, mape).
std::vector<double> final_test_metric(const ExperimentResult& result,
                                      const std::string& metric);

// Primary comparison metric name and direction for a task.
std::string primary_metric(Task task);
bool primary_higher_is_better(Task task);

// Writes rounds.csv, summary.json, graph_initial.txt, graph_learned.txt
// into dir (created if missing). Files are written atomically.
void write_run_outputs(const ExperimentResult& result, const std::string& dir);

// Runs one experiment and writes outputs; removes partial outputs on
// failure. Returns the process exit code.
int cmd_run(const ExperimentConfig& cfg, const std::string& dir, bool quiet);

struct CompareCell {
  std::string strategy;
  std::uint64_t seed = 0;
  double mean = 0.0;
  double best5 = 0.0;
  double worst5 = 0.0;
  std::uint64_t dataset_hash = 0;
};

// Cross product of strategies x seeds on identical per-seed data.
// Writes per-cell run dirs plus comparison.txt / comparison.csv in dir.
int cmd_compare(const ExperimentConfig& base, const std::vector<std::string>& strategies,
                const std::vector<std::uint64_t>& seeds, const std::string& dir,
                bool quiet);

// Exposed for tests: the per-cell results of a compare run.
std::vector<CompareCell> run_compare_cells(
    const ExperimentConfig& base, const std::vector<std::string>& strategies,
    const std::vector<std::uint64_t>& seeds, const std::string& dir,
    bool quiet);

}  // namespace sfl
