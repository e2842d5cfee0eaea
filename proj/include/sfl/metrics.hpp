#pragma once
// Regression/classification metrics and per-client cohort summaries.

#include <vector>

namespace sfl {

struct TaskMetrics {
  // Forecasting. MAPE is in percent; mape_defined is false when every
  // target is below the epsilon mask.
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;
  bool mape_defined = true;
  // Classification, fraction in [0, 1]. Reported as percent at the
  // output layer.
  double accuracy = 0.0;
};

struct CohortSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population std over clients
  double best5 = 0.0;   // mean of the top ceil(0.05 N) clients
  double worst5 = 0.0;  // mean of the bottom ceil(0.05 N) clients
  std::size_t n_clients = 0;
};

TaskMetrics regression_metrics(const std::vector<double>& pred,
                               const std::vector<double>& target,
                               double epsilon = 1e-8);

// Ties between clients are broken by client index. For lower-is-better
// metrics best5/worst5 swap ends of the sorted order.
CohortSummary cohort_summary(const std::vector<double>& values,
                             bool higher_is_better);

}  // namespace sfl
