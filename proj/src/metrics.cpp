#include "sfl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace sfl {

TaskMetrics regression_metrics(const std::vector<double>& pred,
                               const std::vector<double>& target,
                               double epsilon) {
  if (pred.empty() || pred.size() != target.size())
    throw std::invalid_argument("regression_metrics: empty or mismatched input");
  const std::size_t n = pred.size();
  double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
  std::size_t pct_n = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred[i] - target[i];
    abs_sum += std::abs(d);
    sq_sum += d * d;
    if (std::abs(target[i]) > epsilon) {
      pct_sum += std::abs(d) / std::abs(target[i]);
      ++pct_n;
    }
  }
  TaskMetrics m;
  m.mae = abs_sum / static_cast<double>(n);
  m.rmse = std::sqrt(sq_sum / static_cast<double>(n));
  if (pct_n > 0) {
    m.mape = 100.0 * pct_sum / static_cast<double>(pct_n);
  } else {
    m.mape_defined = false;
    m.mape = std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

CohortSummary cohort_summary(const std::vector<double>& values,
                             bool higher_is_better) {
  if (values.empty()) throw std::invalid_argument("cohort_summary: empty input");
  const std::size_t n = values.size();
  CohortSummary s;
  s.n_clients = n;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(n);
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Descending by value, ties by client index.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] > values[b];
  });
  const std::size_t k =
      std::max<std::size_t>(1, static_cast<std::size_t>(
                                   std::ceil(0.05 * static_cast<double>(n))));
  auto mean_of = [&](std::size_t from, std::size_t count) {
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) acc += values[order[from + i]];
    return acc / static_cast<double>(count);
  };
  const double top = mean_of(0, k);
  const double bottom = mean_of(n - k, k);
  s.best5 = higher_is_better ? top : bottom;
  s.worst5 = higher_is_better ? bottom : top;
  return s;
}

}  // namespace sfl
