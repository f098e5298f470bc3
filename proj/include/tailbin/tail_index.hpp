#pragma once

#include <span>
#include <vector>

namespace tailbin {

enum class TailMethod { kHill, kRankHalf };

// Observations at or above a threshold, stored as log excesses.
struct TailSample {
  double threshold = 0.0;
  std::vector<double> excess_logs;
  std::size_t k() const { return excess_logs.size(); }
};

struct TailIndexEstimate {
  double alpha_hat = 0.0;
  double se = 0.0;
  std::size_t k = 0;
  TailMethod method = TailMethod::kHill;
};

struct LogLogPoint {
  double log_x = 0.0;
  double log_survival = 0.0;
};

// Empirical quantile of xs at q; needs at least 10 observations.
double select_threshold(std::span<const double> xs, double q);

// Tail membership is closed: x >= threshold.
TailSample make_tail_sample(std::span<const double> xs, double threshold);

TailIndexEstimate hill_estimate(std::span<const double> xs, double threshold);

// OLS of log(rank - 1/2) on log x over the tail, descending ranks.
TailIndexEstimate rank_half_estimate(std::span<const double> xs, double threshold);

// (log x_(i), log((n - i + 1/2) / n)) for the ascending order statistics.
std::vector<LogLogPoint> loglog_points(std::span<const double> xs);

}  // namespace tailbin
