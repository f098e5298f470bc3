#pragma once

#include <span>
#include <string>
#include <vector>

namespace tailbin {

struct ForecastRecord {
  std::string unit;
  double p_hat = 0.5;
  int y = 0;
};

struct ForecastSet {
  std::vector<ForecastRecord> records;
};

struct LpsSummary {
  double mean = 0.0;
  double sum = 0.0;
  std::size_t n = 0;
};

// log p if y = 1, log(1 - p) otherwise; p is clamped first.
double log_score(double p_hat, int y);

LpsSummary log_predictive_score(const ForecastSet& fs);

struct LpsDiffTest {
  double mean_diff = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  bool degenerate = false;  // zero variance of the differences; t and p undefined
};

// Paired test of a minus b over units present in both sets.
LpsDiffTest lps_diff_test(const ForecastSet& a, const ForecastSet& b);

struct BiasSdRmse {
  double bias = 0.0;
  double sd = 0.0;
  double rmse = 0.0;
};

// Population (n-denominator) SD so that rmse^2 = bias^2 + sd^2.
BiasSdRmse bias_sd_rmse(std::span<const double> estimates, double truth);

// Two-sided p-value of a standard normal statistic.
double normal_two_sided_p(double z);

}  // namespace tailbin
