#include "tailbin/tail_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tailbin/error.hpp"
#include "tailbin/numerics.hpp"

namespace tailbin {

namespace {

constexpr std::size_t kMinTail = 3;

void require_positive_threshold(double threshold) {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw Error(ErrorCode::kDomain, "tail threshold must be positive and finite");
  }
}

std::vector<double> tail_values(std::span<const double> xs, double threshold) {
  require_positive_threshold(threshold);
  std::vector<double> tail;
  for (double x : xs) {
    if (x >= threshold) tail.push_back(x);
  }
  return tail;
}

}  // namespace

double select_threshold(std::span<const double> xs, double q) {
  if (xs.size() < 10) {
    throw Error(ErrorCode::kInsufficientData,
                "threshold selection needs at least 10 observations, got " + std::to_string(xs.size()));
  }
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::kInvalidParameter, "tail quantile must lie in (0,1)");
  return empirical_quantile(xs, q);
}

TailSample make_tail_sample(std::span<const double> xs, double threshold) {
  TailSample sample;
  sample.threshold = threshold;
  for (double x : tail_values(xs, threshold)) sample.excess_logs.push_back(std::log(x / threshold));
  return sample;
}

TailIndexEstimate hill_estimate(std::span<const double> xs, double threshold) {
  const TailSample tail = make_tail_sample(xs, threshold);
  if (tail.k() < kMinTail) {
    throw Error(ErrorCode::kInsufficientTail,
                "Hill estimate needs at least 3 tail observations, got " + std::to_string(tail.k()));
  }
  const double sum = std::accumulate(tail.excess_logs.begin(), tail.excess_logs.end(), 0.0);
  if (!(sum > 0.0)) throw Error(ErrorCode::kDegenerateTail, "all tail observations equal the threshold");
  const auto k = static_cast<double>(tail.k());
  TailIndexEstimate est;
  est.alpha_hat = k / sum;
  est.se = est.alpha_hat / std::sqrt(k);
  est.k = tail.k();
  est.method = TailMethod::kHill;
  return est;
}

TailIndexEstimate rank_half_estimate(std::span<const double> xs, double threshold) {
  std::vector<double> tail = tail_values(xs, threshold);
  if (tail.size() < kMinTail) {
    throw Error(ErrorCode::kInsufficientTail,
                "rank-1/2 estimate needs at least 3 tail observations, got " + std::to_string(tail.size()));
  }
  std::stable_sort(tail.begin(), tail.end(), std::greater<>());

  const auto k = static_cast<double>(tail.size());
  double mean_lx = 0.0;
  double mean_lr = 0.0;
  std::vector<double> lx(tail.size());
  std::vector<double> lr(tail.size());
  for (std::size_t r = 0; r < tail.size(); ++r) {
    lx[r] = std::log(tail[r]);
    lr[r] = std::log(static_cast<double>(r + 1) - 0.5);
    mean_lx += lx[r];
    mean_lr += lr[r];
  }
  mean_lx /= k;
  mean_lr /= k;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t r = 0; r < tail.size(); ++r) {
    sxx += (lx[r] - mean_lx) * (lx[r] - mean_lx);
    sxy += (lx[r] - mean_lx) * (lr[r] - mean_lr);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::kDegenerateTail, "no variation in log x over the tail");

  TailIndexEstimate est;
  est.alpha_hat = -sxy / sxx;
  est.se = est.alpha_hat * std::sqrt(2.0 / k);
  est.k = tail.size();
  est.method = TailMethod::kRankHalf;
  return est;
}

std::vector<LogLogPoint> loglog_points(std::span<const double> xs) {
  std::vector<double> sorted(xs.begin(), xs.end());
  for (double x : sorted) {
    if (!(x > 0.0)) throw Error(ErrorCode::kDomain, "log-log points need positive values");
  }
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  std::vector<LogLogPoint> points;
  points.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    // 1-based rank i+1: survival (n - (i+1) + 1/2) / n
    const double survival = (n - static_cast<double>(i) - 0.5) / n;
    points.push_back({std::log(sorted[i]), std::log(survival)});
  }
  return points;
}

}  // namespace tailbin
