#include "tailbin/evaluation.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "tailbin/error.hpp"
#include "tailbin/numerics.hpp"

namespace tailbin {

double log_score(double p_hat, int y) {
  const double p = clamp_probability(p_hat);
  return y == 1 ? std::log(p) : std::log1p(-p);
}

LpsSummary log_predictive_score(const ForecastSet& fs) {
  if (fs.records.empty()) throw Error(ErrorCode::kEmptyData, "forecast set is empty");
  LpsSummary s;
  for (const auto& r : fs.records) s.sum += log_score(r.p_hat, r.y);
  s.n = fs.records.size();
  s.mean = s.sum / static_cast<double>(s.n);
  return s;
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::numbers::sqrt2); }

LpsDiffTest lps_diff_test(const ForecastSet& a, const ForecastSet& b) {
  std::map<std::string, const ForecastRecord*> by_unit;
  for (const auto& r : b.records) {
    if (!by_unit.emplace(r.unit, &r).second) throw Error(ErrorCode::kAlignment, "duplicate unit " + r.unit);
  }
  if (a.records.size() != b.records.size()) {
    throw Error(ErrorCode::kAlignment, "forecast sets cover different numbers of units");
  }
  std::vector<double> d;
  d.reserve(a.records.size());
  for (const auto& r : a.records) {
    const auto it = by_unit.find(r.unit);
    if (it == by_unit.end()) throw Error(ErrorCode::kAlignment, "unit " + r.unit + " is missing from the second set");
    if (it->second->y != r.y) throw Error(ErrorCode::kAlignment, "unit " + r.unit + " has different outcomes");
    d.push_back(log_score(r.p_hat, r.y) - log_score(it->second->p_hat, it->second->y));
  }
  if (d.size() < 10) throw Error(ErrorCode::kInsufficientData, "paired test needs at least 10 matched units");
  LpsDiffTest out;
  out.n = d.size();
  const auto n = static_cast<double>(d.size());
  for (double v : d) out.mean_diff += v;
  out.mean_diff /= n;
  double ss = 0.0;
  for (double v : d) ss += (v - out.mean_diff) * (v - out.mean_diff);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) {
    out.degenerate = true;
    out.t_stat = std::numeric_limits<double>::quiet_NaN();
    out.p_value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.t_stat = out.mean_diff / (sd / std::sqrt(n));
  out.p_value = normal_two_sided_p(out.t_stat);
  return out;
}

BiasSdRmse bias_sd_rmse(std::span<const double> estimates, double truth) {
  if (estimates.empty()) throw Error(ErrorCode::kEmptyData, "no estimates to summarize");
  const auto n = static_cast<double>(estimates.size());
  double mean = 0.0;
  for (double v : estimates) mean += v;
  mean /= n;
  double var = 0.0;
  double mse = 0.0;
  for (double v : estimates) {
    var += (v - mean) * (v - mean);
    mse += (v - truth) * (v - truth);
  }
  BiasSdRmse out;
  out.bias = mean - truth;
  out.sd = std::sqrt(var / n);
  out.rmse = std::sqrt(mse / n);
  return out;
}

}  // namespace tailbin
