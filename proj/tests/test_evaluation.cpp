#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "tailbin/error.hpp"
#include "tailbin/evaluation.hpp"
#include "tailbin/numerics.hpp"

using namespace tailbin;

TEST(LogScore, Values) {
  EXPECT_NEAR(log_score(1.0 - 1e-12, 1), 0.0, 1e-11);
  EXPECT_NEAR(log_score(0.5, 0), -0.6931471805599453, 1e-15);
  EXPECT_NEAR(log_score(0.5, 1), -0.6931471805599453, 1e-15);
  EXPECT_TRUE(std::isfinite(log_score(0.0, 1)));
  EXPECT_NEAR(log_score(0.2, 0), std::log(0.8), 1e-15);
}

TEST(Lps, SumAndMean) {
  ForecastSet fs{{{"a", 0.5, 1}, {"b", 0.8, 0}}};
  const LpsSummary s = log_predictive_score(fs);
  EXPECT_NEAR(s.sum, std::log(0.5) + std::log(0.2), 1e-14);
  EXPECT_NEAR(s.mean, s.sum / 2.0, 1e-15);
  EXPECT_EQ(s.n, 2u);
  EXPECT_THROW(log_predictive_score(ForecastSet{}), Error);
}

namespace {

ForecastSet random_set(RngStream& s, int n, std::vector<double>* truth) {
  ForecastSet fs;
  for (int i = 0; i < n; ++i) {
    const double p = 0.1 + 0.8 * s.uniform();
    truth->push_back(p);
    fs.records.push_back({std::to_string(i), 0.5, s.uniform() < p ? 1 : 0});
  }
  return fs;
}

}  // namespace

TEST(DiffTest, IdenticalSetsAreDegenerate) {
  RngStream s = make_rng_stream(81, 0);
  std::vector<double> truth;
  const ForecastSet a = random_set(s, 50, &truth);
  const LpsDiffTest t = lps_diff_test(a, a);
  EXPECT_EQ(t.mean_diff, 0.0);
  EXPECT_TRUE(t.degenerate);
  EXPECT_TRUE(std::isnan(t.p_value));
}

TEST(DiffTest, BetterForecastsWin) {
  RngStream s = make_rng_stream(82, 0);
  std::vector<double> truth;
  ForecastSet b = random_set(s, 1000, &truth);
  ForecastSet a = b;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const double p = a.records[i].p_hat;
    a.records[i].p_hat = p + (truth[i] > p ? 0.1 : -0.1);
  }
  const LpsDiffTest t = lps_diff_test(a, b);
  EXPECT_GT(t.mean_diff, 0.0);
  EXPECT_LT(t.p_value, 0.05);
  EXPECT_NEAR(t.p_value, std::erfc(std::abs(t.t_stat) / std::sqrt(2.0)), 1e-15);
}

TEST(DiffTest, AlignsByUnit) {
  ForecastSet a, b;
  for (int i = 0; i < 12; ++i) {
    a.records.push_back({std::to_string(i), 0.3 + 0.03 * i, i % 2});
    b.records.insert(b.records.begin(), {std::to_string(i), 0.5, i % 2});
  }
  const LpsDiffTest t = lps_diff_test(a, b);
  double mean = 0.0;
  for (int i = 0; i < 12; ++i) mean += log_score(0.3 + 0.03 * i, i % 2) - std::log(0.5);
  EXPECT_NEAR(t.mean_diff, mean / 12.0, 1e-14);
}

TEST(DiffTest, Errors) {
  ForecastSet a, b;
  for (int i = 0; i < 12; ++i) {
    a.records.push_back({std::to_string(i), 0.4, 1});
    b.records.push_back({std::to_string(i), 0.5, 1});
  }
  ForecastSet missing = b;
  missing.records.back().unit = "other";
  EXPECT_THROW(lps_diff_test(a, missing), Error);
  ForecastSet flipped = b;
  flipped.records[0].y = 0;
  EXPECT_THROW(lps_diff_test(a, flipped), Error);
  ForecastSet small_a{{a.records.begin(), a.records.begin() + 5}};
  ForecastSet small_b{{b.records.begin(), b.records.begin() + 5}};
  EXPECT_THROW(lps_diff_test(small_a, small_b), Error);
}

TEST(BiasSdRmse, Identities) {
  const std::vector<double> same(5, 2.0);
  const BiasSdRmse z = bias_sd_rmse(same, 2.0);
  EXPECT_EQ(z.bias, 0.0);
  EXPECT_EQ(z.sd, 0.0);
  EXPECT_EQ(z.rmse, 0.0);
  const BiasSdRmse pm = bias_sd_rmse(std::vector<double>{1.0, 3.0}, 2.0);
  EXPECT_NEAR(pm.bias, 0.0, 1e-15);
  EXPECT_NEAR(pm.sd, 1.0, 1e-15);
  EXPECT_NEAR(pm.rmse, 1.0, 1e-15);
  RngStream s = make_rng_stream(83, 0);
  for (int k = 0; k < 20; ++k) {
    std::vector<double> v(37);
    for (auto& x : v) x = s.normal() * 3.0 + 1.0;
    const BiasSdRmse r = bias_sd_rmse(v, 0.4);
    EXPECT_NEAR(r.bias * r.bias + r.sd * r.sd, r.rmse * r.rmse, 1e-9);
  }
  EXPECT_THROW(bias_sd_rmse(std::vector<double>{}, 0.0), Error);
}
