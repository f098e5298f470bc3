#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "tailbin/error.hpp"
#include "tailbin/numerics.hpp"
#include "tailbin/tail_index.hpp"

using namespace tailbin;

namespace {

std::vector<double> one_to(int n) {
  std::vector<double> v;
  for (int i = 1; i <= n; ++i) v.push_back(i);
  return v;
}

std::vector<double> pareto_sample(std::uint64_t seed, double alpha, int n) {
  RngStream s = make_rng_stream(seed, 0);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = sample_pareto(s, alpha);
  return v;
}

}  // namespace

TEST(Threshold, TypeSeven) {
  const auto v = one_to(100);
  EXPECT_NEAR(select_threshold(v, 0.90), 90.1, 1e-12);
  EXPECT_NEAR(select_threshold(v, 0.975), 97.525, 1e-12);
}

TEST(Threshold, MedianOfShiftedSymmetric) {
  std::vector<double> v;
  for (int i = -5; i <= 5; ++i) v.push_back(i + 6.0);
  EXPECT_DOUBLE_EQ(select_threshold(v, 0.5), 6.0);
}

TEST(Threshold, NeedsTenObservations) {
  const auto v = one_to(9);
  EXPECT_THROW(select_threshold(v, 0.5), Error);
}

TEST(Hill, InverseMeanOfExcessLogs) {
  // log excesses 0, 0, 1, 1 with mean 0.5
  const std::vector<double> xs{1.0, 1.0, std::exp(1.0), std::exp(1.0)};
  const TailIndexEstimate e = hill_estimate(xs, 1.0);
  EXPECT_DOUBLE_EQ(e.alpha_hat, 2.0);
  EXPECT_EQ(e.k, 4u);
}

TEST(Hill, StandardError) {
  std::vector<double> xs(100);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = i % 2 == 0 ? 1.0 : std::exp(1.0);
  const TailIndexEstimate e = hill_estimate(xs, 1.0);
  EXPECT_NEAR(e.alpha_hat, 2.0, 1e-12);
  EXPECT_NEAR(e.se, 0.2, 1e-12);
}

TEST(Hill, ParetoMonteCarlo) {
  const auto v = pareto_sample(21, 2.0, 100000);
  const double u = select_threshold(v, 0.9);
  const TailIndexEstimate e = hill_estimate(v, u);
  EXPECT_NEAR(e.alpha_hat, 2.0, 0.07);
  EXPECT_NEAR(e.alpha_hat, oracle::hill(v, u), 1e-10);
}

TEST(Hill, DegenerateTailThrows) {
  const std::vector<double> v(20, 3.0);
  EXPECT_THROW(hill_estimate(v, 3.0), Error);
}

TEST(RankHalf, ExactLine) {
  const int k = 50;
  std::vector<double> xs;
  for (int r = 1; r <= k; ++r) xs.push_back(std::pow((r - 0.5) / k, -0.5));
  const double u = *std::min_element(xs.begin(), xs.end());
  const TailIndexEstimate e = rank_half_estimate(xs, u);
  EXPECT_NEAR(e.alpha_hat, 2.0, 1e-9);
  EXPECT_NEAR(e.se, 2.0 * std::sqrt(2.0 / 50.0), 1e-9);
}

TEST(RankHalf, ParetoMonteCarlo) {
  const auto v = pareto_sample(22, 1.0, 100000);
  const TailIndexEstimate e = rank_half_estimate(v, select_threshold(v, 0.975));
  EXPECT_NEAR(e.alpha_hat, 1.0, 0.09);
}

TEST(LogLog, TwoPoints) {
  const std::vector<double> xs{std::exp(1.0), 1.0};
  const auto pts = loglog_points(xs);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_NEAR(pts[0].log_x, 0.0, 1e-15);
  EXPECT_NEAR(pts[0].log_survival, std::log(0.75), 1e-15);
  EXPECT_NEAR(pts[1].log_x, 1.0, 1e-15);
  EXPECT_NEAR(pts[1].log_survival, std::log(0.25), 1e-15);
}

TEST(LogLog, ParetoSlope) {
  const auto v = pareto_sample(23, 1.0, 100000);
  const auto pts = loglog_points(v);
  const std::size_t start = pts.size() * 9 / 10;
  double mx = 0, my = 0;
  const double n = static_cast<double>(pts.size() - start);
  for (std::size_t i = start; i < pts.size(); ++i) {
    mx += pts[i].log_x;
    my += pts[i].log_survival;
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = start; i < pts.size(); ++i) {
    sxy += (pts[i].log_x - mx) * (pts[i].log_survival - my);
    sxx += (pts[i].log_x - mx) * (pts[i].log_x - mx);
  }
  EXPECT_NEAR(sxy / sxx, -1.0, 0.1);
}

TEST(LogLog, ConstantSampleStacksVertically) {
  const std::vector<double> v(5, 2.0);
  for (const auto& p : loglog_points(v)) EXPECT_DOUBLE_EQ(p.log_x, std::log(2.0));
}
