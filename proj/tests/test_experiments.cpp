#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "tailbin/error.hpp"
#include "tailbin/experiments.hpp"
#include "tailbin/io.hpp"
#include "tailbin/tail_index.hpp"

using namespace tailbin;

TEST(Truth, MedianCrossingIsHalf) {
  for (double ax : {0.5, 1.0, 2.0}) {
    for (double ae : {0.5, 1.0, 2.0}) {
      const DgpTruth t = make_truth(ax, ae);
      EXPECT_NEAR(t.prob(t.med_x), 0.5, 1e-9);
      EXPECT_NEAR(t.med_x, oracle::abs_t_quantile(ax, 0.5), 1e-8);
    }
  }
  const DgpTruth t = make_truth(1.0, 1.0);
  EXPECT_EQ(t.alpha0(), 2.0);
  EXPECT_EQ(t.alpha1(), 1.0);
  EXPECT_EQ(t.elasticity_limit(), -1.0);
  EXPECT_NEAR(t.partial_effect(3.0),
              oracle::central_diff([&](double x) { return oracle::abs_t_cdf(1.0, x); }, 3.0, 1e-5), 1e-8);
}

TEST(Exp1Dgp, OutcomeShareIsHalf) {
  RngStream s = make_rng_stream(91, 0);
  const Exp1Sample e = dgp_exp1(s, 1.0, 1.0, 10000);
  double ones = 0;
  for (int y : e.data.y) ones += y;
  EXPECT_NEAR(ones / 10000.0, 0.5, 0.02);
}

TEST(Exp1Dgp, SubsampleTailIndices) {
  RngStream s = make_rng_stream(92, 0);
  const Exp1Sample e = dgp_exp1(s, 1.0, 1.0, 400000);
  for (int y = 0; y < 2; ++y) {
    std::vector<double> sub;
    for (std::size_t i = 0; i < e.data.size(); ++i) {
      if (e.data.y[i] == y) sub.push_back(e.data.x[i]);
    }
    const TailIndexEstimate est = rank_half_estimate(sub, select_threshold(sub, 0.995));
    const double target = y == 1 ? 1.0 : 2.0;
    EXPECT_NEAR(est.alpha_hat, target, 3.0 * est.se) << "y=" << y;
  }
}

TEST(Exp2Dgp, LambdaMixture) {
  RngStream s = make_rng_stream(93, 0);
  const int n = 1000000;
  double sum = 0.0;
  int clamped = 0;
  for (int i = 0; i < n; ++i) {
    const double d = draw_lambda_shift(s);
    sum += d;
    clamped += 1.0 + d <= 0.0;
  }
  EXPECT_NEAR(sum / n, 0.15, 0.002);
  EXPECT_EQ(clamped, 0);
}

TEST(Exp2Dgp, UnitTailIndex) {
  RngStream s = make_rng_stream(94, 0);
  const Exp2Sample e = dgp_exp2(s, 1.0, 1.0, 3, 100000);
  EXPECT_EQ(e.clamped, 0u);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& x = e.panel.units[i].x;
    const TailIndexEstimate est = rank_half_estimate(x, select_threshold(x, 0.99));
    EXPECT_NEAR(est.alpha_hat, e.lambda[i], 3.0 * est.se);
  }
  EXPECT_EQ(e.panel.units[0].periods(), 100001u);
}

TEST(ForecastSet, Rules) {
  PanelData p;
  auto unit = [](std::string id, std::vector<double> x, std::vector<int> y) {
    PanelUnit u;
    u.id = std::move(id);
    u.z = Vector::Ones(1);
    u.x = std::move(x);
    u.y = std::move(y);
    return u;
  };
  p.units.push_back(unit("switch", {10, 12, 1, 11}, {0, 1, 0, 1}));
  p.units.push_back(unit("flat", {10, 12, 1, 11}, {1, 1, 0, 1}));
  p.units.push_back(unit("one_tail", {10, 1, 1, 11}, {0, 1, 0, 1}));
  p.units.push_back(unit("low_next", {10, 12, 1, 2}, {0, 1, 0, 1}));
  p.units.push_back(unit("tie", {10, 12, 1, 10}, {1, 0, 0, 1}));
  const auto idx = forecast_units(p, 3, 10.0);
  ASSERT_EQ(idx.size(), 2u);
  EXPECT_EQ(p.units[idx[0]].id, "switch");
  EXPECT_EQ(p.units[idx[1]].id, "tie");
}

TEST(Config, Validation) {
  ExperimentConfig c = default_config(ExperimentKind::kExp1);
  try {
    c.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("alpha_x"), std::string::npos);
  }
  c.alpha_x = {1.0};
  c.alpha_eps = {1.0};
  EXPECT_NO_THROW(c.validate());
  c.estimators = {"tail", "nope"};
  EXPECT_THROW(c.validate(), Error);
  ExperimentConfig d = default_config(ExperimentKind::kExp2);
  EXPECT_EQ(d.tail_q, 0.90);
  EXPECT_EQ(d.estimators.size(), 3u);
}

namespace {

ExperimentConfig small_exp1() {
  ExperimentConfig c = default_config(ExperimentKind::kExp1);
  c.alpha_x = {1.0};
  c.alpha_eps = {1.0, 2.0};
  c.n = 2000;
  c.reps = 3;
  c.base_seed = 5;
  c.tail_q = 0.95;
  return c;
}

}  // namespace

TEST(Experiment1, DeterministicAcrossThreadCounts) {
  const ExperimentConfig c = small_exp1();
  const std::string a = summary_csv(run_experiment1(c, 1));
  const std::string b = summary_csv(run_experiment1(c, 1));
  const std::string d = summary_csv(run_experiment1(c, 4));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, d);
}

TEST(Experiment1, TailOnlyRows) {
  ExperimentConfig c = small_exp1();
  c.estimators = {"tail"};
  const ExperimentResult r = run_experiment1(c, 1);
  for (const auto& row : r.summary) EXPECT_EQ(row.estimator, "tail");
  ASSERT_NE(r.find(1.0, 2.0, "tail", "alpha0"), nullptr);
  EXPECT_EQ(r.find(1.0, 2.0, "tail", "alpha0")->values.size(), 3u);
  EXPECT_EQ(r.find(1.0, 2.0, "tail", "alpha0")->truth, 3.0);
  EXPECT_EQ(r.find(1.0, 2.0, "logit_all", "prob", 0.95), nullptr);
  // 2 alphas + elasticity + 4 probabilities + 4 partial effects per cell
  EXPECT_EQ(r.summary.size(), 2u * 11u);
}

TEST(Experiment2, ProducesAllEstimators) {
  ExperimentConfig c = default_config(ExperimentKind::kExp2);
  c.alpha_x = {1.0};
  c.alpha_eps = {1.0};
  c.n = 1000;
  c.t = 30;
  c.reps = 2;
  const ExperimentResult r = run_experiment2(c, 1);
  ASSERT_EQ(r.lps.size(), 3u);
  EXPECT_EQ(r.lps[0].estimator, "tail");
  EXPECT_EQ(r.lps[1].estimator, "logit_all");
  EXPECT_EQ(r.lps[2].estimator, "logit_tail");
  EXPECT_TRUE(r.lps[0].sum_lps.has_value());
  EXPECT_FALSE(r.lps[0].t_vs_tail.has_value());
  ASSERT_EQ(r.summary.size(), 1u);
  EXPECT_EQ(r.summary[0].estimand, "theta_star");
  EXPECT_EQ(lps_csv(r), lps_csv(run_experiment2(c, 3)));
}
