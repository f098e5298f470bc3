#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tailbin/cs_model.hpp"
#include "tailbin/evaluation.hpp"
#include "tailbin/numerics.hpp"
#include "tailbin/panel_model.hpp"

namespace tailbin {

enum class ExperimentKind { kExp1, kExp2 };

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kExp1;
  // Cells are all combinations of alpha_x and alpha_eps.
  std::vector<double> alpha_x;
  std::vector<double> alpha_eps;
  std::size_t n = 10000;
  std::size_t t = 100;  // estimation periods, exp2 only
  std::size_t reps = 1000;
  std::uint64_t base_seed = 20240101;
  double tail_q = 0.975;
  std::vector<double> eval_quantiles{0.90, 0.95, 0.975, 0.99};
  std::vector<std::string> estimators{"tail", "logit_all", "logit_tail", "local_linear", "local_logit"};
  CsMethod cs_method = CsMethod::kRankHalf;
  Correction correction = Correction::kJackknife;

  // Throws Error(kInvalidParameter) naming the offending field.
  void validate() const;
  bool wants(const std::string& estimator) const;
};

// Defaults for the experiment kind (exp2: n 10000, t 100, tail_q 0.90,
// estimators tail/logit_all/logit_tail).
ExperimentConfig default_config(ExperimentKind kind);

struct DgpTruth {
  double alpha_x = 1.0;
  double alpha_eps = 1.0;
  double med_x = 1.0;
  double med_eps = 1.0;

  // P(Y = 1 | X = x) = P(eps <= x - med_x + med_eps).
  double prob(double x) const;
  double partial_effect(double x) const;
  double elasticity_limit() const { return -alpha_eps; }
  double alpha0() const { return alpha_x + alpha_eps; }
  double alpha1() const { return alpha_x; }
};

DgpTruth make_truth(double alpha_x, double alpha_eps);

struct Exp1Sample {
  CrossSection data;
  DgpTruth truth;
};

Exp1Sample dgp_exp1(RngStream& stream, double alpha_x, double alpha_eps, std::size_t n);

struct Exp2Sample {
  PanelData panel;  // periods = t + 1, the last one held out
  std::vector<double> lambda;
  std::size_t clamped = 0;
  DgpTruth truth;
};

Exp2Sample dgp_exp2(RngStream& stream, double alpha_x, double alpha_eps, std::size_t n, std::size_t t);

// Draw of the bimodal tail-thickness shift 0.2 N(-0.25, 0.1^2) + 0.8 N(0.25, 0.1^2).
double draw_lambda_shift(RngStream& stream);

// One estimated quantity tracked over repetitions.
struct Series {
  std::string estimator;
  std::string estimand;
  std::optional<double> eval_point;  // quantile level of x
  double truth = 0.0;
  std::vector<std::optional<double>> values;  // one per repetition, NA when absent
};

struct SummaryRow {
  std::string experiment;
  double alpha_x = 0.0;
  double alpha_eps = 0.0;
  std::string estimator;
  std::string estimand;
  std::optional<double> eval_point;
  std::optional<BiasSdRmse> stats;
  std::size_t n_ok = 0;
};

struct LpsRepRow {
  double alpha_x = 0.0;
  double alpha_eps = 0.0;
  std::size_t rep = 0;
  std::string estimator;
  std::optional<double> sum_lps;
  std::optional<double> mean_lps;
  std::size_t n_f = 0;
  std::optional<double> t_vs_tail;
};

struct LpsRow {
  double alpha_x = 0.0;
  double alpha_eps = 0.0;
  std::string estimator;
  std::optional<double> sum_lps;
  std::optional<double> mean_lps;
  std::optional<double> n_f;
  std::optional<double> t_vs_tail;
  std::optional<double> p_vs_tail;
};

struct CellResult {
  double alpha_x = 0.0;
  double alpha_eps = 0.0;
  std::vector<Series> series;
  std::vector<LpsRepRow> lps_reps;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<CellResult> cells;
  std::vector<SummaryRow> summary;
  std::vector<LpsRow> lps;

  const Series* find(double alpha_x, double alpha_eps, const std::string& estimator, const std::string& estimand,
                     std::optional<double> eval_point = std::nullopt) const;
};

// Worker count from TAILBIN_THREADS, else the hardware concurrency.
std::size_t experiment_threads();

ExperimentResult run_experiment1(const ExperimentConfig& config, std::size_t threads = experiment_threads());
ExperimentResult run_experiment2(const ExperimentConfig& config, std::size_t threads = experiment_threads());
ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t threads = experiment_threads());

// Forecast set of one held-out period: units with a tail history whose y
// switches among tail periods and whose held-out x is in the tail.
std::vector<std::size_t> forecast_units(const PanelData& panel, std::size_t t_est, double threshold);

}  // namespace tailbin
