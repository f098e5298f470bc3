#include "tailbin/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

#include "tailbin/baselines.hpp"
#include "tailbin/error.hpp"

namespace tailbin {

namespace {

constexpr double kElasticityQuantile = 0.975;

const std::vector<std::string> kExp1Estimators{"tail", "logit_all", "logit_tail", "local_linear", "local_logit"};
const std::vector<std::string> kExp2Estimators{"tail", "logit_all", "logit_tail"};

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorCode::kInvalidParameter, message);
}

template <class F>
std::optional<double> attempt(F&& f) {
  try {
    const double v = f();
    if (std::isfinite(v)) return v;
  } catch (const Error&) {
  }
  return std::nullopt;
}

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index writes
// only its own slot, so the result does not depend on scheduling.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string kind_name(ExperimentKind kind) { return kind == ExperimentKind::kExp1 ? "exp1" : "exp2"; }

std::vector<std::pair<double, double>> cells_of(const ExperimentConfig& c) {
  std::vector<std::pair<double, double>> cells;
  for (double ax : c.alpha_x) {
    for (double ae : c.alpha_eps) cells.emplace_back(ax, ae);
  }
  return cells;
}

std::vector<SummaryRow> summarize(const ExperimentConfig& config, const std::vector<CellResult>& cells) {
  std::vector<SummaryRow> rows;
  for (const auto& cell : cells) {
    for (const auto& s : cell.series) {
      SummaryRow row;
      row.experiment = kind_name(config.experiment);
      row.alpha_x = cell.alpha_x;
      row.alpha_eps = cell.alpha_eps;
      row.estimator = s.estimator;
      row.estimand = s.estimand;
      row.eval_point = s.eval_point;
      std::vector<double> ok;
      for (const auto& v : s.values) {
        if (v) ok.push_back(*v);
      }
      row.n_ok = ok.size();
      if (!ok.empty()) row.stats = bias_sd_rmse(ok, s.truth);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Experiment 1
// ---------------------------------------------------------------------------

std::vector<Series> exp1_series(const ExperimentConfig& config, const DgpTruth& truth) {
  std::vector<Series> out;
  const auto add = [&](const std::string& est, const std::string& what, std::optional<double> q, double t) {
    out.push_back({est, what, q, t, std::vector<std::optional<double>>(config.reps)});
  };
  for (const auto& est : kExp1Estimators) {
    if (!config.wants(est)) continue;
    if (est == "tail") {
      add(est, "alpha0", std::nullopt, truth.alpha0());
      add(est, "alpha1", std::nullopt, truth.alpha1());
    }
    add(est, "elasticity", kElasticityQuantile, truth.elasticity_limit());
    for (double q : config.eval_quantiles) {
      add(est, "prob", q, truth.prob(quantile_abs_t(truth.alpha_x, q)));
    }
    for (double q : config.eval_quantiles) {
      add(est, "partial_effect", q, truth.partial_effect(quantile_abs_t(truth.alpha_x, q)));
    }
  }
  return out;
}

// Values for one repetition in the order of exp1_series.
std::vector<std::optional<double>> exp1_rep(const ExperimentConfig& config, double ax, double ae, std::size_t rep) {
  RngStream stream = make_rng_stream(config.base_seed, static_cast<std::uint32_t>(rep));
  const Exp1Sample sample = dgp_exp1(stream, ax, ae, config.n);
  const CrossSection& data = sample.data;
  const double x_el = quantile_abs_t(ax, kElasticityQuantile);
  std::vector<double> x_eval;
  for (double q : config.eval_quantiles) x_eval.push_back(quantile_abs_t(ax, q));

  std::vector<std::optional<double>> out;
  const auto emit_curve = [&](const std::function<double(double)>& prob) {
    out.push_back(attempt([&] { return elasticity_numeric(prob, x_el); }));
    for (double x : x_eval) out.push_back(attempt([&] { return prob(x); }));
    for (double x : x_eval) out.push_back(attempt([&] { return partial_effect(prob, x); }));
  };
  const auto emit_missing = [&](std::size_t count) { out.insert(out.end(), count, std::nullopt); };
  const std::size_t curve_len = 1 + 2 * x_eval.size();

  std::vector<double> xs(data.x.begin(), data.x.end());
  std::vector<double> ys(data.y.begin(), data.y.end());
  std::optional<double> h;
  try {
    h = silverman_bandwidth(xs);
  } catch (const Error&) {
  }

  for (const auto& est : kExp1Estimators) {
    if (!config.wants(est)) continue;
    if (est == "tail") {
      std::optional<CsFit> fit;
      try {
        fit = fit_cs_tail(data, config.tail_q, config.cs_method);
      } catch (const Error&) {
      }
      if (!fit) {
        emit_missing(2 + curve_len);
        continue;
      }
      const Vector z = Vector::Ones(1);
      out.push_back(fit->alpha(0, z));
      out.push_back(fit->alpha(1, z));
      out.push_back(extreme_elasticity_cs(*fit, z).value);
      for (double x : x_eval) out.push_back(attempt([&] { return predict_prob_cs(*fit, x, z); }));
      for (double x : x_eval) {
        out.push_back(attempt([&] { return partial_effect([&](double u) { return predict_prob_cs(*fit, u, z); }, x); }));
      }
    } else if (est == "logit_all" || est == "logit_tail") {
      std::optional<LogitFit> fit;
      try {
        fit = fit_logit_cs(data, est == "logit_all" ? Subset::kAll : Subset::kTail, config.tail_q);
      } catch (const Error&) {
      }
      if (!fit) {
        emit_missing(curve_len);
        continue;
      }
      emit_curve([&](double u) { return fit->predict(u); });
    } else if (est == "local_linear") {
      if (!h) {
        emit_missing(curve_len);
        continue;
      }
      emit_curve([&](double u) { return local_linear(xs, ys, u, KernelSpec{*h}); });
    } else {
      if (!h) {
        emit_missing(curve_len);
        continue;
      }
      emit_curve([&](double u) { return local_logit(xs, ys, u, KernelSpec{*h}).p; });
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment 2
// ---------------------------------------------------------------------------

PanelData estimation_panel(const PanelData& full, std::size_t t_est) {
  PanelData est;
  est.units.reserve(full.units.size());
  for (const auto& u : full.units) {
    PanelUnit v;
    v.id = u.id;
    v.z = u.z;
    v.y.assign(u.y.begin(), u.y.begin() + static_cast<std::ptrdiff_t>(t_est));
    v.x.assign(u.x.begin(), u.x.begin() + static_cast<std::ptrdiff_t>(t_est));
    est.units.push_back(std::move(v));
  }
  return est;
}

struct Exp2RepOut {
  std::optional<double> theta_star;
  std::vector<LpsRepRow> lps;
};

Exp2RepOut exp2_rep(const ExperimentConfig& config, double ax, double ae, std::size_t rep) {
  RngStream stream = make_rng_stream(config.base_seed, static_cast<std::uint32_t>(rep));
  const Exp2Sample sample = dgp_exp2(stream, ax, ae, config.n, config.t);
  const PanelData est = estimation_panel(sample.panel, config.t);
  Exp2RepOut out;

  double threshold = 0.0;
  std::vector<std::size_t> targets;
  try {
    threshold = pooled_threshold(est, config.tail_q);
    targets = forecast_units(sample.panel, config.t, threshold);
  } catch (const Error&) {
  }

  std::vector<std::pair<std::string, std::optional<FeFit>>> fits;
  for (const auto& name : kExp2Estimators) {
    if (!config.wants(name)) continue;
    std::optional<FeFit> fit;
    try {
      if (name == "tail") {
        fit = fit_panel_fe(est, config.tail_q, FeTransform::kLogTail, config.correction);
      } else {
        fit = fit_logit_panel(est, name == "logit_all" ? Subset::kAll : Subset::kTail, config.tail_q, config.correction);
      }
    } catch (const Error&) {
    }
    if (name == "tail" && fit && fit->theta_star.size() == 1 && std::isfinite(fit->theta_star[0])) {
      out.theta_star = fit->theta_star[0];
    }
    fits.emplace_back(name, std::move(fit));
  }

  std::vector<ForecastSet> sets(fits.size());
  for (std::size_t k = 0; k < fits.size(); ++k) {
    if (!fits[k].second) continue;
    for (std::size_t idx : targets) {
      const PanelUnit& u = sample.panel.units[idx];
      try {
        const UnitForecast f = forecast_unit(*fits[k].second, u.id, u.x[config.t], u.z);
        sets[k].records.push_back({u.id, f.p_hat, u.y[config.t]});
      } catch (const Error&) {
      }
    }
  }
  std::optional<std::size_t> tail_idx;
  for (std::size_t k = 0; k < fits.size(); ++k) {
    if (fits[k].first == "tail" && fits[k].second) tail_idx = k;
  }
  for (std::size_t k = 0; k < fits.size(); ++k) {
    LpsRepRow row;
    row.alpha_x = ax;
    row.alpha_eps = ae;
    row.rep = rep;
    row.estimator = fits[k].first;
    if (fits[k].second && !sets[k].records.empty()) {
      const LpsSummary s = log_predictive_score(sets[k]);
      row.sum_lps = s.sum;
      row.mean_lps = s.mean;
      row.n_f = s.n;
    }
    if (tail_idx && k != *tail_idx && fits[k].second) {
      // Pair on the units both estimators forecast.
      ForecastSet a;
      ForecastSet b;
      for (const auto& r : sets[k].records) {
        const auto& tr = sets[*tail_idx].records;
        const auto it = std::find_if(tr.begin(), tr.end(), [&](const ForecastRecord& q) { return q.unit == r.unit; });
        if (it == tr.end()) continue;
        a.records.push_back(r);
        b.records.push_back(*it);
      }
      try {
        const LpsDiffTest test = lps_diff_test(a, b);
        if (!test.degenerate) row.t_vs_tail = test.t_stat;
      } catch (const Error&) {
      }
    }
    out.lps.push_back(std::move(row));
  }
  return out;
}

std::vector<LpsRow> aggregate_lps(const std::vector<CellResult>& cells) {
  std::vector<LpsRow> rows;
  for (const auto& cell : cells) {
    std::vector<std::string> names;
    for (const auto& r : cell.lps_reps) {
      if (std::find(names.begin(), names.end(), r.estimator) == names.end()) names.push_back(r.estimator);
    }
    for (const auto& name : names) {
      LpsRow row;
      row.alpha_x = cell.alpha_x;
      row.alpha_eps = cell.alpha_eps;
      row.estimator = name;
      double sum = 0.0;
      double mean = 0.0;
      double nf = 0.0;
      std::size_t k = 0;
      double tsum = 0.0;
      std::size_t kt = 0;
      for (const auto& r : cell.lps_reps) {
        if (r.estimator != name) continue;
        if (r.sum_lps && r.mean_lps) {
          sum += *r.sum_lps;
          mean += *r.mean_lps;
          nf += static_cast<double>(r.n_f);
          ++k;
        }
        if (r.t_vs_tail) {
          tsum += *r.t_vs_tail;
          ++kt;
        }
      }
      if (k > 0) {
        row.sum_lps = sum / static_cast<double>(k);
        row.mean_lps = mean / static_cast<double>(k);
        row.n_f = nf / static_cast<double>(k);
      }
      if (kt > 0) {
        // Stouffer combination of the per-repetition statistics.
        row.t_vs_tail = tsum / std::sqrt(static_cast<double>(kt));
        row.p_vs_tail = normal_two_sided_p(*row.t_vs_tail);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

void ExperimentConfig::validate() const {
  require(!alpha_x.empty(), "alpha_x is required");
  require(!alpha_eps.empty(), "alpha_eps is required");
  for (double a : alpha_x) require(a > 0.0 && std::isfinite(a), "alpha_x values must be positive");
  for (double a : alpha_eps) require(a > 0.0 && std::isfinite(a), "alpha_eps values must be positive");
  require(reps >= 1, "reps must be at least 1");
  require(n >= 20, "n must be at least 20");
  require(tail_q > 0.0 && tail_q < 1.0, "tail_q must lie in (0,1)");
  if (experiment == ExperimentKind::kExp2) require(t >= 2, "t must be at least 2");
  for (double q : eval_quantiles) require(q > 0.0 && q < 1.0, "eval_quantiles must lie in (0,1)");
  require(!estimators.empty(), "estimators must not be empty");
  const auto& known = experiment == ExperimentKind::kExp1 ? kExp1Estimators : kExp2Estimators;
  for (const auto& e : estimators) {
    require(std::find(known.begin(), known.end(), e) != known.end(),
            "estimators: unknown name '" + e + "' for " + kind_name(experiment));
  }
}

bool ExperimentConfig::wants(const std::string& estimator) const {
  return std::find(estimators.begin(), estimators.end(), estimator) != estimators.end();
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  if (kind == ExperimentKind::kExp2) {
    c.tail_q = 0.90;
    c.estimators = kExp2Estimators;
    c.eval_quantiles.clear();
  }
  return c;
}

double DgpTruth::prob(double x) const {
  const double u = x - med_x + med_eps;
  return u <= 0.0 ? 0.0 : abs_t_cdf(alpha_eps, u);
}

double DgpTruth::partial_effect(double x) const {
  const double u = x - med_x + med_eps;
  return u <= 0.0 ? 0.0 : abs_t_pdf(alpha_eps, u);
}

DgpTruth make_truth(double alpha_x, double alpha_eps) {
  DgpTruth t;
  t.alpha_x = alpha_x;
  t.alpha_eps = alpha_eps;
  t.med_x = quantile_abs_t(alpha_x, 0.5);
  t.med_eps = quantile_abs_t(alpha_eps, 0.5);
  return t;
}

Exp1Sample dgp_exp1(RngStream& stream, double alpha_x, double alpha_eps, std::size_t n) {
  Exp1Sample s;
  s.truth = make_truth(alpha_x, alpha_eps);
  const double cut = s.truth.med_x - s.truth.med_eps;
  std::vector<int> y(n);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = sample_abs_t(stream, alpha_x);
    const double eps = sample_abs_t(stream, alpha_eps);
    y[i] = x[i] - eps >= cut ? 1 : 0;
  }
  s.data = CrossSection::with_constant_z(std::move(y), std::move(x));
  return s;
}

double draw_lambda_shift(RngStream& stream) {
  const bool low = stream.uniform() < 0.2;
  return (low ? -0.25 : 0.25) + 0.1 * stream.normal();
}

Exp2Sample dgp_exp2(RngStream& stream, double alpha_x, double alpha_eps, std::size_t n, std::size_t t) {
  Exp2Sample s;
  s.truth = make_truth(alpha_x, alpha_eps);
  const double cut = s.truth.med_x - s.truth.med_eps;
  s.panel.units.reserve(n);
  s.lambda.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double lambda = std::max(alpha_x + draw_lambda_shift(stream), 0.0);
    if (lambda < 0.05) {
      lambda = 0.05;
      ++s.clamped;
    }
    s.lambda.push_back(lambda);
    PanelUnit u;
    u.id = std::to_string(i + 1);
    u.z = Vector::Ones(1);
    u.y.resize(t + 1);
    u.x.resize(t + 1);
    for (std::size_t p = 0; p <= t; ++p) {
      u.x[p] = sample_abs_t(stream, lambda);
      const double eps = sample_abs_t(stream, alpha_eps);
      u.y[p] = u.x[p] - eps >= cut ? 1 : 0;
    }
    s.panel.units.push_back(std::move(u));
  }
  return s;
}

std::vector<std::size_t> forecast_units(const PanelData& panel, std::size_t t_est, double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < panel.units.size(); ++i) {
    const PanelUnit& u = panel.units[i];
    if (u.periods() <= t_est || !u.observed(t_est) || u.x[t_est] < threshold) continue;
    int tail = 0;
    int ones = 0;
    for (std::size_t t = 0; t < t_est; ++t) {
      if (u.observed(t) && u.x[t] >= threshold) {
        ++tail;
        ones += u.y[t];
      }
    }
    if (tail >= 2 && ones > 0 && ones < tail) out.push_back(i);
  }
  return out;
}

const Series* ExperimentResult::find(double alpha_x, double alpha_eps, const std::string& estimator,
                                     const std::string& estimand, std::optional<double> eval_point) const {
  for (const auto& cell : cells) {
    if (cell.alpha_x != alpha_x || cell.alpha_eps != alpha_eps) continue;
    for (const auto& s : cell.series) {
      if (s.estimator != estimator || s.estimand != estimand) continue;
      if (eval_point.has_value() != s.eval_point.has_value()) continue;
      if (eval_point && std::abs(*eval_point - *s.eval_point) > 1e-12) continue;
      return &s;
    }
  }
  return nullptr;
}

std::size_t experiment_threads() {
  if (const char* env = std::getenv("TAILBIN_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentResult run_experiment1(const ExperimentConfig& config, std::size_t threads) {
  config.validate();
  require(config.experiment == ExperimentKind::kExp1, "run_experiment1 needs an exp1 config");
  ExperimentResult result;
  result.config = config;
  for (const auto& [ax, ae] : cells_of(config)) {
    CellResult cell;
    cell.alpha_x = ax;
    cell.alpha_eps = ae;
    cell.series = exp1_series(config, make_truth(ax, ae));
    std::vector<std::vector<std::optional<double>>> reps(config.reps);
    const double a = ax;
    const double e = ae;
    parallel_for(config.reps, threads, [&](std::size_t r) { reps[r] = exp1_rep(config, a, e, r); });
    for (std::size_t r = 0; r < config.reps; ++r) {
      for (std::size_t k = 0; k < cell.series.size(); ++k) cell.series[k].values[r] = reps[r][k];
    }
    result.cells.push_back(std::move(cell));
  }
  result.summary = summarize(config, result.cells);
  return result;
}

ExperimentResult run_experiment2(const ExperimentConfig& config, std::size_t threads) {
  config.validate();
  require(config.experiment == ExperimentKind::kExp2, "run_experiment2 needs an exp2 config");
  ExperimentResult result;
  result.config = config;
  for (const auto& [ax, ae] : cells_of(config)) {
    CellResult cell;
    cell.alpha_x = ax;
    cell.alpha_eps = ae;
    std::vector<Exp2RepOut> reps(config.reps);
    const double a = ax;
    const double e = ae;
    parallel_for(config.reps, threads, [&](std::size_t r) { reps[r] = exp2_rep(config, a, e, r); });
    if (config.wants("tail")) {
      Series s{"tail", "theta_star", std::nullopt, -ae, {}};
      for (const auto& r : reps) s.values.push_back(r.theta_star);
      cell.series.push_back(std::move(s));
    }
    for (auto& r : reps) {
      for (auto& row : r.lps) cell.lps_reps.push_back(std::move(row));
    }
    result.cells.push_back(std::move(cell));
  }
  result.summary = summarize(config, result.cells);
  result.lps = aggregate_lps(result.cells);
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t threads) {
  return config.experiment == ExperimentKind::kExp1 ? run_experiment1(config, threads)
                                                    : run_experiment2(config, threads);
}

}  // namespace tailbin
