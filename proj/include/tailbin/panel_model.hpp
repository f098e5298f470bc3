#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tailbin/numerics.hpp"

namespace tailbin {

// One unit's series. Missing periods carry y = -1 (or a non-finite x).
// z is the unit covariate vector; z_t, when non-empty, holds one row per
// period and takes precedence over z.
struct PanelUnit {
  std::string id;
  std::vector<int> y;
  std::vector<double> x;
  Vector z;
  Matrix z_t;

  std::size_t periods() const { return y.size(); }
  bool observed(std::size_t t) const;
  Vector z_at(std::size_t t) const;
  bool time_varying_z() const { return z_t.rows() > 0; }
};

struct PanelData {
  std::vector<PanelUnit> units;

  Eigen::Index dim_z() const;
  std::size_t max_periods() const;
  std::vector<double> pooled_x() const;
  void validate() const;
};

// Pooled empirical quantile of every observed x.
double pooled_threshold(const PanelData& panel, double q);

// ---------------------------------------------------------------------------
// Conditional likelihood (small T)
// ---------------------------------------------------------------------------

// One contributing unit: tail-period regressors w_t = z log x_t (rows) and
// outcomes. The likelihood conditions on the number of ones in y.
struct ConditionalGroup {
  Matrix w;
  std::vector<int> y;
  double weight = 1.0;
};

// Conditional log-likelihood in theta, where the per-period logit index is
// -w_t . theta.
struct ConditionalLikelihood {
  std::vector<ConditionalGroup> groups;
  Eigen::Index dim = 0;

  ObjectiveEval operator()(const Vector& theta) const;
  double value(const Vector& theta) const;
};

struct PanelFit {
  Vector theta_star;
  Matrix cov;
  double threshold = 0.0;
  std::size_t n_contributing = 0;
  std::size_t n_units = 0;
  double bandwidth = 0.0;  // local fits only
  bool converged = false;
};

PanelFit fit_panel_conditional(const PanelData& panel, double q);

// Units whose y varies over at least two tail periods, as a share of all units.
struct TailSwitcherReport {
  double threshold = 0.0;
  std::size_t n_switchers = 0;
  std::size_t n_units = 0;
  double share() const { return n_units == 0 ? 0.0 : static_cast<double>(n_switchers) / n_units; }
};

TailSwitcherReport tail_switcher_share(const PanelData& panel, double q);

// Kernel-weighted two-period conditional likelihood for time-varying z.
// bandwidth = nullopt selects Silverman's rule on the pooled z differences.
PanelFit fit_panel_local(const PanelData& panel, double q, std::optional<double> bandwidth = std::nullopt);

// ---------------------------------------------------------------------------
// Fixed effects (large T)
// ---------------------------------------------------------------------------

enum class FeTransform { kLogTail, kRawAll, kRawTail };
enum class Correction { kNone, kJackknife };

struct DroppedUnit {
  std::string id;
  std::string reason;
};

struct FeFit {
  Vector theta_star;
  Matrix cov;
  std::map<std::string, double> a_tilde;
  FeTransform transform = FeTransform::kLogTail;
  Correction correction = Correction::kNone;
  double threshold = 0.0;
  std::vector<DroppedUnit> dropped_units;
  std::size_t n_obs = 0;
  bool converged = false;
};

// Per-unit estimation rows for the logistic form
// P = 1 / (1 + exp(-a_i + r_t . theta)).
struct FeUnitRows {
  std::string id;
  Matrix r;
  std::vector<int> y;
};

struct FeProblem {
  std::vector<FeUnitRows> units;
  Eigen::Index dim = 0;
};

struct FeEval {
  double value = 0.0;
  Vector grad_theta;
  Vector grad_a;
};

FeEval fe_loglik(const FeProblem& problem, const Vector& theta, const Vector& a);

// Estimation rows for the given transform; units without outcome variation
// are listed in dropped.
FeProblem build_fe_problem(const PanelData& panel, double threshold, FeTransform transform,
                           std::size_t first_period, std::size_t end_period,
                           std::vector<DroppedUnit>* dropped);

FeFit fit_panel_fe(const PanelData& panel, double q, FeTransform transform, Correction correction);

struct UnitForecast {
  double p_hat = 0.5;
  bool below_threshold = false;
};

UnitForecast forecast_unit(const FeFit& fit, const std::string& unit_id, double x_new, const Vector& z);

// Mean derivative of the unit forecast in x over retained units' tail observations.
double ape_panel(const FeFit& fit, const PanelData& panel, double q);

double extreme_elasticity_panel(const Vector& theta_star, const Vector& z);

// ---------------------------------------------------------------------------
// Dynamic panel
// ---------------------------------------------------------------------------

// The four five-period outcome patterns used by the dynamic likelihood.
inline constexpr std::array<std::array<int, 5>, 4> kDynamicEvents{{
    {0, 0, 1, 1, 0},
    {0, 1, 1, 0, 0},
    {1, 1, 0, 0, 1},
    {1, 0, 0, 1, 1},
}};

struct DynamicWindow {
  std::array<double, 5> x{};
  int event = 0;  // index into kDynamicEvents
  Vector z;
};

// Parameters are stacked as (theta_01, theta_10, theta_11), each of size dz,
// where theta_ab belongs to the transition a -> b and theta_00 is fixed at 0.
struct DynamicLikelihood {
  std::vector<Matrix> features;  // 4 x 3dz per window, one row per event
  std::vector<int> observed;
  Eigen::Index dim = 0;

  static DynamicLikelihood from_windows(const std::vector<DynamicWindow>& windows);
  ObjectiveEval operator()(const Vector& params) const;
  double value(const Vector& params) const;
};

std::array<double, 4> dynamic_event_probabilities(const DynamicWindow& window, const Vector& params);

std::vector<DynamicWindow> dynamic_windows(const PanelData& panel, double threshold);

struct DynFit {
  Vector theta_01;
  Vector theta_10;
  Vector theta_11;
  Matrix cov;
  std::size_t n_windows = 0;
  double threshold = 0.0;
  Eigen::Index hessian_rank = 0;
  bool converged = false;
};

DynFit fit_panel_dynamic(const PanelData& panel, double q);

}  // namespace tailbin
