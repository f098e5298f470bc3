#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tailbin/error.hpp"
#include "tailbin/panel_model.hpp"

namespace tailbin {

namespace {

constexpr char kNoVariation[] = "no outcome variation";

bool uses_tail(FeTransform transform) { return transform != FeTransform::kRawAll; }

Vector regressor(FeTransform transform, double x, const Vector& z) {
  if (transform == FeTransform::kLogTail) return z * std::log(x);
  return Vector::Constant(1, x);
}

// log(1 + e^u) without overflow.
double log1pexp(double u) { return u > 0.0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); }

double unit_loglik(const FeUnitRows& u, const Vector& theta, double a) {
  double ll = 0.0;
  const Vector rt = u.r * theta;
  for (Eigen::Index t = 0; t < rt.size(); ++t) {
    const double eta = a - rt[t];
    ll += u.y[static_cast<std::size_t>(t)] == 1 ? -log1pexp(-eta) : -log1pexp(eta);
  }
  return ll;
}

double total_loglik(const FeProblem& problem, const Vector& theta, const Vector& a) {
  double ll = 0.0;
  for (std::size_t i = 0; i < problem.units.size(); ++i) {
    ll += unit_loglik(problem.units[i], theta, a[static_cast<Eigen::Index>(i)]);
  }
  return ll;
}

// Unit effect maximizing the unit likelihood at fixed theta.
double solve_unit_effect(const FeUnitRows& u, const Vector& theta, double a) {
  const Vector rt = u.r * theta;
  for (int iter = 0; iter < 100; ++iter) {
    double g = 0.0;
    double info = 0.0;
    for (Eigen::Index t = 0; t < rt.size(); ++t) {
      const double p = logistic(a - rt[t]);
      g += u.y[static_cast<std::size_t>(t)] - p;
      info += p * (1.0 - p);
    }
    if (std::abs(g) <= 1e-12 || info <= 0.0) break;
    double step = g / info;
    const double base = unit_loglik(u, theta, a);
    while (unit_loglik(u, theta, a + step) < base && std::abs(step) > 1e-14) step *= 0.5;
    a += step;
    if (std::abs(step) <= 1e-13 * std::max(1.0, std::abs(a))) break;
  }
  return a;
}

struct FeSolution {
  Vector theta;
  Vector a;
  Matrix cov;
  bool converged = false;
};

// Joint Newton on (theta, a). The Hessian is block-arrow shaped, so each step
// solves the Schur complement in theta and back-substitutes the unit effects.
FeSolution solve_fe(const FeProblem& problem, const Vector& theta_init) {
  const auto n = static_cast<Eigen::Index>(problem.units.size());
  const Eigen::Index d = problem.dim;
  FeSolution sol;
  sol.theta = theta_init;
  sol.a.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& u = problem.units[static_cast<std::size_t>(i)];
    double ones = 0.0;
    for (int y : u.y) ones += y;
    const double mean = ones / static_cast<double>(u.y.size());
    sol.a[i] = solve_unit_effect(u, sol.theta, std::log(mean / (1.0 - mean)));
  }
  double ll = total_loglik(problem, sol.theta, sol.a);

  Matrix schur(d, d);
  Vector rhs(d);
  Vector grad_a(n);
  Vector info_a(n);
  Matrix cross(n, d);
  for (int iter = 0; iter < 200; ++iter) {
    schur.setZero();
    rhs.setZero();
    Vector grad_theta = Vector::Zero(d);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& u = problem.units[static_cast<std::size_t>(i)];
      const Vector rt = u.r * sol.theta;
      double ga = 0.0;
      double da = 0.0;
      Vector b = Vector::Zero(d);
      for (Eigen::Index t = 0; t < rt.size(); ++t) {
        const double p = logistic(sol.a[i] - rt[t]);
        const double resid = u.y[static_cast<std::size_t>(t)] - p;
        const double v = p * (1.0 - p);
        const auto row = u.r.row(t).transpose();
        ga += resid;
        da += v;
        b.noalias() += v * row;
        grad_theta.noalias() -= resid * row;
        schur.noalias() += v * row * row.transpose();
      }
      grad_a[i] = ga;
      info_a[i] = std::max(da, 1e-300);
      cross.row(i) = b.transpose();
      schur.noalias() -= b * b.transpose() / info_a[i];
      rhs.noalias() += b * (ga / info_a[i]);
    }
    rhs += grad_theta;
    const double gsup = std::max(grad_theta.lpNorm<Eigen::Infinity>(), grad_a.lpNorm<Eigen::Infinity>());

    Eigen::LDLT<Matrix> ldlt(schur);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    const Vector step_theta = ldlt.solve(rhs);
    Vector step_a(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      step_a[i] = (grad_a[i] + cross.row(i).dot(step_theta)) / info_a[i];
    }
    const double decrement = grad_theta.dot(step_theta) + grad_a.dot(step_a);
    sol.cov = ldlt.solve(Matrix::Identity(d, d));
    if (gsup <= 1e-9 || decrement <= 1e-14 * std::max(1.0, std::abs(ll))) {
      sol.converged = true;
      break;
    }

    double t = 1.0;
    bool moved = false;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      const Vector cand_theta = sol.theta + t * step_theta;
      const Vector cand_a = sol.a + t * step_a;
      const double cand_ll = total_loglik(problem, cand_theta, cand_a);
      if (std::isfinite(cand_ll) && cand_ll >= ll + 1e-4 * t * decrement) {
        sol.theta = cand_theta;
        sol.a = cand_a;
        ll = cand_ll;
        moved = true;
        break;
      }
    }
    if (!moved) {
      sol.converged = gsup <= 1e-6;
      break;
    }
  }
  if (sol.cov.size() == 0) sol.cov = Matrix::Constant(d, d, std::numeric_limits<double>::quiet_NaN());
  return sol;
}

}  // namespace

FeEval fe_loglik(const FeProblem& problem, const Vector& theta, const Vector& a) {
  FeEval eval;
  eval.grad_theta = Vector::Zero(problem.dim);
  eval.grad_a = Vector::Zero(static_cast<Eigen::Index>(problem.units.size()));
  for (std::size_t i = 0; i < problem.units.size(); ++i) {
    const auto& u = problem.units[i];
    const auto ii = static_cast<Eigen::Index>(i);
    eval.value += unit_loglik(u, theta, a[ii]);
    const Vector rt = u.r * theta;
    for (Eigen::Index t = 0; t < rt.size(); ++t) {
      const double resid = u.y[static_cast<std::size_t>(t)] - logistic(a[ii] - rt[t]);
      eval.grad_a[ii] += resid;
      eval.grad_theta -= resid * u.r.row(t).transpose();
    }
  }
  return eval;
}

FeProblem build_fe_problem(const PanelData& panel, double threshold, FeTransform transform,
                           std::size_t first_period, std::size_t end_period,
                           std::vector<DroppedUnit>* dropped) {
  FeProblem problem;
  problem.dim = transform == FeTransform::kLogTail ? panel.dim_z() : 1;
  for (const auto& u : panel.units) {
    FeUnitRows rows;
    rows.id = u.id;
    std::vector<Vector> regs;
    int ones = 0;
    const std::size_t end = std::min(end_period, u.periods());
    for (std::size_t t = first_period; t < end; ++t) {
      if (!u.observed(t)) continue;
      if (uses_tail(transform) && u.x[t] < threshold) continue;
      regs.push_back(regressor(transform, u.x[t], u.z_at(t)));
      rows.y.push_back(u.y[t]);
      ones += u.y[t];
    }
    if (ones == 0 || ones == static_cast<int>(rows.y.size())) {
      if (dropped != nullptr) dropped->push_back({u.id, kNoVariation});
      continue;
    }
    rows.r.resize(static_cast<Eigen::Index>(regs.size()), problem.dim);
    for (std::size_t j = 0; j < regs.size(); ++j) rows.r.row(static_cast<Eigen::Index>(j)) = regs[j].transpose();
    problem.units.push_back(std::move(rows));
  }
  return problem;
}

FeFit fit_panel_fe(const PanelData& panel, double q, FeTransform transform, Correction correction) {
  panel.validate();
  FeFit fit;
  fit.transform = transform;
  fit.threshold = uses_tail(transform) ? pooled_threshold(panel, q) : 0.0;
  const std::size_t periods = panel.max_periods();

  const FeProblem problem = build_fe_problem(panel, fit.threshold, transform, 0, periods, &fit.dropped_units);
  if (problem.units.empty()) throw Error(ErrorCode::kNoContributingUnits, "no contributing units");
  for (const auto& u : problem.units) fit.n_obs += u.y.size();

  FeSolution full = solve_fe(problem, Vector::Zero(problem.dim));
  fit.converged = full.converged;
  fit.cov = full.cov;
  Vector theta = full.theta;

  fit.correction = Correction::kNone;
  if (correction == Correction::kJackknife) {
    // Split-panel jackknife; the first half takes the extra period when the
    // number of periods is odd.
    const std::size_t mid = (periods + 1) / 2;
    const FeProblem first = build_fe_problem(panel, fit.threshold, transform, 0, mid, nullptr);
    const FeProblem second = build_fe_problem(panel, fit.threshold, transform, mid, periods, nullptr);
    if (!first.units.empty() && !second.units.empty()) {
      const FeSolution s1 = solve_fe(first, theta);
      const FeSolution s2 = solve_fe(second, theta);
      theta = 2.0 * full.theta - 0.5 * (s1.theta + s2.theta);
      fit.correction = Correction::kJackknife;
      fit.converged = fit.converged && s1.converged && s2.converged;
    }
  }
  fit.theta_star = theta;
  for (std::size_t i = 0; i < problem.units.size(); ++i) {
    const auto& u = problem.units[i];
    const double a0 = full.a[static_cast<Eigen::Index>(i)];
    fit.a_tilde[u.id] =
        fit.correction == Correction::kJackknife ? solve_unit_effect(u, theta, a0) : a0;
  }
  return fit;
}

UnitForecast forecast_unit(const FeFit& fit, const std::string& unit_id, double x_new, const Vector& z) {
  const auto it = fit.a_tilde.find(unit_id);
  if (it == fit.a_tilde.end()) throw Error(ErrorCode::kMissingUnit, "unit " + unit_id + " is not in the fit");
  if (!(x_new > 0.0)) throw Error(ErrorCode::kDomain, "forecast x must be positive");
  UnitForecast f;
  const Vector r = regressor(fit.transform, x_new, z);
  f.p_hat = clamp_probability(logistic(it->second - r.dot(fit.theta_star)));
  f.below_threshold = uses_tail(fit.transform) && x_new < fit.threshold;
  return f;
}

double ape_panel(const FeFit& fit, const PanelData& panel, double q) {
  const double threshold = pooled_threshold(panel, q);
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& u : panel.units) {
    if (fit.a_tilde.find(u.id) == fit.a_tilde.end()) continue;
    for (std::size_t t = 0; t < u.periods(); ++t) {
      if (!u.observed(t) || u.x[t] < threshold) continue;
      const Vector z = u.z_at(t);
      sum += central_derivative([&](double v) { return forecast_unit(fit, u.id, v, z).p_hat; }, u.x[t]);
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::kInsufficientTail, "no tail observations among retained units");
  return sum / static_cast<double>(count);
}

}  // namespace tailbin
