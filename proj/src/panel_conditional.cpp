#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tailbin/baselines.hpp"
#include "tailbin/tail_index.hpp"
#include "tailbin/error.hpp"
#include "tailbin/panel_model.hpp"

namespace tailbin {

bool PanelUnit::observed(std::size_t t) const {
  return t < y.size() && t < x.size() && (y[t] == 0 || y[t] == 1) && std::isfinite(x[t]);
}

Vector PanelUnit::z_at(std::size_t t) const {
  if (time_varying_z()) return z_t.row(static_cast<Eigen::Index>(t)).transpose();
  return z;
}

Eigen::Index PanelData::dim_z() const {
  if (units.empty()) return 0;
  const PanelUnit& u = units.front();
  return u.time_varying_z() ? u.z_t.cols() : u.z.size();
}

std::size_t PanelData::max_periods() const {
  std::size_t t = 0;
  for (const auto& u : units) t = std::max(t, u.periods());
  return t;
}

std::vector<double> PanelData::pooled_x() const {
  std::vector<double> xs;
  for (const auto& u : units) {
    for (std::size_t t = 0; t < u.periods(); ++t) {
      if (u.observed(t)) xs.push_back(u.x[t]);
    }
  }
  return xs;
}

void PanelData::validate() const {
  if (units.empty()) throw Error(ErrorCode::kEmptyData, "panel has no units");
  const Eigen::Index dz = dim_z();
  if (dz < 1) throw Error(ErrorCode::kInvalidParameter, "panel units need at least one z coordinate");
  for (const auto& u : units) {
    if (u.y.size() != u.x.size()) {
      throw Error(ErrorCode::kInvalidParameter, "unit " + u.id + " has unequal y and x lengths");
    }
    const Eigen::Index udz = u.time_varying_z() ? u.z_t.cols() : u.z.size();
    if (udz != dz) throw Error(ErrorCode::kInvalidParameter, "unit " + u.id + " has a different z dimension");
    if (u.time_varying_z() && static_cast<std::size_t>(u.z_t.rows()) != u.periods()) {
      throw Error(ErrorCode::kInvalidParameter, "unit " + u.id + " z_t rows do not match its periods");
    }
    for (std::size_t t = 0; t < u.periods(); ++t) {
      if (u.observed(t) && !(u.x[t] > 0.0)) {
        throw Error(ErrorCode::kDomain, "unit " + u.id + " has a non-positive x at period " + std::to_string(t + 1));
      }
    }
  }
}

double pooled_threshold(const PanelData& panel, double q) {
  const std::vector<double> xs = panel.pooled_x();
  return select_threshold(xs, q);
}

// ---------------------------------------------------------------------------
// Conditional likelihood
// ---------------------------------------------------------------------------

namespace {

struct GroupTerms {
  double value = 0.0;
  Vector gradient;
  Matrix hessian;
};

// log P(y | sum y) for one group. Elementary symmetric polynomials of the
// scaled weights u_t = exp(eta_t - max eta) are accumulated together with
// their first and second derivatives in theta.
GroupTerms group_terms(const ConditionalGroup& g, const Vector& theta, bool derivatives) {
  const auto m = g.w.rows();
  const auto d = theta.size();
  const Vector eta = -(g.w * theta);
  const double c = eta.maxCoeff();
  int s = 0;
  double linear = 0.0;
  for (Eigen::Index t = 0; t < m; ++t) {
    if (g.y[static_cast<std::size_t>(t)] == 1) {
      ++s;
      linear += eta[t] - c;
    }
  }
  std::vector<double> e(static_cast<std::size_t>(s) + 1, 0.0);
  std::vector<Vector> de;
  std::vector<Matrix> d2e;
  e[0] = 1.0;
  if (derivatives) {
    de.assign(e.size(), Vector::Zero(d));
    d2e.assign(e.size(), Matrix::Zero(d, d));
  }
  for (Eigen::Index t = 0; t < m; ++t) {
    const double u = std::exp(eta[t] - c);
    const Vector w = -g.w.row(t).transpose();  // d u / d theta = u * w
    const auto top = std::min<Eigen::Index>(t + 1, s);
    for (auto k = static_cast<std::size_t>(top); k >= 1; --k) {
      if (derivatives) {
        d2e[k] += u * (w * w.transpose() * e[k - 1] + w * de[k - 1].transpose() +
                       de[k - 1] * w.transpose() + d2e[k - 1]);
        de[k] += u * (w * e[k - 1] + de[k - 1]);
      }
      e[k] += u * e[k - 1];
    }
  }
  const auto top = static_cast<std::size_t>(s);
  GroupTerms out;
  out.value = linear - std::log(e[top]);
  if (derivatives) {
    Vector ybar = Vector::Zero(d);
    for (Eigen::Index t = 0; t < m; ++t) {
      if (g.y[static_cast<std::size_t>(t)] == 1) ybar -= g.w.row(t).transpose();
    }
    const Vector mean = de[top] / e[top];
    out.gradient = ybar - mean;
    out.hessian = -(d2e[top] / e[top] - mean * mean.transpose());
  }
  return out;
}

}  // namespace

double ConditionalLikelihood::value(const Vector& theta) const {
  double total = 0.0;
  for (const auto& g : groups) total += g.weight * group_terms(g, theta, false).value;
  return total;
}

ObjectiveEval ConditionalLikelihood::operator()(const Vector& theta) const {
  ObjectiveEval eval;
  eval.gradient = Vector::Zero(dim);
  eval.hessian = Matrix::Zero(dim, dim);
  for (const auto& g : groups) {
    const GroupTerms terms = group_terms(g, theta, true);
    eval.value += g.weight * terms.value;
    eval.gradient += g.weight * terms.gradient;
    eval.hessian += g.weight * terms.hessian;
  }
  return eval;
}

namespace {

struct TailPeriods {
  std::vector<std::size_t> periods;
  bool switches = false;
};

TailPeriods tail_periods(const PanelUnit& u, double threshold) {
  TailPeriods tp;
  int ones = 0;
  for (std::size_t t = 0; t < u.periods(); ++t) {
    if (u.observed(t) && u.x[t] >= threshold) {
      tp.periods.push_back(t);
      ones += u.y[t];
    }
  }
  const auto n = static_cast<int>(tp.periods.size());
  tp.switches = n >= 2 && ones > 0 && ones < n;
  return tp;
}

bool has_log_variation(const std::vector<ConditionalGroup>& groups) {
  for (const auto& g : groups) {
    for (Eigen::Index t = 1; t < g.w.rows(); ++t) {
      if ((g.w.row(t) - g.w.row(0)).lpNorm<Eigen::Infinity>() > 0.0) return true;
    }
  }
  return false;
}

PanelFit maximize_conditional(const ConditionalLikelihood& lik, double threshold, std::size_t n_units) {
  if (!has_log_variation(lik.groups)) {
    throw Error(ErrorCode::kFlatLikelihood, "tail x values do not vary within any contributing unit");
  }
  const OptimResult opt = maximize_concave(std::cref(lik), Vector::Zero(lik.dim));
  PanelFit fit;
  fit.theta_star = opt.argmax;
  Eigen::LDLT<Matrix> ldlt(-opt.hessian_at_opt);
  fit.cov = ldlt.solve(Matrix::Identity(lik.dim, lik.dim));
  fit.threshold = threshold;
  fit.n_contributing = lik.groups.size();
  fit.n_units = n_units;
  fit.converged = opt.converged;
  return fit;
}

std::size_t min_contributors(Eigen::Index dz) {
  return std::max<std::size_t>(10, 3 * static_cast<std::size_t>(dz));
}

}  // namespace

PanelFit fit_panel_conditional(const PanelData& panel, double q) {
  panel.validate();
  const double threshold = pooled_threshold(panel, q);
  const Eigen::Index dz = panel.dim_z();
  ConditionalLikelihood lik;
  lik.dim = dz;
  for (const auto& u : panel.units) {
    const TailPeriods tp = tail_periods(u, threshold);
    if (!tp.switches) continue;
    ConditionalGroup g;
    g.w.resize(static_cast<Eigen::Index>(tp.periods.size()), dz);
    for (std::size_t j = 0; j < tp.periods.size(); ++j) {
      const std::size_t t = tp.periods[j];
      g.w.row(static_cast<Eigen::Index>(j)) = u.z_at(t).transpose() * std::log(u.x[t]);
      g.y.push_back(u.y[t]);
    }
    lik.groups.push_back(std::move(g));
  }
  if (lik.groups.size() < min_contributors(dz)) {
    throw Error(ErrorCode::kInsufficientTail, std::to_string(lik.groups.size()) +
                                                  " contributing units, need " +
                                                  std::to_string(min_contributors(dz)));
  }
  return maximize_conditional(lik, threshold, panel.units.size());
}

TailSwitcherReport tail_switcher_share(const PanelData& panel, double q) {
  panel.validate();
  TailSwitcherReport report;
  report.threshold = pooled_threshold(panel, q);
  report.n_units = panel.units.size();
  for (const auto& u : panel.units) {
    if (tail_periods(u, report.threshold).switches) ++report.n_switchers;
  }
  return report;
}

PanelFit fit_panel_local(const PanelData& panel, double q, std::optional<double> bandwidth) {
  panel.validate();
  for (const auto& u : panel.units) {
    std::size_t n_obs = 0;
    for (std::size_t t = 0; t < u.periods(); ++t) n_obs += u.observed(t) ? 1 : 0;
    if (n_obs > 2) {
      throw Error(ErrorCode::kInvalidParameter,
                  "local likelihood expects two observed periods per unit; unit " + u.id + " has more");
    }
  }
  const double threshold = pooled_threshold(panel, q);
  const Eigen::Index dz = panel.dim_z();

  struct Pair {
    const PanelUnit* unit;
    std::size_t t1;
    std::size_t t2;
  };
  std::vector<Pair> pairs;
  for (const auto& u : panel.units) {
    const TailPeriods tp = tail_periods(u, threshold);
    if (tp.switches && tp.periods.size() == 2) pairs.push_back({&u, tp.periods[0], tp.periods[1]});
  }
  if (pairs.size() < min_contributors(dz)) {
    throw Error(ErrorCode::kInsufficientTail, std::to_string(pairs.size()) + " contributing units, need " +
                                                  std::to_string(min_contributors(dz)));
  }

  double h = 0.0;
  if (bandwidth) {
    if (!(*bandwidth > 0.0)) throw Error(ErrorCode::kInvalidParameter, "bandwidth must be positive");
    h = *bandwidth;
  } else {
    std::vector<double> diffs;
    for (const auto& p : pairs) {
      const Vector dzv = p.unit->z_at(p.t1) - p.unit->z_at(p.t2);
      for (Eigen::Index k = 0; k < dz; ++k) diffs.push_back(dzv[k]);
    }
    const bool all_zero = std::all_of(diffs.begin(), diffs.end(), [](double v) { return v == 0.0; });
    // Identical z across periods makes every weight one whatever h is.
    h = all_zero ? 1.0 : silverman_bandwidth(diffs);
  }

  ConditionalLikelihood lik;
  lik.dim = dz;
  double max_weight = 0.0;
  for (const auto& p : pairs) {
    const Vector z1 = p.unit->z_at(p.t1);
    const Vector z2 = p.unit->z_at(p.t2);
    // Product Gaussian kernel relative to its peak; the 1/h^d factor is common
    // to all units and does not move the maximizer.
    double weight = 1.0;
    for (Eigen::Index k = 0; k < dz; ++k) {
      const double u = (z1[k] - z2[k]) / h;
      weight *= std::exp(-0.5 * u * u);
    }
    max_weight = std::max(max_weight, weight);
    ConditionalGroup g;
    g.w.resize(2, dz);
    g.w.row(0) = z1.transpose() * std::log(p.unit->x[p.t1]);
    g.w.row(1) = z1.transpose() * std::log(p.unit->x[p.t2]);
    g.y = {p.unit->y[p.t1], p.unit->y[p.t2]};
    g.weight = weight;
    lik.groups.push_back(std::move(g));
  }
  if (max_weight < 1e-12) {
    throw Error(ErrorCode::kEffectiveSample, "all kernel weights are below 1e-12");
  }
  PanelFit fit = maximize_conditional(lik, threshold, panel.units.size());
  fit.bandwidth = h;
  return fit;
}

double extreme_elasticity_panel(const Vector& theta_star, const Vector& z) {
  return -std::abs(z.dot(theta_star));
}

}  // namespace tailbin
