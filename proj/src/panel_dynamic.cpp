#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tailbin/error.hpp"
#include "tailbin/panel_model.hpp"

namespace tailbin {

namespace {

// Block of the stacked parameter vector for the transition a -> b, or -1 for 0 -> 0.
int transition_block(int from, int to) {
  if (from == 0 && to == 1) return 0;
  if (from == 1 && to == 0) return 1;
  if (from == 1 && to == 1) return 2;
  return -1;
}

Matrix window_features(const DynamicWindow& w) {
  const Eigen::Index dz = w.z.size();
  Matrix f = Matrix::Zero(4, 3 * dz);
  for (std::size_t e = 0; e < kDynamicEvents.size(); ++e) {
    const auto& ys = kDynamicEvents[e];
    for (std::size_t t = 1; t < 5; ++t) {
      const int block = transition_block(ys[t - 1], ys[t]);
      if (block < 0) continue;
      f.block(static_cast<Eigen::Index>(e), block * dz, 1, dz) -= std::log(w.x[t]) * w.z.transpose();
    }
  }
  return f;
}

int match_event(const std::vector<int>& y, std::size_t start) {
  for (std::size_t e = 0; e < kDynamicEvents.size(); ++e) {
    bool same = true;
    for (std::size_t k = 0; k < 5 && same; ++k) same = y[start + k] == kDynamicEvents[e][k];
    if (same) return static_cast<int>(e);
  }
  return -1;
}

}  // namespace

DynamicLikelihood DynamicLikelihood::from_windows(const std::vector<DynamicWindow>& windows) {
  DynamicLikelihood lik;
  lik.dim = windows.empty() ? 0 : 3 * windows.front().z.size();
  for (const auto& w : windows) {
    lik.features.push_back(window_features(w));
    lik.observed.push_back(w.event);
  }
  return lik;
}

double DynamicLikelihood::value(const Vector& params) const {
  double total = 0.0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Vector s = features[i] * params;
    const double c = s.maxCoeff();
    total += s[observed[i]] - c - std::log((s.array() - c).exp().sum());
  }
  return total;
}

ObjectiveEval DynamicLikelihood::operator()(const Vector& params) const {
  ObjectiveEval eval;
  eval.gradient = Vector::Zero(dim);
  eval.hessian = Matrix::Zero(dim, dim);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const Matrix& f = features[i];
    const Vector s = f * params;
    const double c = s.maxCoeff();
    const Vector ex = (s.array() - c).exp().matrix();
    const double denom = ex.sum();
    const Vector p = ex / denom;
    eval.value += s[observed[i]] - c - std::log(denom);
    const Vector mean = f.transpose() * p;
    eval.gradient += f.row(observed[i]).transpose() - mean;
    eval.hessian -= f.transpose() * p.asDiagonal() * f - mean * mean.transpose();
  }
  return eval;
}

std::array<double, 4> dynamic_event_probabilities(const DynamicWindow& window, const Vector& params) {
  const Vector s = window_features(window) * params;
  const double c = s.maxCoeff();
  const Vector ex = (s.array() - c).exp().matrix();
  const double denom = ex.sum();
  std::array<double, 4> p{};
  for (std::size_t e = 0; e < 4; ++e) p[e] = ex[static_cast<Eigen::Index>(e)] / denom;
  return p;
}

std::vector<DynamicWindow> dynamic_windows(const PanelData& panel, double threshold) {
  std::vector<DynamicWindow> out;
  for (const auto& u : panel.units) {
    if (u.periods() < 5) continue;
    for (std::size_t s = 0; s + 5 <= u.periods(); ++s) {
      bool ok = true;
      for (std::size_t k = 0; k < 5 && ok; ++k) ok = u.observed(s + k) && u.x[s + k] >= threshold;
      if (!ok) continue;
      const int event = match_event(u.y, s);
      if (event < 0) continue;
      DynamicWindow w;
      for (std::size_t k = 0; k < 5; ++k) w.x[k] = u.x[s + k];
      w.event = event;
      w.z = u.z_at(s);
      out.push_back(std::move(w));
    }
  }
  return out;
}

DynFit fit_panel_dynamic(const PanelData& panel, double q) {
  panel.validate();
  if (panel.max_periods() < 5) {
    throw Error(ErrorCode::kInvalidParameter, "dynamic panel requires at least five periods");
  }
  const Eigen::Index dz = panel.dim_z();
  DynFit fit;
  fit.threshold = pooled_threshold(panel, q);
  const std::vector<DynamicWindow> windows = dynamic_windows(panel, fit.threshold);
  const std::size_t need = std::max<std::size_t>(20, 5 * static_cast<std::size_t>(dz));
  if (windows.size() < need) {
    throw Error(ErrorCode::kInsufficientTail, std::to_string(windows.size()) +
                                                  " contributing windows, need " + std::to_string(need));
  }
  const DynamicLikelihood lik = DynamicLikelihood::from_windows(windows);
  bool varies = false;
  for (const auto& f : lik.features) {
    for (Eigen::Index e = 1; e < 4 && !varies; ++e) varies = (f.row(e) - f.row(0)).lpNorm<Eigen::Infinity>() > 0.0;
    if (varies) break;
  }
  if (!varies) throw Error(ErrorCode::kFlatLikelihood, "tail x values are constant within every window");

  const OptimResult opt = maximize_concave(std::cref(lik), Vector::Zero(lik.dim));
  fit.theta_01 = opt.argmax.segment(0, dz);
  fit.theta_10 = opt.argmax.segment(dz, dz);
  fit.theta_11 = opt.argmax.segment(2 * dz, dz);
  fit.n_windows = windows.size();
  fit.converged = opt.converged;

  // Pseudo-inverse so that unidentified directions show up as a rank deficit
  // rather than a blown-up covariance.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(-opt.hessian_at_opt);
  const Vector ev = eig.eigenvalues();
  const double tol = std::max(ev.cwiseAbs().maxCoeff(), 1.0) * 1e-10;
  Vector inv = Vector::Zero(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (ev[k] > tol) {
      inv[k] = 1.0 / ev[k];
      ++fit.hessian_rank;
    }
  }
  fit.cov = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  return fit;
}

}  // namespace tailbin
