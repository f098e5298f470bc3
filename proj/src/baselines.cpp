#include "tailbin/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tailbin/error.hpp"
#include "tailbin/tail_index.hpp"

namespace tailbin {

double silverman_bandwidth(std::span<const double> values) {
  const auto n = values.size();
  if (n < 2) throw Error(ErrorCode::kInsufficientData, "bandwidth needs at least two values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw Error(ErrorCode::kDegenerateData, "values have zero standard deviation");
  if (!std::isfinite(sd)) throw Error(ErrorCode::kDegenerateData, "values have an infinite standard deviation");
  return 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
}

LogitFit fit_logit_cs(const CrossSection& data, Subset subset, double q) {
  data.validate();
  LogitFit fit;
  fit.subset = subset;
  std::vector<std::size_t> rows;
  if (subset == Subset::kAll) {
    for (std::size_t i = 0; i < data.size(); ++i) rows.push_back(i);
  } else {
    for (int y = 0; y <= 1; ++y) {
      std::vector<double> xs;
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.y[i] == y) xs.push_back(data.x[i]);
      }
      fit.thresholds[static_cast<std::size_t>(y)] = select_threshold(xs, q);
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.x[i] >= fit.thresholds[static_cast<std::size_t>(data.y[i])]) rows.push_back(i);
    }
  }
  Matrix design(static_cast<Eigen::Index>(rows.size()), 2);
  std::vector<double> yv(rows.size());
  bool has0 = false;
  bool has1 = false;
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const auto r = static_cast<Eigen::Index>(j);
    design(r, 0) = 1.0;
    design(r, 1) = data.x[rows[j]];
    yv[j] = data.y[rows[j]];
    (data.y[rows[j]] == 1 ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw Error(ErrorCode::kDegenerateOutcome, "logit subset contains a single outcome");
  const LogisticResult lr = fit_logistic(design, yv);
  fit.beta = lr.beta;
  fit.cov = lr.cov;
  fit.n_used = rows.size();
  fit.converged = lr.converged;
  fit.separation = lr.separation;
  return fit;
}

FeFit fit_logit_panel(const PanelData& panel, Subset subset, double q, Correction correction) {
  return fit_panel_fe(panel, q, subset == Subset::kAll ? FeTransform::kRawAll : FeTransform::kRawTail, correction);
}

std::vector<double> kernel_weights(std::span<const double> x, double x0, double h,
                                   const std::optional<Conditioning>& cond) {
  if (!(h > 0.0) || (cond && !(cond->h > 0.0))) throw Error(ErrorCode::kInvalidParameter, "bandwidth must be positive");
  if (cond && cond->v.size() != x.size()) throw Error(ErrorCode::kInvalidParameter, "conditioning length differs from x");
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  std::vector<double> w(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = (x[i] - x0) / h;
    double k = norm * std::exp(-0.5 * u * u) / h;
    if (cond) {
      const double s = (cond->v[i] - cond->v0) / cond->h;
      k *= norm * std::exp(-0.5 * s * s) / cond->h;
    }
    w[i] = k;
  }
  return w;
}

namespace {

Matrix local_design(std::span<const double> x, double x0, const std::optional<Conditioning>& cond) {
  Matrix d(static_cast<Eigen::Index>(x.size()), cond ? 3 : 2);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    d(r, 0) = 1.0;
    d(r, 1) = x[i] - x0;
    if (cond) d(r, 2) = cond->v[i] - cond->v0;
  }
  return d;
}

double total_mass(const std::vector<double>& w) {
  double m = 0.0;
  for (double v : w) m += v;
  return m;
}

}  // namespace

double local_linear(std::span<const double> x, std::span<const double> y, double x0, const KernelSpec& kernel,
                    const std::optional<Conditioning>& cond) {
  if (x.size() != y.size()) throw Error(ErrorCode::kInvalidParameter, "x and y lengths differ");
  const std::vector<double> w = kernel_weights(x, x0, kernel.h, cond);
  if (!(total_mass(w) > 1e-10)) throw Error(ErrorCode::kEffectiveSample, "kernel mass is below 1e-10");
  const Matrix d = local_design(x, x0, cond);
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  const Matrix xtwx = d.transpose() * wv.asDiagonal() * d;
  const Vector xtwy = d.transpose() * wv.cwiseProduct(yv);
  Eigen::ColPivHouseholderQR<Matrix> qr(xtwx);
  if (qr.rank() < xtwx.cols()) throw Error(ErrorCode::kDegenerateDesign, "weighted design is singular");
  const Vector beta = qr.solve(xtwy);
  if (!beta.allFinite()) throw Error(ErrorCode::kDegenerateDesign, "weighted design is singular");
  return std::clamp(beta[0], 0.0, 1.0);
}

LocalLogitResult local_logit(std::span<const double> x, std::span<const double> y, double x0,
                             const KernelSpec& kernel, const std::optional<Conditioning>& cond) {
  if (x.size() != y.size()) throw Error(ErrorCode::kInvalidParameter, "x and y lengths differ");
  const std::vector<double> w = kernel_weights(x, x0, kernel.h, cond);
  const double mass = total_mass(w);
  if (!(mass > 1e-10)) throw Error(ErrorCode::kEffectiveSample, "kernel mass is below 1e-10");
  double mass1 = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) mass1 += w[i] * y[i];
  const double mass0 = mass - mass1;
  const LogisticResult lr = fit_logistic(local_design(x, x0, cond), y, w);
  LocalLogitResult out;
  out.p = clamp_probability(logistic(lr.beta[0]));
  out.converged = lr.converged;
  out.separation = lr.separation || mass0 <= 1e-12 * mass || mass1 <= 1e-12 * mass;
  return out;
}

std::vector<double> time_sums(const PanelData& panel) {
  std::vector<double> v;
  v.reserve(panel.units.size());
  for (const auto& u : panel.units) {
    double s = 0.0;
    for (std::size_t t = 0; t < u.periods(); ++t) {
      if (u.observed(t)) s += u.x[t];
    }
    v.push_back(s);
  }
  return v;
}

}  // namespace tailbin
