#include "tailbin/cs_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "tailbin/error.hpp"
#include "tailbin/tail_index.hpp"

namespace tailbin {

void CrossSection::validate() const {
  if (y.size() != x.size() || static_cast<std::size_t>(z.rows()) != y.size()) {
    throw Error(ErrorCode::kInvalidParameter, "cross-section columns have unequal lengths");
  }
  if (y.empty()) throw Error(ErrorCode::kEmptyData, "cross-section is empty");
  if (z.cols() < 1) throw Error(ErrorCode::kInvalidParameter, "cross-section needs at least one z column");
  bool has0 = false;
  bool has1 = false;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) {
      throw Error(ErrorCode::kInvalidParameter, "outcome at row " + std::to_string(i + 1) + " is not 0/1");
    }
    if (!(x[i] > 0.0) || !std::isfinite(x[i])) {
      throw Error(ErrorCode::kDomain, "x at row " + std::to_string(i + 1) + " is not positive");
    }
    (y[i] == 1 ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw Error(ErrorCode::kDegenerateOutcome, "both outcome values must be present");
}

CrossSection CrossSection::with_constant_z(std::vector<int> y, std::vector<double> x) {
  CrossSection cs;
  const auto n = static_cast<Eigen::Index>(y.size());
  cs.y = std::move(y);
  cs.x = std::move(x);
  cs.z = Matrix::Ones(n, 1);
  return cs;
}

double TailProbModel::probability(int y, const Vector& z) const {
  const auto idx = static_cast<std::size_t>(y);
  if (kind == Kind::kFrequency) return frequency[idx];
  return logistic(z.dot(coef[idx]));
}

double TailLikelihood::value(const Vector& theta) const {
  const Vector index = z * theta;
  if (index.size() > 0 && !(index.minCoeff() > 0.0)) return -std::numeric_limits<double>::infinity();
  return index.array().log().sum() - index.dot(log_excess);
}

ObjectiveEval TailLikelihood::operator()(const Vector& theta) const {
  ObjectiveEval eval;
  const Vector index = z * theta;
  const auto d = theta.size();
  eval.gradient = Vector::Zero(d);
  eval.hessian = Matrix::Zero(d, d);
  if (index.size() > 0 && !(index.minCoeff() > 0.0)) {
    eval.value = -std::numeric_limits<double>::infinity();
    return eval;
  }
  eval.value = index.array().log().sum() - index.dot(log_excess);
  const Vector inv = index.cwiseInverse();
  eval.gradient = z.transpose() * (inv - log_excess);
  const Vector w = inv.cwiseProduct(inv);
  eval.hessian = -(z.transpose() * w.asDiagonal() * z);
  return eval;
}

namespace {

// Index of a column whose entries all equal the same positive constant.
std::optional<std::pair<Eigen::Index, double>> positive_constant_column(const Matrix& z) {
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double c = z(0, j);
    if (!(c > 0.0)) continue;
    if ((z.col(j).array() == c).all()) return std::make_pair(j, c);
  }
  return std::nullopt;
}

struct Subsample {
  std::vector<double> x;
  std::vector<Eigen::Index> rows;
};

Subsample subsample(const CrossSection& data, int y) {
  Subsample s;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.y[i] == y) {
      s.x.push_back(data.x[i]);
      s.rows.push_back(static_cast<Eigen::Index>(i));
    }
  }
  return s;
}

}  // namespace

CsFit fit_cs_tail(const CrossSection& data, double q, CsMethod method) {
  data.validate();
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::kInvalidParameter, "tail quantile must lie in (0,1)");
  const Eigen::Index dz = data.dim_z();
  const auto constant = positive_constant_column(data.z);
  const bool no_covariates = dz == 1 && constant.has_value();
  if (method != CsMethod::kMle && !no_covariates) {
    throw Error(ErrorCode::kInvalidParameter, "hill and rank-half fits require a single constant z column");
  }
  const std::size_t min_tail = std::max<std::size_t>(10, 3 * static_cast<std::size_t>(dz));

  CsFit fit;
  fit.method = method;
  fit.n = data.size();
  fit.converged = true;
  ConeConstraint cone{data.z, 1e-8};

  for (int y = 0; y <= 1; ++y) {
    const auto iy = static_cast<std::size_t>(y);
    const Subsample sub = subsample(data, y);
    const double threshold = select_threshold(sub.x, q);
    std::vector<Eigen::Index> tail_rows;
    std::vector<double> tail_x;
    for (std::size_t j = 0; j < sub.x.size(); ++j) {
      if (sub.x[j] >= threshold) {
        tail_rows.push_back(sub.rows[j]);
        tail_x.push_back(sub.x[j]);
      }
    }
    if (tail_rows.size() < min_tail) {
      throw Error(ErrorCode::kInsufficientTail,
                  "outcome " + std::to_string(y) + " has " + std::to_string(tail_rows.size()) +
                      " tail observations, need " + std::to_string(min_tail));
    }
    fit.threshold[iy] = threshold;
    fit.tail_count[iy] = tail_rows.size();

    if (method == CsMethod::kHill || method == CsMethod::kRankHalf) {
      const TailIndexEstimate est = method == CsMethod::kHill ? hill_estimate(sub.x, threshold)
                                                               : rank_half_estimate(sub.x, threshold);
      const double c = constant->second;
      fit.theta[iy] = Vector::Constant(1, est.alpha_hat / c);
      fit.cov[iy] = Matrix::Constant(1, 1, est.se * est.se / (c * c));
      continue;
    }

    if (!constant) {
      throw Error(ErrorCode::kInfeasible, "no positive constant z column to build a feasible start");
    }
    TailLikelihood lik;
    lik.z.resize(static_cast<Eigen::Index>(tail_rows.size()), dz);
    lik.log_excess.resize(static_cast<Eigen::Index>(tail_rows.size()));
    for (std::size_t j = 0; j < tail_rows.size(); ++j) {
      const auto r = static_cast<Eigen::Index>(j);
      lik.z.row(r) = data.z.row(tail_rows[j]);
      lik.log_excess[r] = std::log(tail_x[j] / threshold);
    }
    const TailIndexEstimate hill = hill_estimate(tail_x, threshold);
    Vector init = Vector::Zero(dz);
    init[constant->first] = hill.alpha_hat / constant->second;

    const OptimResult opt = maximize_concave(std::cref(lik), init, &cone);
    fit.theta[iy] = opt.argmax;
    Eigen::LDLT<Matrix> ldlt(-opt.hessian_at_opt);
    fit.cov[iy] = ldlt.solve(Matrix::Identity(dz, dz));
    fit.converged = fit.converged && opt.converged;
  }

  if (no_covariates) {
    fit.tailprob.kind = TailProbModel::Kind::kFrequency;
    for (std::size_t y = 0; y < 2; ++y) {
      fit.tailprob.frequency[y] = static_cast<double>(fit.tail_count[y]) / static_cast<double>(fit.n);
    }
  } else {
    fit.tailprob.kind = TailProbModel::Kind::kLogistic;
    for (int y = 0; y <= 1; ++y) {
      std::vector<double> indicator(data.size());
      for (std::size_t i = 0; i < data.size(); ++i) {
        indicator[i] = (data.y[i] == y && data.x[i] >= fit.threshold[static_cast<std::size_t>(y)]) ? 1.0 : 0.0;
      }
      const LogisticResult lr = fit_logistic(data.z, indicator);
      fit.tailprob.coef[static_cast<std::size_t>(y)] = lr.beta;
    }
  }
  return fit;
}

double predict_prob_cs(const CsFit& fit, double x, const Vector& z) {
  if (!(x > 0.0)) throw Error(ErrorCode::kDomain, "prediction point must be positive");
  const double a0 = fit.alpha(0, z);
  const double a1 = fit.alpha(1, z);
  if (!(a0 > 0.0) || !(a1 > 0.0)) {
    throw Error(ErrorCode::kConeViolation, "tail index is not positive at this z");
  }
  const double ratio = fit.tailprob.probability(0, z) / fit.tailprob.probability(1, z);
  const double log_term = std::log(ratio) + std::log(a0 / a1) + a0 * std::log(fit.threshold[0]) -
                          a1 * std::log(fit.threshold[1]) + (a1 - a0) * std::log(x);
  return clamp_probability(logistic(-log_term));
}

ElasticityEstimate extreme_elasticity_cs(const CsFit& fit, const Vector& z) {
  const Vector diff = fit.theta[1] - fit.theta[0];
  ElasticityEstimate e;
  e.value = -std::abs(z.dot(diff));
  e.se = std::sqrt(std::max(0.0, z.dot((fit.cov[0] + fit.cov[1]) * z)));
  return e;
}

double elasticity_numeric(const ProbFn& prob, double x) {
  const auto variance = [&](double u) {
    const double p = prob(u);
    return p * (1.0 - p);
  };
  const double v = variance(x);
  if (!(v >= 1e-12)) throw Error(ErrorCode::kDegenerateVariance, "pi(1 - pi) is below 1e-12");
  return central_derivative(variance, x) * x / v;
}

double partial_effect(const ProbFn& prob, double x) { return central_derivative(prob, x); }

double tail_avg_partial_effect(const CsFit& fit, const CrossSection& data, double lower) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.x[i] < lower) continue;
    const Vector z = data.z.row(static_cast<Eigen::Index>(i)).transpose();
    sum += partial_effect([&](double u) { return predict_prob_cs(fit, u, z); }, data.x[i]);
    ++count;
  }
  if (count < 10) {
    throw Error(ErrorCode::kInsufficientTail,
                "tail average needs at least 10 observations above the cutoff, got " + std::to_string(count));
  }
  return sum / static_cast<double>(count);
}

TailShareReport tail_share_diagnostic(const CrossSection& data, const CsFit& fit) {
  TailShareReport report;
  if (data.size() == 0) {
    report.note = "warning: empty sample";
    return report;
  }
  std::array<std::size_t, 2> counts{0, 0};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto y = static_cast<std::size_t>(data.y[i]);
    if (y < 2 && data.x[i] >= fit.threshold[y]) ++counts[y];
  }
  const auto n = static_cast<double>(data.size());
  for (std::size_t y = 0; y < 2; ++y) report.observed[y] = static_cast<double>(counts[y]) / n;
  if (counts[0] == 0 || counts[1] == 0) {
    report.note = "warning: no observations at or above the fitted threshold for at least one outcome";
  } else if (fit.tailprob.kind == TailProbModel::Kind::kFrequency) {
    report.note = "constant z: observed shares are the sample analog of the tail proportions";
  } else {
    report.note = "observed shares pooled over z";
  }
  return report;
}

}  // namespace tailbin
