#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "tailbin/numerics.hpp"

namespace tailbin {

// Cross-sectional sample. z has one row per observation; a single constant
// column represents the no-covariate case.
struct CrossSection {
  std::vector<int> y;
  std::vector<double> x;
  Matrix z;

  std::size_t size() const { return y.size(); }
  Eigen::Index dim_z() const { return z.cols(); }

  // Throws on unequal lengths, non-positive x, outcomes outside {0,1} or a
  // missing outcome class.
  void validate() const;

  static CrossSection with_constant_z(std::vector<int> y, std::vector<double> x);
};

enum class CsMethod { kMle, kHill, kRankHalf };

// Model of P(Y = y, X >= threshold_y | Z = z).
struct TailProbModel {
  enum class Kind { kFrequency, kLogistic };
  Kind kind = Kind::kFrequency;
  std::array<double, 2> frequency{0.0, 0.0};
  std::array<Vector, 2> coef;

  double probability(int y, const Vector& z) const;
};

struct CsFit {
  std::array<Vector, 2> theta;
  std::array<Matrix, 2> cov;
  std::array<double, 2> threshold{0.0, 0.0};
  std::array<std::size_t, 2> tail_count{0, 0};
  std::size_t n = 0;
  TailProbModel tailprob;
  CsMethod method = CsMethod::kMle;
  bool converged = false;

  double alpha(int y, const Vector& z) const { return z.dot(theta[static_cast<std::size_t>(y)]); }
};

// Objective of the tail pseudo-MLE for one outcome subsample: z rows and the
// log excesses log(x / threshold) of its tail observations.
struct TailLikelihood {
  Matrix z;
  Vector log_excess;

  ObjectiveEval operator()(const Vector& theta) const;
  double value(const Vector& theta) const;
};

CsFit fit_cs_tail(const CrossSection& data, double q, CsMethod method = CsMethod::kMle);

// Plug-in P(Y = 1 | X = x, Z = z), clamped to (1e-12, 1 - 1e-12).
double predict_prob_cs(const CsFit& fit, double x, const Vector& z);

struct ElasticityEstimate {
  double value = 0.0;
  double se = 0.0;
};

// Limit elasticity -|z . (theta1 - theta0)| with a delta-method SE.
ElasticityEstimate extreme_elasticity_cs(const CsFit& fit, const Vector& z);

using ProbFn = std::function<double(double)>;

// Elasticity of pi (1 - pi) with respect to x by central differences.
double elasticity_numeric(const ProbFn& prob, double x);

double partial_effect(const ProbFn& prob, double x);

// Mean partial effect of the plug-in probability over observations x_i >= lower.
double tail_avg_partial_effect(const CsFit& fit, const CrossSection& data, double lower);

struct TailShareReport {
  std::array<double, 2> observed{0.0, 0.0};
  std::string note;
};

TailShareReport tail_share_diagnostic(const CrossSection& data, const CsFit& fit);

}  // namespace tailbin
