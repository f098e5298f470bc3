#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>

#include <Eigen/Dense>

namespace tailbin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

// SplitMix64 stream. The initial state is base_seed pushed through the
// SplitMix64 output mix stream_index + 1 times:
//
//   s = base_seed
//   repeat stream_index + 1 times: s = mix64(s + 0x9E3779B97F4A7C15)
//
// Draws then follow the usual SplitMix64 recurrence on that state.
struct RngStream {
  std::uint64_t state = 0;
  std::uint64_t base_seed = 0;
  std::uint32_t stream_index = 0;

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  // Gamma(shape, 1); any shape > 0.
  double gamma(double shape);
};

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

RngStream make_rng_stream(std::uint64_t base_seed, std::uint32_t stream_index);

// |T| with T ~ Student-t(df); df may be fractional.
double sample_abs_t(RngStream& stream, double df);

// Exact Pareto draw scale * U^{-1/alpha}.
double sample_pareto(RngStream& stream, double alpha, double scale = 1.0);

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

// Regularized incomplete beta I_x(a, b) by Lentz continued fractions.
double incomplete_beta(double a, double b, double x);

// P(|T| <= q) for T ~ Student-t(df).
double abs_t_cdf(double df, double q);
// Density of |T| at q >= 0 (twice the Student-t density).
double abs_t_pdf(double df, double q);
// Inverse of abs_t_cdf by bisection; p in [0, 1).
double quantile_abs_t(double df, double p);

// Type-7 linear interpolation quantile, h = (n - 1) p + 1 on the sorted sample.
double empirical_quantile(std::span<const double> values, double p);

inline double logistic(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

inline constexpr double kProbClamp = 1e-12;
double clamp_probability(double p);

// ---------------------------------------------------------------------------
// Concave maximization
// ---------------------------------------------------------------------------

// Rows v with the requirement v . theta >= slack at every iterate.
struct ConeConstraint {
  Matrix rows;
  double slack = 1e-8;

  double min_margin(const Vector& theta) const;
  bool feasible(const Vector& theta) const { return min_margin(theta) >= slack; }
};

struct ObjectiveEval {
  double value = 0.0;
  Vector gradient;
  Matrix hessian;
};

// Outside its domain the objective should report a non-finite value.
using ConcaveObjective = std::function<ObjectiveEval(const Vector&)>;

struct OptimOptions {
  double grad_tol = 1e-9;
  double rel_obj_tol = 1e-12;
  // Stopping on the relative-change rule only counts as converged when the
  // gradient is at least this small.
  double stall_grad_tol = 1e-6;
  int max_iterations = 200;
};

struct OptimResult {
  Vector argmax;
  Matrix hessian_at_opt;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Damped Newton with step halving; trial steps leaving the cone are rejected.
OptimResult maximize_concave(const ConcaveObjective& objective, const Vector& init,
                             const ConeConstraint* cone = nullptr,
                             const OptimOptions& options = {});

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

double default_fd_step(double at);

Vector finite_diff_grad(const std::function<double(const Vector&)>& f, const Vector& theta,
                        std::optional<double> step = std::nullopt);

double central_derivative(const std::function<double(double)>& f, double x);

// ---------------------------------------------------------------------------
// Logistic regression (shared by tail-probability models and baselines)
// ---------------------------------------------------------------------------

struct LogisticOptions {
  double coef_cap = 50.0;
  int max_iterations = 100;
  double grad_tol = 1e-9;
};

struct LogisticResult {
  Vector beta;
  Matrix cov;
  double loglik = 0.0;
  bool converged = false;
  bool separation = false;
};

// Weighted ML logistic regression of y on the columns of design. Weights may
// be empty (all ones).
LogisticResult fit_logistic(const Matrix& design, std::span<const double> y,
                            std::span<const double> weights = {},
                            const LogisticOptions& options = {});

double logistic_loglik(const Matrix& design, std::span<const double> y,
                       std::span<const double> weights, const Vector& beta);

}  // namespace tailbin
