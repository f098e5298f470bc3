#include "tailbin/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "tailbin/error.hpp"

namespace tailbin {

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

RngStream make_rng_stream(std::uint64_t base_seed, std::uint32_t stream_index) {
  std::uint64_t s = base_seed;
  for (std::uint64_t i = 0; i <= stream_index; ++i) s = mix64(s + kGoldenGamma);
  return RngStream{s, base_seed, stream_index};
}

std::uint64_t RngStream::next_u64() {
  state += kGoldenGamma;
  return mix64(state);
}

double RngStream::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

// log of a Gamma(shape, 1) draw. Marsaglia-Tsang for shape >= 1, boosted
// with U^{1/shape} below that; kept in logs so tiny shapes do not underflow.
double log_gamma_draw(RngStream& rng, double shape) {
  if (shape < 1.0) {
    return log_gamma_draw(rng, shape + 1.0) + std::log(rng.uniform()) / shape;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return std::log(d * v);
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return std::log(d * v);
  }
}

void require_df(double df) {
  if (!(df > 0.0) || !std::isfinite(df)) {
    throw Error(ErrorCode::kInvalidParameter, "degrees of freedom must be positive, got " +
                                                  std::to_string(df));
  }
}

}  // namespace

double RngStream::gamma(double shape) {
  if (!(shape > 0.0)) throw Error(ErrorCode::kInvalidParameter, "gamma shape must be positive");
  return std::exp(log_gamma_draw(*this, shape));
}

double sample_abs_t(RngStream& stream, double df) {
  require_df(df);
  for (;;) {
    const double z = std::abs(stream.normal());
    if (z == 0.0) continue;
    // chi2(df) / df = 2 G(df/2) / df
    const double log_scaled_chi2 = std::log(2.0) + log_gamma_draw(stream, 0.5 * df) - std::log(df);
    const double draw = std::exp(std::log(z) - 0.5 * log_scaled_chi2);
    if (std::isfinite(draw) && draw > 0.0) return draw;
  }
}

double sample_pareto(RngStream& stream, double alpha, double scale) {
  if (!(alpha > 0.0) || !(scale > 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "Pareto parameters must be positive");
  }
  return scale * std::exp(-std::log(stream.uniform()) / alpha);
}

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

namespace {

double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

// I_x(a, b) with y = 1 - x supplied separately for accuracy near x = 1.
double incomplete_beta_xy(double a, double b, double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log(y);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorCode::kInvalidParameter, "beta shapes must be positive");
  if (x < 0.0 || x > 1.0) throw Error(ErrorCode::kInvalidParameter, "incomplete beta argument outside [0,1]");
  return incomplete_beta_xy(a, b, x, 1.0 - x);
}

double abs_t_cdf(double df, double q) {
  require_df(df);
  if (!(q > 0.0)) return 0.0;
  if (std::isinf(q)) return 1.0;
  const double q2 = q * q;
  const double u = q2 / (df + q2);
  const double w = df / (df + q2);
  if (u < 0.5) return incomplete_beta_xy(0.5, 0.5 * df, u, w);
  return 1.0 - incomplete_beta_xy(0.5 * df, 0.5, w, u);
}

double abs_t_pdf(double df, double q) {
  require_df(df);
  if (q < 0.0) return 0.0;
  const double log_norm = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                          0.5 * std::log(df * std::numbers::pi);
  return 2.0 * std::exp(log_norm - 0.5 * (df + 1.0) * std::log1p(q * q / df));
}

double quantile_abs_t(double df, double p) {
  require_df(df);
  if (!(p >= 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kInvalidParameter, "quantile probability must lie in [0,1)");
  }
  if (p == 0.0) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (abs_t_cdf(df, hi) < p) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
  }
  for (int i = 0; i < 400 && hi - lo > 1e-13 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (abs_t_cdf(df, mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double empirical_quantile(std::span<const double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::kEmptyData, "quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kInvalidParameter, "quantile probability outside [0,1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double clamp_probability(double p) {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

// ---------------------------------------------------------------------------
// Concave maximization
// ---------------------------------------------------------------------------

double ConeConstraint::min_margin(const Vector& theta) const {
  if (rows.rows() == 0) return std::numeric_limits<double>::infinity();
  return (rows * theta).minCoeff();
}

namespace {

bool negative_definite(const Matrix& hessian) {
  Eigen::LLT<Matrix> llt(-hessian);
  return llt.info() == Eigen::Success;
}

}  // namespace

OptimResult maximize_concave(const ConcaveObjective& objective, const Vector& init,
                             const ConeConstraint* cone, const OptimOptions& options) {
  if (cone != nullptr && !cone->feasible(init)) {
    throw Error(ErrorCode::kInfeasible, "initial point violates the cone constraint");
  }
  Vector theta = init;
  ObjectiveEval current = objective(theta);
  if (!std::isfinite(current.value)) {
    throw Error(ErrorCode::kInfeasible, "objective is not finite at the initial point");
  }

  OptimResult result;
  int iter = 0;
  bool converged = false;
  for (; iter < options.max_iterations; ++iter) {
    const double gsup = current.gradient.lpNorm<Eigen::Infinity>();
    if (gsup <= options.grad_tol && negative_definite(current.hessian)) {
      converged = true;
      break;
    }

    Vector direction;
    Eigen::LLT<Matrix> llt(-current.hessian);
    if (llt.info() == Eigen::Success) {
      direction = llt.solve(current.gradient);
    }
    if (direction.size() == 0 || !direction.allFinite() || current.gradient.dot(direction) <= 0.0) {
      direction = current.gradient / std::max(1.0, gsup);
    }
    const double slope = current.gradient.dot(direction);

    double step = 1.0;
    bool accepted = false;
    ObjectiveEval candidate_eval;
    Vector candidate;
    for (int halving = 0; halving < 80; ++halving, step *= 0.5) {
      candidate = theta + step * direction;
      if (cone != nullptr && !cone->feasible(candidate)) continue;
      candidate_eval = objective(candidate);
      if (!std::isfinite(candidate_eval.value)) continue;
      if (candidate_eval.value >= current.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      converged = gsup <= options.stall_grad_tol && negative_definite(current.hessian);
      break;
    }
    const double rel_change =
        std::abs(candidate_eval.value - current.value) / std::max(1.0, std::abs(current.value));
    theta = candidate;
    current = std::move(candidate_eval);
    if (rel_change <= options.rel_obj_tol) {
      const double g = current.gradient.lpNorm<Eigen::Infinity>();
      converged = (g <= options.grad_tol || g <= options.stall_grad_tol) &&
                  negative_definite(current.hessian);
      ++iter;
      break;
    }
  }

  result.argmax = theta;
  result.hessian_at_opt = current.hessian;
  result.objective = current.value;
  result.iterations = iter;
  result.converged = converged;
  return result;
}

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

double default_fd_step(double at) {
  return std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(std::abs(at), 1.0);
}

Vector finite_diff_grad(const std::function<double(const Vector&)>& f, const Vector& theta,
                        std::optional<double> step) {
  Vector grad(theta.size());
  Vector probe = theta;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double h = step ? *step : default_fd_step(theta[j]);
    probe[j] = theta[j] + h;
    const double up = f(probe);
    probe[j] = theta[j] - h;
    const double down = f(probe);
    probe[j] = theta[j];
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

double central_derivative(const std::function<double(double)>& f, double x) {
  const double h = default_fd_step(x);
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

double logistic_loglik(const Matrix& design, std::span<const double> y,
                       std::span<const double> weights, const Vector& beta) {
  const Vector eta = design * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)];
    if (w == 0.0) continue;
    const double u = eta[i];
    // log(1 + e^u); log p = u - that, log(1 - p) = -that
    const double softplus = std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u)));
    const double yi = y[static_cast<std::size_t>(i)];
    ll += w * (yi * u - softplus);
  }
  return ll;
}

LogisticResult fit_logistic(const Matrix& design, std::span<const double> y,
                            std::span<const double> weights, const LogisticOptions& options) {
  const auto n = design.rows();
  const auto d = design.cols();
  if (static_cast<std::size_t>(n) != y.size() || (!weights.empty() && weights.size() != y.size())) {
    throw Error(ErrorCode::kInvalidParameter, "logistic design, outcome and weight sizes differ");
  }
  LogisticResult result;
  Vector beta = Vector::Zero(d);
  double ll = logistic_loglik(design, y, weights, beta);
  Matrix neg_hessian(d, d);

  const Eigen::Map<const Vector> yv(y.data(), n);
  const Vector wv = weights.empty() ? Vector::Ones(n) : Vector(Eigen::Map<const Vector>(weights.data(), n));
  auto assemble = [&](const Vector& b, Vector& grad, Matrix& neg_h) {
    const Vector p = (design * b).unaryExpr([](double u) { return logistic(u); });
    grad.noalias() = design.transpose() * wv.cwiseProduct(yv - p);
    const Vector v = wv.cwiseProduct(p.cwiseProduct(Vector::Ones(n) - p));
    neg_h.noalias() = design.transpose() * v.asDiagonal() * design;
  };

  Vector grad;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    assemble(beta, grad, neg_hessian);
    Eigen::LDLT<Matrix> ldlt(neg_hessian);
    Vector step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) step = ldlt.solve(grad);
    if (step.size() == 0 || !step.allFinite()) step = grad;
    const double decrement = grad.dot(step);
    if (decrement <= 1e-15 * std::max(1.0, std::abs(ll)) ||
        grad.lpNorm<Eigen::Infinity>() <= options.grad_tol) {
      result.converged = true;
      const Vector cand = beta + step;
      const double cand_ll = logistic_loglik(design, y, weights, cand);
      if (cand.allFinite() && cand_ll >= ll - 1e-12 * std::max(1.0, std::abs(ll))) {
        beta = cand;
        ll = cand_ll;
      }
      break;
    }
    double t = 1.0;
    bool moved = false;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      const Vector cand = beta + t * step;
      const double cand_ll = logistic_loglik(design, y, weights, cand);
      if (std::isfinite(cand_ll) && cand_ll >= ll + 1e-4 * t * decrement) {
        beta = cand;
        ll = cand_ll;
        moved = true;
        break;
      }
    }
    if (beta.lpNorm<Eigen::Infinity>() > options.coef_cap) {
      beta = beta.cwiseMax(-options.coef_cap).cwiseMin(options.coef_cap);
      ll = logistic_loglik(design, y, weights, beta);
      result.separation = true;
      break;
    }
    if (!moved) {
      result.converged = grad.lpNorm<Eigen::Infinity>() <= 1e-6 * std::max(1.0, std::abs(ll));
      break;
    }
  }
  // Complete separation drives the log-likelihood to zero while the
  // coefficients run off.
  if (!result.separation && ll > -1e-6) result.separation = true;

  assemble(beta, grad, neg_hessian);
  Eigen::LDLT<Matrix> ldlt(neg_hessian);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive() &&
      neg_hessian.diagonal().minCoeff() > 0.0) {
    result.cov = ldlt.solve(Matrix::Identity(d, d));
  } else {
    result.cov = Matrix::Constant(d, d, std::numeric_limits<double>::infinity());
  }
  result.beta = beta;
  result.loglik = ll;
  return result;
}

}  // namespace tailbin
