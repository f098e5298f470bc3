#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "tailbin/cs_model.hpp"
#include "tailbin/numerics.hpp"
#include "tailbin/panel_model.hpp"

namespace tailbin {

// 1.06 * sample SD * n^{-1/5}.
double silverman_bandwidth(std::span<const double> values);

enum class Subset { kAll, kTail };

struct LogitFit {
  Vector beta;  // intercept, slope on x
  Matrix cov;
  Subset subset = Subset::kAll;
  // Per-outcome cutoffs used for the tail subset.
  std::array<double, 2> thresholds{0.0, 0.0};
  std::size_t n_used = 0;
  bool converged = false;
  bool separation = false;

  double predict(double x) const { return clamp_probability(logistic(beta[0] + beta[1] * x)); }
};

// Logistic regression of y on (1, x). The tail subset keeps y = 0 rows with
// x >= x_0 and y = 1 rows with x >= x_1, the cutoffs being per-outcome
// quantiles at q.
LogitFit fit_logit_cs(const CrossSection& data, Subset subset, double q = 0.975);

// Panel Logit with unit intercepts on raw x.
FeFit fit_logit_panel(const PanelData& panel, Subset subset, double q, Correction correction);

struct KernelSpec {
  double h = 1.0;
};

// Extra conditioning variable (for panels the time sum of x) with its own bandwidth.
struct Conditioning {
  std::span<const double> v;
  double v0 = 0.0;
  double h = 1.0;
};

// Product Gaussian kernel weights phi(u / h) / h.
std::vector<double> kernel_weights(std::span<const double> x, double x0, double h,
                                   const std::optional<Conditioning>& cond);

// Local linear fit at x0, clamped to [0, 1].
double local_linear(std::span<const double> x, std::span<const double> y, double x0, const KernelSpec& kernel,
                    const std::optional<Conditioning>& cond = std::nullopt);

struct LocalLogitResult {
  double p = 0.5;
  bool separation = false;
  bool converged = false;
};

LocalLogitResult local_logit(std::span<const double> x, std::span<const double> y, double x0,
                             const KernelSpec& kernel, const std::optional<Conditioning>& cond = std::nullopt);

// V_i = sum over observed periods of x_it.
std::vector<double> time_sums(const PanelData& panel);

}  // namespace tailbin
