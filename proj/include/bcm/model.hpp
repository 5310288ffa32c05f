#pragma once

// Rate functions of the log-linear non-homogeneous Poisson process with
// Gamma frailty, and the negative binomial mass they induce.
//
// Units: study time s in years, rates per year.

namespace bcm {

enum class Group { Treatment, Control };

// x_T = 1, x_C = 0.
constexpr double indicator(Group g) noexcept { return g == Group::Treatment ? 1.0 : 0.0; }

const char* to_string(Group g) noexcept;

// (alpha0, alpha1, beta, phi): log baseline rate at s = 0, log-linear trend per
// year, log rate ratio treatment vs. control, Gamma-frailty variance.
struct ModelParams {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double beta = 0.0;
  double phi = 1.0;

  // Throws DomainError unless every field is finite and phi > 0.
  void validate() const;
};

// Trend part only; the treatment effect is fixed externally in blinded work.
struct NuisanceParams {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double phi = 1.0;
};

// Randomization probabilities. The control weight is always derived as
// 1 - w_T. Degenerate allocations (0 or 1) are representable so the
// limiting cases of the blinded formulas can be evaluated.
class AllocationWeights {
 public:
  AllocationWeights() = default;
  explicit AllocationWeights(double treatment);

  static AllocationWeights balanced() { return AllocationWeights(0.5); }

  double treatment() const noexcept { return treatment_; }
  double control() const noexcept { return 1.0 - treatment_; }
  double of(Group g) const noexcept { return g == Group::Treatment ? treatment() : control(); }

 private:
  double treatment_ = 0.5;
};

// lambda_i(s) = exp(alpha0 + alpha1 s + beta x_i).
double rate(const ModelParams& params, Group group, double s);

// Lambda_i(s) = exp(alpha0 + beta x_i) (exp(alpha1 s) - 1) / alpha1, with the
// removable singularity at alpha1 s = 0 handled by a series.
double cumulative_rate(const ModelParams& params, Group group, double s);

// Lambda_C(s) (w_T exp(beta_h1) + w_C): single-NB approximation of the
// blinded sample's cumulative rate.
double blinded_cumulative_rate(const NuisanceParams& nuisance, double beta_h1,
                               AllocationWeights weights, double s);

// w_T exp(beta_h1) + w_C.
double lumping_factor(double beta_h1, AllocationWeights weights);

// log P(N = count) for N ~ NB with the given mean and variance mean (1 + phi mean).
double negbin_log_pmf(int count, double mean, double phi);

// Lower clamp for phi inside estimation routines.
inline constexpr double kPhiFloor = 1e-8;

namespace detail {

// |alpha1 s| below this uses the truncated Taylor series of (exp(z) - 1) / z.
inline constexpr double kSeriesSwitch = 1e-5;

// E0(z) = (exp(z) - 1) / z and its first two derivatives in z. With z = alpha1 S,
// the cumulative rate is exp(alpha0 + beta x) S E0, and the derivatives in alpha1
// are S^2 E1 and S^3 E2.
struct TrendBasis {
  double e0;
  double e1;
  double e2;
};

double expm1_over(double z) noexcept;  // E0 alone
TrendBasis trend_basis(double z) noexcept;

}  // namespace detail

}  // namespace bcm
