#include "bcm/model.hpp"

#include <cmath>
#include <string>

#include "bcm/errors.hpp"

namespace bcm {

namespace {

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw DomainError(std::string(name) + " must be finite");
}

void require_time(double s) {
  require_finite(s, "s");
  if (s < 0.0) throw DomainError("study time must be non-negative");
}

}  // namespace

const char* to_string(Group g) noexcept { return g == Group::Treatment ? "T" : "C"; }

void ModelParams::validate() const {
  require_finite(alpha0, "alpha0");
  require_finite(alpha1, "alpha1");
  require_finite(beta, "beta");
  require_finite(phi, "phi");
  if (!(phi > 0.0)) throw DomainError("phi must be > 0");
}

AllocationWeights::AllocationWeights(double treatment) : treatment_(treatment) {
  if (!(treatment >= 0.0 && treatment <= 1.0))
    throw DomainError("allocation weight must lie in [0, 1]");
}

namespace detail {

double expm1_over(double z) noexcept {
  if (std::abs(z) < kSeriesSwitch) return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0));
  return std::expm1(z) / z;
}

TrendBasis trend_basis(double z) noexcept {
  if (std::abs(z) < 1.0) {
    // E1 = sum k z^(k-1)/(k+1)!, E2 = sum k(k-1) z^(k-2)/(k+1)!
    // Twenty-two terms leave a remainder below 1e-20 for |z| < 1.
    constexpr int kTerms = 22;
    double pow_z[kTerms];
    pow_z[0] = 1.0;
    for (int k = 1; k < kTerms; ++k) pow_z[k] = pow_z[k - 1] * z;
    double e1 = 0.0, e2 = 0.0;
    double inv_fact = 1.0;  // 1/(k+1)!
    for (int k = 0; k < kTerms; ++k) {
      inv_fact /= (k + 1);
      if (k >= 1) e1 += k * pow_z[k - 1] * inv_fact;
      if (k >= 2) e2 += k * (k - 1) * pow_z[k - 2] * inv_fact;
    }
    return {expm1_over(z), e1, e2};
  }
  const double em1 = std::expm1(z);
  const double ez = em1 + 1.0;
  const double z2 = z * z;
  return {em1 / z, (z * ez - em1) / z2, (ez * (z2 - 2.0 * z) + 2.0 * em1) / (z2 * z)};
}

}  // namespace detail

double rate(const ModelParams& params, Group group, double s) {
  require_finite(params.alpha0, "alpha0");
  require_finite(params.alpha1, "alpha1");
  require_finite(params.beta, "beta");
  require_time(s);
  return std::exp(params.alpha0 + params.alpha1 * s + params.beta * indicator(group));
}

double cumulative_rate(const ModelParams& params, Group group, double s) {
  require_finite(params.alpha0, "alpha0");
  require_finite(params.alpha1, "alpha1");
  require_finite(params.beta, "beta");
  require_time(s);
  return std::exp(params.alpha0 + params.beta * indicator(group)) * s *
         detail::expm1_over(params.alpha1 * s);
}

double lumping_factor(double beta_h1, AllocationWeights weights) {
  require_finite(beta_h1, "beta_h1");
  return weights.treatment() * std::exp(beta_h1) + weights.control();
}

double blinded_cumulative_rate(const NuisanceParams& nuisance, double beta_h1,
                               AllocationWeights weights, double s) {
  const ModelParams control{nuisance.alpha0, nuisance.alpha1, 0.0, 1.0};
  return cumulative_rate(control, Group::Control, s) * lumping_factor(beta_h1, weights);
}

double negbin_log_pmf(int count, double mean, double phi) {
  if (count < 0) throw DomainError("count must be non-negative");
  if (!(mean > 0.0) || !std::isfinite(mean)) throw DomainError("mean must be positive and finite");
  if (!(phi > 0.0) || !std::isfinite(phi)) throw DomainError("phi must be positive and finite");
  const double n = count;
  const double x = phi * mean;
  // log Gamma(n + 1/phi) - log Gamma(1/phi) + n log(phi)
  double head = 0.0;
  if (count <= 1000) {
    for (int k = 0; k < count; ++k) head += std::log1p(k * phi);
  } else {
    head = std::lgamma(n + 1.0 / phi) - std::lgamma(1.0 / phi) + n * std::log(phi);
  }
  const double log1p_x = std::log1p(x);
  // (n + 1/phi) log(1 + x) written so that phi -> 0 keeps full precision
  const double tail = n * log1p_x + mean * (x > 1e-8 ? log1p_x / x : 1.0 - x / 2.0 + x * x / 3.0);
  return head - std::lgamma(n + 1.0) + n * std::log(mean) - tail;
}

}  // namespace bcm
