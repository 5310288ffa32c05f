#pragma once

// Blinded estimation of the nuisance parameters (alpha0, alpha1, phi) of the
// trend model with the treatment effect fixed at its planning value, and the
// blinded estimate of the information for beta.

#include <optional>

#include "bcm/likelihood.hpp"
#include "bcm/newton.hpp"
#include "bcm/simulation.hpp"

namespace bcm {

enum class BlindedMethod { Mixture, Lumping };

const char* to_string(BlindedMethod m) noexcept;

struct BlindedFit {
  double alpha0_b = 0.0;
  double alpha1_b = 0.0;
  double phi_b = 1.0;
  BlindedMethod method = BlindedMethod::Lumping;
  bool converged = false;
  bool boundary = false;
  int iterations = 0;
  double loglik = 0.0;

  NuisanceParams nuisance() const { return {alpha0_b, alpha1_b, phi_b}; }
};

struct BlindedInformation {
  double info = 0.0;
  Matrix4 fisher_b = Matrix4::Zero();
  double at_time = 0.0;
};

double loglik_mixture(const NuisanceParams& nuisance, double beta_h1, AllocationWeights weights,
                      const BlindedCounts& data);
double loglik_mixture(const NuisanceParams& nuisance, double beta_h1, AllocationWeights weights,
                      const Snapshot& snap);

// Single NB with cumulative rate Lambda_C(s) (w_T exp(beta_h1) + w_C).
double loglik_lumping(const NuisanceParams& nuisance, double beta_h1, AllocationWeights weights,
                      const BlindedCounts& data);
double loglik_lumping(const NuisanceParams& nuisance, double beta_h1, AllocationWeights weights,
                      const Snapshot& snap);

// Starting values: constant rate, moment phi. Lumping divides the rate by the
// lumping factor, the mixture likewise.
NuisanceParams blinded_start(const BlindedCounts& data, double beta_h1, AllocationWeights weights);

// Throw NoInformationError without events or with fewer than two subjects.
// Non-convergence is reported through the flag.
BlindedFit fit_blinded_mixture(const BlindedCounts& data, double beta_h1, AllocationWeights weights,
                               std::optional<NuisanceParams> init = std::nullopt);
BlindedFit fit_blinded_lumping(const BlindedCounts& data, double beta_h1, AllocationWeights weights,
                               std::optional<NuisanceParams> init = std::nullopt);
BlindedFit fit_blinded(BlindedMethod method, const BlindedCounts& data, double beta_h1,
                       AllocationWeights weights, std::optional<NuisanceParams> init = std::nullopt);

// Expected information with every group sum replaced by w_i times the sum
// over the blinded exposures, evaluated at (alpha0_b, alpha1_b, beta_h1, phi_b).
// The (phi, phi) entry is left at zero; it does not enter the information for beta.
// Throws SingularityError if the information for beta is not positive.
BlindedInformation blinded_fisher(const BlindedFit& fit, double beta_h1, AllocationWeights weights,
                                  const BlindedCounts& exposures, double at_time = 0.0);
BlindedInformation blinded_fisher(const NuisanceParams& nuisance, double beta_h1,
                                  AllocationWeights weights, const BlindedCounts& exposures,
                                  double at_time = 0.0);

}  // namespace bcm
