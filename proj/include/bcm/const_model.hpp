#pragma once

// Constant-rate negative binomial comparator: rates mu_T, mu_C, dispersion
// varphi, information J = 1 / (1/I_T + 1/I_C) for the log rate ratio.

#include <optional>

#include "bcm/blinded_trend.hpp"
#include "bcm/likelihood.hpp"
#include "bcm/trend_mle.hpp"

namespace bcm {

struct ConstParams {
  double mu_t = 1.0;
  double mu_c = 1.0;
  double varphi = 1.0;
};

// varphi = 0 (Poisson) is accepted here. Throws SingularityError when a group
// has no subjects.
double info_const(const ConstParams& params, const GroupExposures& exposures);
double info_const(const ConstParams& params, const GroupedCounts& data);

struct ConstFit {
  ConstParams params;
  // Covariance of (log mu_T, log mu_C, varphi) from the expected information.
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  double log_rate_difference = 0.0;
  double information = 0.0;  // J at the estimates
  double wald_statistic = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Throws BoundaryError when a group has no events.
ConstFit fit_const_unblinded(const GroupedCounts& data);
ConstFit fit_const_unblinded(const Snapshot& snap);

struct ConstBlindedFit {
  double mu_b = 0.0;  // pooled rate, lumping only
  double mu_c = 0.0;
  double mu_t = 0.0;
  double varphi = 1.0;
  BlindedMethod method = BlindedMethod::Lumping;
  bool converged = false;
  int iterations = 0;
};

ConstBlindedFit fit_const_blinded(const BlindedCounts& data, double beta_h1, AllocationWeights weights,
                                  BlindedMethod method, std::optional<ConstBlindedFit> init = std::nullopt);

// J with I_i = w_i sum_j S_j mu_i / (1 + varphi S_j mu_i).
double info_const_blinded(const ConstBlindedFit& fit, AllocationWeights weights, const BlindedCounts& exposures);

}  // namespace bcm
