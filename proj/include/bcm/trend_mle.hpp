#pragma once

// Unblinded maximum-likelihood inference for the trend model.

#include <optional>
#include <vector>

#include "bcm/likelihood.hpp"
#include "bcm/newton.hpp"
#include "bcm/simulation.hpp"

namespace bcm {

struct GroupExposures {
  std::vector<double> treatment;
  std::vector<double> control;
};

struct FitResult {
  ModelParams estimates;
  Matrix4 fisher = Matrix4::Zero();
  double information_beta = 0.0;
  double wald_statistic = 0.0;
  bool converged = false;
  bool boundary = false;  // phi ended on its lower clamp
  int iterations = 0;
  double loglik = 0.0;
};

// Throw EvaluationError naming the parameters when the value is not finite.
double loglik_trend(const ModelParams& params, const Snapshot& snap);
double loglik_trend(const ModelParams& params, const GroupedCounts& data);
Vector4 score_trend(const ModelParams& params, const Snapshot& snap);
Vector4 score_trend(const ModelParams& params, const GroupedCounts& data);

// Expected Fisher information. Cross terms with phi are zero; the (phi, phi)
// entry is the expectation of the negative second derivative.
Matrix4 fisher_trend(const ModelParams& params, const GroupExposures& exposures);
// Uses exposures and multiplicities of the records; counts are ignored.
Matrix4 fisher_trend(const ModelParams& params, const GroupedCounts& data, bool with_phi = true);

// Rate from total events / exposure, no trend, no effect, moment estimate of phi.
ModelParams default_start(const GroupedCounts& data);

FitResult fit_trend(const GroupedCounts& data, std::optional<ModelParams> init = std::nullopt,
                    const NewtonOptions& options = {});
FitResult fit_trend(const Snapshot& snap, std::optional<ModelParams> init = std::nullopt);

// Lower-tail Wald test: reject iff T < z_alpha.
bool wald_decision(const FitResult& fit, double alpha);
bool wald_reject(double statistic, double alpha);

// Standard-normal quantile.
double normal_quantile(double p);

namespace detail {
// Moment estimate of phi for counts with means exp(log_rate) * S, clamped to [1e-3, 50].
double moment_phi(const std::vector<const std::vector<CountRecord>*>& groups, double rate);
}  // namespace detail

}  // namespace bcm
