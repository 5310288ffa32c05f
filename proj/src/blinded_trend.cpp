#include "bcm/blinded_trend.hpp"

#include <cmath>

#include "bcm/errors.hpp"
#include "bcm/trend_mle.hpp"

namespace bcm {

const char* to_string(BlindedMethod m) noexcept { return m == BlindedMethod::Mixture ? "mixture" : "lumping"; }

namespace {

void check_data(const BlindedCounts& data) {
  if (data.empty()) throw DomainError("blinded sample is empty");
  for (const auto& r : data)
    if (!(r.exposure > 0.0) || !std::isfinite(r.exposure)) throw DomainError("exposure must be positive");
}

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw EvaluationError(std::string(what) + " log-likelihood is not finite");
  return v;
}

Vector4 to_theta(const NuisanceParams& p) { return {p.alpha0, p.alpha1, 0.0, p.phi}; }

BlindedFit finish(const NewtonResult& nr, BlindedMethod method) {
  BlindedFit fit;
  fit.alpha0_b = nr.theta[kAlpha0];
  fit.alpha1_b = nr.theta[kAlpha1];
  fit.phi_b = nr.theta[kPhi];
  fit.method = method;
  fit.converged = nr.converged;
  fit.boundary = nr.phi_at_floor;
  fit.iterations = nr.iterations;
  fit.loglik = nr.eval.loglik;
  return fit;
}

// Dispersion is not separable from the mean with a single subject.
void require_information(const BlindedCounts& data) {
  bool events = false;
  int subjects = 0;
  for (const auto& r : data) {
    events = events || r.events > 0;
    subjects += r.multiplicity;
  }
  if (!events) throw NoInformationError("no events observed");
  if (subjects < 2) throw NoInformationError("need at least two subjects");
}

}  // namespace

double loglik_mixture(const NuisanceParams& nuisance, double beta_h1, AllocationWeights weights,
                      const BlindedCounts& data) {
  check_data(data);
  return checked(evaluate_mixture(nuisance, beta_h1, weights, data, Order::Value).loglik, "mixture");
}

double loglik_mixture(const NuisanceParams& nuisance, double beta_h1, AllocationWeights weights,
                      const Snapshot& snap) {
  return loglik_mixture(nuisance, beta_h1, weights, blinded_counts(snap));
}

double loglik_lumping(const NuisanceParams& nuisance, double beta_h1, AllocationWeights weights,
                      const BlindedCounts& data) {
  check_data(data);
  const double log_c = std::log(lumping_factor(beta_h1, weights));
  return checked(evaluate_offset(nuisance, log_c, data, Order::Value).loglik, "lumping");
}

double loglik_lumping(const NuisanceParams& nuisance, double beta_h1, AllocationWeights weights,
                      const Snapshot& snap) {
  return loglik_lumping(nuisance, beta_h1, weights, blinded_counts(snap));
}

NuisanceParams blinded_start(const BlindedCounts& data, double beta_h1, AllocationWeights weights) {
  double events = 0.0, exposure = 0.0;
  for (const auto& r : data) {
    events += static_cast<double>(r.events) * r.multiplicity;
    exposure += r.exposure * r.multiplicity;
  }
  if (!(events > 0.0)) throw NoInformationError("no events observed");
  const double rate = events / exposure;
  return {std::log(rate) - std::log(lumping_factor(beta_h1, weights)), 0.0, detail::moment_phi({&data}, rate)};
}

BlindedFit fit_blinded_mixture(const BlindedCounts& data, double beta_h1, AllocationWeights weights,
                               std::optional<NuisanceParams> init) {
  check_data(data);
  require_information(data);
  const NuisanceParams start = init ? *init : blinded_start(data, beta_h1, weights);
  const Objective f = [&](const Vector4& theta, Order order) {
    return evaluate_mixture({theta[kAlpha0], theta[kAlpha1], theta[kPhi]}, beta_h1, weights, data, order);
  };
  return finish(maximize(f, to_theta(start), {true, true, false, true}), BlindedMethod::Mixture);
}

BlindedFit fit_blinded_lumping(const BlindedCounts& data, double beta_h1, AllocationWeights weights,
                               std::optional<NuisanceParams> init) {
  check_data(data);
  require_information(data);
  const NuisanceParams start = init ? *init : blinded_start(data, beta_h1, weights);
  const double log_c = std::log(lumping_factor(beta_h1, weights));
  const Objective f = [&](const Vector4& theta, Order order) {
    return evaluate_offset({theta[kAlpha0], theta[kAlpha1], theta[kPhi]}, log_c, data, order);
  };
  return finish(maximize(f, to_theta(start), {true, true, false, true}), BlindedMethod::Lumping);
}

BlindedFit fit_blinded(BlindedMethod method, const BlindedCounts& data, double beta_h1,
                       AllocationWeights weights, std::optional<NuisanceParams> init) {
  return method == BlindedMethod::Mixture ? fit_blinded_mixture(data, beta_h1, weights, init)
                                          : fit_blinded_lumping(data, beta_h1, weights, init);
}

BlindedInformation blinded_fisher(const NuisanceParams& nuisance, double beta_h1, AllocationWeights weights,
                                  const BlindedCounts& exposures, double at_time) {
  if (exposures.empty()) throw SingularityError("no blinded exposures");
  const ModelParams params{nuisance.alpha0, nuisance.alpha1, beta_h1, nuisance.phi};
  params.validate();
  BlindedInformation out;
  out.at_time = at_time;
  for (const auto& r : exposures) {
    if (!(r.exposure > 0.0)) continue;
    const double m = r.multiplicity;
    if (weights.treatment() > 0.0)
      accumulate_expected_fisher(out.fisher_b, m * weights.treatment(), params, Group::Treatment, r.exposure, false);
    if (weights.control() > 0.0)
      accumulate_expected_fisher(out.fisher_b, m * weights.control(), params, Group::Control, r.exposure, false);
  }
  out.info = information_for_beta(out.fisher_b);
  return out;
}

BlindedInformation blinded_fisher(const BlindedFit& fit, double beta_h1, AllocationWeights weights,
                                  const BlindedCounts& exposures, double at_time) {
  if (!fit.converged) throw NumericalError("blinded fit did not converge");
  return blinded_fisher(fit.nuisance(), beta_h1, weights, exposures, at_time);
}

}  // namespace bcm
