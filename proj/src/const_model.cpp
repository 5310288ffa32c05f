#include "bcm/const_model.hpp"

#include <cmath>

#include "bcm/errors.hpp"

namespace bcm {

namespace {

double group_info(double mu, double varphi, const std::vector<CountRecord>& recs, double weight) {
  double sum = 0.0;
  for (const auto& r : recs) {
    const double m = r.exposure * mu;
    sum += r.multiplicity * m / (1.0 + varphi * m);
  }
  return weight * sum;
}

double harmonic(double it, double ic) {
  if (!(it > 0.0) || !(ic > 0.0)) throw SingularityError("a group carries no information");
  return 1.0 / (1.0 / it + 1.0 / ic);
}

void check(const ConstParams& p) {
  if (!(p.mu_t > 0.0) || !(p.mu_c > 0.0) || !(p.varphi >= 0.0) || !std::isfinite(p.mu_t) ||
      !std::isfinite(p.mu_c))
    throw DomainError("rates must be positive and varphi non-negative");
}

}  // namespace

double info_const(const ConstParams& params, const GroupedCounts& data) {
  check(params);
  if (data.treatment.empty() || data.control.empty()) throw SingularityError("empty group");
  if (std::isinf(params.varphi)) return 0.0;
  return harmonic(group_info(params.mu_t, params.varphi, data.treatment, 1.0),
                  group_info(params.mu_c, params.varphi, data.control, 1.0));
}

double info_const(const ConstParams& params, const GroupExposures& exposures) {
  GroupedCounts data;
  for (double s : exposures.treatment) data.treatment.push_back({s, 0, 0.0, 1});
  for (double s : exposures.control) data.control.push_back({s, 0, 0.0, 1});
  return info_const(params, data);
}

ConstFit fit_const_unblinded(const GroupedCounts& data) {
  if (data.treatment.empty() || data.control.empty()) throw SingularityError("empty group");
  auto events = [](const std::vector<CountRecord>& recs) {
    double n = 0.0, s = 0.0;
    for (const auto& r : recs) {
      n += static_cast<double>(r.events) * r.multiplicity;
      s += r.exposure * r.multiplicity;
    }
    return std::pair{n, s};
  };
  const auto [nt, st] = events(data.treatment);
  const auto [nc, sc] = events(data.control);
  if (!(nt > 0.0) || !(nc > 0.0)) throw BoundaryError("a group has no events; its rate estimate is zero");

  // Raw group rates are the ML estimates only under equal exposures.
  Vector4 start{std::log(nc / sc), 0.0, std::log((nt / st) / (nc / sc)),
                detail::moment_phi({&data.treatment, &data.control}, (nt + nc) / (st + sc))};
  GroupedCounts flat = data;
  for (auto* g : {&flat.treatment, &flat.control})
    for (auto& r : *g) r.time_sum = 0.0;  // alpha1 is pinned at zero
  const Objective f = [&flat](const Vector4& theta, Order order) {
    return evaluate_grouped(unpack(theta), flat, order);
  };
  const NewtonResult nr = maximize(f, start, {true, false, true, true});

  ConstFit fit;
  fit.converged = nr.converged;
  fit.iterations = nr.iterations;
  fit.params = {std::exp(nr.theta[kAlpha0] + nr.theta[kBeta]), std::exp(nr.theta[kAlpha0]), nr.theta[kPhi]};
  fit.log_rate_difference = nr.theta[kBeta];
  if (!fit.converged) return fit;
  const double it = group_info(fit.params.mu_t, fit.params.varphi, data.treatment, 1.0);
  const double ic = group_info(fit.params.mu_c, fit.params.varphi, data.control, 1.0);
  fit.information = harmonic(it, ic);
  fit.wald_statistic = fit.log_rate_difference * std::sqrt(fit.information);
  double phi_info = 0.0;
  for (const auto& r : data.treatment)
    phi_info += r.multiplicity * expected_phi_information(r.exposure * fit.params.mu_t, fit.params.varphi);
  for (const auto& r : data.control)
    phi_info += r.multiplicity * expected_phi_information(r.exposure * fit.params.mu_c, fit.params.varphi);
  fit.covariance(0, 0) = 1.0 / it;
  fit.covariance(1, 1) = 1.0 / ic;
  fit.covariance(2, 2) = phi_info > 0.0 ? 1.0 / phi_info : std::numeric_limits<double>::infinity();
  return fit;
}

ConstFit fit_const_unblinded(const Snapshot& snap) { return fit_const_unblinded(grouped_counts(snap)); }

ConstBlindedFit fit_const_blinded(const BlindedCounts& data, double beta_h1, AllocationWeights weights,
                                  BlindedMethod method, std::optional<ConstBlindedFit> init) {
  if (data.empty()) throw DomainError("blinded sample is empty");
  BlindedCounts flat = data;
  bool any = false;
  int subjects = 0;
  for (auto& r : flat) {
    subjects += r.multiplicity;
    if (!(r.exposure > 0.0)) throw DomainError("exposure must be positive");
    r.time_sum = 0.0;
    any = any || r.events > 0;
  }
  if (!any) throw NoInformationError("no events observed");
  if (subjects < 2) throw NoInformationError("need at least two subjects");
  const double factor = lumping_factor(beta_h1, weights);

  ConstBlindedFit fit;
  fit.method = method;
  Vector4 start;
  if (init) {
    start = {std::log(method == BlindedMethod::Lumping ? init->mu_b : init->mu_c), 0.0, 0.0, init->varphi};
  } else {
    const NuisanceParams p = blinded_start(flat, beta_h1, weights);
    // blinded_start returns the control log rate
    start = {method == BlindedMethod::Lumping ? p.alpha0 + std::log(factor) : p.alpha0, 0.0, 0.0, p.phi};
  }
  NewtonResult nr;
  if (method == BlindedMethod::Lumping) {
    const Objective f = [&flat](const Vector4& theta, Order order) {
      return evaluate_offset({theta[kAlpha0], 0.0, theta[kPhi]}, 0.0, flat, order);
    };
    nr = maximize(f, start, {true, false, false, true});
    fit.mu_b = std::exp(nr.theta[kAlpha0]);
    fit.mu_c = fit.mu_b / factor;
  } else {
    const Objective f = [&](const Vector4& theta, Order order) {
      return evaluate_mixture({theta[kAlpha0], 0.0, theta[kPhi]}, beta_h1, weights, flat, order);
    };
    nr = maximize(f, start, {true, false, false, true});
    fit.mu_c = std::exp(nr.theta[kAlpha0]);
    fit.mu_b = fit.mu_c * factor;
  }
  fit.mu_t = fit.mu_c * std::exp(beta_h1);
  fit.varphi = nr.theta[kPhi];
  fit.converged = nr.converged;
  fit.iterations = nr.iterations;
  return fit;
}

double info_const_blinded(const ConstBlindedFit& fit, AllocationWeights weights, const BlindedCounts& exposures) {
  check({fit.mu_t, fit.mu_c, fit.varphi});
  if (exposures.empty()) throw SingularityError("no blinded exposures");
  return harmonic(group_info(fit.mu_t, fit.varphi, exposures, weights.treatment()),
                  group_info(fit.mu_c, fit.varphi, exposures, weights.control()));
}

}  // namespace bcm
