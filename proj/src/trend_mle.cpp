#include "bcm/trend_mle.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <sstream>

#include "bcm/errors.hpp"

namespace bcm {

namespace {

std::string describe(const ModelParams& p) {
  std::ostringstream os;
  os.precision(17);
  os << "alpha0=" << p.alpha0 << " alpha1=" << p.alpha1 << " beta=" << p.beta << " phi=" << p.phi;
  return os.str();
}

void require_finite(const Evaluation& e, const ModelParams& p, Order order) {
  bool ok = std::isfinite(e.loglik);
  if (order != Order::Value) ok = ok && e.grad.allFinite();
  if (!ok) throw EvaluationError("log-likelihood not finite at " + describe(p));
}

void require_exposures(const std::vector<CountRecord>& recs) {
  for (const auto& r : recs)
    if (!(r.exposure > 0.0) || !std::isfinite(r.exposure)) throw DomainError("exposure must be positive");
}

}  // namespace

double loglik_trend(const ModelParams& params, const GroupedCounts& data) {
  params.validate();
  if (data.size() == 0) throw DomainError("snapshot is empty");
  require_exposures(data.treatment);
  require_exposures(data.control);
  const auto e = evaluate_grouped(params, data, Order::Value);
  require_finite(e, params, Order::Value);
  return e.loglik;
}

double loglik_trend(const ModelParams& params, const Snapshot& snap) {
  return loglik_trend(params, grouped_counts(snap));
}

Vector4 score_trend(const ModelParams& params, const GroupedCounts& data) {
  params.validate();
  if (data.size() == 0) throw DomainError("snapshot is empty");
  require_exposures(data.treatment);
  require_exposures(data.control);
  const auto e = evaluate_grouped(params, data, Order::Gradient);
  require_finite(e, params, Order::Gradient);
  return e.grad;
}

Vector4 score_trend(const ModelParams& params, const Snapshot& snap) {
  return score_trend(params, grouped_counts(snap));
}

Matrix4 fisher_trend(const ModelParams& params, const GroupedCounts& data, bool with_phi) {
  params.validate();
  Matrix4 f = Matrix4::Zero();
  for (const auto& r : data.treatment)
    accumulate_expected_fisher(f, r.multiplicity, params, Group::Treatment, r.exposure, with_phi);
  for (const auto& r : data.control)
    accumulate_expected_fisher(f, r.multiplicity, params, Group::Control, r.exposure, with_phi);
  return f;
}

Matrix4 fisher_trend(const ModelParams& params, const GroupExposures& exposures) {
  GroupedCounts data;
  for (double s : exposures.treatment) data.treatment.push_back({s, 0, 0.0, 1});
  for (double s : exposures.control) data.control.push_back({s, 0, 0.0, 1});
  if (data.size() == 0) throw SingularityError("no exposure");
  require_exposures(data.treatment);
  require_exposures(data.control);
  return fisher_trend(params, data, true);
}

namespace detail {

double moment_phi(const std::vector<const std::vector<CountRecord>*>& groups, double rate) {
  double num = 0.0, den = 0.0;
  for (const auto* g : groups) {
    for (const auto& r : *g) {
      const double mu = rate * r.exposure;
      const double dev = r.events - mu;
      num += r.multiplicity * (dev * dev - mu);
      den += r.multiplicity * mu * mu;
    }
  }
  const double phi = den > 0.0 ? num / den : 1.0;
  return std::clamp(std::isfinite(phi) ? phi : 1.0, 1e-3, 50.0);
}

}  // namespace detail

ModelParams default_start(const GroupedCounts& data) {
  double events = 0.0, exposure = 0.0;
  for (const auto* g : {&data.treatment, &data.control}) {
    for (const auto& r : *g) {
      events += static_cast<double>(r.events) * r.multiplicity;
      exposure += r.exposure * r.multiplicity;
    }
  }
  if (!(events > 0.0)) throw NoInformationError("no events observed");
  const double rate = events / exposure;
  return {std::log(rate), 0.0, 0.0, detail::moment_phi({&data.treatment, &data.control}, rate)};
}

FitResult fit_trend(const GroupedCounts& data, std::optional<ModelParams> init, const NewtonOptions& options) {
  if (data.treatment.empty() || data.control.empty())
    throw NoInformationError("each group needs at least one subject");
  require_exposures(data.treatment);
  require_exposures(data.control);
  const ModelParams start = init ? *init : default_start(data);
  if (init) {
    bool any = false;
    for (const auto* g : {&data.treatment, &data.control})
      for (const auto& r : *g) any = any || r.events > 0;
    if (!any) throw NoInformationError("no events observed");
  }
  start.validate();

  const Objective f = [&data](const Vector4& theta, Order order) {
    return evaluate_grouped(unpack(theta), data, order);
  };
  const NewtonResult nr = maximize(f, pack(start), {true, true, true, true}, options);

  FitResult fit;
  fit.estimates = unpack(nr.theta);
  fit.converged = nr.converged;
  fit.boundary = nr.phi_at_floor;
  fit.iterations = nr.iterations;
  fit.loglik = nr.eval.loglik;
  if (!fit.converged) return fit;
  fit.fisher = fisher_trend(fit.estimates, data, true);
  fit.information_beta = information_for_beta(fit.fisher);
  fit.wald_statistic = fit.estimates.beta * std::sqrt(fit.information_beta);
  return fit;
}

FitResult fit_trend(const Snapshot& snap, std::optional<ModelParams> init) {
  return fit_trend(grouped_counts(snap), init);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("probability must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

bool wald_reject(double statistic, double alpha) { return statistic < normal_quantile(alpha); }

bool wald_decision(const FitResult& fit, double alpha) {
  if (!fit.converged) throw DecisionUnavailableError("fit did not converge");
  return wald_reject(fit.wald_statistic, alpha);
}

}  // namespace bcm
