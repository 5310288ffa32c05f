#include "bcm/monitoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "bcm/errors.hpp"
#include "bcm/trend_mle.hpp"

namespace bcm {

Procedure parse_procedure(const std::string& name) {
  std::string s;
  for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  std::replace(s.begin(), s.end(), '_', '-');
  if (s == "fixed") return Procedure::Fixed;
  if (s == "trend-lump") return Procedure::TrendLump;
  if (s == "trend-mix") return Procedure::TrendMix;
  if (s == "const-lump") return Procedure::ConstLump;
  if (s == "const-mix") return Procedure::ConstMix;
  throw ValidationError("procedure", "unknown procedure '" + name + "'");
}

const char* to_string(Procedure p) noexcept {
  switch (p) {
    case Procedure::Fixed: return "fixed";
    case Procedure::TrendLump: return "trend-lump";
    case Procedure::TrendMix: return "trend-mix";
    case Procedure::ConstLump: return "const-lump";
    case Procedure::ConstMix: return "const-mix";
  }
  return "?";
}

bool uses_trend_model(Procedure p) noexcept {
  return p == Procedure::Fixed || p == Procedure::TrendLump || p == Procedure::TrendMix;
}

void MonitoringSpec::validate() const {
  if (!(target_info > 0.0) || !std::isfinite(target_info)) throw ValidationError("target_info", "must be positive");
  if (!(alpha > 0.0 && alpha < 0.5)) throw ValidationError("alpha_one_sided", "must lie in (0, 0.5)");
  if (!std::isfinite(beta_h1)) throw ValidationError("rate_ratio_h1", "must be positive and finite");
}

double target_information(double alpha, double power, double beta_h1) {
  if (!(beta_h1 != 0.0) || !std::isfinite(beta_h1)) throw DomainError("beta_h1 must be finite and nonzero");
  if (!(alpha > 0.0 && alpha < 1.0) || !(power > 0.0 && power < 1.0))
    throw DomainError("alpha and power must lie in (0, 1)");
  const double z = normal_quantile(1.0 - alpha) + normal_quantile(power);
  return z * z / (beta_h1 * beta_h1);
}

std::vector<double> monitoring_grid(double start, double step, double end) {
  if (!(step > 0.0)) throw DomainError("grid step must be positive");
  std::vector<double> grid;
  for (long k = 0;; ++k) {
    const double t = start + static_cast<double>(k) * step;
    if (!(t < end - 1e-12)) break;
    grid.push_back(t);
  }
  grid.push_back(end);
  return grid;
}

double blinded_information(Procedure procedure, const BlindedCounts& data, double beta_h1,
                           AllocationWeights weights, BlindedState* state) {
  BlindedState local;
  BlindedState& st = state ? *state : local;
  switch (procedure) {
    case Procedure::TrendLump:
    case Procedure::TrendMix: {
      const auto method = procedure == Procedure::TrendMix ? BlindedMethod::Mixture : BlindedMethod::Lumping;
      BlindedFit fit;
      if (st.trend) {
        try {
          fit = fit_blinded(method, data, beta_h1, weights, st.trend);
        } catch (const EvaluationError&) {
        }
      }
      if (!fit.converged) fit = fit_blinded(method, data, beta_h1, weights);
      if (!fit.converged) throw NumericalError("blinded fit did not converge");
      st.trend = fit.nuisance();
      return blinded_fisher(fit, beta_h1, weights, data).info;
    }
    case Procedure::ConstLump:
    case Procedure::ConstMix: {
      const auto method = procedure == Procedure::ConstMix ? BlindedMethod::Mixture : BlindedMethod::Lumping;
      ConstBlindedFit fit;
      if (st.constant) {
        try {
          fit = fit_const_blinded(data, beta_h1, weights, method, st.constant);
        } catch (const EvaluationError&) {
        }
      }
      if (!fit.converged) fit = fit_const_blinded(data, beta_h1, weights, method);
      if (!fit.converged) throw NumericalError("blinded fit did not converge");
      st.constant = fit;
      return info_const_blinded(fit, weights, data);
    }
    case Procedure::Fixed:
      break;
  }
  throw DomainError("the fixed design has no blinded information");
}

namespace {

void final_analysis(const TrialIndex& index, double t, const MonitoringSpec& spec, MonitoringOutcome& out) {
  out.stop_time = t;
  out.n_analyzed = index.enrolled(t);
  const GroupedCounts data = index.grouped(t);
  try {
    if (uses_trend_model(spec.procedure)) {
      const FitResult fit = fit_trend(data);
      if (!fit.converged) throw NumericalError("final fit did not converge");
      out.beta_hat = fit.estimates.beta;
      out.wald_statistic = fit.wald_statistic;
    } else {
      const ConstFit fit = fit_const_unblinded(data);
      if (!fit.converged) throw NumericalError("final fit did not converge");
      out.beta_hat = fit.log_rate_difference;
      out.wald_statistic = fit.wald_statistic;
    }
    out.reject = wald_reject(out.wald_statistic, spec.alpha);
  } catch (const NumericalError&) {
    out.analysis_failed = true;
    out.reject = false;
    out.beta_hat = std::numeric_limits<double>::quiet_NaN();
    out.wald_statistic = std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

MonitoringOutcome run_monitored_trial(const Trial& trial, const TrialDesign& design, const MonitoringSpec& spec) {
  design.validate();
  spec.validate();
  const TrialIndex index(trial);
  MonitoringOutcome out;
  if (spec.procedure == Procedure::Fixed) {
    final_analysis(index, design.study_duration, spec, out);
    return out;
  }
  double end = design.study_duration;
  if (spec.allow_extension) end = std::max(end, index.last_completion());
  BlindedState state;
  for (double t : monitoring_grid(design.monitor_start, design.monitor_step, end)) {
    const BlindedCounts data = index.blinded(t);
    double info;
    try {
      if (data.empty()) throw NoInformationError("nobody enrolled");
      info = blinded_information(spec.procedure, data, spec.beta_h1, design.weights, &state);
    } catch (const NumericalError&) {
      ++out.skipped_points;
      continue;
    }
    out.info_trajectory.push_back({t, info});
    if (info >= spec.target_info) {
      out.stopped_early = t < design.study_duration;
      final_analysis(index, t, spec, out);
      return out;
    }
  }
  final_analysis(index, end, spec, out);
  return out;
}

}  // namespace bcm
