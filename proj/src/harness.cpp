#include "bcm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "bcm/errors.hpp"
#include "bcm/trend_mle.hpp"

namespace bcm {

double solve_alpha0(double target_cum_rate, double horizon, double alpha1) {
  if (!(target_cum_rate > 0.0) || !(horizon > 0.0) || !std::isfinite(alpha1))
    throw DomainError("target and horizon must be positive");
  return std::log(target_cum_rate) - std::log(horizon * detail::expm1_over(alpha1 * horizon));
}

ReplicationResult run_replication(const Scenario& sc, std::uint64_t index) {
  Rng rng = replication_stream(sc.seed, index);
  const Trial trial = simulate_trial(sc.design, sc.true_params, rng);
  const MonitoringOutcome out = run_monitored_trial(trial, sc.design, sc.spec);
  ReplicationResult r;
  r.stop_time = out.stop_time;
  r.reject = out.reject;
  r.beta_hat = out.beta_hat;
  r.n_analyzed = out.n_analyzed;
  r.grid_points = static_cast<int>(out.info_trajectory.size()) + out.skipped_points;
  r.skipped = out.skipped_points;
  r.analysis_failed = out.analysis_failed;
  return r;
}

ScenarioSummary summarize(const Scenario& sc, const std::vector<ReplicationResult>& reps) {
  ScenarioSummary s;
  s.replications = static_cast<int>(reps.size());
  if (reps.empty()) return s;
  const double n = static_cast<double>(reps.size());
  double rejects = 0.0, stop = 0.0, stop2 = 0.0, size = 0.0, beta = 0.0, expb = 0.0;
  int estimates = 0;
  long attempts = 0;
  for (const auto& r : reps) {
    rejects += r.reject ? 1.0 : 0.0;
    stop += r.stop_time;
    size += r.n_analyzed;
    s.skipped_fit_count += r.skipped;
    attempts += r.grid_points + 1;
    if (r.analysis_failed) {
      ++s.analysis_failures;
    } else {
      beta += r.beta_hat;
      expb += std::exp(r.beta_hat);
      ++estimates;
    }
    s.stop_time_histogram[std::round(r.stop_time * 1e6) / 1e6] += 1;
  }
  s.reject_rate = rejects / n;
  s.mc_error = std::sqrt(s.reject_rate * (1.0 - s.reject_rate) / n);
  s.mean_stop_time = stop / n;
  for (const auto& r : reps) stop2 += (r.stop_time - s.mean_stop_time) * (r.stop_time - s.mean_stop_time);
  s.sd_stop_time = reps.size() > 1 ? std::sqrt(stop2 / (n - 1.0)) : 0.0;
  s.mean_n = size / n;
  if (estimates > 0) {
    s.mean_beta_hat = beta / estimates;
    s.bias_exp_beta = expb / estimates - sc.true_rate_ratio;
  } else {
    s.mean_beta_hat = s.bias_exp_beta = std::numeric_limits<double>::quiet_NaN();
  }
  const double failures = static_cast<double>(s.skipped_fit_count + s.analysis_failures);
  s.degraded = failures > 0.05 * static_cast<double>(attempts);
  return s;
}

ScenarioSummary run_scenario(const Scenario& sc, int worker_count, std::vector<ReplicationResult>* per_replication) {
  if (sc.replications < 1) throw ValidationError("replications", "must be at least 1");
  sc.design.validate();
  sc.spec.validate();
  sc.true_params.validate();
  std::vector<ReplicationResult> reps(static_cast<std::size_t>(sc.replications));
  const int workers = std::clamp(worker_count, 1, sc.replications);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int i = next++; i < sc.replications; i = next++) {
      try {
        reps[static_cast<std::size_t>(i)] = run_replication(sc, static_cast<std::uint64_t>(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = sc.replications;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  ScenarioSummary s = summarize(sc, reps);
  if (per_replication) *per_replication = std::move(reps);
  return s;
}

int analytic_nfix(double alpha, double power, double beta_h1, const ModelParams& control_params, double followup,
                  AllocationWeights weights) {
  const double target = target_information(alpha, power, beta_h1);
  ModelParams p = control_params;
  p.beta = beta_h1;
  Matrix4 f = Matrix4::Zero();
  accumulate_expected_fisher(f, weights.treatment(), p, Group::Treatment, followup, false);
  accumulate_expected_fisher(f, weights.control(), p, Group::Control, followup, false);
  const double per_subject = information_for_beta(f);
  const double n = target / per_subject;
  const double per_group = std::ceil(n * std::max(weights.treatment(), weights.control()) - 1e-9);
  return 2 * static_cast<int>(per_group);
}

int nfix_by_simulation(Scenario base, double power, int lo, int hi, int replications, int worker_count) {
  if (lo < 2 || hi < lo) throw DomainError("invalid search bracket");
  base.spec.procedure = Procedure::Fixed;
  base.replications = replications;
  auto power_at = [&](int n) {
    base.design.n_total = n;
    return run_scenario(base, worker_count).reject_rate;
  };
  lo += lo % 2;
  hi += hi % 2;
  if (power_at(hi) < power) return hi;
  while (hi - lo > 2) {
    int mid = (lo + hi) / 2;
    mid += mid % 2;
    if (mid >= hi) mid = hi - 2;
    if (power_at(mid) >= power)
      hi = mid;
    else
      lo = mid;
  }
  return power_at(lo) >= power ? lo : hi;
}

}  // namespace bcm
