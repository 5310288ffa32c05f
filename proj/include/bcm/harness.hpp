#pragma once

// Monte Carlo scenarios: one trial design, true parameters and monitoring
// procedure, replicated with independent per-replication random streams.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bcm/monitoring.hpp"

namespace bcm {

struct Scenario {
  std::string label;
  TrialDesign design;
  ModelParams true_params;
  MonitoringSpec spec;
  int replications = 5000;
  std::uint64_t seed = 1;

  // planning inputs, kept for reporting
  double rate_ratio_h1 = 1.0;
  double true_rate_ratio = 1.0;
  double power_target = 0.8;
  double cum_rate_control_2y = 1.5;
};

struct ReplicationResult {
  double stop_time = 0.0;
  bool reject = false;
  double beta_hat = 0.0;
  int n_analyzed = 0;
  int grid_points = 0;  // blinded evaluations attempted
  int skipped = 0;
  bool analysis_failed = false;
};

struct ScenarioSummary {
  int replications = 0;
  double reject_rate = 0.0;
  double mc_error = 0.0;  // sqrt(p (1 - p) / replications)
  double mean_stop_time = 0.0;
  double sd_stop_time = 0.0;
  double mean_n = 0.0;
  double mean_beta_hat = 0.0;  // over replications with a final estimate
  double bias_exp_beta = 0.0;  // mean exp(beta_hat) minus the true rate ratio
  long skipped_fit_count = 0;
  int analysis_failures = 0;
  bool degraded = false;  // more than 5% of all fits failed
  std::map<double, int> stop_time_histogram;
};

// alpha0 such that Lambda_C(horizon) = target.
double solve_alpha0(double target_cum_rate, double horizon, double alpha1);

ReplicationResult run_replication(const Scenario& sc, std::uint64_t index);

// Deterministic for a given (seed, replications) whatever the worker count.
ScenarioSummary run_scenario(const Scenario& sc, int worker_count = 1,
                             std::vector<ReplicationResult>* per_replication = nullptr);

ScenarioSummary summarize(const Scenario& sc, const std::vector<ReplicationResult>& reps);

// Fixed-design total sample size from the expected information of subjects
// followed for `followup` years: per-group size rounded up, times two.
int analytic_nfix(double alpha, double power, double beta_h1, const ModelParams& control_params, double followup,
                  AllocationWeights weights = AllocationWeights::balanced());

// Smallest even n in [lo, hi] whose simulated fixed-design power reaches
// `power`, by bisection. `base` supplies everything except n_total; its
// procedure is forced to the fixed design.
int nfix_by_simulation(Scenario base, double power, int lo, int hi, int replications, int worker_count = 1);

}  // namespace bcm
