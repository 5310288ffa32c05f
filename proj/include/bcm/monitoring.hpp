#pragma once

// Target information and the blinded continuous monitoring loop.

#include <optional>
#include <string>
#include <vector>

#include "bcm/blinded_trend.hpp"
#include "bcm/const_model.hpp"
#include "bcm/simulation.hpp"

namespace bcm {

enum class Procedure { Fixed, TrendLump, TrendMix, ConstLump, ConstMix };

// fixed, trend-lump, trend-mix, const-lump, const-mix (case-insensitive).
Procedure parse_procedure(const std::string& name);
const char* to_string(Procedure p) noexcept;
bool uses_trend_model(Procedure p) noexcept;

struct MonitoringSpec {
  Procedure procedure = Procedure::TrendLump;
  double beta_h1 = 0.0;
  double alpha = 0.025;
  double target_info = 1.0;
  // Keep monitoring past study_duration until the last subject completes
  // follow-up. Off by default.
  bool allow_extension = false;

  void validate() const;
};

struct InfoPoint {
  double time = 0.0;
  double info = 0.0;
};

struct MonitoringOutcome {
  double stop_time = 0.0;
  bool stopped_early = false;
  bool reject = false;
  double beta_hat = 0.0;  // log rate ratio (constant-rate model for Const procedures)
  double wald_statistic = 0.0;
  int n_analyzed = 0;
  std::vector<InfoPoint> info_trajectory;
  int skipped_points = 0;
  bool analysis_failed = false;  // final fit did not converge; counted as no rejection
};

// (z_{1-alpha} + z_P)^2 / beta_h1^2.
double target_information(double alpha, double power, double beta_h1);

// monitor_start, monitor_start + step, ... strictly below `end`, then `end`.
std::vector<double> monitoring_grid(double start, double step, double end);

// Warm-start state carried between grid points.
struct BlindedState {
  std::optional<NuisanceParams> trend;
  std::optional<ConstBlindedFit> constant;
};

// Blinded information of a trend or constant-rate procedure for one blinded
// sample. Throws NumericalError subclasses when the fit fails.
double blinded_information(Procedure procedure, const BlindedCounts& data, double beta_h1,
                           AllocationWeights weights, BlindedState* state = nullptr);

MonitoringOutcome run_monitored_trial(const Trial& trial, const TrialDesign& design, const MonitoringSpec& spec);

}  // namespace bcm
