// Command-line front end: simulate, curve, target-info, fit.

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bcm/config.hpp"
#include "bcm/errors.hpp"
#include "bcm/events.hpp"
#include "bcm/harness.hpp"
#include "bcm/report.hpp"
#include "bcm/trend_mle.hpp"

using namespace bcm;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct SimulateArgs {
  std::string config;
  std::string out = "results";
  int workers = 0;
  std::string procedure;
  int replications = 0;
};

struct CurveArgs {
  std::string events;
  double beta_h1 = 0.0;
  std::string procedure = "all";
  double start = 0.5;
  double step = 1.0 / 52.0;
  std::optional<double> end;
  double allocation = 0.5;
  std::optional<double> alpha0_init, alpha1_init, phi_init;
  std::string out;
};

struct TargetArgs {
  double alpha = 0.025;
  double power = 0.8;
  double rate_ratio = 0.5;
};

struct FitArgs {
  std::string events;
  bool blinded = false;
  std::optional<double> beta_h1;
  std::string procedure = "trend-lump";
  double alpha = 0.025;
  double allocation = 0.5;
};

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

int run_simulate(const SimulateArgs& a) {
  auto scenarios = load_config(a.config);
  if (scenarios.empty()) throw ValidationError("config", "no scenarios in " + a.config);
  const int workers = a.workers > 0 ? a.workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  for (auto& sc : scenarios) {
    if (!a.procedure.empty()) sc.spec.procedure = parse_procedure(a.procedure);
    if (a.replications > 0) sc.replications = a.replications;
  }
  std::vector<ScenarioSummary> summaries;
  std::printf("%-28s %-11s %6s %8s %8s %8s %8s\n", "label", "procedure", "n", "reject", "mc_err", "stop", "skipped");
  for (const auto& sc : scenarios) {
    summaries.push_back(run_scenario(sc, workers));
    const auto& s = summaries.back();
    std::printf("%-28s %-11s %6d %8.4f %8.4f %8.3f %8ld%s\n", sc.label.c_str(), to_string(sc.spec.procedure),
                sc.design.n_total, s.reject_rate, s.mc_error, s.mean_stop_time, s.skipped_fit_count,
                s.degraded ? "  degraded" : "");
    std::fflush(stdout);
  }
  write_report(a.out, scenarios, summaries);
  std::fprintf(stderr, "wrote %s/summary.csv and %s/summary.json\n", a.out.c_str(), a.out.c_str());
  return 0;
}

int run_curve(const CurveArgs& a) {
  const EventData data = load_event_file(a.events);
  std::vector<Procedure> procs;
  if (a.procedure == "all")
    procs = {Procedure::TrendLump, Procedure::TrendMix, Procedure::ConstLump, Procedure::ConstMix};
  else
    procs = {parse_procedure(a.procedure)};
  double end = 0.0;
  if (a.end) {
    end = *a.end;
  } else {
    if (data.entries.size() != data.snapshot.records.size())
      throw ValidationError("entry_years", "information curves need calendar entry times");
    for (std::size_t i = 0; i < data.entries.size(); ++i)
      end = std::max(end, data.entries[i] + data.snapshot.records[i].exposure);
  }
  std::optional<NuisanceParams> init;
  if (a.alpha0_init || a.alpha1_init || a.phi_init) {
    init = NuisanceParams{a.alpha0_init.value_or(0.0), a.alpha1_init.value_or(0.0), a.phi_init.value_or(1.0)};
    if (!(init->phi > 0.0)) throw ValidationError("phi-init", "must be positive");
  }
  const auto grid = monitoring_grid(a.start, a.step, end);
  const auto curve = information_curve(data, a.beta_h1, AllocationWeights(a.allocation), procs, grid, init);
  if (a.out.empty()) {
    write_curve_csv(std::cout, curve);
  } else {
    std::ofstream out(a.out);
    if (!out) throw IoError("cannot write " + a.out);
    write_curve_csv(out, curve);
    if (!out) throw IoError("write failed: " + a.out);
  }
  return 0;
}

int run_target(const TargetArgs& a) {
  if (!(a.rate_ratio > 0.0)) throw ValidationError("rate-ratio", "must be positive");
  std::printf("%.6f\n", target_information(a.alpha, a.power, std::log(a.rate_ratio)));
  return 0;
}

json blinded_fit_json(const FitArgs& a, const Snapshot& snap) {
  if (!a.beta_h1) throw ValidationError("beta-h1", "required with --blinded");
  const Procedure proc = parse_procedure(a.procedure);
  if (proc == Procedure::Fixed) throw ValidationError("procedure", "the fixed design has no blinded fit");
  const AllocationWeights w(a.allocation);
  const BlindedCounts counts = blinded_counts(snap);
  json j;
  j["procedure"] = to_string(proc);
  j["beta_h1"] = *a.beta_h1;
  j["subjects"] = snap.records.size();
  if (uses_trend_model(proc)) {
    const auto method = proc == Procedure::TrendMix ? BlindedMethod::Mixture : BlindedMethod::Lumping;
    const BlindedFit fit = fit_blinded(method, counts, *a.beta_h1, w);
    j["converged"] = fit.converged;
    j["alpha0"] = fit.alpha0_b;
    j["alpha1"] = fit.alpha1_b;
    j["phi"] = fit.phi_b;
    j["boundary"] = fit.boundary;
    j["loglik"] = number(fit.loglik);
    j["information"] = fit.converged ? number(blinded_fisher(fit, *a.beta_h1, w, counts).info) : json(nullptr);
  } else {
    const auto method = proc == Procedure::ConstMix ? BlindedMethod::Mixture : BlindedMethod::Lumping;
    const ConstBlindedFit fit = fit_const_blinded(counts, *a.beta_h1, w, method);
    j["converged"] = fit.converged;
    j["mu_c"] = fit.mu_c;
    j["mu_t"] = fit.mu_t;
    j["varphi"] = fit.varphi;
    j["information"] = fit.converged ? number(info_const_blinded(fit, w, counts)) : json(nullptr);
  }
  return j;
}

json unblinded_fit_json(const FitArgs& a, const Snapshot& snap) {
  if (snap.blinded) throw ValidationError("group", "unblinded fits need a group column (or pass --blinded)");
  const GroupedCounts data = grouped_counts(snap);
  const FitResult fit = fit_trend(data);
  json j;
  j["subjects"] = snap.records.size();
  json t;
  t["converged"] = fit.converged;
  t["iterations"] = fit.iterations;
  t["alpha0"] = fit.estimates.alpha0;
  t["alpha1"] = fit.estimates.alpha1;
  t["beta"] = fit.estimates.beta;
  t["phi"] = fit.estimates.phi;
  t["rate_ratio"] = std::exp(fit.estimates.beta);
  t["boundary"] = fit.boundary;
  t["loglik"] = number(fit.loglik);
  t["information_beta"] = number(fit.information_beta);
  t["wald_statistic"] = number(fit.wald_statistic);
  t["reject"] = fit.converged ? json(wald_decision(fit, a.alpha)) : json(nullptr);
  j["trend"] = t;
  json c;
  try {
    const ConstFit cf = fit_const_unblinded(data);
    c["converged"] = cf.converged;
    c["mu_t"] = cf.params.mu_t;
    c["mu_c"] = cf.params.mu_c;
    c["varphi"] = cf.params.varphi;
    c["log_rate_difference"] = cf.log_rate_difference;
    c["information"] = number(cf.information);
    c["wald_statistic"] = number(cf.wald_statistic);
    c["reject"] = cf.converged ? json(wald_reject(cf.wald_statistic, a.alpha)) : json(nullptr);
  } catch (const BoundaryError& e) {
    c["error"] = e.what();
  }
  j["constant"] = c;
  j["alpha"] = a.alpha;
  return j;
}

int run_fit(const FitArgs& a) {
  const Snapshot snap = a.blinded ? load_blinded_events(a.events) : load_event_file(a.events).snapshot;
  const json j = a.blinded ? blinded_fit_json(a, snap) : unblinded_fit_json(a, snap);
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blinded continuous information monitoring for recurrent-event trials"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run the Monte Carlo scenarios of a config file");
  s->add_option("config", sim.config, "Scenario file")->required();
  s->add_option("--out", sim.out, "Report directory")->capture_default_str();
  s->add_option("--workers", sim.workers, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  s->add_option("--procedure", sim.procedure, "Override the procedure of every scenario");
  s->add_option("--replications", sim.replications, "Override the replication count")->check(CLI::PositiveNumber);

  CurveArgs cur;
  auto* c = app.add_subcommand("curve", "Blinded information against calendar time for an event file");
  c->add_option("events", cur.events, "Event file with entry_years")->required();
  c->add_option("--beta-h1", cur.beta_h1, "Log rate ratio under the alternative")->required();
  c->add_option("--procedure", cur.procedure, "trend-lump, trend-mix, const-lump, const-mix or all")
      ->capture_default_str();
  c->add_option("--start", cur.start, "First calendar time")->capture_default_str();
  c->add_option("--step", cur.step, "Grid step in years")->capture_default_str();
  c->add_option("--end", cur.end, "Last calendar time (default: last follow-up)");
  c->add_option("--allocation", cur.allocation, "Treatment allocation probability")->capture_default_str();
  c->add_option("--alpha0-init", cur.alpha0_init, "Starting alpha0 for the first trend fit");
  c->add_option("--alpha1-init", cur.alpha1_init, "Starting alpha1 for the first trend fit");
  c->add_option("--phi-init", cur.phi_init, "Starting phi for the first trend fit");
  c->add_option("--out", cur.out, "Output CSV (default: stdout)");

  TargetArgs tgt;
  auto* t = app.add_subcommand("target-info", "Information needed by the fixed design");
  t->add_option("--alpha", tgt.alpha, "One-sided level")->capture_default_str();
  t->add_option("--power", tgt.power, "Target power")->capture_default_str();
  t->add_option("--rate-ratio", tgt.rate_ratio, "Rate ratio under the alternative")->capture_default_str();

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Fit an event file and print JSON");
  f->add_option("events", fit.events, "Event file")->required();
  f->add_flag("--blinded", fit.blinded, "Ignore groups and fit the blinded model");
  f->add_option("--beta-h1", fit.beta_h1, "Log rate ratio under the alternative (blinded)");
  f->add_option("--procedure", fit.procedure, "Blinded procedure")->capture_default_str();
  f->add_option("--alpha", fit.alpha, "One-sided level for the Wald decision")->capture_default_str();
  f->add_option("--allocation", fit.allocation, "Treatment allocation probability")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*s) return run_simulate(sim);
    if (*c) return run_curve(cur);
    if (*t) return run_target(tgt);
    if (*f) return run_fit(fit);
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
  return 0;
}
