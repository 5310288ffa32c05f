#include "bcm/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "bcm/errors.hpp"

namespace bcm {

namespace {

std::string fmt(double v, int digits = 6) {
  if (!std::isfinite(v)) return "NA";
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// labels may contain commas; quote when needed
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

}  // namespace

void write_summary_csv(std::ostream& out, const std::vector<Scenario>& scenarios,
                       const std::vector<ScenarioSummary>& summaries) {
  out << "label,procedure,rate_ratio_h1,true_rate_ratio,trend_alpha1,n_total,replications,seed,reject_rate,mc_error,"
         "mean_stop_time,sd_stop_time,mean_n,mean_beta_hat,bias_exp_beta,skipped_fit_count,analysis_failures,"
         "degraded\n";
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto& sc = scenarios[i];
    const auto& s = summaries[i];
    out << csv_field(sc.label) << ',' << to_string(sc.spec.procedure) << ',' << fmt(sc.rate_ratio_h1, 4) << ','
        << fmt(sc.true_rate_ratio, 4) << ',' << fmt(sc.true_params.alpha1, 4) << ',' << sc.design.n_total << ','
        << s.replications << ',' << sc.seed << ',' << fmt(s.reject_rate) << ',' << fmt(s.mc_error) << ','
        << fmt(s.mean_stop_time) << ',' << fmt(s.sd_stop_time) << ',' << fmt(s.mean_n, 3) << ','
        << fmt(s.mean_beta_hat) << ',' << fmt(s.bias_exp_beta) << ',' << s.skipped_fit_count << ','
        << s.analysis_failures << ',' << (s.degraded ? "true" : "false") << '\n';
  }
}

void write_summary_json(std::ostream& out, const std::vector<Scenario>& scenarios,
                        const std::vector<ScenarioSummary>& summaries) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto& sc = scenarios[i];
    const auto& s = summaries[i];
    nlohmann::ordered_json hist = nlohmann::ordered_json::array();
    for (const auto& [t, n] : s.stop_time_histogram) hist.push_back({{"stop_time", fmt(t)}, {"count", n}});
    doc.push_back({{"label", sc.label},
                   {"procedure", to_string(sc.spec.procedure)},
                   {"replications", s.replications},
                   {"seed", sc.seed},
                   {"reject_rate", fmt(s.reject_rate)},
                   {"mc_error", fmt(s.mc_error)},
                   {"mean_stop_time", fmt(s.mean_stop_time)},
                   {"sd_stop_time", fmt(s.sd_stop_time)},
                   {"mean_n", fmt(s.mean_n, 3)},
                   {"mean_beta_hat", fmt(s.mean_beta_hat)},
                   {"bias_exp_beta", fmt(s.bias_exp_beta)},
                   {"skipped_fit_count", s.skipped_fit_count},
                   {"analysis_failures", s.analysis_failures},
                   {"degraded", s.degraded},
                   {"stop_time_histogram", hist}});
  }
  out << doc.dump(2) << '\n';
}

void write_report(const std::string& dir, const std::vector<Scenario>& scenarios,
                  const std::vector<ScenarioSummary>& summaries) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  const auto base = std::filesystem::path(dir);
  std::ofstream csv(base / "summary.csv");
  std::ofstream json(base / "summary.json");
  if (!csv || !json) throw IoError("cannot write report files in " + dir);
  write_summary_csv(csv, scenarios, summaries);
  write_summary_json(json, scenarios, summaries);
  if (!csv || !json) throw IoError("write failed in " + dir);
}

}  // namespace bcm
