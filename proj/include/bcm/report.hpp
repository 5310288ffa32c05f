#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "bcm/harness.hpp"

namespace bcm {

// One CSV row per scenario.
void write_summary_csv(std::ostream& out, const std::vector<Scenario>& scenarios,
                       const std::vector<ScenarioSummary>& summaries);

// Summary fields plus the full stopping-time histogram per scenario.
void write_summary_json(std::ostream& out, const std::vector<Scenario>& scenarios,
                        const std::vector<ScenarioSummary>& summaries);

// Writes summary.csv and summary.json into `dir`, creating it if needed.
void write_report(const std::string& dir, const std::vector<Scenario>& scenarios,
                  const std::vector<ScenarioSummary>& summaries);

}  // namespace bcm
