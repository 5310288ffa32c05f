#pragma once

// Event files: comma-delimited, header
//   subject_id,exposure_years,event_times[,group][,entry_years]
// event_times is a semicolon-joined list of study times (empty for none),
// group is T or C, entry_years the calendar entry time.

#include <optional>
#include <string>
#include <vector>

#include "bcm/monitoring.hpp"
#include "bcm/simulation.hpp"

namespace bcm {

struct EventData {
  std::vector<std::string> ids;
  Snapshot snapshot;           // unblinded when every row carries a group
  std::vector<double> entries;  // empty without an entry_years column
};

EventData parse_event_file(std::istream& in);
EventData load_event_file(const std::string& path);
// Groups are dropped even when present.
Snapshot load_blinded_events(const std::string& path);

struct CurvePoint {
  double time = 0.0;
  Procedure procedure = Procedure::TrendLump;
  std::optional<double> info;  // empty when the blinded fit failed
};

// Blinded information of each procedure at each calendar time, computed from
// the data available then: subjects with entry < t, exposure
// min(t - entry, recorded exposure), events up to that exposure. `init`
// seeds the first trend-model fit; later points warm-start from the previous one.
std::vector<CurvePoint> information_curve(const EventData& data, double beta_h1, AllocationWeights weights,
                                          const std::vector<Procedure>& procedures, const std::vector<double>& grid,
                                          std::optional<NuisanceParams> init = std::nullopt);

// time,procedure,information with NA for missing values.
void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);

}  // namespace bcm
