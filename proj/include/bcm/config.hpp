#pragma once

// Scenario configuration files.
//
//   # comment
//   [defaults]            optional; keys apply to every later scenario
//   shape_phi = 1.25
//   [scenario]
//   label = s1-h1
//   rate_ratio_h1 = 0.5
//   ...
//
// Numbers may be written as fractions (monitor_step_years = 1/52).

#include <istream>
#include <string>
#include <vector>

#include "bcm/harness.hpp"

namespace bcm {

// Throws ParseError (with line number) for malformed text or unknown keys and
// ValidationError (naming the field) for missing or invalid values.
std::vector<Scenario> parse_config(std::istream& in);
std::vector<Scenario> load_config(const std::string& path);

}  // namespace bcm
