#include "bcm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "bcm/errors.hpp"

namespace bcm {

namespace {

const std::set<std::string> kRequired = {
    "rate_ratio_h1",      "true_rate_ratio",    "trend_alpha1",     "cum_rate_control_2y",
    "shape_phi",          "n_total",            "recruitment_years", "max_followup_years",
    "study_years",        "monitor_start_years", "procedure",        "power_target",
    "alpha_one_sided",    "replications",       "seed"};
const std::set<std::string> kOptional = {"label", "monitor_step_years", "allocation_treatment"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct Value {
  std::string text;
  std::size_t line;
};

using Block = std::map<std::string, Value>;

bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e;
}

double number(const Block& blk, const std::string& key) {
  const Value& v = blk.at(key);
  const auto slash = v.text.find('/');
  double x = 0.0;
  if (slash == std::string::npos) {
    if (!parse_double(v.text, x)) throw ParseError(v.line, key + ": not a number: '" + v.text + "'");
  } else {
    double num = 0.0, den = 0.0;
    if (!parse_double(trim(v.text.substr(0, slash)), num) || !parse_double(trim(v.text.substr(slash + 1)), den) ||
        den == 0.0)
      throw ParseError(v.line, key + ": not a number: '" + v.text + "'");
    x = num / den;
  }
  if (!std::isfinite(x)) throw ParseError(v.line, key + ": not finite");
  return x;
}

long long integer(const Block& blk, const std::string& key) {
  const Value& v = blk.at(key);
  long long x = 0;
  const char* e = v.text.data() + v.text.size();
  auto r = std::from_chars(v.text.data(), e, x);
  if (r.ec != std::errc() || r.ptr != e) throw ParseError(v.line, key + ": not an integer: '" + v.text + "'");
  return x;
}

Scenario build(const Block& blk, std::size_t index) {
  for (const auto& k : kRequired)
    if (!blk.count(k)) throw ValidationError(k, "missing in scenario " + std::to_string(index + 1));

  Scenario sc;
  sc.label = blk.count("label") ? blk.at("label").text : "scenario-" + std::to_string(index + 1);

  sc.rate_ratio_h1 = number(blk, "rate_ratio_h1");
  if (!(sc.rate_ratio_h1 > 0.0) || sc.rate_ratio_h1 == 1.0)
    throw ValidationError("rate_ratio_h1", "must be positive and different from 1");
  sc.true_rate_ratio = number(blk, "true_rate_ratio");
  if (!(sc.true_rate_ratio > 0.0)) throw ValidationError("true_rate_ratio", "must be positive");
  sc.cum_rate_control_2y = number(blk, "cum_rate_control_2y");
  if (!(sc.cum_rate_control_2y > 0.0)) throw ValidationError("cum_rate_control_2y", "must be positive");
  const double alpha1 = number(blk, "trend_alpha1");
  const double phi = number(blk, "shape_phi");
  if (!(phi > 0.0)) throw ValidationError("shape_phi", "must be positive");
  sc.true_params = {solve_alpha0(sc.cum_rate_control_2y, 2.0, alpha1), alpha1, std::log(sc.true_rate_ratio), phi};

  const long long n = integer(blk, "n_total");
  if (n <= 0 || n > 10'000'000) throw ValidationError("n_total", "must be a positive integer");
  sc.design.n_total = static_cast<int>(n);
  const double w = blk.count("allocation_treatment") ? number(blk, "allocation_treatment") : 0.5;
  if (!(w > 0.0 && w < 1.0)) throw ValidationError("allocation_treatment", "must lie strictly between 0 and 1");
  sc.design.weights = AllocationWeights(w);
  sc.design.recruitment_period = number(blk, "recruitment_years");
  sc.design.max_followup = number(blk, "max_followup_years");
  sc.design.study_duration = number(blk, "study_years");
  sc.design.monitor_start = number(blk, "monitor_start_years");
  sc.design.monitor_step = blk.count("monitor_step_years") ? number(blk, "monitor_step_years") : 1.0 / 52.0;
  sc.design.validate();

  sc.power_target = number(blk, "power_target");
  if (!(sc.power_target > 0.0 && sc.power_target < 1.0)) throw ValidationError("power_target", "must lie in (0, 1)");
  sc.spec.procedure = parse_procedure(blk.at("procedure").text);
  sc.spec.alpha = number(blk, "alpha_one_sided");
  if (!(sc.spec.alpha > 0.0 && sc.spec.alpha < 0.5)) throw ValidationError("alpha_one_sided", "must lie in (0, 0.5)");
  sc.spec.beta_h1 = std::log(sc.rate_ratio_h1);
  sc.spec.target_info = target_information(sc.spec.alpha, sc.power_target, sc.spec.beta_h1);

  const long long reps = integer(blk, "replications");
  if (reps < 1 || reps > 100'000'000) throw ValidationError("replications", "must be a positive integer");
  sc.replications = static_cast<int>(reps);
  const Value& seed = blk.at("seed");
  std::uint64_t s = 0;
  const char* e = seed.text.data() + seed.text.size();
  auto r = std::from_chars(seed.text.data(), e, s);
  if (r.ec != std::errc() || r.ptr != e) throw ValidationError("seed", "must be a non-negative 64-bit integer");
  sc.seed = s;
  return sc;
}

}  // namespace

std::vector<Scenario> parse_config(std::istream& in) {
  std::vector<Block> blocks;
  Block defaults;
  Block* current = nullptr;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text == "[scenario]") {
        blocks.push_back(defaults);
        current = &blocks.back();
      } else if (text == "[defaults]") {
        if (!blocks.empty()) throw ParseError(line, "[defaults] must precede every [scenario]");
        current = &defaults;
      } else {
        throw ParseError(line, "unknown section " + text);
      }
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected key = value");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (!current) throw ParseError(line, "key outside of a section");
    if (!kRequired.count(key) && !kOptional.count(key)) throw ParseError(line, "unknown key '" + key + "'");
    if (value.empty()) throw ParseError(line, "empty value for '" + key + "'");
    // a scenario may override a default, but not repeat its own key
    if (current != &defaults && current->count(key) && (!defaults.count(key) || (*current)[key].line != defaults[key].line))
      throw ParseError(line, "duplicate key '" + key + "'");
    if (current == &defaults && defaults.count(key)) throw ParseError(line, "duplicate key '" + key + "'");
    (*current)[key] = {value, line};
  }
  std::vector<Scenario> out;
  out.reserve(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) out.push_back(build(blocks[i], i));
  return out;
}

std::vector<Scenario> load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_config(in);
}

}  // namespace bcm
