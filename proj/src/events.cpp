#include "bcm/events.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "bcm/errors.hpp"

namespace bcm {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

double to_double(const std::string& text, std::size_t line, const char* field) {
  const std::string t = trim(text);
  double x = 0.0;
  auto r = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size() || !std::isfinite(x))
    throw ParseError(line, std::string(field) + ": not a number: '" + t + "'");
  return x;
}

ValidationError row_error(const char* field, std::size_t line, const std::string& what) {
  return ValidationError(field, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

EventData parse_event_file(std::istream& in) {
  std::string raw;
  std::size_t line = 0;
  if (!std::getline(in, raw)) throw ValidationError("file", "no header");
  ++line;
  if (raw.size() >= 3 && static_cast<unsigned char>(raw[0]) == 0xEF) raw.erase(0, 3);  // UTF-8 BOM
  const auto header = split(trim(raw), ',');
  int c_id = -1, c_exp = -1, c_times = -1, c_group = -1, c_entry = -1;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    const std::string h = trim(header[i]);
    int* slot = h == "subject_id"       ? &c_id
                : h == "exposure_years" ? &c_exp
                : h == "event_times"    ? &c_times
                : h == "group"          ? &c_group
                : h == "entry_years"    ? &c_entry
                                        : nullptr;
    if (!slot) throw ParseError(line, "unknown column '" + h + "'");
    if (*slot >= 0) throw ParseError(line, "duplicate column '" + h + "'");
    *slot = i;
  }
  if (c_id < 0 || c_exp < 0 || c_times < 0)
    throw ParseError(line, "header must contain subject_id, exposure_years and event_times");

  EventData data;
  data.snapshot.blinded = c_group < 0;
  std::set<std::string> seen;
  while (std::getline(in, raw)) {
    ++line;
    if (trim(raw).empty()) continue;
    const auto cells = split(raw, ',');
    if (cells.size() != header.size()) throw ParseError(line, "expected " + std::to_string(header.size()) + " fields");
    const std::string id = trim(cells[c_id]);
    if (id.empty()) throw row_error("subject_id", line, "empty subject id");
    if (!seen.insert(id).second) throw row_error("subject_id", line, "duplicate subject id '" + id + "'");
    SnapshotRecord rec;
    rec.exposure = to_double(cells[c_exp], line, "exposure_years");
    if (!(rec.exposure > 0.0)) throw row_error("exposure_years", line, "exposure must be positive");
    const std::string times = trim(cells[c_times]);
    if (!times.empty()) {
      for (const auto& part : split(times, ';')) {
        const double s = to_double(part, line, "event_times");
        if (s < 0.0) throw row_error("event_times", line, "negative event time");
        if (s > rec.exposure) throw row_error("event_times", line, "event time exceeds exposure");
        rec.event_times.push_back(s);
      }
      std::sort(rec.event_times.begin(), rec.event_times.end());
    }
    if (c_group >= 0) {
      const std::string g = trim(cells[c_group]);
      if (g == "T")
        rec.group = Group::Treatment;
      else if (g == "C")
        rec.group = Group::Control;
      else
        throw row_error("group", line, "group must be T or C");
    }
    if (c_entry >= 0) {
      const double e = to_double(cells[c_entry], line, "entry_years");
      if (e < 0.0) throw row_error("entry_years", line, "entry must be non-negative");
      data.entries.push_back(e);
    }
    data.ids.push_back(id);
    data.snapshot.records.push_back(std::move(rec));
  }
  if (data.snapshot.records.empty()) throw ValidationError("file", "no subjects");
  double latest = 0.0;
  for (std::size_t i = 0; i < data.snapshot.records.size(); ++i)
    latest = std::max(latest, data.snapshot.records[i].exposure + (data.entries.empty() ? 0.0 : data.entries[i]));
  data.snapshot.time = latest;
  return data;
}

EventData load_event_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_event_file(in);
}

Snapshot load_blinded_events(const std::string& path) {
  Snapshot snap = load_event_file(path).snapshot;
  snap.blinded = true;
  for (auto& r : snap.records) r.group.reset();
  return snap;
}

std::vector<CurvePoint> information_curve(const EventData& data, double beta_h1, AllocationWeights weights,
                                          const std::vector<Procedure>& procedures, const std::vector<double>& grid,
                                          std::optional<NuisanceParams> init) {
  if (data.entries.size() != data.snapshot.records.size())
    throw ValidationError("entry_years", "information curves need calendar entry times");
  for (Procedure p : procedures)
    if (p == Procedure::Fixed) throw ValidationError("procedure", "the fixed design has no information curve");
  std::vector<BlindedState> states(procedures.size());
  for (auto& st : states) st.trend = init;
  std::vector<CurvePoint> out;
  for (double t : grid) {
    BlindedCounts counts;
    for (std::size_t i = 0; i < data.entries.size(); ++i) {
      const auto& rec = data.snapshot.records[i];
      if (!(data.entries[i] < t)) continue;
      CountRecord c;
      c.exposure = std::min(t - data.entries[i], rec.exposure);
      for (double s : rec.event_times) {
        if (s > c.exposure) break;
        ++c.events;
        c.time_sum += s;
      }
      counts.push_back(c);
    }
    for (std::size_t k = 0; k < procedures.size(); ++k) {
      CurvePoint pt{t, procedures[k], std::nullopt};
      try {
        if (!counts.empty()) pt.info = blinded_information(procedures[k], counts, beta_h1, weights, &states[k]);
      } catch (const NumericalError&) {
      }
      out.push_back(pt);
    }
  }
  return out;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "time,procedure,information\n";
  for (const auto& p : curve) {
    out << std::setprecision(10) << p.time << ',' << to_string(p.procedure) << ',';
    if (p.info)
      out << std::setprecision(10) << *p.info;
    else
      out << "NA";
    out << '\n';
  }
}

}  // namespace bcm
