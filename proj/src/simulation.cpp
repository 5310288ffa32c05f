#include "bcm/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "bcm/errors.hpp"

namespace bcm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ValidationError(field, what);
}

}  // namespace

Rng replication_stream(std::uint64_t master, std::uint64_t index) {
  const std::uint64_t a = splitmix64(master + 0x9e3779b97f4a7c15ULL * (index + 1));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

void TrialDesign::validate() const {
  require(n_total > 0, "n_total", "must be positive");
  require(weights.treatment() > 0.0 && weights.treatment() < 1.0, "allocation_treatment",
          "must lie strictly between 0 and 1");
  require(std::isfinite(recruitment_period) && recruitment_period >= 0.0, "recruitment_years",
          "must be non-negative");
  require(std::isfinite(max_followup) && max_followup > 0.0, "max_followup_years", "must be positive");
  require(std::isfinite(study_duration) && study_duration > 0.0, "study_years", "must be positive");
  require(study_duration >= recruitment_period, "study_years", "must not be shorter than recruitment");
  require(std::isfinite(monitor_start) && monitor_start >= 0.0, "monitor_start_years",
          "must be non-negative");
  require(monitor_start < study_duration, "monitor_start_years", "must precede the end of the study");
  require(std::isfinite(monitor_step) && monitor_step > 0.0, "monitor_step_years", "must be positive");
}

double draw_frailty(double phi, Rng& rng) {
  if (!(phi > 0.0) || !std::isfinite(phi)) throw DomainError("phi must be positive");
  std::gamma_distribution<double> gamma(1.0 / phi, phi);
  double v = gamma(rng);
  // shape 1/phi far below 1 can underflow to exactly zero
  return v > 0.0 ? v : std::numeric_limits<double>::min();
}

std::vector<double> simulate_subject(const ModelParams& params, Group group, double frailty,
                                     double exposure_cap, Rng& rng) {
  if (!(exposure_cap > 0.0)) throw DomainError("exposure cap must be positive");
  std::vector<double> times;
  const double mean = frailty * cumulative_rate(params, group, exposure_cap);
  if (!(mean > 0.0)) return times;
  std::poisson_distribution<int> poisson(mean);
  const int k = poisson(rng);
  times.reserve(k);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double z = params.alpha1 * exposure_cap;
  const bool flat = std::abs(z) < 1e-12;
  const double em1 = std::expm1(z);
  for (int i = 0; i < k; ++i) {
    const double u = unif(rng);
    // inverse of F(s) = (exp(a1 s) - 1) / (exp(a1 cap) - 1)
    double s = flat ? u * exposure_cap : std::log1p(u * em1) / params.alpha1;
    times.push_back(std::clamp(s, 0.0, exposure_cap));
  }
  std::sort(times.begin(), times.end());
  return times;
}

Trial simulate_trial(const TrialDesign& design, const ModelParams& params, Rng& rng) {
  design.validate();
  params.validate();
  Trial trial;
  trial.max_followup = design.max_followup;
  trial.subjects.resize(design.n_total);
  std::bernoulli_distribution coin(design.weights.treatment());
  std::uniform_real_distribution<double> accrual(0.0, design.recruitment_period);
  for (auto& subj : trial.subjects) {
    subj.group = coin(rng) ? Group::Treatment : Group::Control;
    subj.entry = design.recruitment_period > 0.0 ? accrual(rng) : 0.0;
    subj.frailty = draw_frailty(params.phi, rng);
    subj.events = simulate_subject(params, subj.group, subj.frailty, design.max_followup, rng);
  }
  return trial;
}

Snapshot snapshot(const Trial& trial, double t, bool blinded) {
  if (!(t >= 0.0)) throw DomainError("snapshot time must be non-negative");
  Snapshot snap;
  snap.time = t;
  snap.blinded = blinded;
  for (const auto& subj : trial.subjects) {
    if (!(subj.entry < t)) continue;
    const double exposure = std::min(t - subj.entry, trial.max_followup);
    if (!(exposure > 0.0)) continue;
    SnapshotRecord rec;
    rec.exposure = exposure;
    auto end = std::upper_bound(subj.events.begin(), subj.events.end(), exposure);
    rec.event_times.assign(subj.events.begin(), end);
    if (!blinded) rec.group = subj.group;
    snap.records.push_back(std::move(rec));
  }
  return snap;
}

namespace {

CountRecord to_counts(const SnapshotRecord& rec) {
  CountRecord c;
  c.exposure = rec.exposure;
  c.events = static_cast<int>(rec.event_times.size());
  for (double s : rec.event_times) c.time_sum += s;
  return c;
}

}  // namespace

GroupedCounts grouped_counts(const Snapshot& snap) {
  GroupedCounts out;
  for (const auto& rec : snap.records) {
    if (!rec.group) throw ValidationError("group", "unblinded analysis needs group labels");
    (*rec.group == Group::Treatment ? out.treatment : out.control).push_back(to_counts(rec));
  }
  return out;
}

BlindedCounts blinded_counts(const Snapshot& snap) {
  BlindedCounts out;
  out.reserve(snap.records.size());
  for (const auto& rec : snap.records) out.push_back(to_counts(rec));
  return out;
}

TrialIndex::TrialIndex(const Trial& trial) : cap_(trial.max_followup) {
  subjects_.reserve(trial.subjects.size());
  for (const auto& s : trial.subjects) {
    subjects_.push_back({s.entry, s.group, times_.size(), static_cast<int>(s.events.size())});
    double run = 0.0;
    for (double e : s.events) {
      prefix_.push_back(run);
      times_.push_back(e);
      run += e;
    }
    // one extra slot so prefix_[first + count] is the full sum
    prefix_.push_back(run);
    times_.push_back(cap_ + 1.0);
  }
}

template <class Sink>
void TrialIndex::visit(double t, Sink&& sink) const {
  for (const auto& s : subjects_) {
    if (!(s.entry < t)) continue;
    const double exposure = std::min(t - s.entry, cap_);
    if (!(exposure > 0.0)) continue;
    const auto begin = times_.begin() + static_cast<std::ptrdiff_t>(s.first);
    const int n = exposure >= cap_ ? s.count
                                   : static_cast<int>(std::upper_bound(begin, begin + s.count, exposure) - begin);
    sink(s.group, exposure >= cap_, CountRecord{exposure, n, prefix_[s.first + n], 1});
  }
}

namespace {

// Collects records, merging completed subjects with equal counts.
struct Merger {
  std::vector<CountRecord> open;
  std::vector<CountRecord> done;  // indexed by event count

  void add(bool complete, const CountRecord& r) {
    if (!complete) {
      open.push_back(r);
      return;
    }
    if (done.size() <= static_cast<std::size_t>(r.events)) done.resize(r.events + 1, CountRecord{0.0, 0, 0.0, 0});
    auto& d = done[r.events];
    d.exposure = r.exposure;
    d.events = r.events;
    d.time_sum += r.time_sum;
    d.multiplicity += 1;
  }

  std::vector<CountRecord> finish() {
    for (const auto& d : done)
      if (d.multiplicity > 0) open.push_back(d);
    return std::move(open);
  }
};

}  // namespace

GroupedCounts TrialIndex::grouped(double t) const {
  Merger tr, co;
  visit(t, [&](Group g, bool complete, const CountRecord& r) { (g == Group::Treatment ? tr : co).add(complete, r); });
  return {tr.finish(), co.finish()};
}

BlindedCounts TrialIndex::blinded(double t) const {
  Merger m;
  visit(t, [&](Group, bool complete, const CountRecord& r) { m.add(complete, r); });
  return m.finish();
}

int TrialIndex::enrolled(double t) const {
  int n = 0;
  for (const auto& s : subjects_)
    if (s.entry < t) ++n;
  return n;
}

double TrialIndex::last_completion() const {
  double last = 0.0;
  for (const auto& s : subjects_) last = std::max(last, s.entry + cap_);
  return last;
}

}  // namespace bcm
