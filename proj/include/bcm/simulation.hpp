#pragma once

// Trial simulation: accrual, Gamma frailty, non-homogeneous Poisson events
// capped at the maximum follow-up, and calendar-time snapshots.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "bcm/likelihood.hpp"
#include "bcm/model.hpp"

namespace bcm {

using Rng = std::mt19937_64;

// Independent stream for replication `index` of a run seeded with `master`.
Rng replication_stream(std::uint64_t master, std::uint64_t index);

struct TrialDesign {
  int n_total = 0;
  AllocationWeights weights;
  double recruitment_period = 2.0;  // 0 means everybody enters at time 0
  double max_followup = 2.0;
  double study_duration = 4.0;
  double monitor_start = 0.5;
  double monitor_step = 1.0 / 52.0;

  // Throws ValidationError naming the offending field.
  void validate() const;
};

struct SubjectPath {
  Group group = Group::Control;
  double entry = 0.0;
  double frailty = 1.0;
  std::vector<double> events;  // study times, ascending, within [0, max_followup]
};

struct Trial {
  double max_followup = 0.0;
  std::vector<SubjectPath> subjects;
};

struct SnapshotRecord {
  double exposure = 0.0;
  std::vector<double> event_times;
  std::optional<Group> group;  // empty when blinded
};

struct Snapshot {
  double time = 0.0;
  bool blinded = false;
  std::vector<SnapshotRecord> records;
};

double draw_frailty(double phi, Rng& rng);

std::vector<double> simulate_subject(const ModelParams& params, Group group, double frailty,
                                     double exposure_cap, Rng& rng);

Trial simulate_trial(const TrialDesign& design, const ModelParams& params, Rng& rng);

Snapshot snapshot(const Trial& trial, double t, bool blinded);

// Sufficient statistics of a snapshot. grouped_counts needs group labels.
GroupedCounts grouped_counts(const Snapshot& snap);
BlindedCounts blinded_counts(const Snapshot& snap);

// Precomputed layout of a trial for repeated snapshots during monitoring.
// Subjects that have completed follow-up and share an event count are merged
// into one record.
class TrialIndex {
 public:
  explicit TrialIndex(const Trial& trial);

  GroupedCounts grouped(double t) const;
  BlindedCounts blinded(double t) const;
  int enrolled(double t) const;
  double last_completion() const;  // calendar time of the final subject's last follow-up

 private:
  struct Entry {
    double entry;
    Group group;
    std::size_t first;  // offset into times_ / prefix_
    int count;
  };
  template <class Sink>
  void visit(double t, Sink&& sink) const;

  double cap_;
  std::vector<Entry> subjects_;
  std::vector<double> times_;
  std::vector<double> prefix_;  // prefix_[first + k] = sum of the first k times
};

}  // namespace bcm
