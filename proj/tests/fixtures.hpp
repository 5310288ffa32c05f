#pragma once

#include "bcm/likelihood.hpp"
#include "bcm/simulation.hpp"

namespace bcm::fixture {

// Three subjects: T with S=1.7 and events at 0.2, 0.9, 1.5; C with S=2.0 and
// one event at 0.4; C with S=0.8 and none.
inline Snapshot three_subjects() {
  Snapshot s;
  s.records.push_back({1.7, {0.2, 0.9, 1.5}, Group::Treatment});
  s.records.push_back({2.0, {0.4}, Group::Control});
  s.records.push_back({0.8, {}, Group::Control});
  return s;
}

inline const ModelParams kFixtureParams{0.3, -0.7, -0.4, 0.9};

}  // namespace bcm::fixture
