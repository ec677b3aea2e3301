#pragma once

#include <cstddef>
#include <vector>

namespace survanchor {

/// Right-censored outcomes: observed time and event indicator per subject.
struct SurvivalLabels {
  std::vector<double> times;
  std::vector<int> events;  // 1 = event observed, 0 = censored

  std::size_t size() const noexcept { return times.size(); }
  bool any_event() const noexcept;
  SurvivalLabels subset(const std::vector<std::size_t>& rows) const;
};

inline bool SurvivalLabels::any_event() const noexcept {
  for (int e : events) {
    if (e == 1) return true;
  }
  return false;
}

inline SurvivalLabels SurvivalLabels::subset(
    const std::vector<std::size_t>& rows) const {
  SurvivalLabels out;
  out.times.reserve(rows.size());
  out.events.reserve(rows.size());
  for (std::size_t r : rows) {
    out.times.push_back(times[r]);
    out.events.push_back(events[r]);
  }
  return out;
}

}  // namespace survanchor
