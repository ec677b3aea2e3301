#pragma once

#include <nlohmann/json.hpp>
#include <vector>

#include "survanchor/types.hpp"

namespace survanchor::survstats {

/// Discretized baseline hazard on the unique event times of the data it was
/// fitted on. Tied event times share one grid point.
struct BreslowBaseline {
  std::vector<double> event_times;        // strictly increasing
  std::vector<double> hazard_increments;  // >= 0
  std::vector<int> event_counts;          // d at each event time

  std::size_t size() const noexcept { return event_times.size(); }
  /// Cumulative baseline hazard at each grid point.
  std::vector<double> cumulative_hazard() const;

  nlohmann::json to_json() const;
  static BreslowBaseline from_json(const nlohmann::json& j);
};

/// Right-continuous step function: values[i] holds on [grid[i], grid[i+1]).
/// Before grid[0] the curve equals 1.
struct SurvivalCurve {
  std::vector<double> grid;
  std::vector<double> values;

  double at(double t) const;
  nlohmann::json to_json() const;
  static SurvivalCurve from_json(const nlohmann::json& j);
};

/// h0(t_l) = d_l / sum_{j : y_j >= t_l} exp(f(x_j)).
BreslowBaseline fit_breslow(const std::vector<double>& risk_scores,
                            const SurvivalLabels& labels);

/// S(t | x) = exp(-exp(f(x)) * H0(t)) on the baseline grid.
SurvivalCurve predict_survival(const BreslowBaseline& base, double risk_score);

/// Harrell's C. A pair (i, j) is comparable iff y_i < y_j and delta_i = 1;
/// it is concordant when risk_i > risk_j. Score ties count one half.
double concordance_index(const std::vector<double>& risk_scores,
                         const SurvivalLabels& labels);

struct LogRankResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double observed_a = 0.0;
  double expected_a = 0.0;
  double variance = 0.0;
};

/// Two-sample log-rank test, one degree of freedom, hypergeometric variance
/// with the tie correction (n - d) / (n - 1).
LogRankResult logrank_test(const SurvivalLabels& group_a,
                           const SurvivalLabels& group_b);

/// Median estimate read off a survival curve: the first grid time where the
/// curve is at most 1/2, or "beyond the maximum time" if it never gets there.
struct MedianSurvival {
  bool beyond_max_time = true;
  double time = 0.0;

  static MedianSurvival beyond() { return {}; }
  static MedianSurvival at(double t) { return {false, t}; }
  /// Ascending by time; beyond-max sorts last.
  friend bool operator<(const MedianSurvival& a, const MedianSurvival& b) {
    if (a.beyond_max_time != b.beyond_max_time) return b.beyond_max_time;
    return !a.beyond_max_time && a.time < b.time;
  }
  nlohmann::json to_json() const;
};

MedianSurvival median_from_curve(const SurvivalCurve& curve);

/// Pointwise average of curves sharing one grid; throws GridMismatch.
SurvivalCurve average_curves(const std::vector<const SurvivalCurve*>& curves);

}  // namespace survanchor::survstats
