#include "survanchor/survstats.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "survanchor/error.hpp"
#include "survanchor/specfun.hpp"

namespace survanchor::survstats {
namespace {

void check_aligned(std::size_t scores, const SurvivalLabels& labels) {
  if (scores != labels.times.size() || labels.times.size() != labels.events.size()) {
    throw Error(ErrorCode::LengthMismatch,
                fmt::format("{} scores for {} labels", scores, labels.size()));
  }
}

}  // namespace

std::vector<double> BreslowBaseline::cumulative_hazard() const {
  std::vector<double> out(hazard_increments.size());
  std::partial_sum(hazard_increments.begin(), hazard_increments.end(), out.begin());
  return out;
}

nlohmann::json BreslowBaseline::to_json() const {
  return {{"event_times", event_times},
          {"hazard_increments", hazard_increments},
          {"event_counts", event_counts}};
}

BreslowBaseline BreslowBaseline::from_json(const nlohmann::json& j) {
  BreslowBaseline b;
  b.event_times = j.at("event_times").get<std::vector<double>>();
  b.hazard_increments = j.at("hazard_increments").get<std::vector<double>>();
  b.event_counts = j.at("event_counts").get<std::vector<int>>();
  if (b.event_times.size() != b.hazard_increments.size() ||
      b.event_times.size() != b.event_counts.size()) {
    throw Error(ErrorCode::InconsistentRowCount, "baseline arrays differ in length");
  }
  return b;
}

double SurvivalCurve::at(double t) const {
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  if (it == grid.begin()) return 1.0;
  return values[static_cast<std::size_t>(it - grid.begin()) - 1];
}

nlohmann::json SurvivalCurve::to_json() const {
  return {{"grid", grid}, {"values", values}};
}

SurvivalCurve SurvivalCurve::from_json(const nlohmann::json& j) {
  SurvivalCurve c;
  c.grid = j.at("grid").get<std::vector<double>>();
  c.values = j.at("values").get<std::vector<double>>();
  if (c.grid.size() != c.values.size()) {
    throw Error(ErrorCode::GridMismatch, "curve grid and values differ in length");
  }
  return c;
}

BreslowBaseline fit_breslow(const std::vector<double>& risk_scores,
                            const SurvivalLabels& labels) {
  check_aligned(risk_scores.size(), labels);
  if (!labels.any_event()) {
    throw Error(ErrorCode::NoEvents, "Breslow estimator needs at least one event");
  }
  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return labels.times[a] > labels.times[b];
  });

  // Walk from the latest time backwards so the risk-set sum only grows.
  BreslowBaseline base;
  double risk_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    const double t = labels.times[order[i]];
    int deaths = 0;
    std::size_t j = i;
    for (; j < n && labels.times[order[j]] == t; ++j) {
      risk_sum += std::exp(risk_scores[order[j]]);
      deaths += labels.events[order[j]];
    }
    if (deaths > 0) {
      base.event_times.push_back(t);
      base.event_counts.push_back(deaths);
      base.hazard_increments.push_back(deaths / risk_sum);
    }
    i = j;
  }
  std::reverse(base.event_times.begin(), base.event_times.end());
  std::reverse(base.event_counts.begin(), base.event_counts.end());
  std::reverse(base.hazard_increments.begin(), base.hazard_increments.end());
  return base;
}

SurvivalCurve predict_survival(const BreslowBaseline& base, double risk_score) {
  SurvivalCurve curve;
  curve.grid = base.event_times;
  curve.values.resize(base.size());
  const double scale = std::exp(risk_score);
  double cumulative = 0.0;
  for (std::size_t l = 0; l < base.size(); ++l) {
    cumulative += base.hazard_increments[l];
    curve.values[l] = std::exp(-scale * cumulative);
  }
  return curve;
}

double concordance_index(const std::vector<double>& risk_scores,
                         const SurvivalLabels& labels) {
  check_aligned(risk_scores.size(), labels);
  const std::size_t n = labels.size();
  double concordant = 0.0;
  std::size_t comparable = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels.events[i] != 1) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (!(labels.times[i] < labels.times[j])) continue;
      ++comparable;
      if (risk_scores[i] > risk_scores[j]) concordant += 1.0;
      else if (risk_scores[i] == risk_scores[j]) concordant += 0.5;
    }
  }
  if (comparable == 0) {
    throw Error(ErrorCode::NoComparablePairs, "no comparable pairs");
  }
  return concordant / static_cast<double>(comparable);
}

LogRankResult logrank_test(const SurvivalLabels& group_a,
                           const SurvivalLabels& group_b) {
  if (group_a.size() == 0 || group_b.size() == 0) {
    throw Error(ErrorCode::EmptyGroup, "log-rank test needs two nonempty groups");
  }
  if (!group_a.any_event() && !group_b.any_event()) {
    throw Error(ErrorCode::NoEvents, "log-rank test needs at least one event");
  }

  struct Entry {
    double time;
    int event;
    bool in_a;
  };
  std::vector<Entry> pooled;
  pooled.reserve(group_a.size() + group_b.size());
  for (std::size_t i = 0; i < group_a.size(); ++i) {
    pooled.push_back({group_a.times[i], group_a.events[i], true});
  }
  for (std::size_t i = 0; i < group_b.size(); ++i) {
    pooled.push_back({group_b.times[i], group_b.events[i], false});
  }
  std::sort(pooled.begin(), pooled.end(),
            [](const Entry& x, const Entry& y) { return x.time < y.time; });

  double at_risk_a = static_cast<double>(group_a.size());
  double at_risk_b = static_cast<double>(group_b.size());
  double observed_a = 0.0;
  double expected_a = 0.0;
  double diff = 0.0;  // sum of O_a - E_a, accumulated antisymmetrically
  double variance = 0.0;
  std::size_t i = 0;
  while (i < pooled.size()) {
    const double t = pooled[i].time;
    double deaths_a = 0.0, deaths_b = 0.0, leave_a = 0.0, leave_b = 0.0;
    std::size_t j = i;
    for (; j < pooled.size() && pooled[j].time == t; ++j) {
      if (pooled[j].in_a) {
        leave_a += 1.0;
        deaths_a += pooled[j].event;
      } else {
        leave_b += 1.0;
        deaths_b += pooled[j].event;
      }
    }
    const double deaths = deaths_a + deaths_b;
    const double at_risk = at_risk_a + at_risk_b;
    if (deaths > 0.0) {
      observed_a += deaths_a;
      expected_a += deaths * at_risk_a / at_risk;
      diff += (deaths_a * at_risk_b - deaths_b * at_risk_a) / at_risk;
      if (at_risk > 1.0) {
        variance += deaths * (at_risk_a * at_risk_b) * (at_risk - deaths) /
                    (at_risk * at_risk * (at_risk - 1.0));
      }
    }
    at_risk_a -= leave_a;
    at_risk_b -= leave_b;
    i = j;
  }

  LogRankResult out;
  out.observed_a = observed_a;
  out.expected_a = expected_a;
  out.variance = variance;
  if (variance > 0.0) {
    out.statistic = diff * diff / variance;
    out.p_value = specfun::chi2_sf(out.statistic, 1.0);
  }
  return out;
}

nlohmann::json MedianSurvival::to_json() const {
  if (beyond_max_time) return "beyond_max_time";
  return time;
}

MedianSurvival median_from_curve(const SurvivalCurve& curve) {
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    if (curve.values[i] <= 0.5) return MedianSurvival::at(curve.grid[i]);
  }
  return MedianSurvival::beyond();
}

SurvivalCurve average_curves(const std::vector<const SurvivalCurve*>& curves) {
  if (curves.empty()) {
    throw Error(ErrorCode::EmptyGroup, "cannot average zero curves");
  }
  SurvivalCurve out;
  out.grid = curves.front()->grid;
  out.values.assign(out.grid.size(), 0.0);
  std::vector<double> lo(out.grid.size(), std::numeric_limits<double>::infinity());
  std::vector<double> hi(out.grid.size(), -std::numeric_limits<double>::infinity());
  for (const SurvivalCurve* c : curves) {
    if (c->grid != out.grid || c->values.size() != out.grid.size()) {
      throw Error(ErrorCode::GridMismatch, "curves do not share a time grid");
    }
    for (std::size_t t = 0; t < out.values.size(); ++t) {
      out.values[t] += c->values[t];
      lo[t] = std::min(lo[t], c->values[t]);
      hi[t] = std::max(hi[t], c->values[t]);
    }
  }
  // Clamping to the pointwise range keeps the mean exact for identical
  // curves and nonincreasing whenever every input is.
  const double count = static_cast<double>(curves.size());
  for (std::size_t t = 0; t < out.values.size(); ++t) {
    out.values[t] = std::clamp(out.values[t] / count, lo[t], hi[t]);
  }
  return out;
}

}  // namespace survanchor::survstats
