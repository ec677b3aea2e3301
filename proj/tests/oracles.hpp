#pragma once

// Slow, definition-following reference implementations. They share no code
// with the library beyond the plain data types.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "survanchor/types.hpp"

namespace oracle {

using survanchor::SurvivalLabels;

inline int sign(double v) { return (v > 0) - (v < 0); }

inline double cox_loss(const std::vector<double>& s, const SurvivalLabels& y) {
  double loss = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y.events[i]) continue;
    double denom = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y.times[j] >= y.times[i]) denom += std::exp(s[j]);
    }
    loss -= s[i] - std::log(denom);
  }
  return loss;
}

inline double concordance(const std::vector<double>& risk, const SurvivalLabels& y) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < risk.size(); ++i) {
    for (std::size_t j = 0; j < risk.size(); ++j) {
      if (i == j || !y.events[i] || !(y.times[i] < y.times[j])) continue;
      den += 1.0;
      if (risk[i] > risk[j]) num += 1.0;
      else if (risk[i] == risk[j]) num += 0.5;
    }
  }
  return num / den;
}

struct Breslow {
  std::vector<double> times;
  std::vector<double> increments;
};

inline Breslow breslow(const std::vector<double>& risk, const SurvivalLabels& y) {
  std::set<double> event_times;
  for (std::size_t i = 0; i < risk.size(); ++i) {
    if (y.events[i]) event_times.insert(y.times[i]);
  }
  Breslow b;
  for (double t : event_times) {
    double d = 0.0, at_risk = 0.0;
    for (std::size_t i = 0; i < risk.size(); ++i) {
      if (y.events[i] && y.times[i] == t) d += 1.0;
      if (y.times[i] >= t) at_risk += std::exp(risk[i]);
    }
    b.times.push_back(t);
    b.increments.push_back(d / at_risk);
  }
  return b;
}

struct LogRank {
  double observed = 0.0, expected = 0.0, variance = 0.0, statistic = 0.0;
};

inline LogRank logrank(const SurvivalLabels& a, const SurvivalLabels& b) {
  std::set<double> times;
  for (std::size_t i = 0; i < a.size(); ++i) if (a.events[i]) times.insert(a.times[i]);
  for (std::size_t i = 0; i < b.size(); ++i) if (b.events[i]) times.insert(b.times[i]);
  LogRank r;
  for (double t : times) {
    double n1 = 0, n2 = 0, d1 = 0, d2 = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      n1 += a.times[i] >= t;
      d1 += a.times[i] == t && a.events[i];
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      n2 += b.times[i] >= t;
      d2 += b.times[i] == t && b.events[i];
    }
    const double n = n1 + n2, d = d1 + d2;
    r.observed += d1;
    r.expected += d * n1 / n;
    if (n > 1) r.variance += d * (n1 / n) * (n2 / n) * (n - d) / (n - 1);
  }
  const double diff = r.observed - r.expected;
  r.statistic = r.variance > 0 ? diff * diff / r.variance : 0.0;
  return r;
}

inline double chi2_statistic(const std::vector<std::vector<long long>>& t) {
  std::vector<double> rs(t.size(), 0.0), cs(t[0].size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (std::size_t j = 0; j < t[i].size(); ++j) {
      rs[i] += t[i][j];
      cs[j] += t[i][j];
      total += t[i][j];
    }
  }
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (rs[i] == 0) continue;
    for (std::size_t j = 0; j < t[i].size(); ++j) {
      if (cs[j] == 0) continue;
      const double e = rs[i] * cs[j] / total;
      s += (t[i][j] - e) * (t[i][j] - e) / e;
    }
  }
  return s;
}

inline double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0, tx = 0, ty = 0, n0 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      s += sign(x[i] - x[j]) * sign(y[i] - y[j]);
      tx += x[i] == x[j];
      ty += y[i] == y[j];
      n0 += 1;
    }
  }
  return s / std::sqrt((n0 - tx) * (n0 - ty));
}

inline double kruskal_h(const std::vector<std::vector<double>>& groups) {
  std::vector<double> all;
  for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
  const double n = static_cast<double>(all.size());
  auto rank = [&](double v) {
    double less = 0, equal = 0;
    for (double w : all) {
      less += w < v;
      equal += w == v;
    }
    return less + (equal + 1) / 2;
  };
  double sum = 0.0;
  for (const auto& g : groups) {
    if (g.empty()) continue;
    double r = 0.0;
    for (double v : g) r += rank(v);
    sum += r * r / static_cast<double>(g.size());
  }
  std::map<double, double> counts;
  for (double v : all) counts[v] += 1;
  double ties = 0.0;
  for (const auto& [v, c] : counts) ties += c * c * c - c;
  const double h = 12.0 / (n * (n + 1)) * sum - 3 * (n + 1);
  return h / (1 - ties / (n * n * n - n));
}

inline std::vector<std::size_t> by_step_up(const std::vector<double>& p, double q) {
  const std::size_t m = p.size();
  double hm = 0.0;
  for (std::size_t j = 1; j <= m; ++j) hm += 1.0 / static_cast<double>(j);
  std::vector<double> sorted(p);
  std::sort(sorted.begin(), sorted.end());
  double threshold = -1.0;
  for (std::size_t i = 1; i <= m; ++i) {
    if (sorted[i - 1] <= static_cast<double>(i) * q / (static_cast<double>(m) * hm)) {
      threshold = sorted[i - 1];
    }
  }
  std::vector<std::size_t> accepted;
  for (std::size_t i = 0; i < m; ++i) if (p[i] <= threshold) accepted.push_back(i);
  return accepted;
}

inline SurvivalLabels random_labels(std::size_t n, std::mt19937_64& rng, int time_levels = 6,
                                    double event_rate = 0.6) {
  std::uniform_int_distribution<int> t(1, time_levels);
  std::bernoulli_distribution e(event_rate);
  SurvivalLabels y;
  for (std::size_t i = 0; i < n; ++i) {
    y.times.push_back(static_cast<double>(t(rng)));
    y.events.push_back(e(rng) ? 1 : 0);
  }
  if (!y.any_event()) y.events[0] = 1;
  return y;
}

}  // namespace oracle
