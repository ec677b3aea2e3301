#include "survanchor/assoc.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survanchor/error.hpp"
#include "survanchor/specfun.hpp"

namespace survanchor::assoc {
namespace {

using json = nlohmann::json;

struct TieSums {
  double pairs = 0.0;   // sum t(t-1)/2
  double cubic = 0.0;   // sum t(t-1)(t-2)
  double var = 0.0;     // sum t(t-1)(2t+5)
};

// `sorted` must be ascending.
TieSums tie_sums(const std::vector<double>& sorted) {
  TieSums s;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    if (t > 1) {
      s.pairs += t * (t - 1) / 2;
      s.cubic += t * (t - 1) * (t - 2);
      s.var += t * (t - 1) * (2 * t + 5);
    }
    i = j;
  }
  return s;
}

// Counts pairs i < j with v[i] > v[j] while sorting v.
std::uint64_t count_inversions(std::vector<double>& v) {
  std::vector<double> buf(v.size());
  std::uint64_t inversions = 0;
  for (std::size_t width = 1; width < v.size(); width *= 2) {
    for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, v.size());
      const std::size_t hi = std::min(lo + 2 * width, v.size());
      std::size_t a = lo, b = mid, k = lo;
      while (a < mid && b < hi) {
        if (v[b] < v[a]) {
          inversions += mid - a;
          buf[k++] = v[b++];
        } else {
          buf[k++] = v[a++];
        }
      }
      while (a < mid) buf[k++] = v[a++];
      while (b < hi) buf[k++] = v[b++];
    }
    v.swap(buf);
  }
  return inversions;
}

std::string format_p(double p) { return fmt::format("{:.6e}", p); }

}  // namespace

ContingencyTable ContingencyTable::tabulate(const std::vector<int>& row_codes, std::size_t n_rows,
                                            const std::vector<int>& col_codes,
                                            std::size_t n_cols) {
  if (row_codes.size() != col_codes.size()) {
    throw Error(ErrorCode::LengthMismatch, "row and column codes differ in length");
  }
  ContingencyTable t;
  t.counts.assign(n_rows, std::vector<std::int64_t>(n_cols, 0));
  for (std::size_t i = 0; i < row_codes.size(); ++i) {
    const int r = row_codes[i];
    const int c = col_codes[i];
    if (r < 0 || c < 0 || static_cast<std::size_t>(r) >= n_rows ||
        static_cast<std::size_t>(c) >= n_cols) {
      throw Error(ErrorCode::InvalidArgument, "contingency code out of range");
    }
    ++t.counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return t;
}

ChiSquaredResult chi_squared_independence(const ContingencyTable& table) {
  const std::size_t r = table.rows();
  const std::size_t c = table.cols();
  std::vector<double> row_sum(r, 0.0), col_sum(c, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    if (table.counts[i].size() != c) {
      throw Error(ErrorCode::InvalidArgument, "ragged contingency table");
    }
    for (std::size_t j = 0; j < c; ++j) {
      const auto o = table.counts[i][j];
      if (o < 0) throw Error(ErrorCode::InvalidArgument, "negative contingency count");
      row_sum[i] += static_cast<double>(o);
      col_sum[j] += static_cast<double>(o);
      total += static_cast<double>(o);
    }
  }
  if (total <= 0) throw Error(ErrorCode::DegenerateTable, "contingency table is empty");
  std::vector<std::size_t> rows, cols;
  for (std::size_t i = 0; i < r; ++i) if (row_sum[i] > 0) rows.push_back(i);
  for (std::size_t j = 0; j < c; ++j) if (col_sum[j] > 0) cols.push_back(j);
  if (rows.size() < 2 || cols.size() < 2) {
    throw Error(ErrorCode::DegenerateTable,
                fmt::format("table is {}x{} after dropping empty margins", rows.size(),
                            cols.size()));
  }
  ChiSquaredResult res;
  res.rows_used = rows.size();
  res.cols_used = cols.size();
  res.min_expected = std::numeric_limits<double>::infinity();
  for (std::size_t i : rows) {
    for (std::size_t j : cols) {
      const double e = row_sum[i] * col_sum[j] / total;
      const double d = static_cast<double>(table.counts[i][j]) - e;
      res.statistic += d * d / e;
      res.min_expected = std::min(res.min_expected, e);
    }
  }
  res.low_expected = res.min_expected < 5.0;
  res.dof = (rows.size() - 1) * (cols.size() - 1);
  res.p = specfun::chi2_sf(res.statistic, static_cast<double>(res.dof));
  return res;
}

KendallResult kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::LengthMismatch,
                fmt::format("kendall_tau: {} vs {} values", x.size(), y.size()));
  }
  const std::size_t n = x.size();
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "kendall_tau needs at least 3 pairs");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }
  double joint_ties = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && xs[j] == xs[i] && ys[j] == ys[i]) ++j;
    const double t = static_cast<double>(j - i);
    joint_ties += t * (t - 1) / 2;
    i = j;
  }
  const TieSums xt = tie_sums(xs);
  const double discordant = static_cast<double>(count_inversions(ys));
  const TieSums yt = tie_sums(ys);  // ys is sorted now

  const double nd = static_cast<double>(n);
  const double total = nd * (nd - 1) / 2;
  if (total - xt.pairs <= 0 || total - yt.pairs <= 0) {
    throw Error(ErrorCode::AllTied, "kendall_tau: one variable is constant");
  }
  const double s = total - xt.pairs - yt.pairs + joint_ties - 2 * discordant;

  KendallResult res;
  res.tau = s / std::sqrt(total - xt.pairs) / std::sqrt(total - yt.pairs);
  res.tau = std::clamp(res.tau, -1.0, 1.0);
  const double m = nd * (nd - 1);
  const double var = (m * (2 * nd + 5) - xt.var - yt.var) / 18 +
                     2 * xt.pairs * yt.pairs / m + xt.cubic * yt.cubic / (9 * m * (nd - 2));
  res.z = var > 0 ? s / std::sqrt(var) : 0.0;
  res.p = std::min(1.0, 2 * specfun::normal_sf(std::abs(res.z)));
  return res;
}

std::vector<double> midranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

KruskalResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  std::vector<const std::vector<double>*> used;
  for (const auto& g : groups) if (!g.empty()) used.push_back(&g);
  if (used.size() < 2) {
    throw Error(ErrorCode::TooFewGroups,
                fmt::format("kruskal_wallis needs 2 nonempty groups, got {}", used.size()));
  }
  std::vector<double> pooled;
  for (const auto* g : used) pooled.insert(pooled.end(), g->begin(), g->end());
  const double n = static_cast<double>(pooled.size());
  if (pooled.size() < 3) {
    throw Error(ErrorCode::InvalidArgument, "kruskal_wallis needs at least 3 observations");
  }
  const std::vector<double> ranks = midranks(pooled);

  KruskalResult res;
  res.dof = used.size() - 1;
  std::vector<double> sorted(pooled);
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double correction = 1.0 - tie_term / (n * n * n - n);
  if (correction <= 0) {
    res.statistic = 0.0;
    res.p = 1.0;
    return res;
  }
  double sum = 0.0;
  std::size_t offset = 0;
  for (const auto* g : used) {
    double r = 0.0;
    for (std::size_t k = 0; k < g->size(); ++k) r += ranks[offset + k];
    offset += g->size();
    sum += r * r / static_cast<double>(g->size());
  }
  const double h = 12.0 / (n * (n + 1)) * sum - 3 * (n + 1);
  res.statistic = std::max(0.0, h / correction);
  res.p = specfun::chi2_sf(res.statistic, static_cast<double>(res.dof));
  return res;
}

std::string to_string(TestKind kind) {
  switch (kind) {
    case TestKind::Chi2: return "chi2";
    case TestKind::Kendall: return "kendall";
    case TestKind::Kruskal: return "kruskal";
  }
  return "chi2";
}

TestKind parse_test_kind(const std::string& text) {
  if (text == "chi2") return TestKind::Chi2;
  if (text == "kendall") return TestKind::Kendall;
  if (text == "kruskal") return TestKind::Kruskal;
  throw Error(ErrorCode::InvalidArgument,
              "unknown test '" + text + "' (expected chi2, kendall or kruskal)");
}

std::string FeatureRanking::to_csv() const {
  std::string out = "rank,feature,test,statistic,p\n";
  for (const auto& s : scores) {
    out += fmt::format("{},{},{},{:.10g},{}\n", s.rank, s.feature, to_string(s.test),
                       s.statistic, format_p(s.p));
  }
  return out;
}

json FeatureRanking::to_json() const {
  json rows = json::array();
  for (const auto& s : scores) {
    rows.push_back({{"rank", s.rank},
                    {"feature", s.feature},
                    {"test", to_string(s.test)},
                    {"statistic", s.statistic},
                    {"p", s.p}});
  }
  json failed = json::array();
  for (const auto& f : failures) failed.push_back({{"feature", f.feature}, {"reason", f.reason}});
  return {{"anchor", anchor},
          {"test", to_string(test)},
          {"ranking", std::move(rows)},
          {"failures", std::move(failed)},
          {"warnings", warnings}};
}

FeatureRanking FeatureRanking::from_json(const json& j) {
  FeatureRanking r;
  r.anchor = j.at("anchor").get<std::string>();
  r.test = parse_test_kind(j.at("test").get<std::string>());
  for (const auto& row : j.at("ranking")) {
    FeatureScore s;
    s.rank = row.at("rank").get<std::size_t>();
    s.feature = row.at("feature").get<std::string>();
    s.test = parse_test_kind(row.at("test").get<std::string>());
    s.statistic = row.at("statistic").get<double>();
    s.p = row.at("p").get<double>();
    r.scores.push_back(std::move(s));
  }
  for (const auto& f : j.at("failures")) {
    r.failures.push_back({f.at("feature").get<std::string>(), f.at("reason").get<std::string>()});
  }
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

FeatureRanking rank_features(const data::FeatureSchema& schema, const Eigen::MatrixXd& features,
                             const std::vector<double>& projections,
                             const anchors::ProjectionBinning& binning,
                             const std::string& anchor_name, TestKind test) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (static_cast<std::size_t>(features.cols()) != schema.size()) {
    throw Error(ErrorCode::DimensionMismatch, "feature matrix does not match the schema");
  }
  if (projections.size() != n) {
    throw Error(ErrorCode::LengthMismatch, "projections are not row-aligned with features");
  }
  if (test == TestKind::Chi2 && binning.bin_of_row.size() != n) {
    throw Error(ErrorCode::LengthMismatch, "binning is not row-aligned with features");
  }

  FeatureRanking ranking;
  ranking.anchor = anchor_name;
  ranking.test = test;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    const auto& spec = schema.features[f];
    std::vector<double> column(n);
    for (std::size_t i = 0; i < n; ++i) column[i] = features(static_cast<Eigen::Index>(i), f);
    try {
      FeatureScore score;
      score.feature = spec.name;
      score.test = test;
      switch (test) {
        case TestKind::Chi2: {
          ContingencyTable table;
          if (spec.kind == data::FeatureKind::Indicator) {
            // The indicator row plus its complement.
            table.counts.assign(2, std::vector<std::int64_t>(binning.bin_count(), 0));
            table.row_labels = {spec.name, "1 - " + spec.name};
            for (std::size_t i = 0; i < n; ++i) {
              const auto b = static_cast<std::size_t>(binning.bin_of_row[i]);
              ++table.counts[column[i] > 0.5 ? 0 : 1][b];
            }
          } else {
            const auto disc = data::discretize_feature(column, spec);
            table = ContingencyTable::tabulate(disc.labels, disc.descriptors.size(),
                                               binning.bin_of_row, binning.bin_count());
            table.row_labels = disc.descriptors;
          }
          const auto res = chi_squared_independence(table);
          if (res.low_expected) {
            ranking.warnings.push_back(fmt::format(
                "{}: smallest expected count {:.3g} is below 5", spec.name, res.min_expected));
          }
          score.statistic = res.statistic;
          score.p = res.p;
          break;
        }
        case TestKind::Kendall: {
          const auto res = kendall_tau(column, projections);
          score.statistic = res.tau;
          score.p = res.p;
          break;
        }
        case TestKind::Kruskal: {
          const auto disc = data::discretize_feature(column, spec);
          std::vector<std::vector<double>> groups(disc.descriptors.size());
          for (std::size_t i = 0; i < n; ++i) {
            groups[static_cast<std::size_t>(disc.labels[i])].push_back(projections[i]);
          }
          const auto res = kruskal_wallis(groups);
          score.statistic = res.statistic;
          score.p = res.p;
          break;
        }
      }
      ranking.scores.push_back(std::move(score));
    } catch (const Error& e) {
      ranking.failures.push_back({spec.name, e.what()});
    }
  }
  std::sort(ranking.scores.begin(), ranking.scores.end(),
            [](const FeatureScore& a, const FeatureScore& b) {
              if (a.p != b.p) return a.p < b.p;
              return a.feature < b.feature;
            });
  for (std::size_t i = 0; i < ranking.scores.size(); ++i) ranking.scores[i].rank = i + 1;
  return ranking;
}

FdrResult fdr_threshold(const std::vector<double>& p_values, double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw Error(ErrorCode::BadQ, fmt::format("FDR level {} is outside (0, 1)", q));
  }
  for (double p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, fmt::format("p-value {} is outside [0, 1]", p));
    }
  }
  FdrResult res;
  const std::size_t m = p_values.size();
  if (m == 0) return res;
  double harmonic = 0.0;
  for (std::size_t j = 1; j <= m; ++j) harmonic += 1.0 / static_cast<double>(j);
  std::vector<double> sorted(p_values);
  std::sort(sorted.begin(), sorted.end());
  const double md = static_cast<double>(m);
  for (std::size_t i = m; i >= 1; --i) {
    if (sorted[i - 1] <= static_cast<double>(i) * q / (md * harmonic)) {
      res.threshold = sorted[i - 1];
      break;
    }
  }
  if (res.threshold) {
    for (std::size_t i = 0; i < m; ++i) {
      if (p_values[i] <= *res.threshold) res.accepted.push_back(i);
    }
  }
  return res;
}

}  // namespace survanchor::assoc
