#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "survanchor/anchors.hpp"
#include "survanchor/data.hpp"

namespace survanchor::assoc {

struct ContingencyTable {
  std::vector<std::vector<std::int64_t>> counts;  // rows x cols
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;

  std::size_t rows() const noexcept { return counts.size(); }
  std::size_t cols() const noexcept { return counts.empty() ? 0 : counts.front().size(); }

  /// Cross-tabulates two code vectors in [0, n_rows) x [0, n_cols).
  static ContingencyTable tabulate(const std::vector<int>& row_codes, std::size_t n_rows,
                                   const std::vector<int>& col_codes, std::size_t n_cols);
};

struct ChiSquaredResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p = 1.0;
  double min_expected = 0.0;
  bool low_expected = false;  // some expected count < 5
  std::size_t rows_used = 0;  // after pruning empty margins
  std::size_t cols_used = 0;
};

/// Pearson's test of independence, no continuity correction. Empty rows
/// and columns are dropped before counting degrees of freedom.
ChiSquaredResult chi_squared_independence(const ContingencyTable& table);

struct KendallResult {
  double tau = 0.0;  // tau-b
  double z = 0.0;
  double p = 1.0;    // two-sided, normal approximation
};

/// Kendall's tau-b in O(n log n) with the tie-adjusted null variance.
KendallResult kendall_tau(const std::vector<double>& x, const std::vector<double>& y);

struct KruskalResult {
  double statistic = 0.0;  // H, tie corrected
  std::size_t dof = 0;
  double p = 1.0;
};

/// Empty groups are ignored; at least two nonempty groups are required.
KruskalResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

/// Midranks (1-based) of `values`, ties sharing their average rank.
std::vector<double> midranks(const std::vector<double>& values);

enum class TestKind { Chi2, Kendall, Kruskal };

std::string to_string(TestKind kind);
TestKind parse_test_kind(const std::string& text);

struct FeatureScore {
  std::string feature;
  TestKind test = TestKind::Chi2;
  double statistic = 0.0;
  double p = 1.0;
  std::size_t rank = 0;  // 1-based
};

struct FeatureFailure {
  std::string feature;
  std::string reason;
};

struct FeatureRanking {
  std::string anchor;
  TestKind test = TestKind::Chi2;
  std::vector<FeatureScore> scores;  // ascending p, ties by name
  std::vector<FeatureFailure> failures;
  std::vector<std::string> warnings;

  /// rank,feature,test,statistic,p
  std::string to_csv() const;
  nlohmann::json to_json() const;
  static FeatureRanking from_json(const nlohmann::json& j);
};

/// Tests every schema feature against the projections of the
/// visualization rows. chi2 crosses the discretized feature with the
/// projection bins; kendall pairs raw feature values with projections;
/// kruskal groups projections by discretized feature level.
FeatureRanking rank_features(const data::FeatureSchema& schema,
                             const Eigen::MatrixXd& features,
                             const std::vector<double>& projections,
                             const anchors::ProjectionBinning& binning,
                             const std::string& anchor_name, TestKind test = TestKind::Chi2);

struct FdrResult {
  std::optional<double> threshold;     // largest accepted p-value
  std::vector<std::size_t> accepted;   // indices into the input, ascending
};

/// Benjamini-Yekutieli step-up procedure at level q.
FdrResult fdr_threshold(const std::vector<double>& p_values, double q);

}  // namespace survanchor::assoc
