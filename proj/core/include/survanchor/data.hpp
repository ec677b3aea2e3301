#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "survanchor/types.hpp"

namespace survanchor::data {

enum class FeatureKind { Continuous, Ordinal, Categorical, Indicator };

std::string to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& text);

/// How a feature is turned into discrete levels for heatmaps and
/// contingency tables.
struct DiscretizationRule {
  enum class Kind { Quartiles, CutPoints, Identity };
  Kind kind = Kind::Identity;
  std::vector<double> cut_points;  // only for Kind::CutPoints

  static DiscretizationRule quartiles() { return {Kind::Quartiles, {}}; }
  static DiscretizationRule identity() { return {Kind::Identity, {}}; }
  static DiscretizationRule cuts(std::vector<double> points) {
    return {Kind::CutPoints, std::move(points)};
  }
};

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::Continuous;
  // Level labels for categorical features; index = integer code.
  std::vector<std::string> levels;
  DiscretizationRule rule;
};

/// Default rule: quartiles for continuous features, identity otherwise.
DiscretizationRule default_rule(FeatureKind kind);

struct FeatureSchema {
  std::vector<FeatureSpec> features;

  std::size_t size() const noexcept { return features.size(); }
  std::optional<std::size_t> index_of(const std::string& name) const;
  /// Throws InvalidArgument on duplicate names or unsorted cut points.
  void validate() const;
};

struct SurvivalDataset {
  FeatureSchema schema;
  Eigen::MatrixXd features;  // n x D
  SurvivalLabels labels;
  std::vector<std::int64_t> ids;
  // Non-feature columns carried through verbatim (e.g. a class label).
  std::vector<std::pair<std::string, std::vector<std::string>>> passthrough;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return schema.size(); }
  SurvivalDataset subset(const std::vector<std::size_t>& rows) const;
  const std::vector<std::string>* passthrough_column(
      const std::string& name) const;
};

struct CsvOptions {
  std::string time_col = "time";
  std::string event_col = "event";
  std::optional<std::string> id_col;
};

/// Reads a header-first CSV. Features come from `schema` (order preserved);
/// every other non-label column is kept in `passthrough`. Categorical
/// levels missing from the schema are discovered and sorted.
SurvivalDataset load_csv(const std::filesystem::path& path,
                         const FeatureSchema& schema, const CsvOptions& opts);

/// Builds a schema from a CSV's columns: all-0/1 numeric columns become
/// indicators, other numeric columns continuous, the rest categorical.
FeatureSchema infer_schema(const std::filesystem::path& path,
                           const CsvOptions& opts,
                           const std::vector<std::string>& exclude = {});

/// Writes `ds` back to CSV (ids, features, time, event, passthrough).
/// Categorical codes are written as their level labels.
void write_csv(const std::filesystem::path& path, const SurvivalDataset& ds,
               const CsvOptions& opts);

// ---------------------------------------------------------------------------
// Splitting

enum class SplitRole : std::uint8_t {
  Train = 0,
  Validation = 1,
  Anchor = 2,
  Visualization = 3,
};

std::string to_string(SplitRole role);

using SplitFractions = std::array<double, 4>;

/// 70/30 train/test, 20% of train held out for validation, 25% of test
/// used for anchor estimation.
inline constexpr SplitFractions kDefaultFractions{0.56, 0.14, 0.075, 0.225};

struct SplitPlan {
  std::vector<SplitRole> roles;
  std::uint64_t seed = 0;
  SplitFractions fractions{};

  std::array<std::size_t, 4> counts() const;
  std::vector<std::size_t> rows(SplitRole role) const;
};

/// Seeded shuffle followed by contiguous slicing at rounded cumulative
/// fractions.
SplitPlan make_splits(std::size_t n, const SplitFractions& fractions,
                      std::uint64_t seed);

// ---------------------------------------------------------------------------
// Discretization

struct Discretization {
  std::vector<int> labels;               // bin index per value
  std::vector<std::string> descriptors;  // one per bin
  std::vector<double> cut_points;        // empty for identity bins
};

/// Cut-point rules produce right-closed bins (a value equal to a cut point
/// falls in the lower bin); the first bin is closed on the left at min.
Discretization discretize_feature(const std::vector<double>& values,
                                  const DiscretizationRule& rule);

/// Discretizes with the feature's rule; categorical features enumerate all
/// schema levels even when some are absent from `values`.
Discretization discretize_feature(const std::vector<double>& values,
                                  const FeatureSpec& spec);

/// Linear-interpolation empirical quantile (q in [0, 1]).
double empirical_quantile(std::vector<double> values, double q);

// ---------------------------------------------------------------------------
// Standardization of continuous features

struct Standardizer {
  std::vector<double> means;
  std::vector<double> scales;  // 1 for non-continuous features

  static Standardizer fit(const SurvivalDataset& ds,
                          const std::vector<std::size_t>& rows);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);
};

// ---------------------------------------------------------------------------
// Synthetic data with known class structure

struct SyntheticSpec {
  std::vector<double> class_means;  // Gamma mean per class, m_j > 0
  double time_variance = 1e-3;
  double censor_quantile = 0.90;
  std::size_t n = 2000;
  std::size_t dim = 10;
  double center_radius = 5.0;
  double spread = 1.0;
  // Optional explicit centers (one per class, each of length dim).
  std::vector<std::vector<double>> centers;
  std::uint64_t seed = 0;

  void validate() const;
};

/// The ten class means of the survival-MNIST label recipe, digit order 0..9.
inline const std::vector<double> kDigitMeans{11.25, 2.25, 5.25, 5.0,  4.75,
                                             8.0,   2.0,  11.0, 1.75, 10.75};

struct SyntheticData {
  SurvivalDataset dataset;  // passthrough column "class" holds the labels
  std::vector<int> classes;
  std::vector<double> true_times;
  std::vector<double> censor_times;
};

/// Class c gets features ~ N(center_c, spread^2 I) and true times
/// ~ Gamma(mean m_c, variance v). After all event times are drawn, censoring
/// times are drawn i.i.d. Uniform(min t, quantile_q(t)).
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Default class centers: +-radius along the coordinate axes, then random
/// points on the sphere once the axes are exhausted.
std::vector<std::vector<double>> default_centers(std::size_t classes,
                                                 std::size_t dim,
                                                 double radius,
                                                 std::uint64_t seed);

// ---------------------------------------------------------------------------
// Provenance

nlohmann::json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& j);

/// {n, D, schema, split_counts, seed}
nlohmann::json dataset_manifest(const SurvivalDataset& ds,
                                const SplitPlan& plan);

}  // namespace survanchor::data
