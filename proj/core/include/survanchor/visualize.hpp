#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "survanchor/anchors.hpp"
#include "survanchor/assoc.hpp"
#include "survanchor/clusterlib.hpp"
#include "survanchor/data.hpp"
#include "survanchor/survstats.hpp"

namespace survanchor::visualize {

inline constexpr int kFigureVersion = 1;

enum class ColorMap { Sequential, Diverging };

std::string to_string(ColorMap map);

struct HeatmapSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::vector<std::optional<double>>> cells;  // rows x cols; nullopt = empty
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  ColorMap color_map = ColorMap::Sequential;
  double vmin = 0.0;
  double vmax = 1.0;
  /// Row indices at which a new feature block starts (excluding 0).
  std::vector<std::size_t> row_separators;
  /// Draw row 0 at the bottom (time axes).
  bool rows_bottom_up = false;

  std::size_t rows() const noexcept { return cells.size(); }
  std::size_t cols() const noexcept { return col_labels.size(); }
  /// Throws InvalidArgument when dims disagree or a value leaves [vmin, vmax].
  void validate() const;
  nlohmann::json to_json() const;
  static HeatmapSpec from_json(const nlohmann::json& j);
};

struct ViolinSeries {
  std::size_t k = 0;
  std::vector<double> log10_p;  // raw points, p floored at 1e-300
  std::vector<double> grid;     // density support (log10 p)
  std::vector<double> density;
  double bandwidth = 0.0;
  bool point_marker = false;    // degenerate sample: no silhouette
};

struct ViolinSpec {
  std::string title;
  std::vector<ViolinSeries> series;
  double threshold = 0.01;
  std::optional<std::size_t> knee;

  nlohmann::json to_json() const;
  static ViolinSpec from_json(const nlohmann::json& j);
};

/// Gaussian KDE of log10 p per k with Silverman's bandwidth.
ViolinSpec violin_data(const clusterlib::KSelectionReport& report, std::size_t grid_points = 64);

/// Rows are feature levels (one block per feature), columns projection
/// bins; each cell is the fraction of the bin's rows at that level.
HeatmapSpec raw_feature_heatmap(const anchors::ProjectionBinning& binning,
                                const data::FeatureSchema& schema,
                                const Eigen::MatrixXd& features,
                                const std::string& title = "raw feature probability heatmap");

/// Rows are `points` evenly spaced times over [t_min, t_max], bottom-up.
HeatmapSpec survival_heatmap(const std::vector<std::optional<survstats::SurvivalCurve>>& bin_curves,
                             const anchors::ProjectionBinning& binning, double t_min,
                             double t_max, std::size_t points = 50,
                             const std::string& title = "survival probability heatmap");

struct ScatterSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> color;  // optional per-point values
  std::pair<double, double> x_range;
  std::pair<double, double> y_range;
  std::vector<std::pair<double, double>> running_median;

  nlohmann::json to_json() const;
  static ScatterSpec from_json(const nlohmann::json& j);
};

/// Axis ranges padded by 2%; running median over a window of n/10 points.
ScatterSpec scatter_feature_vs_projection(const std::vector<double>& feature,
                                          const std::vector<double>& projections,
                                          const std::string& feature_name,
                                          const std::string& anchor_name,
                                          bool running_median = true);

std::vector<std::pair<double, double>> running_median(const std::vector<double>& x,
                                                      const std::vector<double>& y,
                                                      std::size_t window);

struct BinSampleTable {
  std::vector<std::string> bin_labels;
  std::vector<std::vector<std::int64_t>> samples;  // ascending ids per bin

  nlohmann::json to_json() const;
};

BinSampleTable bin_sample_table(const anchors::ProjectionBinning& binning,
                                const std::vector<std::int64_t>& ids, std::size_t sample_size,
                                std::uint64_t seed);

/// cell(i, j) = mean projection onto anchor j over rows in group i. Groups
/// follow `group_order` when given, else sorted distinct labels.
HeatmapSpec average_projection_heatmap(const std::vector<std::string>& group_labels,
                                       const std::vector<std::vector<double>>& projections,
                                       const std::vector<std::string>& anchor_names,
                                       const std::vector<std::string>& group_order = {});

struct PcaResult {
  Eigen::MatrixXd axes;         // d x r, orthonormal columns (r = 2 or 1)
  std::vector<double> variances;  // eigenvalue per axis
  Eigen::MatrixXd coords;       // n x r
  bool rank_deficient = false;
};

/// Top principal axes of the centered data by power iteration with
/// deflation. Falls back to a single axis when only one direction has
/// nonzero variance; throws RankDeficient when none does.
PcaResult principal_components(const Eigen::MatrixXd& data, double tol = 1e-10,
                               std::size_t max_iter = 100000);

ScatterSpec pca_scatter(const Eigen::MatrixXd& embeddings, const std::vector<double>& color,
                        const std::string& title = "PCA of embeddings");

// ---------------------------------------------------------------------------
// Figures on disk: <name>.json holds {"version", "kind", "data"} and
// <name>.svg is rendered from that JSON alone.

std::string render_heatmap(const HeatmapSpec& spec);
std::string render_violin(const ViolinSpec& spec);
std::string render_scatter(const ScatterSpec& spec);
std::string render_table(const nlohmann::json& table);

/// Dispatches on "kind": heatmap, violin, scatter, table.
std::string render_figure(const nlohmann::json& figure);

nlohmann::json make_figure(const std::string& kind, nlohmann::json data);

/// Writes <dir>/<name>.json and <dir>/<name>.svg.
void write_figure(const std::filesystem::path& dir, const std::string& name,
                  const nlohmann::json& figure);

/// Re-renders every <name>.json figure in `dir`; returns the count.
std::size_t render_directory(const std::filesystem::path& dir);

/// Table figure data: {"title", "columns": [...], "rows": [[...], ...]}.
nlohmann::json ranking_table(const assoc::FeatureRanking& ranking);
nlohmann::json anchor_rank_table(const std::vector<anchors::AnchorRank>& ranks);
nlohmann::json sample_table(const BinSampleTable& table, const std::string& title);

struct HeatmapCheck {
  bool ok = true;
  double worst = 0.0;
  std::string detail;
};

/// Nonempty columns of every feature block sum to 1 within `tol`.
HeatmapCheck check_raw_feature_heatmap(const HeatmapSpec& spec, double tol = 1e-12);
/// Every column is nonincreasing in time.
HeatmapCheck check_survival_heatmap(const HeatmapSpec& spec);

}  // namespace survanchor::visualize
