#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "survanchor/bundle.hpp"
#include "survanchor/clusterlib.hpp"
#include "survanchor/coxnet.hpp"
#include "survanchor/survstats.hpp"

namespace survanchor::anchors {

inline constexpr double kZeroAnchorTol = 1e-10;
inline constexpr double kDegenerateEmbeddingTol = 1e-12;

/// A direction in embedding space, always stored together with the center
/// of mass it was measured from.
struct AnchorDirection {
  Eigen::VectorXd vector;
  Eigen::VectorXd center_of_mass;
  std::optional<int> cluster;          // 0-based cluster index
  std::optional<std::string> concept_name;

  /// Throws ZeroAnchor when ||vector|| < 1e-10.
  AnchorDirection(Eigen::VectorXd vector, Eigen::VectorXd center_of_mass);

  std::string name() const;
  nlohmann::json to_json() const;
  static AnchorDirection from_json(const nlohmann::json& j);
};

Eigen::VectorXd center_of_mass(const Eigen::MatrixXd& embeddings);
Eigen::VectorXd center_of_mass(const EmbeddingBundle& anchor_bundle);

/// mean of cluster j's anchor embeddings minus the center of mass.
AnchorDirection cluster_anchor(const EmbeddingBundle& anchor_bundle,
                               const clusterlib::MixtureFit& fit, int cluster);

/// mean of the concept embeddings minus the center of mass. When ids are
/// given for both the concept rows and the visualization rows, overlap is
/// reported through `warnings` (the anchor is still built).
AnchorDirection concept_anchor(const Eigen::MatrixXd& concept_embeddings,
                               const Eigen::VectorXd& center_of_mass,
                               const std::string& name,
                               const std::vector<std::int64_t>* concept_ids = nullptr,
                               const std::vector<std::int64_t>* visualization_ids = nullptr,
                               std::vector<std::string>* warnings = nullptr);

/// Same, encoding raw concept inputs with the network first.
AnchorDirection concept_anchor(const coxnet::CoxMlp& network,
                               const Eigen::MatrixXd& concept_inputs,
                               const Eigen::VectorXd& center_of_mass,
                               const std::string& name);

/// Cosine similarity between each centered embedding and the anchor.
/// Throws DegenerateEmbedding for a row whose centered norm is < 1e-12.
std::vector<double> project(const Eigen::MatrixXd& embeddings,
                            const AnchorDirection& anchor);

struct ProjectionBin {
  double lower = 0.0;
  double upper = 0.0;
  bool closed_right = false;  // only the last bin
  std::vector<std::size_t> members;

  double midpoint() const { return 0.5 * (lower + upper); }
  std::string interval_label(int decimals = 2) const;
  std::string midpoint_label(int decimals = 2) const;
};

struct ProjectionBinning {
  std::vector<ProjectionBin> bins;
  std::vector<int> bin_of_row;

  std::size_t bin_count() const noexcept { return bins.size(); }
  nlohmann::json to_json() const;
};

/// m equal-width bins over [min, max]; half-open except the last.
ProjectionBinning bin_projections(const std::vector<double>& projections,
                                  std::size_t bins = 7);

/// Mean predicted curve per bin; empty bins yield std::nullopt.
std::vector<std::optional<survstats::SurvivalCurve>> bin_survival(
    const ProjectionBinning& binning,
    const std::vector<survstats::SurvivalCurve>& row_curves);

struct AnchorRank {
  std::size_t anchor_index = 0;
  std::string name;
  double threshold = 0.0;  // q_alpha
  std::vector<std::size_t> top_rows;
  survstats::SurvivalCurve curve;
  survstats::MedianSurvival median;

  nlohmann::json to_json() const;
};

/// Per anchor: q_alpha = p_(ceil((1 - alpha) n)) in 1-based ascending
/// order, the rows with p >= q_alpha, their mean curve and its median.
/// Sorted ascending by median (beyond-max last, ties keep anchor order).
std::vector<AnchorRank> rank_anchors(const std::vector<AnchorDirection>& anchors,
                                     const std::vector<std::vector<double>>& projections,
                                     const std::vector<survstats::SurvivalCurve>& row_curves,
                                     double alpha = 0.1);

/// Fraction of projections with |p| > 1 - edge_tol.
double clumping_diagnostic(const std::vector<double>& projections, double edge_tol = 0.01);

}  // namespace survanchor::anchors
