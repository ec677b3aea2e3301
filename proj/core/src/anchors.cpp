#include "survanchor/anchors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "survanchor/error.hpp"

namespace survanchor::anchors {
namespace {

using json = nlohmann::json;

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string fixed(double v, int decimals) {
  std::string s = fmt::format("{:.{}f}", v, decimals);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

}  // namespace

AnchorDirection::AnchorDirection(Eigen::VectorXd v, Eigen::VectorXd com)
    : vector(std::move(v)), center_of_mass(std::move(com)) {
  if (vector.size() != center_of_mass.size()) {
    throw Error(ErrorCode::DimensionMismatch, "anchor and center of mass differ in length");
  }
  if (!(vector.norm() >= kZeroAnchorTol)) {
    throw Error(ErrorCode::ZeroAnchor,
                fmt::format("anchor norm {} is below {}", vector.norm(), kZeroAnchorTol));
  }
}

std::string AnchorDirection::name() const {
  if (concept_name) return "concept:" + *concept_name;
  if (cluster) return fmt::format("cluster{}", *cluster + 1);
  return "anchor";
}

json AnchorDirection::to_json() const {
  json j = {{"name", name()},
            {"vector", to_std(vector)},
            {"center_of_mass", to_std(center_of_mass)}};
  j["cluster"] = cluster ? json(*cluster) : json(nullptr);
  j["concept"] = concept_name ? json(*concept_name) : json(nullptr);
  return j;
}

AnchorDirection AnchorDirection::from_json(const json& j) {
  AnchorDirection a(to_eigen(j.at("vector").get<std::vector<double>>()),
                    to_eigen(j.at("center_of_mass").get<std::vector<double>>()));
  if (j.contains("cluster") && !j.at("cluster").is_null()) a.cluster = j.at("cluster").get<int>();
  if (j.contains("concept") && !j.at("concept").is_null()) {
    a.concept_name = j.at("concept").get<std::string>();
  }
  return a;
}

Eigen::VectorXd center_of_mass(const Eigen::MatrixXd& embeddings) {
  if (embeddings.rows() == 0) {
    throw Error(ErrorCode::EmptyBundle, "center of mass of zero embeddings");
  }
  return embeddings.colwise().mean().transpose();
}

Eigen::VectorXd center_of_mass(const EmbeddingBundle& anchor_bundle) {
  return center_of_mass(anchor_bundle.embeddings);
}

AnchorDirection cluster_anchor(const EmbeddingBundle& anchor_bundle,
                               const clusterlib::MixtureFit& fit, int cluster) {
  if (fit.assignments.size() != anchor_bundle.size()) {
    throw Error(ErrorCode::InconsistentRowCount,
                "mixture assignments are not aligned with the anchor bundle");
  }
  const auto rows = fit.members(cluster);
  if (rows.empty()) {
    throw Error(ErrorCode::EmptyCluster, fmt::format("cluster {} has no members", cluster + 1));
  }
  const Eigen::VectorXd com = center_of_mass(anchor_bundle);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(com.size());
  for (std::size_t r : rows) {
    mean += anchor_bundle.embeddings.row(static_cast<Eigen::Index>(r)).transpose();
  }
  mean /= static_cast<double>(rows.size());
  AnchorDirection a(mean - com, com);
  a.cluster = cluster;
  return a;
}

AnchorDirection concept_anchor(const Eigen::MatrixXd& concept_embeddings,
                               const Eigen::VectorXd& com, const std::string& name,
                               const std::vector<std::int64_t>* concept_ids,
                               const std::vector<std::int64_t>* visualization_ids,
                               std::vector<std::string>* warnings) {
  if (concept_embeddings.rows() == 0) {
    throw Error(ErrorCode::EmptyConcept, "concept '" + name + "' has no examples");
  }
  if (concept_embeddings.cols() != com.size()) {
    throw Error(ErrorCode::DimensionMismatch, "concept embeddings have the wrong dimension");
  }
  if (concept_ids && visualization_ids) {
    const std::set<std::int64_t> vis(visualization_ids->begin(), visualization_ids->end());
    std::size_t overlap = 0;
    for (auto id : *concept_ids) overlap += vis.count(id);
    if (overlap > 0 && warnings) {
      warnings->push_back(fmt::format(
          "ConceptOverlapsVisualization: concept '{}' shares {} rows with the "
          "visualization data",
          name, overlap));
    }
  }
  const Eigen::VectorXd mean = concept_embeddings.colwise().mean().transpose();
  AnchorDirection a(mean - com, com);
  a.concept_name = name;
  return a;
}

AnchorDirection concept_anchor(const coxnet::CoxMlp& network,
                               const Eigen::MatrixXd& concept_inputs,
                               const Eigen::VectorXd& com, const std::string& name) {
  if (concept_inputs.rows() == 0) {
    throw Error(ErrorCode::EmptyConcept, "concept '" + name + "' has no examples");
  }
  return concept_anchor(network.encode(concept_inputs), com, name);
}

std::vector<double> project(const Eigen::MatrixXd& embeddings, const AnchorDirection& anchor) {
  if (embeddings.cols() != anchor.vector.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("embeddings have d = {}, anchor has d = {}", embeddings.cols(),
                            anchor.vector.size()));
  }
  const double anchor_norm = anchor.vector.norm();
  std::vector<double> out(static_cast<std::size_t>(embeddings.rows()));
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
    const Eigen::VectorXd centered = embeddings.row(i).transpose() - anchor.center_of_mass;
    const double norm = centered.norm();
    if (norm < kDegenerateEmbeddingTol) {
      throw Error(ErrorCode::DegenerateEmbedding,
                  fmt::format("row {} coincides with the center of mass", i));
    }
    const double cosine = centered.dot(anchor.vector) / (norm * anchor_norm);
    out[static_cast<std::size_t>(i)] = std::clamp(cosine, -1.0, 1.0);
  }
  return out;
}

std::string ProjectionBin::interval_label(int decimals) const {
  return fmt::format("[{}, {}{}", fixed(lower, decimals), fixed(upper, decimals),
                     closed_right ? "]" : ")");
}

std::string ProjectionBin::midpoint_label(int decimals) const {
  return fixed(midpoint(), decimals);
}

json ProjectionBinning::to_json() const {
  json bins_json = json::array();
  for (const auto& b : bins) {
    bins_json.push_back({{"lower", b.lower},
                         {"upper", b.upper},
                         {"closed_right", b.closed_right},
                         {"midpoint", b.midpoint()},
                         {"interval", b.interval_label()},
                         {"count", b.members.size()}});
  }
  return {{"bins", std::move(bins_json)}, {"bin_of_row", bin_of_row}};
}

ProjectionBinning bin_projections(const std::vector<double>& projections, std::size_t m) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "bin count must be positive");
  if (projections.empty()) {
    throw Error(ErrorCode::DegenerateProjections, "no projections to bin");
  }
  const auto [lo_it, hi_it] = std::minmax_element(projections.begin(), projections.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) {
    throw Error(ErrorCode::DegenerateProjections, "all projection values are equal");
  }
  std::vector<double> edges(m + 1);
  for (std::size_t j = 0; j <= m; ++j) {
    edges[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(m);
  }
  edges[m] = hi;

  ProjectionBinning binning;
  binning.bins.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    binning.bins[j].lower = edges[j];
    binning.bins[j].upper = edges[j + 1];
    binning.bins[j].closed_right = j + 1 == m;
  }
  binning.bin_of_row.resize(projections.size());
  const auto inner_begin = edges.begin() + 1;
  const auto inner_end = edges.begin() + static_cast<std::ptrdiff_t>(m);
  for (std::size_t i = 0; i < projections.size(); ++i) {
    const auto j = static_cast<std::size_t>(
        std::upper_bound(inner_begin, inner_end, projections[i]) - inner_begin);
    binning.bin_of_row[i] = static_cast<int>(j);
    binning.bins[j].members.push_back(i);
  }
  return binning;
}

std::vector<std::optional<survstats::SurvivalCurve>> bin_survival(
    const ProjectionBinning& binning, const std::vector<survstats::SurvivalCurve>& row_curves) {
  if (binning.bin_of_row.size() != row_curves.size()) {
    throw Error(ErrorCode::LengthMismatch, "one survival curve per binned row is required");
  }
  std::vector<std::optional<survstats::SurvivalCurve>> out;
  for (const auto& bin : binning.bins) {
    if (bin.members.empty()) {
      out.emplace_back(std::nullopt);
      continue;
    }
    std::vector<const survstats::SurvivalCurve*> curves;
    for (std::size_t r : bin.members) curves.push_back(&row_curves[r]);
    out.emplace_back(survstats::average_curves(curves));
  }
  return out;
}

json AnchorRank::to_json() const {
  return {{"anchor_index", anchor_index},
          {"name", name},
          {"threshold", threshold},
          {"top_count", top_rows.size()},
          {"median", median.to_json()},
          {"curve", curve.to_json()}};
}

std::vector<AnchorRank> rank_anchors(const std::vector<AnchorDirection>& anchors,
                                     const std::vector<std::vector<double>>& projections,
                                     const std::vector<survstats::SurvivalCurve>& row_curves,
                                     double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
  }
  if (anchors.size() != projections.size()) {
    throw Error(ErrorCode::LengthMismatch, "one projection vector per anchor is required");
  }
  std::vector<AnchorRank> ranks;
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const auto& p = projections[a];
    if (p.size() != row_curves.size()) {
      throw Error(ErrorCode::LengthMismatch, "projections and curves are not row-aligned");
    }
    if (p.empty()) {
      throw Error(ErrorCode::EmptyTopSet, "no visualization rows to rank on");
    }
    std::vector<double> sorted(p);
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    // 1e-9 absorbs representation error in (1 - alpha) * n, e.g. 0.9 * 100.
    auto index = static_cast<std::size_t>(std::ceil((1.0 - alpha) * n - 1e-9));
    index = std::clamp<std::size_t>(index, 1, sorted.size());

    AnchorRank rank;
    rank.anchor_index = a;
    rank.name = anchors[a].name();
    rank.threshold = sorted[index - 1];
    std::vector<const survstats::SurvivalCurve*> curves;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] >= rank.threshold) {
        rank.top_rows.push_back(i);
        curves.push_back(&row_curves[i]);
      }
    }
    if (curves.empty()) {
      throw Error(ErrorCode::EmptyTopSet, "top-alpha set is empty for " + rank.name);
    }
    rank.curve = survstats::average_curves(curves);
    rank.median = survstats::median_from_curve(rank.curve);
    ranks.push_back(std::move(rank));
  }
  std::stable_sort(ranks.begin(), ranks.end(), [](const AnchorRank& x, const AnchorRank& y) {
    return x.median < y.median;
  });
  return ranks;
}

double clumping_diagnostic(const std::vector<double>& projections, double edge_tol) {
  if (projections.empty()) {
    throw Error(ErrorCode::InvalidArgument, "clumping diagnostic needs projections");
  }
  std::size_t edge = 0;
  for (double p : projections) {
    if (std::abs(p) > 1.0 - edge_tol) ++edge;
  }
  return static_cast<double>(edge) / static_cast<double>(projections.size());
}

}  // namespace survanchor::anchors
