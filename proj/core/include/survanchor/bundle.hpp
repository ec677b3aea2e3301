#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "survanchor/types.hpp"

namespace survanchor {

/// Embedding vectors aligned with row ids and (optionally) survival labels.
/// This is the interchange record between the model and the analysis
/// stages; any encoder that can write the JSON layout can feed the analysis.
struct EmbeddingBundle {
  static constexpr int kVersion = 1;

  std::vector<std::int64_t> ids;
  Eigen::MatrixXd embeddings;  // n x d
  std::optional<SurvivalLabels> labels;
  std::string source;

  std::size_t size() const noexcept { return ids.size(); }
  std::size_t dim() const noexcept {
    return static_cast<std::size_t>(embeddings.cols());
  }
  /// Throws InconsistentRowCount / MalformedBundle.
  void validate() const;
  EmbeddingBundle subset(const std::vector<std::size_t>& rows) const;

  nlohmann::json to_json() const;
  static EmbeddingBundle from_json(const nlohmann::json& j);
};

void export_bundle(const EmbeddingBundle& bundle,
                   const std::filesystem::path& path);
EmbeddingBundle import_bundle(const std::filesystem::path& path);

}  // namespace survanchor
