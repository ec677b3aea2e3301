#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "survanchor/cli/config.hpp"

namespace survanchor::cli {

/// Stage directories under the run's output directory.
std::filesystem::path synth_dir(const RunConfig& cfg);
std::filesystem::path train_dir(const RunConfig& cfg);
std::filesystem::path analyze_dir(const RunConfig& cfg);

struct StageResult {
  std::filesystem::path dir;
  std::vector<std::string> warnings;
  nlohmann::json summary;
  bool partial = false;
};

/// Synthetic dataset: data.csv, schema.json, manifest.json, true_labels.csv.
StageResult run_synth(const RunConfig& cfg);

/// Trains the Cox MLP on the train/validation roles and encodes the anchor
/// and visualization roles: model.json, anchor_bundle.json,
/// vis_bundle.json, anchor_rows.csv, vis_rows.csv, train_log.csv, split.json.
StageResult run_train(const RunConfig& cfg);

/// k sweep, clustering, anchors, projections, and every figure and table.
/// Reads only the train stage's artifacts.
StageResult run_analyze(const RunConfig& cfg);

/// Re-renders every figure JSON under `dir` (recursively one level for the
/// analyze directory). Returns the number of figures written.
std::size_t run_render(const std::filesystem::path& dir);

/// Process exit code for an exception escaping a stage: 2 configuration,
/// 3 data, 4 numerical.
int exit_code_for(const std::exception& e) noexcept;

std::string slug(const std::string& name);

}  // namespace survanchor::cli
