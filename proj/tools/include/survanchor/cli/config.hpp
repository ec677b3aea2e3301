#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "survanchor/assoc.hpp"
#include "survanchor/clusterlib.hpp"
#include "survanchor/coxnet.hpp"
#include "survanchor/data.hpp"

namespace survanchor::cli {

inline constexpr const char* kVersion = "0.1.0";

struct DataSection {
  std::optional<std::filesystem::path> csv;     // absent: use the synth stage output
  std::optional<std::filesystem::path> schema;  // schema JSON; absent: inferred
  data::CsvOptions csv_options;
  std::vector<std::string> exclude;             // columns kept out of the features
};

struct ClusterSection {
  clusterlib::MixtureKind kind = clusterlib::MixtureKind::Vmf;
  std::size_t k_min = 2;
  std::size_t k_max = 8;
  std::optional<std::size_t> k;  // overrides the automatic choice
  double tol = 1e-6;
  std::size_t max_iter = 500;
  std::uint64_t seed = 0;
};

struct ConceptFilter {
  std::string column;
  std::string value;

  std::string name() const { return column + "=" + value; }
  static ConceptFilter parse(const std::string& text);
};

struct AnchorSection {
  std::size_t bins = 7;
  double alpha = 0.1;
  std::vector<ConceptFilter> concepts;
  bool clusters = true;
  std::size_t sample_size = 5;
  double clumping_warn = 0.5;
  std::string group_column = "class";  // average projection heatmap, if present
  std::size_t display_times = 50;
};

struct AssocSection {
  assoc::TestKind test = assoc::TestKind::Chi2;
  std::optional<double> fdr_q;
};

struct RunConfig {
  DataSection data;
  data::SyntheticSpec synthetic;
  data::SplitFractions fractions = data::kDefaultFractions;
  std::uint64_t split_seed = 0;
  coxnet::TrainConfig train;
  ClusterSection cluster;
  AnchorSection anchors;
  AssocSection assoc;
  std::filesystem::path out = "out";

  /// Sets every stage seed from one master seed.
  void set_seed(std::uint64_t seed);
  void validate() const;
  /// Everything that determines the artifacts; the output directory and
  /// the thread count are left out.
  nlohmann::json to_json() const;
  /// FNV-1a 64 over the canonical JSON form, hex encoded.
  std::string hash() const;
};

/// Parses an INI file with sections data, synthetic, split, train, cluster,
/// anchors, assoc and output. Unknown keys are rejected. Relative paths are
/// resolved against the config file's directory.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");

std::string fnv1a_hex(const std::string& bytes);

}  // namespace survanchor::cli
