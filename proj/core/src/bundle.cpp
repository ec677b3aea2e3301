#include "survanchor/bundle.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>

#include "survanchor/error.hpp"

namespace survanchor {

using json = nlohmann::json;

void EmbeddingBundle::validate() const {
  const auto n = ids.size();
  if (static_cast<std::size_t>(embeddings.rows()) != n) {
    throw Error(ErrorCode::InconsistentRowCount,
                fmt::format("{} ids but {} embedding rows", n, embeddings.rows()));
  }
  if (labels) {
    if (labels->times.size() != n || labels->events.size() != n) {
      throw Error(ErrorCode::InconsistentRowCount,
                  fmt::format("{} rows but {} times / {} events", n,
                              labels->times.size(), labels->events.size()));
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!(labels->times[i] >= 0.0) || !std::isfinite(labels->times[i])) {
        throw Error(ErrorCode::MalformedBundle,
                    fmt::format("row {}: time must be finite and >= 0", i));
      }
      if (labels->events[i] != 0 && labels->events[i] != 1) {
        throw Error(ErrorCode::MalformedBundle,
                    fmt::format("row {}: event flag must be 0 or 1", i));
      }
    }
  }
  if (!embeddings.allFinite()) {
    throw Error(ErrorCode::MalformedBundle, "embeddings contain non-finite values");
  }
}

EmbeddingBundle EmbeddingBundle::subset(const std::vector<std::size_t>& rows) const {
  EmbeddingBundle out;
  out.source = source;
  out.embeddings.resize(static_cast<Eigen::Index>(rows.size()), embeddings.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.ids.push_back(ids[rows[i]]);
    out.embeddings.row(static_cast<Eigen::Index>(i)) =
        embeddings.row(static_cast<Eigen::Index>(rows[i]));
  }
  if (labels) out.labels = labels->subset(rows);
  return out;
}

json EmbeddingBundle::to_json() const {
  json rows = json::array();
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < embeddings.cols(); ++k) row.push_back(embeddings(i, k));
    rows.push_back(std::move(row));
  }
  json j = {{"version", kVersion},
            {"d", dim()},
            {"n", size()},
            {"ids", ids},
            {"embeddings", std::move(rows)},
            {"source", source}};
  if (labels) {
    j["times"] = labels->times;
    j["events"] = labels->events;
  }
  return j;
}

EmbeddingBundle EmbeddingBundle::from_json(const json& j) {
  EmbeddingBundle b;
  try {
    if (!j.is_object()) throw Error(ErrorCode::MalformedBundle, "bundle must be an object");
    const int version = j.at("version").get<int>();
    if (version != kVersion) {
      throw Error(ErrorCode::MalformedBundle,
                  fmt::format("unsupported bundle version {}", version));
    }
    const auto d = j.at("d").get<std::size_t>();
    const auto n = j.at("n").get<std::size_t>();
    b.ids = j.at("ids").get<std::vector<std::int64_t>>();
    b.source = j.value("source", std::string{});
    const auto& rows = j.at("embeddings");
    if (!rows.is_array()) throw Error(ErrorCode::MalformedBundle, "embeddings must be an array");
    if (rows.size() != n || b.ids.size() != n) {
      throw Error(ErrorCode::InconsistentRowCount,
                  fmt::format("n = {} but {} ids and {} embedding rows", n,
                              b.ids.size(), rows.size()));
    }
    b.embeddings.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
      const auto& row = rows[i];
      if (!row.is_array() || row.size() != d) {
        throw Error(ErrorCode::MalformedBundle,
                    fmt::format("embedding row {} does not have d = {} entries", i, d));
      }
      for (std::size_t k = 0; k < d; ++k) {
        b.embeddings(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            row[k].get<double>();
      }
    }
    const bool has_times = j.contains("times");
    const bool has_events = j.contains("events");
    if (has_times != has_events) {
      throw Error(ErrorCode::InconsistentRowCount,
                  "times and events must be supplied together");
    }
    if (has_times) {
      SurvivalLabels labels;
      labels.times = j.at("times").get<std::vector<double>>();
      labels.events = j.at("events").get<std::vector<int>>();
      b.labels = std::move(labels);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedBundle, e.what());
  }
  b.validate();
  return b;
}

void export_bundle(const EmbeddingBundle& bundle, const std::filesystem::path& path) {
  bundle.validate();
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::InvalidArgument, "cannot write '" + path.string() + "'");
  }
  out << bundle.to_json().dump() << '\n';
}

EmbeddingBundle import_bundle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::MalformedBundle, "cannot open '" + path.string() + "'");
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedBundle, e.what());
  }
  return EmbeddingBundle::from_json(j);
}

}  // namespace survanchor
