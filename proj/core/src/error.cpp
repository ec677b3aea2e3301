#include "survanchor/error.hpp"

namespace survanchor {

ErrorCategory category_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadFractions:
    case ErrorCode::BadQ:
    case ErrorCode::InvalidArgument:
      return ErrorCategory::Config;
    case ErrorCode::DivergedLoss:
    case ErrorCode::EmptyClusterCollapse:
    case ErrorCode::ZeroAnchor:
    case ErrorCode::DegenerateEmbedding:
    case ErrorCode::DegenerateProjections:
    case ErrorCode::DegenerateTable:
    case ErrorCode::AllTied:
    case ErrorCode::RankDeficient:
      return ErrorCategory::Numerical;
    default:
      return ErrorCategory::Data;
  }
}

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::BadFractions: return "BadFractions";
    case ErrorCode::BadQ: return "BadQ";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnparseableCell: return "UnparseableCell";
    case ErrorCode::NegativeTime: return "NegativeTime";
    case ErrorCode::BadEventFlag: return "BadEventFlag";
    case ErrorCode::DegenerateFeature: return "DegenerateFeature";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MalformedBundle: return "MalformedBundle";
    case ErrorCode::InconsistentRowCount: return "InconsistentRowCount";
    case ErrorCode::EmptyBundle: return "EmptyBundle";
    case ErrorCode::EmptyCluster: return "EmptyCluster";
    case ErrorCode::EmptyConcept: return "EmptyConcept";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::EmptyTopSet: return "EmptyTopSet";
    case ErrorCode::TooFewGroups: return "TooFewGroups";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::NoEvents: return "NoEvents";
    case ErrorCode::NoEventsInBatch: return "NoEventsInBatch";
    case ErrorCode::NoComparablePairs: return "NoComparablePairs";
    case ErrorCode::NotUnitNorm: return "NotUnitNorm";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::EmptyClusterCollapse: return "EmptyClusterCollapse";
    case ErrorCode::ZeroAnchor: return "ZeroAnchor";
    case ErrorCode::DegenerateEmbedding: return "DegenerateEmbedding";
    case ErrorCode::DegenerateProjections: return "DegenerateProjections";
    case ErrorCode::DegenerateTable: return "DegenerateTable";
    case ErrorCode::AllTied: return "AllTied";
    case ErrorCode::RankDeficient: return "RankDeficient";
  }
  return "Unknown";
}

}  // namespace survanchor
