#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace survanchor {

/// Failure kinds raised by the library. Each maps onto one coarse category
/// so that front ends can translate failures into exit codes.
enum class ErrorCode {
  // configuration / contract violations
  BadFractions,
  BadQ,
  InvalidArgument,
  // data problems
  MissingColumn,
  UnparseableCell,
  NegativeTime,
  BadEventFlag,
  DegenerateFeature,
  DimensionMismatch,
  MalformedBundle,
  InconsistentRowCount,
  EmptyBundle,
  EmptyCluster,
  EmptyConcept,
  EmptyGroup,
  EmptyTopSet,
  TooFewGroups,
  LengthMismatch,
  GridMismatch,
  NoEvents,
  NoEventsInBatch,
  NoComparablePairs,
  NotUnitNorm,
  // numerical failures
  DivergedLoss,
  EmptyClusterCollapse,
  ZeroAnchor,
  DegenerateEmbedding,
  DegenerateProjections,
  DegenerateTable,
  AllTied,
  RankDeficient,
};

enum class ErrorCategory { Config, Data, Numerical };

ErrorCategory category_of(ErrorCode code) noexcept;
std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace survanchor
