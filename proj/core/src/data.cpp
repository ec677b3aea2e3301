#include "survanchor/data.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "survanchor/error.hpp"

namespace survanchor::data {
namespace {

using json = nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  out.push_back(std::move(cell));
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorCode::MissingColumn, "column '" + name + "' not found");
    }
    return static_cast<std::size_t>(it - header.begin());
  }
};

CsvTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::MissingColumn,
                "cannot open CSV file '" + path.string() + "'");
  }
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::MissingColumn, "CSV file has no header row");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  for (auto& h : split_csv_line(line)) table.header.push_back(trim(h));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != table.header.size()) {
      throw Error(ErrorCode::UnparseableCell,
                  fmt::format("line {} has {} cells, header has {}", lineno,
                              cells.size(), table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

std::string format_number(double v) { return fmt::format("{:.6g}", v); }

}  // namespace

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Continuous: return "continuous";
    case FeatureKind::Ordinal: return "ordinal";
    case FeatureKind::Categorical: return "categorical";
    case FeatureKind::Indicator: return "indicator";
  }
  return "continuous";
}

FeatureKind parse_feature_kind(const std::string& text) {
  if (text == "continuous") return FeatureKind::Continuous;
  if (text == "ordinal") return FeatureKind::Ordinal;
  if (text == "categorical") return FeatureKind::Categorical;
  if (text == "indicator") return FeatureKind::Indicator;
  throw Error(ErrorCode::InvalidArgument, "unknown feature kind '" + text + "'");
}

DiscretizationRule default_rule(FeatureKind kind) {
  return kind == FeatureKind::Continuous ? DiscretizationRule::quartiles()
                                         : DiscretizationRule::identity();
}

std::optional<std::size_t> FeatureSchema::index_of(
    const std::string& name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return i;
  }
  return std::nullopt;
}

void FeatureSchema::validate() const {
  std::set<std::string> seen;
  for (const auto& f : features) {
    if (f.name.empty()) {
      throw Error(ErrorCode::InvalidArgument, "feature with empty name");
    }
    if (!seen.insert(f.name).second) {
      throw Error(ErrorCode::InvalidArgument,
                  "duplicate feature name '" + f.name + "'");
    }
    if (!std::is_sorted(f.rule.cut_points.begin(), f.rule.cut_points.end())) {
      throw Error(ErrorCode::InvalidArgument,
                  "cut points of '" + f.name + "' are not nondecreasing");
    }
  }
}

SurvivalDataset SurvivalDataset::subset(
    const std::vector<std::size_t>& rows) const {
  SurvivalDataset out;
  out.schema = schema;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) =
        features.row(static_cast<Eigen::Index>(rows[i]));
    out.ids.push_back(ids[rows[i]]);
  }
  out.labels = labels.subset(rows);
  for (const auto& [name, column] : passthrough) {
    std::vector<std::string> values;
    values.reserve(rows.size());
    for (std::size_t r : rows) values.push_back(column[r]);
    out.passthrough.emplace_back(name, std::move(values));
  }
  return out;
}

const std::vector<std::string>* SurvivalDataset::passthrough_column(
    const std::string& name) const {
  for (const auto& [col, values] : passthrough) {
    if (col == name) return &values;
  }
  return nullptr;
}

SurvivalDataset load_csv(const std::filesystem::path& path,
                         const FeatureSchema& schema_in,
                         const CsvOptions& opts) {
  schema_in.validate();
  const CsvTable table = read_table(path);
  const std::size_t time_idx = table.column(opts.time_col);
  const std::size_t event_idx = table.column(opts.event_col);
  std::optional<std::size_t> id_idx;
  if (opts.id_col) id_idx = table.column(*opts.id_col);

  SurvivalDataset ds;
  ds.schema = schema_in;
  const std::size_t n = table.rows.size();
  const std::size_t dim = schema_in.size();

  std::vector<std::size_t> feature_cols;
  for (const auto& f : schema_in.features) {
    feature_cols.push_back(table.column(f.name));
  }

  // Resolve categorical level codes: declared levels first, otherwise the
  // sorted set of observed labels.
  for (std::size_t k = 0; k < dim; ++k) {
    auto& spec = ds.schema.features[k];
    if (spec.kind != FeatureKind::Categorical || !spec.levels.empty()) continue;
    std::set<std::string> levels;
    for (const auto& row : table.rows) levels.insert(trim(row[feature_cols[k]]));
    levels.erase("");
    spec.levels.assign(levels.begin(), levels.end());
  }

  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  ds.labels.times.resize(n);
  ds.labels.events.resize(n);
  ds.ids.resize(n);

  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = table.rows[r];
    const auto cell_error = [&](std::size_t col, const std::string& why) {
      return Error(ErrorCode::UnparseableCell,
                   fmt::format("row {}, column '{}': {}", r + 1,
                               table.header[col], why));
    };

    auto t = parse_double(row[time_idx]);
    if (!t) throw cell_error(time_idx, "'" + row[time_idx] + "' is not a number");
    if (*t < 0.0) {
      throw Error(ErrorCode::NegativeTime,
                  fmt::format("row {}: observed time {} < 0", r + 1, *t));
    }
    ds.labels.times[r] = *t;

    auto e = parse_double(row[event_idx]);
    if (!e) throw cell_error(event_idx, "'" + row[event_idx] + "' is not a number");
    if (*e != 0.0 && *e != 1.0) {
      throw Error(ErrorCode::BadEventFlag,
                  fmt::format("row {}: event flag '{}' is not 0 or 1", r + 1,
                              trim(row[event_idx])));
    }
    ds.labels.events[r] = static_cast<int>(*e);

    if (id_idx) {
      auto id = parse_double(row[*id_idx]);
      if (!id || *id != std::floor(*id)) {
        throw cell_error(*id_idx, "id must be an integer");
      }
      ds.ids[r] = static_cast<std::int64_t>(*id);
    } else {
      ds.ids[r] = static_cast<std::int64_t>(r);
    }

    for (std::size_t k = 0; k < dim; ++k) {
      const auto& spec = ds.schema.features[k];
      const std::size_t col = feature_cols[k];
      const std::string cell = trim(row[col]);
      double value = 0.0;
      if (spec.kind == FeatureKind::Categorical) {
        auto it = std::find(spec.levels.begin(), spec.levels.end(), cell);
        if (cell.empty()) throw cell_error(col, "missing value");
        if (it == spec.levels.end()) {
          throw cell_error(col, "unknown level '" + cell + "'");
        }
        value = static_cast<double>(it - spec.levels.begin());
      } else {
        auto v = parse_double(cell);
        if (!v) {
          throw cell_error(col, cell.empty() ? std::string("missing value")
                                             : "'" + cell + "' is not a number");
        }
        if (spec.kind == FeatureKind::Indicator && *v != 0.0 && *v != 1.0) {
          throw cell_error(col, "indicator value must be 0 or 1");
        }
        value = *v;
      }
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          value;
    }
  }

  std::set<std::size_t> used(feature_cols.begin(), feature_cols.end());
  used.insert(time_idx);
  used.insert(event_idx);
  if (id_idx) used.insert(*id_idx);
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (used.count(c)) continue;
    std::vector<std::string> values;
    values.reserve(n);
    for (const auto& row : table.rows) values.push_back(trim(row[c]));
    ds.passthrough.emplace_back(table.header[c], std::move(values));
  }
  return ds;
}

FeatureSchema infer_schema(const std::filesystem::path& path,
                           const CsvOptions& opts,
                           const std::vector<std::string>& exclude) {
  const CsvTable table = read_table(path);
  table.column(opts.time_col);
  table.column(opts.event_col);
  FeatureSchema schema;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const std::string& name = table.header[c];
    if (name == opts.time_col || name == opts.event_col ||
        (opts.id_col && name == *opts.id_col) ||
        std::find(exclude.begin(), exclude.end(), name) != exclude.end()) {
      continue;
    }
    bool numeric = true;
    bool binary = true;
    for (const auto& row : table.rows) {
      auto v = parse_double(row[c]);
      if (!v) {
        numeric = false;
        break;
      }
      if (*v != 0.0 && *v != 1.0) binary = false;
    }
    FeatureSpec spec;
    spec.name = name;
    spec.kind = !numeric ? FeatureKind::Categorical
                : binary ? FeatureKind::Indicator
                         : FeatureKind::Continuous;
    spec.rule = default_rule(spec.kind);
    schema.features.push_back(std::move(spec));
  }
  return schema;
}

void write_csv(const std::filesystem::path& path, const SurvivalDataset& ds,
               const CsvOptions& opts) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorCode::InvalidArgument,
                "cannot write CSV file '" + path.string() + "'");
  }
  const std::string id_col = opts.id_col.value_or("id");
  out << csv_escape(id_col);
  for (const auto& f : ds.schema.features) out << ',' << csv_escape(f.name);
  out << ',' << csv_escape(opts.time_col) << ',' << csv_escape(opts.event_col);
  for (const auto& [name, values] : ds.passthrough) out << ',' << csv_escape(name);
  out << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    out << ds.ids[r];
    for (std::size_t k = 0; k < ds.dim(); ++k) {
      const auto& spec = ds.schema.features[k];
      const double v =
          ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
      out << ',';
      if (spec.kind == FeatureKind::Categorical) {
        out << csv_escape(spec.levels.at(static_cast<std::size_t>(v)));
      } else {
        out << fmt::format("{}", v);
      }
    }
    out << ',' << fmt::format("{}", ds.labels.times[r]) << ','
        << ds.labels.events[r];
    for (const auto& [name, values] : ds.passthrough) {
      out << ',' << csv_escape(values[r]);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

std::string to_string(SplitRole role) {
  switch (role) {
    case SplitRole::Train: return "train";
    case SplitRole::Validation: return "validation";
    case SplitRole::Anchor: return "anchor_estimation";
    case SplitRole::Visualization: return "visualization";
  }
  return "train";
}

std::array<std::size_t, 4> SplitPlan::counts() const {
  std::array<std::size_t, 4> c{};
  for (SplitRole r : roles) ++c[static_cast<std::size_t>(r)];
  return c;
}

std::vector<std::size_t> SplitPlan::rows(SplitRole role) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i] == role) out.push_back(i);
  }
  return out;
}

SplitPlan make_splits(std::size_t n, const SplitFractions& fractions,
                      std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) {
      throw Error(ErrorCode::BadFractions, "split fractions must be positive");
    }
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::BadFractions,
                fmt::format("split fractions sum to {}, not 1", total));
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  SplitPlan plan;
  plan.seed = seed;
  plan.fractions = fractions;
  plan.roles.assign(n, SplitRole::Visualization);
  double cumulative = 0.0;
  std::size_t start = 0;
  for (std::size_t s = 0; s < 4; ++s) {
    cumulative += fractions[s];
    const std::size_t stop =
        s == 3 ? n
               : std::min(n, static_cast<std::size_t>(
                                 std::llround(cumulative * static_cast<double>(n))));
    for (std::size_t i = start; i < stop; ++i) {
      plan.roles[order[i]] = static_cast<SplitRole>(s);
    }
    start = std::max(start, stop);
  }
  return plan;
}

// ---------------------------------------------------------------------------

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) {
    throw Error(ErrorCode::InvalidArgument, "quantile of an empty sample");
  }
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Discretization discretize_feature(const std::vector<double>& values,
                                  const DiscretizationRule& rule) {
  Discretization out;
  if (values.empty()) return out;

  if (rule.kind == DiscretizationRule::Kind::Identity) {
    std::vector<double> distinct(values);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    out.labels.reserve(values.size());
    for (double v : values) {
      out.labels.push_back(static_cast<int>(
          std::lower_bound(distinct.begin(), distinct.end(), v) - distinct.begin()));
    }
    for (double v : distinct) out.descriptors.push_back(format_number(v));
    return out;
  }

  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *min_it;
  const double hi = *max_it;

  std::vector<double> cuts;
  if (rule.kind == DiscretizationRule::Kind::Quartiles) {
    if (lo == hi) {
      throw Error(ErrorCode::DegenerateFeature,
                  "all values identical under the quartile rule");
    }
    for (double q : {0.25, 0.5, 0.75}) cuts.push_back(empirical_quantile(values, q));
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    // A cut at the maximum would only produce an empty top bin.
    while (!cuts.empty() && cuts.back() >= hi) cuts.pop_back();
  } else {
    cuts = rule.cut_points;
    if (!std::is_sorted(cuts.begin(), cuts.end())) {
      throw Error(ErrorCode::InvalidArgument, "cut points must be nondecreasing");
    }
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  }

  out.cut_points = cuts;
  out.labels.reserve(values.size());
  for (double v : values) {
    out.labels.push_back(static_cast<int>(
        std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin()));
  }

  const bool bounded = rule.kind == DiscretizationRule::Kind::Quartiles;
  for (std::size_t b = 0; b <= cuts.size(); ++b) {
    if (cuts.empty()) {
      out.descriptors.push_back(
          fmt::format("[{}, {}]", format_number(lo), format_number(hi)));
    } else if (b == 0) {
      out.descriptors.push_back(
          bounded ? fmt::format("[{}, {}]", format_number(lo), format_number(cuts[0]))
                  : fmt::format("<= {}", format_number(cuts[0])));
    } else if (b == cuts.size()) {
      out.descriptors.push_back(
          bounded ? fmt::format("({}, {}]", format_number(cuts[b - 1]), format_number(hi))
                  : fmt::format("> {}", format_number(cuts[b - 1])));
    } else {
      out.descriptors.push_back(fmt::format("({}, {}]", format_number(cuts[b - 1]),
                                            format_number(cuts[b])));
    }
  }
  return out;
}

Discretization discretize_feature(const std::vector<double>& values,
                                  const FeatureSpec& spec) {
  if (spec.rule.kind == DiscretizationRule::Kind::Identity) {
    if (spec.kind == FeatureKind::Categorical) {
      Discretization out;
      out.descriptors = spec.levels;
      for (double v : values) out.labels.push_back(static_cast<int>(v));
      return out;
    }
    if (spec.kind == FeatureKind::Indicator) {
      Discretization out;
      out.descriptors = {"0", "1"};
      for (double v : values) out.labels.push_back(v != 0.0 ? 1 : 0);
      return out;
    }
  }
  return discretize_feature(values, spec.rule);
}

// ---------------------------------------------------------------------------

Standardizer Standardizer::fit(const SurvivalDataset& ds,
                               const std::vector<std::size_t>& rows) {
  Standardizer s;
  const std::size_t dim = ds.dim();
  s.means.assign(dim, 0.0);
  s.scales.assign(dim, 1.0);
  if (rows.empty()) return s;
  for (std::size_t k = 0; k < dim; ++k) {
    if (ds.schema.features[k].kind != FeatureKind::Continuous) continue;
    double mean = 0.0;
    for (std::size_t r : rows) {
      mean += ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
    }
    mean /= static_cast<double>(rows.size());
    double var = 0.0;
    for (std::size_t r : rows) {
      const double d =
          ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) - mean;
      var += d * d;
    }
    var /= static_cast<double>(rows.size());
    s.means[k] = mean;
    s.scales[k] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& features) const {
  if (static_cast<std::size_t>(features.cols()) != means.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("standardizer expects {} columns, got {}",
                            means.size(), features.cols()));
  }
  Eigen::MatrixXd out = features;
  for (Eigen::Index k = 0; k < out.cols(); ++k) {
    const auto ku = static_cast<std::size_t>(k);
    out.col(k) = (out.col(k).array() - means[ku]) / scales[ku];
  }
  return out;
}

json Standardizer::to_json() const { return {{"means", means}, {"scales", scales}}; }

Standardizer Standardizer::from_json(const json& j) {
  Standardizer s;
  s.means = j.at("means").get<std::vector<double>>();
  s.scales = j.at("scales").get<std::vector<double>>();
  return s;
}

// ---------------------------------------------------------------------------

void SyntheticSpec::validate() const {
  if (class_means.empty()) {
    throw Error(ErrorCode::InvalidArgument, "synthetic spec needs at least one class");
  }
  for (double m : class_means) {
    if (!(m > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "Gamma means must be positive");
    }
  }
  if (!(time_variance > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "Gamma variance must be positive");
  }
  if (!(censor_quantile > 0.0 && censor_quantile <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "censoring quantile must lie in (0, 1]");
  }
  if (n == 0 || dim == 0) {
    throw Error(ErrorCode::InvalidArgument, "sample count and dimension must be positive");
  }
  if (!(spread >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "spread must be nonnegative");
  }
  if (!centers.empty()) {
    if (centers.size() != class_means.size()) {
      throw Error(ErrorCode::InvalidArgument, "one center per class is required");
    }
    for (const auto& c : centers) {
      if (c.size() != dim) {
        throw Error(ErrorCode::InvalidArgument, "center dimension mismatch");
      }
    }
  }
}

std::vector<std::vector<double>> default_centers(std::size_t classes,
                                                 std::size_t dim, double radius,
                                                 std::uint64_t seed) {
  std::vector<std::vector<double>> centers;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> v(dim, 0.0);
    if (c < 2 * dim) {
      v[c % dim] = c < dim ? radius : -radius;
    } else {
      double norm = 0.0;
      for (auto& x : v) {
        x = normal(rng);
        norm += x * x;
      }
      norm = std::sqrt(norm);
      for (auto& x : v) x *= radius / norm;
    }
    centers.push_back(std::move(v));
  }
  return centers;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t classes = spec.class_means.size();
  const auto centers = spec.centers.empty()
                           ? default_centers(classes, spec.dim,
                                             spec.center_radius, spec.seed)
                           : spec.centers;

  SyntheticData out;
  auto& ds = out.dataset;
  for (std::size_t k = 0; k < spec.dim; ++k) {
    FeatureSpec f;
    f.name = fmt::format("x{}", k);
    f.kind = FeatureKind::Continuous;
    f.rule = DiscretizationRule::quartiles();
    ds.schema.features.push_back(std::move(f));
  }
  ds.features.resize(static_cast<Eigen::Index>(spec.n),
                     static_cast<Eigen::Index>(spec.dim));
  ds.ids.resize(spec.n);
  out.classes.resize(spec.n);
  out.true_times.resize(spec.n);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const std::size_t c = i % classes;
    out.classes[i] = static_cast<int>(c);
    ds.ids[i] = static_cast<std::int64_t>(i);
    for (std::size_t k = 0; k < spec.dim; ++k) {
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          centers[c][k] + spec.spread * normal(rng);
    }
    const double mean = spec.class_means[c];
    // Gamma(shape, scale) with mean = shape * scale, var = shape * scale^2.
    std::gamma_distribution<double> gamma(mean * mean / spec.time_variance,
                                          spec.time_variance / mean);
    out.true_times[i] = gamma(rng);
  }

  const double lo = *std::min_element(out.true_times.begin(), out.true_times.end());
  const double hi = empirical_quantile(out.true_times, spec.censor_quantile);
  std::uniform_real_distribution<double> uniform(lo, hi);
  out.censor_times.resize(spec.n);
  ds.labels.times.resize(spec.n);
  ds.labels.events.resize(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    out.censor_times[i] = hi > lo ? uniform(rng) : lo;
    const double t = out.true_times[i];
    const double c = out.censor_times[i];
    ds.labels.times[i] = std::min(t, c);
    ds.labels.events[i] = t <= c ? 1 : 0;
  }

  std::vector<std::string> labels;
  labels.reserve(spec.n);
  for (int c : out.classes) labels.push_back(std::to_string(c));
  ds.passthrough.emplace_back("class", std::move(labels));
  return out;
}

// ---------------------------------------------------------------------------

json schema_to_json(const FeatureSchema& schema) {
  json features = json::array();
  for (const auto& f : schema.features) {
    json rule;
    switch (f.rule.kind) {
      case DiscretizationRule::Kind::Quartiles: rule = "quartiles"; break;
      case DiscretizationRule::Kind::Identity: rule = "identity"; break;
      case DiscretizationRule::Kind::CutPoints:
        rule = {{"cut_points", f.rule.cut_points}};
        break;
    }
    json entry = {{"name", f.name}, {"kind", to_string(f.kind)}, {"rule", rule}};
    if (!f.levels.empty()) entry["levels"] = f.levels;
    features.push_back(std::move(entry));
  }
  return features;
}

FeatureSchema schema_from_json(const json& j) {
  FeatureSchema schema;
  for (const auto& entry : j) {
    FeatureSpec f;
    f.name = entry.at("name").get<std::string>();
    f.kind = parse_feature_kind(entry.at("kind").get<std::string>());
    if (entry.contains("levels")) {
      f.levels = entry.at("levels").get<std::vector<std::string>>();
    }
    const auto& rule = entry.at("rule");
    if (rule.is_string()) {
      const auto name = rule.get<std::string>();
      if (name == "quartiles") f.rule = DiscretizationRule::quartiles();
      else if (name == "identity") f.rule = DiscretizationRule::identity();
      else throw Error(ErrorCode::InvalidArgument, "unknown rule '" + name + "'");
    } else {
      f.rule = DiscretizationRule::cuts(
          rule.at("cut_points").get<std::vector<double>>());
    }
    schema.features.push_back(std::move(f));
  }
  schema.validate();
  return schema;
}

json dataset_manifest(const SurvivalDataset& ds, const SplitPlan& plan) {
  const auto counts = plan.counts();
  json split_counts;
  for (std::size_t s = 0; s < 4; ++s) {
    split_counts[to_string(static_cast<SplitRole>(s))] = counts[s];
  }
  return {{"n", ds.size()},
          {"D", ds.dim()},
          {"schema", schema_to_json(ds.schema)},
          {"split_counts", split_counts},
          {"fractions", plan.fractions},
          {"seed", plan.seed}};
}

}  // namespace survanchor::data
