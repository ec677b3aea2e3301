#include "survanchor/visualize.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "survanchor/error.hpp"
#include "survanchor/svg.hpp"

namespace survanchor::visualize {
namespace {

using json = nlohmann::json;

constexpr double kPFloor = 1e-300;

std::string short_num(double v) {
  std::string s = fmt::format("{:.4g}", v);
  return s == "-0" ? "0" : s;
}

std::pair<double, double> padded_range(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 1.0};
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  double pad = 0.02 * (*hi - *lo);
  if (pad <= 0) pad = std::max(0.02 * std::abs(*lo), 0.02);
  return {*lo - pad, *hi + pad};
}

double sample_sd(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1));
}

json optional_cells(const std::vector<std::vector<std::optional<double>>>& cells) {
  json out = json::array();
  for (const auto& row : cells) {
    json r = json::array();
    for (const auto& c : row) r.push_back(c ? json(*c) : json(nullptr));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<double> ticks(double lo, double hi, std::size_t target = 6) {
  const double span = hi - lo;
  if (!(span > 0)) return {lo};
  const double raw = span / static_cast<double>(target);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) {
    out.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
  }
  return out;
}

std::string fill_for(const HeatmapSpec& spec, double v) {
  const double span = spec.vmax - spec.vmin;
  const double t = span > 0 ? (v - spec.vmin) / span : 0.5;
  return spec.color_map == ColorMap::Sequential ? svg::sequential(t).hex()
                                                : svg::diverging(2 * t - 1).hex();
}

}  // namespace

std::string to_string(ColorMap map) {
  return map == ColorMap::Sequential ? "sequential" : "diverging";
}

// ---------------------------------------------------------------------------
// HeatmapSpec

void HeatmapSpec::validate() const {
  if (row_labels.size() != cells.size()) {
    throw Error(ErrorCode::InvalidArgument, "heatmap row labels do not match the rows");
  }
  for (const auto& row : cells) {
    if (row.size() != col_labels.size()) {
      throw Error(ErrorCode::InvalidArgument, "heatmap column labels do not match the columns");
    }
    for (const auto& c : row) {
      if (c && !(*c >= vmin - 1e-12 && *c <= vmax + 1e-12)) {
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("heatmap value {} outside [{}, {}]", *c, vmin, vmax));
      }
    }
  }
}

json HeatmapSpec::to_json() const {
  return {{"title", title},
          {"x_label", x_label},
          {"y_label", y_label},
          {"cells", optional_cells(cells)},
          {"row_labels", row_labels},
          {"col_labels", col_labels},
          {"color_map", to_string(color_map)},
          {"vmin", vmin},
          {"vmax", vmax},
          {"row_separators", row_separators},
          {"rows_bottom_up", rows_bottom_up}};
}

HeatmapSpec HeatmapSpec::from_json(const json& j) {
  HeatmapSpec s;
  s.title = j.at("title").get<std::string>();
  s.x_label = j.value("x_label", "");
  s.y_label = j.value("y_label", "");
  for (const auto& row : j.at("cells")) {
    std::vector<std::optional<double>> r;
    for (const auto& c : row) {
      r.push_back(c.is_null() ? std::nullopt : std::optional<double>(c.get<double>()));
    }
    s.cells.push_back(std::move(r));
  }
  s.row_labels = j.at("row_labels").get<std::vector<std::string>>();
  s.col_labels = j.at("col_labels").get<std::vector<std::string>>();
  s.color_map = j.at("color_map").get<std::string>() == "diverging" ? ColorMap::Diverging
                                                                    : ColorMap::Sequential;
  s.vmin = j.at("vmin").get<double>();
  s.vmax = j.at("vmax").get<double>();
  s.row_separators = j.value("row_separators", std::vector<std::size_t>{});
  s.rows_bottom_up = j.value("rows_bottom_up", false);
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Violin

json ViolinSpec::to_json() const {
  json series_json = json::array();
  for (const auto& s : series) {
    series_json.push_back({{"k", s.k},
                           {"log10_p", s.log10_p},
                           {"grid", s.grid},
                           {"density", s.density},
                           {"bandwidth", s.bandwidth},
                           {"point_marker", s.point_marker}});
  }
  return {{"title", title},
          {"threshold", threshold},
          {"knee", knee ? json(*knee) : json(nullptr)},
          {"series", std::move(series_json)}};
}

ViolinSpec ViolinSpec::from_json(const json& j) {
  ViolinSpec v;
  v.title = j.at("title").get<std::string>();
  v.threshold = j.at("threshold").get<double>();
  if (!j.at("knee").is_null()) v.knee = j.at("knee").get<std::size_t>();
  for (const auto& s : j.at("series")) {
    ViolinSeries vs;
    vs.k = s.at("k").get<std::size_t>();
    vs.log10_p = s.at("log10_p").get<std::vector<double>>();
    vs.grid = s.at("grid").get<std::vector<double>>();
    vs.density = s.at("density").get<std::vector<double>>();
    vs.bandwidth = s.at("bandwidth").get<double>();
    vs.point_marker = s.at("point_marker").get<bool>();
    v.series.push_back(std::move(vs));
  }
  return v;
}

ViolinSpec violin_data(const clusterlib::KSelectionReport& report, std::size_t grid_points) {
  ViolinSpec spec;
  spec.title = "pairwise log-rank p-values by number of clusters";
  spec.knee = report.knee;
  grid_points = std::max<std::size_t>(grid_points, 2);
  for (const auto& entry : report.entries) {
    ViolinSeries s;
    s.k = entry.k;
    for (double p : entry.p_values) s.log10_p.push_back(std::log10(std::max(p, kPFloor)));
    const std::size_t n = s.log10_p.size();
    const double sd = n >= 2 ? sample_sd(s.log10_p) : 0.0;
    if (n < 2 || !(sd > 0)) {
      s.point_marker = true;
      spec.series.push_back(std::move(s));
      continue;
    }
    const double iqr = data::empirical_quantile(s.log10_p, 0.75) -
                       data::empirical_quantile(s.log10_p, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0)) spread = sd;
    s.bandwidth = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
    const auto [lo, hi] = std::minmax_element(s.log10_p.begin(), s.log10_p.end());
    const double g0 = *lo - 3 * s.bandwidth;
    const double g1 = *hi + 3 * s.bandwidth;
    const double norm = 1.0 / (static_cast<double>(n) * s.bandwidth * std::sqrt(2 * M_PI));
    for (std::size_t g = 0; g < grid_points; ++g) {
      const double t = g0 + (g1 - g0) * static_cast<double>(g) /
                                static_cast<double>(grid_points - 1);
      double d = 0.0;
      for (double v : s.log10_p) {
        const double u = (t - v) / s.bandwidth;
        d += std::exp(-0.5 * u * u);
      }
      s.grid.push_back(t);
      s.density.push_back(d * norm);
    }
    spec.series.push_back(std::move(s));
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Heatmaps

HeatmapSpec raw_feature_heatmap(const anchors::ProjectionBinning& binning,
                                const data::FeatureSchema& schema,
                                const Eigen::MatrixXd& features, const std::string& title) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (binning.bin_of_row.size() != n) {
    throw Error(ErrorCode::LengthMismatch, "binning is not row-aligned with features");
  }
  if (static_cast<std::size_t>(features.cols()) != schema.size()) {
    throw Error(ErrorCode::DimensionMismatch, "feature matrix does not match the schema");
  }
  HeatmapSpec spec;
  spec.title = title;
  spec.x_label = "projection bin midpoint";
  spec.y_label = "feature value";
  for (const auto& bin : binning.bins) spec.col_labels.push_back(bin.midpoint_label());

  for (std::size_t f = 0; f < schema.size(); ++f) {
    const auto& fs = schema.features[f];
    std::vector<double> column(n);
    for (std::size_t i = 0; i < n; ++i) column[i] = features(static_cast<Eigen::Index>(i), f);
    const auto disc = data::discretize_feature(column, fs);
    if (f > 0) spec.row_separators.push_back(spec.cells.size());
    const std::size_t levels = disc.descriptors.size();
    std::vector<std::vector<std::size_t>> counts(levels,
                                                 std::vector<std::size_t>(binning.bin_count()));
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[static_cast<std::size_t>(disc.labels[i])]
              [static_cast<std::size_t>(binning.bin_of_row[i])];
    }
    for (std::size_t l = 0; l < levels; ++l) {
      std::vector<std::optional<double>> row;
      for (std::size_t j = 0; j < binning.bin_count(); ++j) {
        const std::size_t size = binning.bins[j].members.size();
        if (size == 0) {
          row.emplace_back(std::nullopt);
        } else {
          row.emplace_back(static_cast<double>(counts[l][j]) / static_cast<double>(size));
        }
      }
      spec.cells.push_back(std::move(row));
      spec.row_labels.push_back(fs.name + ": " + disc.descriptors[l]);
    }
  }
  spec.validate();
  return spec;
}

HeatmapSpec survival_heatmap(const std::vector<std::optional<survstats::SurvivalCurve>>& bin_curves,
                             const anchors::ProjectionBinning& binning, double t_min,
                             double t_max, std::size_t points, const std::string& title) {
  if (bin_curves.size() != binning.bin_count()) {
    throw Error(ErrorCode::LengthMismatch, "one curve slot per projection bin is required");
  }
  if (points == 0 || !(t_max >= t_min)) {
    throw Error(ErrorCode::InvalidArgument, "invalid display time grid");
  }
  const std::vector<double>* grid = nullptr;
  for (const auto& c : bin_curves) {
    if (!c) continue;
    if (grid && c->grid != *grid) {
      throw Error(ErrorCode::GridMismatch, "bin curves do not share a time grid");
    }
    grid = &c->grid;
  }
  HeatmapSpec spec;
  spec.title = title;
  spec.x_label = "projection bin midpoint";
  spec.y_label = "time";
  spec.rows_bottom_up = true;
  for (const auto& bin : binning.bins) spec.col_labels.push_back(bin.midpoint_label());
  for (std::size_t i = 0; i < points; ++i) {
    const double t = points == 1 ? t_min
                                 : t_min + (t_max - t_min) * static_cast<double>(i) /
                                               static_cast<double>(points - 1);
    std::vector<std::optional<double>> row;
    for (const auto& c : bin_curves) {
      row.emplace_back(c ? std::optional<double>(c->at(t)) : std::nullopt);
    }
    spec.cells.push_back(std::move(row));
    spec.row_labels.push_back(short_num(t));
  }
  spec.validate();
  return spec;
}

HeatmapSpec average_projection_heatmap(const std::vector<std::string>& group_labels,
                                       const std::vector<std::vector<double>>& projections,
                                       const std::vector<std::string>& anchor_names,
                                       const std::vector<std::string>& group_order) {
  if (projections.empty()) {
    throw Error(ErrorCode::InvalidArgument, "average projection heatmap needs an anchor");
  }
  if (anchor_names.size() != projections.size()) {
    throw Error(ErrorCode::LengthMismatch, "one name per anchor is required");
  }
  for (const auto& p : projections) {
    if (p.size() != group_labels.size()) {
      throw Error(ErrorCode::LengthMismatch, "projections are not row-aligned with groups");
    }
  }
  std::vector<std::string> groups = group_order;
  if (groups.empty()) {
    const std::set<std::string> distinct(group_labels.begin(), group_labels.end());
    groups.assign(distinct.begin(), distinct.end());
  }
  HeatmapSpec spec;
  spec.title = "average projection heatmap";
  spec.x_label = "anchor";
  spec.y_label = "group";
  spec.color_map = ColorMap::Diverging;
  spec.vmin = -1.0;
  spec.vmax = 1.0;
  spec.col_labels = anchor_names;
  for (const auto& g : groups) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < group_labels.size(); ++i) {
      if (group_labels[i] == g) rows.push_back(i);
    }
    if (rows.empty()) throw Error(ErrorCode::EmptyGroup, "group '" + g + "' has no rows");
    std::vector<std::optional<double>> row;
    for (const auto& p : projections) {
      double sum = 0.0;
      for (std::size_t r : rows) sum += p[r];
      row.emplace_back(std::clamp(sum / static_cast<double>(rows.size()), -1.0, 1.0));
    }
    spec.cells.push_back(std::move(row));
    spec.row_labels.push_back(g);
  }
  spec.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Scatter

json ScatterSpec::to_json() const {
  json med = json::array();
  for (const auto& [x0, y0] : running_median) med.push_back({x0, y0});
  return {{"title", title},
          {"x_label", x_label},
          {"y_label", y_label},
          {"x", x},
          {"y", y},
          {"color", color},
          {"x_range", {x_range.first, x_range.second}},
          {"y_range", {y_range.first, y_range.second}},
          {"running_median", std::move(med)}};
}

ScatterSpec ScatterSpec::from_json(const json& j) {
  ScatterSpec s;
  s.title = j.at("title").get<std::string>();
  s.x_label = j.at("x_label").get<std::string>();
  s.y_label = j.at("y_label").get<std::string>();
  s.x = j.at("x").get<std::vector<double>>();
  s.y = j.at("y").get<std::vector<double>>();
  s.color = j.value("color", std::vector<double>{});
  s.x_range = {j.at("x_range").at(0).get<double>(), j.at("x_range").at(1).get<double>()};
  s.y_range = {j.at("y_range").at(0).get<double>(), j.at("y_range").at(1).get<double>()};
  for (const auto& p : j.at("running_median")) {
    s.running_median.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  }
  return s;
}

std::vector<std::pair<double, double>> running_median(const std::vector<double>& x,
                                                      const std::vector<double>& y,
                                                      std::size_t window) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "running median: x vs y");
  const std::size_t n = x.size();
  std::vector<std::pair<double, double>> out;
  if (n == 0) return out;
  window = std::clamp<std::size_t>(window, 1, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> buf;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = i >= window / 2 ? i - window / 2 : 0;
    lo = std::min(lo, n - window);
    buf.clear();
    for (std::size_t k = lo; k < lo + window; ++k) buf.push_back(y[order[k]]);
    std::sort(buf.begin(), buf.end());
    const std::size_t m = buf.size();
    const double med = m % 2 ? buf[m / 2] : 0.5 * (buf[m / 2 - 1] + buf[m / 2]);
    out.emplace_back(x[order[i]], med);
  }
  return out;
}

ScatterSpec scatter_feature_vs_projection(const std::vector<double>& feature,
                                          const std::vector<double>& projections,
                                          const std::string& feature_name,
                                          const std::string& anchor_name, bool with_median) {
  if (feature.size() != projections.size()) {
    throw Error(ErrorCode::LengthMismatch, "feature and projections differ in length");
  }
  ScatterSpec s;
  s.title = feature_name + " vs projection onto " + anchor_name;
  s.x_label = "projection onto " + anchor_name;
  s.y_label = feature_name;
  s.x = projections;
  s.y = feature;
  s.x_range = padded_range(s.x);
  s.y_range = padded_range(s.y);
  if (with_median && !feature.empty()) {
    s.running_median = running_median(s.x, s.y, std::max<std::size_t>(1, feature.size() / 10));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Sample table

json BinSampleTable::to_json() const {
  return {{"bin_labels", bin_labels}, {"samples", samples}};
}

BinSampleTable bin_sample_table(const anchors::ProjectionBinning& binning,
                                const std::vector<std::int64_t>& ids, std::size_t sample_size,
                                std::uint64_t seed) {
  if (sample_size < 1) throw Error(ErrorCode::InvalidArgument, "sample size must be >= 1");
  if (ids.size() != binning.bin_of_row.size()) {
    throw Error(ErrorCode::LengthMismatch, "ids are not row-aligned with the binning");
  }
  std::mt19937_64 rng(seed);
  BinSampleTable table;
  for (const auto& bin : binning.bins) {
    table.bin_labels.push_back(bin.interval_label());
    std::vector<std::int64_t> pool;
    for (std::size_t r : bin.members) pool.push_back(ids[r]);
    const std::size_t take = std::min(sample_size, pool.size());
    for (std::size_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(take);
    std::sort(pool.begin(), pool.end());
    table.samples.push_back(std::move(pool));
  }
  return table;
}

// ---------------------------------------------------------------------------
// PCA

PcaResult principal_components(const Eigen::MatrixXd& data, double tol, std::size_t max_iter) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n < 3 || d < 2) {
    throw Error(ErrorCode::InvalidArgument, "PCA needs at least 3 rows and 2 columns");
  }
  const Eigen::MatrixXd centered = data.rowwise() - data.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  const double scale = std::max(cov.trace(), std::numeric_limits<double>::min());

  std::vector<Eigen::VectorXd> axes;
  std::vector<double> variances;
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  auto orthogonalize = [&](Eigen::VectorXd& v) {
    for (const auto& a : axes) v -= a.dot(v) * a;
  };
  for (int r = 0; r < 2; ++r) {
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = normal(rng);
    orthogonalize(v);
    v.normalize();
    bool zero = false;
    for (std::size_t it = 0; it < max_iter; ++it) {
      Eigen::VectorXd w = cov * v;
      orthogonalize(w);
      const double norm = w.norm();
      if (norm <= 1e-12 * scale) {
        zero = true;
        break;
      }
      w /= norm;
      const double change = (w - v).norm();
      v = w;
      if (change < tol) break;
    }
    const double lambda = v.dot(cov * v);
    if (zero || lambda <= 1e-12 * scale) break;
    axes.push_back(v);
    variances.push_back(lambda);
  }
  if (axes.empty()) {
    throw Error(ErrorCode::RankDeficient, "data has no direction of nonzero variance");
  }
  if (axes.size() == 2) {
    axes[1] -= axes[0].dot(axes[1]) * axes[0];
    axes[1].normalize();
  }
  PcaResult res;
  res.rank_deficient = axes.size() < 2;
  res.axes.resize(d, static_cast<Eigen::Index>(axes.size()));
  for (std::size_t r = 0; r < axes.size(); ++r) res.axes.col(static_cast<Eigen::Index>(r)) = axes[r];
  res.variances = variances;
  res.coords = centered * res.axes;
  return res;
}

ScatterSpec pca_scatter(const Eigen::MatrixXd& embeddings, const std::vector<double>& color,
                        const std::string& title) {
  if (!color.empty() && color.size() != static_cast<std::size_t>(embeddings.rows())) {
    throw Error(ErrorCode::LengthMismatch, "one color value per embedding is required");
  }
  const PcaResult pca = principal_components(embeddings);
  ScatterSpec s;
  s.title = pca.rank_deficient ? title + " (1D fallback)" : title;
  s.x_label = fmt::format("PC1 (variance {})", short_num(pca.variances[0]));
  s.y_label = pca.rank_deficient ? "0" : fmt::format("PC2 (variance {})", short_num(pca.variances[1]));
  for (Eigen::Index i = 0; i < pca.coords.rows(); ++i) {
    s.x.push_back(pca.coords(i, 0));
    s.y.push_back(pca.rank_deficient ? 0.0 : pca.coords(i, 1));
  }
  s.color = color;
  s.x_range = padded_range(s.x);
  s.y_range = padded_range(s.y);
  return s;
}

// ---------------------------------------------------------------------------
// Rendering

std::string render_heatmap(const HeatmapSpec& spec) {
  const std::size_t rows = spec.rows();
  const std::size_t cols = spec.cols();
  std::size_t longest = 0;
  for (const auto& l : spec.row_labels) longest = std::max(longest, l.size());
  const double left = 40.0 + std::min(260.0, 6.0 * static_cast<double>(longest));
  const double top = 40.0;
  const double cell_w = std::clamp(560.0 / std::max<std::size_t>(cols, 1), 24.0, 60.0);
  const double cell_h = rows > 30 ? std::max(6.0, 500.0 / static_cast<double>(rows)) : 18.0;
  const double plot_w = cell_w * static_cast<double>(cols);
  const double plot_h = cell_h * static_cast<double>(rows);
  svg::Document doc(left + plot_w + 110.0, top + plot_h + 70.0);
  doc.text(left + plot_w / 2, 22, spec.title, 14, "middle");

  const std::size_t label_step = rows > 25 ? (rows + 11) / 12 : 1;
  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t slot = spec.rows_bottom_up ? rows - 1 - i : i;
    const double y = top + cell_h * static_cast<double>(slot);
    for (std::size_t j = 0; j < cols; ++j) {
      const auto& c = spec.cells[i][j];
      doc.rect(left + cell_w * static_cast<double>(j), y, cell_w, cell_h,
               c ? fill_for(spec, *c) : std::string(svg::kEmptyFill));
    }
    if (i % label_step == 0) {
      doc.text(left - 4, y + cell_h / 2 + 3.5, spec.row_labels[i], 10, "end");
    }
  }
  for (std::size_t sep : spec.row_separators) {
    const std::size_t slot = spec.rows_bottom_up ? rows - sep : sep;
    const double y = top + cell_h * static_cast<double>(slot);
    doc.line(left, y, left + plot_w, y, "#000000", 1.5);
  }
  for (std::size_t j = 0; j < cols; ++j) {
    doc.text(left + cell_w * (static_cast<double>(j) + 0.5), top + plot_h + 14,
             spec.col_labels[j], 10, "middle");
  }
  doc.text(left + plot_w / 2, top + plot_h + 34, spec.x_label, 11, "middle");
  doc.text(14, top + plot_h / 2, spec.y_label, 11, "middle", -90);

  const double bar_x = left + plot_w + 24;
  const int steps = 40;
  for (int s = 0; s < steps; ++s) {
    const double v = spec.vmax - (spec.vmax - spec.vmin) * (s + 0.5) / steps;
    doc.rect(bar_x, top + plot_h * s / steps, 14, plot_h / steps + 0.5, fill_for(spec, v));
  }
  doc.text(bar_x + 18, top + 8, short_num(spec.vmax), 10);
  doc.text(bar_x + 18, top + plot_h, short_num(spec.vmin), 10);
  return doc.str();
}

std::string render_violin(const ViolinSpec& spec) {
  const double left = 70, top = 40, slot = 80, plot_h = 360;
  const double plot_w = slot * static_cast<double>(std::max<std::size_t>(spec.series.size(), 1));
  double ymin = std::log10(spec.threshold) - 1;
  for (const auto& s : spec.series) {
    for (double v : s.log10_p) ymin = std::min(ymin, v);
    for (double v : s.grid) ymin = std::min(ymin, v);
  }
  ymin = std::floor(ymin);
  const double ymax = 0.5;
  auto ypos = [&](double v) {
    return top + plot_h * (ymax - std::clamp(v, ymin, ymax)) / (ymax - ymin);
  };
  svg::Document doc(left + plot_w + 30, top + plot_h + 60);
  doc.text(left + plot_w / 2, 22, spec.title, 14, "middle");
  doc.line(left, top, left, top + plot_h, "#000000");
  doc.line(left, top + plot_h, left + plot_w, top + plot_h, "#000000");
  for (double t : ticks(ymin, 0.0)) {
    doc.line(left - 4, ypos(t), left, ypos(t), "#000000");
    doc.text(left - 6, ypos(t) + 3.5, short_num(t), 10, "end");
  }
  doc.text(18, top + plot_h / 2, "log10 p", 11, "middle", -90);
  const double thr = std::log10(spec.threshold);
  doc.line(left, ypos(thr), left + plot_w, ypos(thr), "#b40426", 1.0, true);

  for (std::size_t i = 0; i < spec.series.size(); ++i) {
    const auto& s = spec.series[i];
    const double cx = left + slot * (static_cast<double>(i) + 0.5);
    const bool knee = spec.knee && *spec.knee == s.k;
    doc.text(cx, top + plot_h + 16, fmt::format("k={}", s.k), 11, "middle");
    if (knee) doc.text(cx, top + plot_h + 30, "knee", 10, "middle");
    if (!s.point_marker && !s.density.empty()) {
      const double dmax = *std::max_element(s.density.begin(), s.density.end());
      std::vector<std::pair<double, double>> outline;
      for (std::size_t g = 0; g < s.grid.size(); ++g) {
        outline.emplace_back(cx + 0.4 * slot * s.density[g] / dmax, ypos(s.grid[g]));
      }
      for (std::size_t g = s.grid.size(); g-- > 0;) {
        outline.emplace_back(cx - 0.4 * slot * s.density[g] / dmax, ypos(s.grid[g]));
      }
      doc.path(outline, "#3b528b", "#9ecae1", 1.0, true);
    }
    for (std::size_t p = 0; p < s.log10_p.size(); ++p) {
      const double jitter = s.point_marker ? 0.0 : 3.0 * (static_cast<double>(p % 5) - 2.0);
      doc.circle(cx + jitter, ypos(s.log10_p[p]), s.point_marker ? 3.5 : 1.8, "#222222", 0.8);
    }
  }
  return doc.str();
}

std::string render_scatter(const ScatterSpec& spec) {
  const double left = 70, top = 40, plot_w = 520, plot_h = 380;
  auto xpos = [&](double v) {
    return left + plot_w * (v - spec.x_range.first) / (spec.x_range.second - spec.x_range.first);
  };
  auto ypos = [&](double v) {
    return top + plot_h * (spec.y_range.second - v) / (spec.y_range.second - spec.y_range.first);
  };
  svg::Document doc(left + plot_w + 30, top + plot_h + 60);
  doc.text(left + plot_w / 2, 22, spec.title, 14, "middle");
  doc.rect(left, top, plot_w, plot_h, "none", "#000000", 1.0);
  for (double t : ticks(spec.x_range.first, spec.x_range.second)) {
    doc.line(xpos(t), top + plot_h, xpos(t), top + plot_h + 4, "#000000");
    doc.text(xpos(t), top + plot_h + 16, short_num(t), 10, "middle");
  }
  for (double t : ticks(spec.y_range.first, spec.y_range.second)) {
    doc.line(left - 4, ypos(t), left, ypos(t), "#000000");
    doc.text(left - 6, ypos(t) + 3.5, short_num(t), 10, "end");
  }
  doc.text(left + plot_w / 2, top + plot_h + 36, spec.x_label, 11, "middle");
  doc.text(16, top + plot_h / 2, spec.y_label, 11, "middle", -90);

  double cmin = 0, cmax = 1;
  if (!spec.color.empty()) {
    const auto [lo, hi] = std::minmax_element(spec.color.begin(), spec.color.end());
    cmin = *lo;
    cmax = *hi;
  }
  for (std::size_t i = 0; i < spec.x.size(); ++i) {
    std::string fill = "#4682b4";
    if (!spec.color.empty()) {
      fill = svg::sequential(cmax > cmin ? (spec.color[i] - cmin) / (cmax - cmin) : 0.5).hex();
    }
    doc.circle(xpos(spec.x[i]), ypos(spec.y[i]), 2.0, fill, 0.6);
  }
  if (!spec.running_median.empty()) {
    std::vector<std::pair<double, double>> line;
    for (const auto& [x, y] : spec.running_median) line.emplace_back(xpos(x), ypos(y));
    doc.path(line, "#b40426", "none", 1.5);
  }
  return doc.str();
}

std::string render_table(const json& table) {
  const auto columns = table.at("columns").get<std::vector<std::string>>();
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : table.at("rows")) {
    std::vector<std::string> r;
    for (const auto& v : row) {
      if (v.is_string()) r.push_back(v.get<std::string>());
      else if (v.is_number_integer()) r.push_back(std::to_string(v.get<long long>()));
      else if (v.is_number()) r.push_back(short_num(v.get<double>()));
      else if (v.is_null()) r.push_back("");
      else r.push_back(v.dump());
    }
    cells.push_back(std::move(r));
  }
  std::vector<double> widths(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    std::size_t w = columns[c].size();
    for (const auto& r : cells) if (c < r.size()) w = std::max(w, r[c].size());
    widths[c] = 16.0 + 6.6 * static_cast<double>(w);
  }
  const double total_w = std::accumulate(widths.begin(), widths.end(), 0.0);
  const double row_h = 18, top = 40, left = 20;
  svg::Document doc(left * 2 + std::max(total_w, 200.0),
                    top + row_h * static_cast<double>(cells.size() + 1) + 20);
  doc.text(left, 22, table.value("title", ""), 14);
  double x = left;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    doc.text(x + 4, top + 13, columns[c], 11);
    x += widths[c];
  }
  doc.line(left, top + row_h, left + total_w, top + row_h, "#000000");
  for (std::size_t r = 0; r < cells.size(); ++r) {
    x = left;
    const double y = top + row_h * static_cast<double>(r + 1);
    for (std::size_t c = 0; c < cells[r].size() && c < columns.size(); ++c) {
      doc.text(x + 4, y + 13, cells[r][c], 10.5);
      x += widths[c];
    }
  }
  return doc.str();
}

std::string render_figure(const json& figure) {
  const auto kind = figure.at("kind").get<std::string>();
  const json& d = figure.at("data");
  if (kind == "heatmap") return render_heatmap(HeatmapSpec::from_json(d));
  if (kind == "violin") return render_violin(ViolinSpec::from_json(d));
  if (kind == "scatter") return render_scatter(ScatterSpec::from_json(d));
  if (kind == "table") return render_table(d);
  throw Error(ErrorCode::InvalidArgument, "unknown figure kind '" + kind + "'");
}

json make_figure(const std::string& kind, json data) {
  return {{"version", kFigureVersion}, {"kind", kind}, {"data", std::move(data)}};
}

void write_figure(const std::filesystem::path& dir, const std::string& name,
                  const json& figure) {
  std::filesystem::create_directories(dir);
  const std::string svg_text = render_figure(figure);
  {
    std::ofstream out(dir / (name + ".json"), std::ios::binary);
    out << figure.dump(1) << '\n';
  }
  std::ofstream out(dir / (name + ".svg"), std::ios::binary);
  out << svg_text;
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write figure " + name);
}

std::size_t render_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::size_t count = 0;
  for (const auto& path : files) {
    std::ifstream in(path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("kind") || !j.contains("version") ||
        !j.contains("data")) {
      continue;
    }
    std::ofstream out(std::filesystem::path(path).replace_extension(".svg"), std::ios::binary);
    out << render_figure(j);
    ++count;
  }
  return count;
}

json ranking_table(const assoc::FeatureRanking& ranking) {
  json rows = json::array();
  for (const auto& s : ranking.scores) {
    rows.push_back({s.rank, s.feature, assoc::to_string(s.test), s.statistic,
                    fmt::format("{:.3e}", s.p)});
  }
  return {{"title", fmt::format("feature ranking for {} ({})", ranking.anchor,
                                assoc::to_string(ranking.test))},
          {"columns", {"rank", "feature", "test", "statistic", "p"}},
          {"rows", std::move(rows)}};
}

json anchor_rank_table(const std::vector<anchors::AnchorRank>& ranks) {
  json rows = json::array();
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    const auto& r = ranks[i];
    rows.push_back({i + 1, r.name, r.threshold, r.top_rows.size(),
                    r.median.beyond_max_time ? json("beyond max time") : json(r.median.time)});
  }
  return {{"title", "anchor directions by median survival of the top projections"},
          {"columns", {"rank", "anchor", "threshold", "top rows", "median survival"}},
          {"rows", std::move(rows)}};
}

json sample_table(const BinSampleTable& table, const std::string& title) {
  json rows = json::array();
  for (std::size_t j = 0; j < table.bin_labels.size(); ++j) {
    std::string ids;
    for (auto id : table.samples[j]) ids += (ids.empty() ? "" : " ") + std::to_string(id);
    rows.push_back({table.bin_labels[j], table.samples[j].size(), ids});
  }
  return {{"title", title}, {"columns", {"bin", "sampled", "ids"}}, {"rows", std::move(rows)}};
}

HeatmapCheck check_raw_feature_heatmap(const HeatmapSpec& spec, double tol) {
  HeatmapCheck check;
  std::vector<std::size_t> bounds{0};
  bounds.insert(bounds.end(), spec.row_separators.begin(), spec.row_separators.end());
  bounds.push_back(spec.rows());
  for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
    for (std::size_t j = 0; j < spec.cols(); ++j) {
      std::size_t present = 0;
      double sum = 0.0;
      for (std::size_t i = bounds[b]; i < bounds[b + 1]; ++i) {
        if (spec.cells[i][j]) {
          ++present;
          sum += *spec.cells[i][j];
        }
      }
      if (present == 0) continue;
      const double err = std::abs(sum - 1.0);
      check.worst = std::max(check.worst, err);
      if (present != bounds[b + 1] - bounds[b] || err > tol) {
        check.ok = false;
        check.detail = fmt::format("block {} column {} sums to {}", b, j, sum);
      }
    }
  }
  return check;
}

HeatmapCheck check_survival_heatmap(const HeatmapSpec& spec) {
  HeatmapCheck check;
  for (std::size_t j = 0; j < spec.cols(); ++j) {
    for (std::size_t i = 1; i < spec.rows(); ++i) {
      const auto& prev = spec.cells[i - 1][j];
      const auto& cur = spec.cells[i][j];
      if (!prev || !cur) continue;
      const double rise = *cur - *prev;
      check.worst = std::max(check.worst, rise);
      if (rise > 0) {
        check.ok = false;
        check.detail = fmt::format("column {} rises by {} at row {}", j, rise, i);
      }
    }
  }
  return check;
}

}  // namespace survanchor::visualize
