#include "survanchor/cli/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "survanchor/anchors.hpp"
#include "survanchor/assoc.hpp"
#include "survanchor/bundle.hpp"
#include "survanchor/clusterlib.hpp"
#include "survanchor/coxnet.hpp"
#include "survanchor/data.hpp"
#include "survanchor/error.hpp"
#include "survanchor/survstats.hpp"
#include "survanchor/visualize.hpp"

namespace survanchor::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr int kModelFileVersion = 1;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(1) + "\n"); }

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingColumn, "missing stage artifact " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedBundle, path.string() + ": " + e.what());
  }
}

void require_file(const fs::path& path, const std::string& hint) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("{} not found; run `{}` first", path.string(), hint));
  }
}

std::vector<std::string> list_outputs(const fs::path& dir) {
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "run.json") {
      files.push_back(e.path().filename().generic_string());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

void write_run_record(const fs::path& dir, const std::string& stage, const RunConfig& cfg,
                      const StageResult& result) {
  json record = {{"stage", stage},
                 {"version", kVersion},
                 {"config_hash", cfg.hash()},
                 {"config", cfg.to_json()},
                 {"seeds",
                  {{"synthetic", cfg.synthetic.seed},
                   {"split", cfg.split_seed},
                   {"train", cfg.train.seed},
                   {"cluster", cfg.cluster.seed}}},
                 {"summary", result.summary},
                 {"warnings", result.warnings},
                 {"partial", result.partial},
                 {"outputs", list_outputs(dir)}};
  write_json(dir / "run.json", record);
}

data::CsvOptions row_csv_options(const data::CsvOptions& base) {
  data::CsvOptions o = base;
  if (!o.id_col) o.id_col = "id";
  return o;
}

json csv_options_to_json(const data::CsvOptions& o) {
  return {{"time_col", o.time_col},
          {"event_col", o.event_col},
          {"id_col", o.id_col ? json(*o.id_col) : json(nullptr)}};
}

data::CsvOptions csv_options_from_json(const json& j) {
  data::CsvOptions o;
  o.time_col = j.at("time_col").get<std::string>();
  o.event_col = j.at("event_col").get<std::string>();
  if (!j.at("id_col").is_null()) o.id_col = j.at("id_col").get<std::string>();
  return o;
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

std::vector<std::int64_t> ids_of(const data::SurvivalDataset& ds,
                                 const std::vector<std::size_t>& rows) {
  std::vector<std::int64_t> out;
  for (std::size_t r : rows) out.push_back(ds.ids[r]);
  return out;
}

void check_aligned(const EmbeddingBundle& bundle, const data::SurvivalDataset& rows,
                   const std::string& what) {
  if (bundle.ids != rows.ids) {
    throw Error(ErrorCode::InconsistentRowCount,
                what + " rows are not aligned with their embedding bundle");
  }
}

bool row_matches(const data::SurvivalDataset& ds, std::size_t row, const ConceptFilter& f) {
  if (auto idx = ds.schema.index_of(f.column)) {
    const auto& spec = ds.schema.features[*idx];
    const double v = ds.features(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(*idx));
    if (spec.kind == data::FeatureKind::Categorical) {
      return spec.levels.at(static_cast<std::size_t>(v)) == f.value;
    }
    double target = 0.0;
    std::istringstream in(f.value);
    if (!(in >> target)) {
      throw Error(ErrorCode::InvalidArgument,
                  "concept value '" + f.value + "' is not numeric for feature " + f.column);
    }
    return v == target;
  }
  if (const auto* col = ds.passthrough_column(f.column)) return (*col)[row] == f.value;
  throw Error(ErrorCode::MissingColumn, "concept column '" + f.column + "' does not exist");
}

}  // namespace

std::string slug(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) != 0;
    if (keep) out += c;
    else if (!out.empty() && out.back() != '_') out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "anchor" : out;
}

fs::path synth_dir(const RunConfig& cfg) { return cfg.out / "synth"; }
fs::path train_dir(const RunConfig& cfg) { return cfg.out / "train"; }
fs::path analyze_dir(const RunConfig& cfg) { return cfg.out / "analyze"; }

int exit_code_for(const std::exception& e) noexcept {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->category()) {
      case ErrorCategory::Config: return 2;
      case ErrorCategory::Data: return 3;
      case ErrorCategory::Numerical: return 4;
    }
  }
  return 3;
}

// ---------------------------------------------------------------------------

StageResult run_synth(const RunConfig& cfg) {
  cfg.validate();
  StageResult result;
  result.dir = synth_dir(cfg);
  fs::create_directories(result.dir);

  const auto syn = data::generate_synthetic(cfg.synthetic);
  const data::CsvOptions opts = row_csv_options({});
  data::write_csv(result.dir / "data.csv", syn.dataset, opts);

  json schema = data::schema_to_json(syn.dataset.schema);
  write_json(result.dir / "schema.json", schema);

  std::string truth = "id,class,true_time,censor_time\n";
  std::size_t censored = 0;
  for (std::size_t i = 0; i < syn.classes.size(); ++i) {
    truth += fmt::format("{},{},{},{}\n", syn.dataset.ids[i], syn.classes[i], syn.true_times[i],
                         syn.censor_times[i]);
    censored += syn.dataset.labels.events[i] == 0;
  }
  write_text(result.dir / "true_labels.csv", truth);

  const double censoring_rate =
      static_cast<double>(censored) / static_cast<double>(syn.classes.size());
  result.summary = {{"n", syn.dataset.size()},
                    {"D", syn.dataset.dim()},
                    {"classes", cfg.synthetic.class_means.size()},
                    {"class_means", cfg.synthetic.class_means},
                    {"censoring_rate", censoring_rate},
                    {"seed", cfg.synthetic.seed}};
  write_json(result.dir / "manifest.json", result.summary);
  write_run_record(result.dir, "synth", cfg, result);
  return result;
}

// ---------------------------------------------------------------------------

StageResult run_train(const RunConfig& cfg) {
  cfg.validate();
  StageResult result;
  result.dir = train_dir(cfg);

  fs::path csv_path;
  data::CsvOptions opts = cfg.data.csv_options;
  data::FeatureSchema schema;
  if (cfg.data.csv) {
    csv_path = *cfg.data.csv;
    schema = cfg.data.schema ? data::schema_from_json(read_json(*cfg.data.schema))
                             : data::infer_schema(csv_path, opts, cfg.data.exclude);
  } else {
    csv_path = synth_dir(cfg) / "data.csv";
    require_file(csv_path, "survanchor synth");
    opts = row_csv_options({});
    schema = data::schema_from_json(read_json(synth_dir(cfg) / "schema.json"));
  }
  const data::SurvivalDataset ds = data::load_csv(csv_path, schema, opts);
  if (ds.size() < 8) throw Error(ErrorCode::InvalidArgument, "dataset has fewer than 8 rows");
  fs::create_directories(result.dir);

  const auto plan = data::make_splits(ds.size(), cfg.fractions, cfg.split_seed);
  const auto train_rows = plan.rows(data::SplitRole::Train);
  const auto val_rows = plan.rows(data::SplitRole::Validation);
  const auto anchor_rows = plan.rows(data::SplitRole::Anchor);
  const auto vis_rows = plan.rows(data::SplitRole::Visualization);

  const auto standardizer = data::Standardizer::fit(ds, train_rows);
  const Eigen::MatrixXd inputs = standardizer.apply(ds.features);

  const auto model =
      coxnet::train(rows_of(inputs, train_rows), ds.labels.subset(train_rows),
                    rows_of(inputs, val_rows), ds.labels.subset(val_rows), cfg.train);

  const auto anchor_labels = ds.labels.subset(anchor_rows);
  const auto vis_labels = ds.labels.subset(vis_rows);
  const auto anchor_bundle = coxnet::encode(model.network, rows_of(inputs, anchor_rows),
                                            ids_of(ds, anchor_rows), &anchor_labels);
  const auto vis_bundle = coxnet::encode(model.network, rows_of(inputs, vis_rows),
                                         ids_of(ds, vis_rows), &vis_labels);

  std::vector<std::size_t> test_rows(anchor_rows);
  test_rows.insert(test_rows.end(), vis_rows.begin(), vis_rows.end());
  const Eigen::VectorXd test_scores = model.network.risk_scores(rows_of(inputs, test_rows));
  const auto test_labels = ds.labels.subset(test_rows);
  std::optional<double> test_c;
  try {
    test_c = survstats::concordance_index(
        std::vector<double>(test_scores.data(), test_scores.data() + test_scores.size()),
        test_labels);
  } catch (const Error& e) {
    result.warnings.push_back(std::string("test concordance unavailable: ") + e.what());
  }

  const data::CsvOptions row_opts = row_csv_options(opts);
  write_json(result.dir / "model.json",
             {{"version", kModelFileVersion},
              {"model", model.to_json()},
              {"standardizer", standardizer.to_json()},
              {"schema", data::schema_to_json(ds.schema)},
              {"row_csv", csv_options_to_json(row_opts)}});
  export_bundle(anchor_bundle, result.dir / "anchor_bundle.json");
  export_bundle(vis_bundle, result.dir / "vis_bundle.json");
  data::write_csv(result.dir / "anchor_rows.csv", ds.subset(anchor_rows), row_opts);
  data::write_csv(result.dir / "vis_rows.csv", ds.subset(vis_rows), row_opts);
  write_text(result.dir / "train_log.csv", model.log_csv());

  json roles;
  for (std::size_t r = 0; r < 4; ++r) {
    const auto role = static_cast<data::SplitRole>(r);
    roles[data::to_string(role)] = ids_of(ds, plan.rows(role));
  }
  write_json(result.dir / "split.json",
             {{"manifest", data::dataset_manifest(ds, plan)}, {"ids", std::move(roles)}});

  const auto& chosen = model.grid.at(model.selected).point;
  result.summary = {{"selected_grid_index", model.selected},
                    {"batch_size", chosen.batch_size},
                    {"learning_rate", chosen.learning_rate},
                    {"layers", chosen.layers},
                    {"embedding_dim", chosen.embedding_dim},
                    {"best_val_concordance", model.grid.at(model.selected).best_val_concordance},
                    {"test_concordance", test_c ? json(*test_c) : json(nullptr)},
                    {"grid_points", model.grid.size()}};
  for (const auto& g : model.grid) {
    if (g.failed) result.warnings.push_back("grid point failed: " + g.failure);
  }
  write_run_record(result.dir, "train", cfg, result);
  return result;
}

// ---------------------------------------------------------------------------

StageResult run_analyze(const RunConfig& cfg) {
  cfg.validate();
  const fs::path in = train_dir(cfg);
  require_file(in / "model.json", "survanchor train");
  StageResult result;
  result.dir = analyze_dir(cfg);

  const json model_file = read_json(in / "model.json");
  const auto model = coxnet::CoxMlpModel::from_json(model_file.at("model"));
  const auto schema = data::schema_from_json(model_file.at("schema"));
  const auto row_opts = csv_options_from_json(model_file.at("row_csv"));
  const auto anchor_bundle = import_bundle(in / "anchor_bundle.json");
  const auto vis_bundle = import_bundle(in / "vis_bundle.json");
  const auto anchor_rows = data::load_csv(in / "anchor_rows.csv", schema, row_opts);
  const auto vis_rows = data::load_csv(in / "vis_rows.csv", schema, row_opts);
  check_aligned(anchor_bundle, anchor_rows, "anchor");
  check_aligned(vis_bundle, vis_rows, "visualization");
  if (!anchor_bundle.labels) {
    throw Error(ErrorCode::MalformedBundle, "anchor bundle carries no survival labels");
  }
  fs::create_directories(result.dir);
  const fs::path figs = result.dir;

  // Number of clusters.
  const auto report = clusterlib::k_sweep(anchor_bundle.embeddings, *anchor_bundle.labels,
                                          cfg.cluster.k_min, cfg.cluster.k_max, cfg.cluster.kind,
                                          cfg.cluster.seed, cfg.cluster.tol,
                                          cfg.cluster.max_iter);
  write_json(result.dir / "k_selection.json", report.to_json());
  visualize::write_figure(figs, "violin",
                          visualize::make_figure("violin", visualize::violin_data(report).to_json()));
  const std::size_t k = cfg.cluster.k.value_or(report.chosen);

  // Anchor directions.
  std::vector<anchors::AnchorDirection> directions;
  const Eigen::VectorXd com = anchors::center_of_mass(anchor_bundle);
  json cluster_json = nullptr;
  if (cfg.anchors.clusters) {
    clusterlib::EmOptions em;
    em.k = k;
    em.seed = cfg.cluster.seed;
    em.tol = cfg.cluster.tol;
    em.max_iter = cfg.cluster.max_iter;
    const auto fit = clusterlib::fit_mixture(cfg.cluster.kind, anchor_bundle.embeddings, em);
    cluster_json = fit.to_json();
    for (std::size_t j = 0; j < fit.k(); ++j) {
      try {
        directions.push_back(anchors::cluster_anchor(anchor_bundle, fit, static_cast<int>(j)));
      } catch (const Error& e) {
        result.warnings.push_back(fmt::format("cluster {} skipped: {}", j + 1, e.what()));
        result.partial = true;
      }
    }
  }
  for (const auto& filter : cfg.anchors.concepts) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < anchor_rows.size(); ++r) {
      if (row_matches(anchor_rows, r, filter)) rows.push_back(r);
    }
    if (rows.empty()) {
      throw Error(ErrorCode::EmptyConcept,
                  "no anchor-estimation rows match concept " + filter.name());
    }
    const auto concept_bundle = anchor_bundle.subset(rows);
    directions.push_back(anchors::concept_anchor(concept_bundle.embeddings, com, filter.name(),
                                                 &concept_bundle.ids, &vis_bundle.ids,
                                                 &result.warnings));
  }
  {
    json dirs = json::array();
    for (const auto& d : directions) dirs.push_back(d.to_json());
    write_json(result.dir / "anchors.json",
               {{"k", k}, {"mixture", cluster_json}, {"anchors", std::move(dirs)}});
  }

  // Per-row predicted survival on the visualization rows.
  const Eigen::VectorXd vis_scores = model.network.head_scores(vis_bundle.embeddings);
  std::vector<survstats::SurvivalCurve> curves;
  curves.reserve(vis_bundle.size());
  for (Eigen::Index i = 0; i < vis_scores.size(); ++i) {
    curves.push_back(survstats::predict_survival(model.baseline, vis_scores(i)));
  }

  std::vector<anchors::AnchorDirection> ranked_dirs;
  std::vector<std::vector<double>> ranked_proj;
  json invariants = json::array();
  json anchor_summary = json::array();
  for (const auto& dir : directions) {
    const std::string name = dir.name();
    const std::string tag = slug(name);
    std::vector<double> proj;
    anchors::ProjectionBinning binning;
    try {
      proj = anchors::project(vis_bundle.embeddings, dir);
      binning = anchors::bin_projections(proj, cfg.anchors.bins);
    } catch (const Error& e) {
      result.warnings.push_back(fmt::format("{} skipped: {}", name, e.what()));
      result.partial = true;
      continue;
    }
    ranked_dirs.push_back(dir);
    ranked_proj.push_back(proj);

    const double clumping = anchors::clumping_diagnostic(proj);
    if (clumping > cfg.anchors.clumping_warn) {
      result.warnings.push_back(fmt::format(
          "{}: {:.1f}% of projections lie within 0.01 of +-1", name, 100 * clumping));
    }
    write_json(result.dir / (tag + "_projections.json"),
               {{"anchor", name},
                {"ids", vis_bundle.ids},
                {"projections", proj},
                {"binning", binning.to_json()},
                {"clumping", clumping}});

    const auto raw = visualize::raw_feature_heatmap(binning, schema, vis_rows.features,
                                                    "raw feature probabilities: " + name);
    visualize::write_figure(figs, tag + "_raw_heatmap",
                            visualize::make_figure("heatmap", raw.to_json()));
    const auto raw_check = visualize::check_raw_feature_heatmap(raw);

    const auto bin_curves = anchors::bin_survival(binning, curves);
    const auto surv = visualize::survival_heatmap(bin_curves, binning, model.min_train_time,
                                                  model.max_train_time,
                                                  cfg.anchors.display_times,
                                                  "survival probabilities: " + name);
    visualize::write_figure(figs, tag + "_survival_heatmap",
                            visualize::make_figure("heatmap", surv.to_json()));
    const auto surv_check = visualize::check_survival_heatmap(surv);
    invariants.push_back({{"anchor", name},
                          {"raw_heatmap_ok", raw_check.ok},
                          {"raw_heatmap_worst", raw_check.worst},
                          {"survival_heatmap_ok", surv_check.ok}});
    if (!raw_check.ok || !surv_check.ok) {
      result.warnings.push_back(name + ": heatmap invariant violated: " + raw_check.detail +
                                surv_check.detail);
      result.partial = true;
    }

    const auto ranking =
        assoc::rank_features(schema, vis_rows.features, proj, binning, name, cfg.assoc.test);
    write_text(result.dir / (tag + "_ranking.csv"), ranking.to_csv());
    json ranking_json = ranking.to_json();
    if (cfg.assoc.fdr_q) {
      std::vector<double> ps;
      for (const auto& s : ranking.scores) ps.push_back(s.p);
      const auto fdr = assoc::fdr_threshold(ps, *cfg.assoc.fdr_q);
      json accepted = json::array();
      for (std::size_t i : fdr.accepted) accepted.push_back(ranking.scores[i].feature);
      ranking_json["fdr"] = {{"q", *cfg.assoc.fdr_q},
                             {"threshold", fdr.threshold ? json(*fdr.threshold) : json(nullptr)},
                             {"accepted", std::move(accepted)}};
    }
    write_json(result.dir / (tag + "_ranking.json"), ranking_json);
    visualize::write_figure(figs, tag + "_ranking_table",
                            visualize::make_figure("table", visualize::ranking_table(ranking)));

    if (!ranking.scores.empty()) {
      const std::string& top = ranking.scores.front().feature;
      const auto idx = *schema.index_of(top);
      std::vector<double> values(vis_rows.size());
      for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = vis_rows.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(idx));
      }
      const auto scatter = visualize::scatter_feature_vs_projection(values, proj, top, name);
      visualize::write_figure(figs, tag + "_scatter_" + slug(top),
                              visualize::make_figure("scatter", scatter.to_json()));
    }
    const auto samples = visualize::bin_sample_table(binning, vis_bundle.ids,
                                                     cfg.anchors.sample_size, cfg.cluster.seed);
    visualize::write_figure(
        figs, tag + "_samples",
        visualize::make_figure("table",
                               visualize::sample_table(samples, "sampled rows per bin: " + name)));
    anchor_summary.push_back({{"anchor", name},
                              {"clumping", clumping},
                              {"top_feature", ranking.scores.empty()
                                                  ? json(nullptr)
                                                  : json(ranking.scores.front().feature)}});
  }

  if (!ranked_dirs.empty()) {
    const auto ranks = anchors::rank_anchors(ranked_dirs, ranked_proj, curves, cfg.anchors.alpha);
    json ranks_json = json::array();
    for (const auto& r : ranks) ranks_json.push_back(r.to_json());
    write_json(result.dir / "anchor_ranking.json", {{"alpha", cfg.anchors.alpha}, {"ranking", ranks_json}});
    visualize::write_figure(figs, "anchor_ranking_table",
                            visualize::make_figure("table", visualize::anchor_rank_table(ranks)));

    if (const auto* groups = vis_rows.passthrough_column(cfg.anchors.group_column)) {
      std::vector<std::string> names;
      for (const auto& d : ranked_dirs) names.push_back(d.name());
      // Numeric group labels sort numerically.
      const std::set<std::string> distinct(groups->begin(), groups->end());
      std::vector<std::string> order(distinct.begin(), distinct.end());
      std::stable_sort(order.begin(), order.end(), [](const std::string& a, const std::string& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
      });
      const auto heat = visualize::average_projection_heatmap(*groups, ranked_proj, names, order);
      visualize::write_figure(figs, "average_projection_heatmap",
                              visualize::make_figure("heatmap", heat.to_json()));
    }
  }

  std::vector<double> medians;
  for (const auto& c : curves) {
    const auto m = survstats::median_from_curve(c);
    medians.push_back(m.beyond_max_time ? model.max_train_time : m.time);
  }
  try {
    const auto pca = visualize::pca_scatter(vis_bundle.embeddings, medians,
                                            "PCA of visualization embeddings (color: median survival)");
    visualize::write_figure(figs, "pca", visualize::make_figure("scatter", pca.to_json()));
  } catch (const Error& e) {
    result.warnings.push_back(std::string("PCA skipped: ") + e.what());
    result.partial = true;
  }

  result.summary = {{"k", k},
                    {"knee", report.knee ? json(*report.knee) : json(nullptr)},
                    {"anchors", anchor_summary},
                    {"invariants", invariants}};
  write_json(result.dir / "report.json", {{"summary", result.summary},
                                          {"warnings", result.warnings},
                                          {"partial", result.partial}});
  write_run_record(result.dir, "analyze", cfg, result);
  return result;
}

std::size_t run_render(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::InvalidArgument, dir.string() + " is not a directory");
  }
  std::size_t count = visualize::render_directory(dir);
  const fs::path nested = dir / "analyze";
  if (fs::is_directory(nested)) count += visualize::render_directory(nested);
  return count;
}

}  // namespace survanchor::cli
