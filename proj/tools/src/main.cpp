#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <optional>

#include "survanchor/cli/config.hpp"
#include "survanchor/cli/pipeline.hpp"
#include "survanchor/error.hpp"

namespace {

using survanchor::cli::RunConfig;
using survanchor::cli::StageResult;

void report(const char* stage, const StageResult& r) {
  for (const auto& w : r.warnings) fmt::print(stderr, "warning: {}\n", w);
  fmt::print("{}: wrote {}{}\n", stage, r.dir.string(), r.partial ? " (partial)" : "");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anchor-direction analysis of Cox neural network embeddings"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", survanchor::cli::kVersion);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  app.add_option("--config", config_path, "INI run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed for every stage");
  app.add_option("--out", out, "output directory");

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  auto* train = app.add_subcommand("train", "train the model and export embedding bundles");
  auto* analyze = app.add_subcommand("analyze", "anchors, projections, figures and rankings");
  auto* render = app.add_subcommand("render", "re-render SVG figures from their JSON");

  std::vector<std::string> concepts;
  std::optional<std::size_t> k;
  std::optional<std::size_t> bins;
  std::optional<std::string> test;
  std::optional<double> fdr_q;
  analyze->add_option("--concept", concepts, "concept anchor filter col=value (repeatable)");
  analyze->add_option("--k", k, "number of clusters (default: knee of the sweep)");
  analyze->add_option("--bins", bins, "projection bins");
  analyze->add_option("--test", test, "feature test: chi2, kendall or kruskal");
  analyze->add_option("--fdr-q", fdr_q, "Benjamini-Yekutieli FDR level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = config_path.empty() ? survanchor::cli::parse_config("")
                                        : survanchor::cli::load_config(config_path);
    if (seed) cfg.set_seed(*seed);
    if (!out.empty()) cfg.out = out;

    if (*synth) {
      report("synth", survanchor::cli::run_synth(cfg));
    } else if (*train) {
      report("train", survanchor::cli::run_train(cfg));
    } else if (*analyze) {
      for (const auto& c : concepts) {
        cfg.anchors.concepts.push_back(survanchor::cli::ConceptFilter::parse(c));
      }
      if (k) cfg.cluster.k = *k;
      if (bins) cfg.anchors.bins = *bins;
      if (test) cfg.assoc.test = survanchor::assoc::parse_test_kind(*test);
      if (fdr_q) cfg.assoc.fdr_q = *fdr_q;
      report("analyze", survanchor::cli::run_analyze(cfg));
    } else if (*render) {
      const std::size_t n = survanchor::cli::run_render(cfg.out);
      fmt::print("render: {} figures\n", n);
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return survanchor::cli::exit_code_for(e);
  }
  return 0;
}
