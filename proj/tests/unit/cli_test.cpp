#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "survanchor/cli/config.hpp"
#include "survanchor/cli/pipeline.hpp"
#include "survanchor/error.hpp"

using namespace survanchor;
using namespace survanchor::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "survanchor_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SURVANCHOR_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kTinyRun = R"(
[synthetic]
n = 400
dim = 4
class_means = 2.0, 8.0
seed = 5
[train]
batch_sizes = 64
learning_rates = 0.01
layers = 1
embedding_dims = 3
max_epochs = 8
patience = 3
[cluster]
k_min = 2
k_max = 3
[anchors]
bins = 5
concepts = class=1
[assoc]
test = kruskal
fdr_q = 0.1
[output]
dir = out
)";

}  // namespace

TEST(Config, ParsesSectionsAndResolvesPaths) {
  const auto cfg = parse_config(
      "[data]\ncsv = data/x.csv\nid_col = pid\nexclude = a, b\n"
      "[train]\nlayers = 1, 2\nlearning_rates = 0.1\nfull_batch = true\n"
      "[cluster]\nkind = gaussian\nk = 4\n"
      "[anchors]\nconcepts = sex=1; dz=lung\n"
      "[output]\ndir = results\n",
      "/base");
  EXPECT_EQ(cfg.data.csv->generic_string(), "/base/data/x.csv");
  EXPECT_EQ(*cfg.data.csv_options.id_col, "pid");
  EXPECT_EQ(cfg.data.exclude, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(cfg.train.layer_counts, (std::vector<std::size_t>{1, 2}));
  EXPECT_TRUE(cfg.train.full_batch);
  EXPECT_EQ(cfg.cluster.kind, clusterlib::MixtureKind::Gaussian);
  EXPECT_EQ(cfg.cluster.k, 4u);
  ASSERT_EQ(cfg.anchors.concepts.size(), 2u);
  EXPECT_EQ(cfg.anchors.concepts[1].name(), "dz=lung");
  EXPECT_EQ(cfg.out.generic_string(), "/base/results");
  EXPECT_EQ(cfg.synthetic.class_means, data::kDigitMeans);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  for (const char* text : {"[train]\nlayer = 2\n", "[nope]\nx = 1\n", "[train]\nmax_epochs = -3\n",
                           "[cluster]\nkind = kmeans\n"}) {
    try {
      parse_config(text);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.category(), ErrorCategory::Config) << text;
    }
  }
  EXPECT_THROW(ConceptFilter::parse("novalue"), Error);
}

TEST(Config, HashIgnoresOutputDirectoryAndThreads) {
  auto a = parse_config("[output]\ndir = one\n");
  auto b = parse_config("[output]\ndir = two\n[train]\nthreads = 4\n");
  EXPECT_EQ(a.hash(), b.hash());
  b.set_seed(9);
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(b.synthetic.seed, 9u);
  EXPECT_EQ(b.split_seed, 9u);
  EXPECT_EQ(b.train.seed, 9u);
  EXPECT_EQ(b.cluster.seed, 9u);
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Config, ValidationCatchesBadLevels) {
  auto cfg = parse_config("[assoc]\nfdr_q = 1.5\n");
  try {
    cfg.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadQ);
  }
}

TEST(ExitCodes, CategoriesMapToCodes) {
  EXPECT_EQ(exit_code_for(Error(ErrorCode::BadQ, "")), 2);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::NegativeTime, "")), 3);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::DivergedLoss, "")), 4);
  EXPECT_EQ(slug("concept:sex=1"), "concept_sex_1");
}

TEST(Cli, UsageAndConfigErrorsExitWithTwo) {
  EXPECT_EQ(run_cli("--version"), 0);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  const auto dir = scratch("badcfg");
  std::ofstream(dir / "run.ini") << "[train]\nbogus = 1\n";
  EXPECT_EQ(run_cli("--config " + (dir / "run.ini").string() + " synth"), 2);
}

TEST(Cli, DataErrorsExitWithThree) {
  const auto dir = scratch("baddata");
  std::ofstream(dir / "d.csv") << "a,time,event\n1,-2,1\n2,3,1\n";
  std::ofstream(dir / "run.ini") << "[data]\ncsv = d.csv\n[output]\ndir = out\n";
  EXPECT_EQ(run_cli("--config " + (dir / "run.ini").string() + " train"), 3);
}

TEST(Cli, TinyPipelineEndToEnd) {
  const auto dir = scratch("tiny");
  std::ofstream(dir / "run.ini") << kTinyRun;
  const std::string cfg = "--config " + (dir / "run.ini").string();
  ASSERT_EQ(run_cli(cfg + " synth"), 0);
  ASSERT_EQ(run_cli(cfg + " train"), 0);
  ASSERT_EQ(run_cli(cfg + " analyze --k 2"), 0);
  const auto analyze = dir / "out" / "analyze";
  for (const char* f : {"anchors.json", "k_selection.json", "violin.svg", "report.json",
                        "run.json", "cluster1_raw_heatmap.svg", "cluster1_survival_heatmap.svg",
                        "concept_class_1_ranking.csv", "anchor_ranking_table.svg", "pca.svg"}) {
    EXPECT_TRUE(fs::exists(analyze / f)) << f;
  }
  std::ifstream in(analyze / "run.json");
  const auto run = nlohmann::json::parse(in);
  EXPECT_EQ(run.at("stage"), "analyze");
  EXPECT_EQ(run.at("config").at("assoc").at("test"), "kruskal");
  EXPECT_EQ(run.at("config_hash").get<std::string>().size(), 16u);

  fs::remove(analyze / "pca.svg");
  EXPECT_EQ(run_cli("--out " + (dir / "out").string() + " render"), 0);
  EXPECT_TRUE(fs::exists(analyze / "pca.svg"));
}
