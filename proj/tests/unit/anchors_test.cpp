#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "survanchor/anchors.hpp"
#include "survanchor/error.hpp"

using namespace survanchor;
using namespace survanchor::anchors;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

Eigen::Vector2d v2(double a, double b) { return {a, b}; }

survstats::SurvivalCurve curve(double level) {
  return {{1, 2, 3}, {level, level * 0.8, level * 0.5}};
}

}  // namespace

TEST(Project, CosineOfCenteredRows) {
  AnchorDirection a(v2(1, 0), v2(0, 0));
  Eigen::MatrixXd x(1, 2);
  x << 3, 4;
  EXPECT_NEAR(project(x, a)[0], 0.6, 1e-15);

  AnchorDirection shifted(v2(0, 2), v2(1, 1));
  x << 1, 5;
  EXPECT_NEAR(project(x, shifted)[0], 1.0, 1e-15);
}

TEST(Project, PropertyRangeAndScaleInvariance) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd dir(4), com(4);
    for (int k = 0; k < 4; ++k) {
      dir[k] = normal(rng);
      com[k] = normal(rng);
    }
    Eigen::MatrixXd x(10, 4);
    for (Eigen::Index i = 0; i < 10; ++i)
      for (int k = 0; k < 4; ++k) x(i, k) = normal(rng);
    const auto p = project(x, AnchorDirection(dir, com));
    const auto q = project(x, AnchorDirection(dir * 7.5, com));
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_LE(std::abs(p[i]), 1.0);
      EXPECT_NEAR(p[i], q[i], 1e-12);
    }
  }
}

TEST(Project, DegenerateRowAndZeroAnchor) {
  EXPECT_EQ(code_of([] { AnchorDirection(v2(1e-12, 0), v2(0, 0)); }), ErrorCode::ZeroAnchor);
  AnchorDirection a(v2(1, 0), v2(2, 2));
  Eigen::MatrixXd x(1, 2);
  x << 2, 2;
  EXPECT_EQ(code_of([&] { project(x, a); }), ErrorCode::DegenerateEmbedding);
  Eigen::MatrixXd wrong(1, 3);
  wrong.setOnes();
  EXPECT_EQ(code_of([&] { project(wrong, a); }), ErrorCode::DimensionMismatch);
}

TEST(Anchors, ClusterAndConceptDirections) {
  EmbeddingBundle b;
  b.ids = {10, 11, 12, 13};
  b.embeddings.resize(4, 2);
  b.embeddings << 1, 0, 1, 0, 0, 1, 0, 1;
  const auto com = center_of_mass(b);
  EXPECT_TRUE(com.isApprox(v2(0.5, 0.5)));

  clusterlib::MixtureFit fit;
  fit.assignments = {0, 0, 1, 1};
  fit.vmf.resize(2);
  const auto a = cluster_anchor(b, fit, 1);
  EXPECT_TRUE(a.vector.isApprox(v2(-0.5, 0.5)));
  EXPECT_EQ(a.name(), "cluster2");

  std::vector<std::int64_t> concept_ids{10, 11}, vis_ids{11, 99};
  std::vector<std::string> warnings;
  const auto c = concept_anchor(b.embeddings.topRows(2), com, "sex=1", &concept_ids, &vis_ids,
                                &warnings);
  EXPECT_EQ(c.name(), "concept:sex=1");
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_EQ(warnings[0].rfind("ConceptOverlapsVisualization", 0), 0u);

  const auto back = AnchorDirection::from_json(c.to_json());
  EXPECT_TRUE(back.vector.isApprox(c.vector));
  EXPECT_EQ(back.concept_name, c.concept_name);

  fit.assignments = {0, 0, 0, 0};
  EXPECT_EQ(code_of([&] { cluster_anchor(b, fit, 1); }), ErrorCode::EmptyCluster);
  EXPECT_EQ(code_of([&] { concept_anchor(Eigen::MatrixXd(0, 2), com, "none"); }),
            ErrorCode::EmptyConcept);
  EXPECT_EQ(code_of([] { center_of_mass(Eigen::MatrixXd(0, 2)); }), ErrorCode::EmptyBundle);
}

TEST(Binning, WorkedExampleFirstBin) {
  const auto b = bin_projections({-0.99, 0.0, 0.99}, 7);
  ASSERT_EQ(b.bin_count(), 7u);
  EXPECT_DOUBLE_EQ(b.bins[0].lower, -0.99);
  EXPECT_NEAR(b.bins[0].upper, -0.99 + 1.98 / 7, 1e-15);
  EXPECT_EQ(b.bins[0].interval_label(), "[-0.99, -0.71)");
  EXPECT_EQ(b.bins[0].midpoint_label(), "-0.85");
  EXPECT_EQ(b.bins[6].interval_label(), "[0.71, 0.99]");
  EXPECT_EQ(b.bins[3].midpoint_label(), "0.00");
}

TEST(Binning, PropertyEveryRowInExactlyOneBin) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p(40);
    for (auto& v : p) v = u(rng);
    const std::size_t m = 2 + trial % 9;
    const auto b = bin_projections(p, m);
    std::size_t total = 0;
    for (std::size_t j = 0; j < b.bin_count(); ++j) {
      total += b.bins[j].members.size();
      EXPECT_EQ(b.bins[j].closed_right, j + 1 == b.bin_count());
      for (auto r : b.bins[j].members) {
        EXPECT_EQ(b.bin_of_row[r], static_cast<int>(j));
        EXPECT_GE(p[r], b.bins[j].lower);
        if (b.bins[j].closed_right) EXPECT_LE(p[r], b.bins[j].upper);
        else EXPECT_LT(p[r], b.bins[j].upper);
      }
    }
    EXPECT_EQ(total, p.size());
  }
}

TEST(Binning, ConstantProjectionsAreDegenerate) {
  EXPECT_EQ(code_of([] { bin_projections({0.3, 0.3}, 7); }), ErrorCode::DegenerateProjections);
}

TEST(BinSurvival, MeanCurvePerBinAndEmptyBins) {
  const auto b = bin_projections({-1.0, -0.9, 1.0}, 4);
  const auto curves = bin_survival(b, {curve(1.0), curve(0.5), curve(0.2)});
  ASSERT_TRUE(curves[0].has_value());
  EXPECT_NEAR(curves[0]->values[0], 0.75, 1e-15);
  EXPECT_FALSE(curves[1].has_value());
  EXPECT_NEAR(curves[3]->values[2], 0.1, 1e-15);
}

TEST(RankAnchors, QuantileIndexAndOrdering) {
  // 10 rows, alpha = 0.1: the threshold is the 9th smallest value, so two rows pass.
  std::vector<survstats::SurvivalCurve> rows;
  for (int i = 0; i < 10; ++i) rows.push_back(curve(1.0 - 0.09 * i));
  std::vector<double> up(10), down(10);
  for (int i = 0; i < 10; ++i) {
    up[i] = -1.0 + 0.2 * i;
    down[i] = -up[i];
  }
  std::vector<AnchorDirection> anchors{AnchorDirection(v2(1, 0), v2(0, 0)),
                                       AnchorDirection(v2(0, 1), v2(0, 0))};
  const auto ranks = rank_anchors(anchors, {down, up}, rows, 0.1);
  ASSERT_EQ(ranks.size(), 2u);
  // "up" selects the lowest curves, so its median comes first.
  EXPECT_EQ(ranks[0].anchor_index, 1u);
  EXPECT_EQ(ranks[0].top_rows, (std::vector<std::size_t>{8, 9}));
  EXPECT_DOUBLE_EQ(ranks[0].threshold, up[8]);
  EXPECT_EQ(ranks[1].top_rows, (std::vector<std::size_t>{0, 1}));
  EXPECT_DOUBLE_EQ(ranks[1].median.time, 3.0);
  EXPECT_DOUBLE_EQ(ranks[0].median.time, 1.0);

  const auto wide = rank_anchors(anchors, {down, up}, rows, 0.35);
  EXPECT_EQ(wide[0].top_rows.size(), 4u);  // ceil(6.5) = 7th smallest as threshold
}

TEST(RankAnchors, TiesKeepAnchorOrder) {
  std::vector<survstats::SurvivalCurve> rows(4, curve(0.9));
  std::vector<AnchorDirection> anchors{AnchorDirection(v2(1, 0), v2(0, 0)),
                                       AnchorDirection(v2(0, 1), v2(0, 0)),
                                       AnchorDirection(v2(1, 1), v2(0, 0))};
  std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  const auto ranks = rank_anchors(anchors, {p, p, p}, rows, 0.5);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(ranks[i].anchor_index, i);
}

TEST(Clumping, FractionAtTheEdges) {
  EXPECT_DOUBLE_EQ(clumping_diagnostic({1.0, -1.0, 0.995, 0.0}), 0.75);
  EXPECT_DOUBLE_EQ(clumping_diagnostic({0.2, 0.3}), 0.0);
}
