#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "survanchor/coxnet.hpp"
#include "survanchor/error.hpp"

using namespace survanchor;
using namespace survanchor::coxnet;

namespace {

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = normal(rng);
  return m;
}

}  // namespace

TEST(CoxLoss, MatchesDirectFormula) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 30; ++trial) {
    const auto y = oracle::random_labels(2 + trial % 9, rng);
    std::vector<double> s(y.size());
    for (auto& v : s) v = 2 * normal(rng);
    EXPECT_NEAR(cox_loss(to_eigen(s), y), oracle::cox_loss(s, y), 1e-10);
  }
}

TEST(CoxLoss, TwoRowExampleGradient) {
  SurvivalLabels y{{2, 1}, {1, 1}};
  Eigen::VectorXd s = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd g;
  const double loss = cox_loss_and_gradient(s, y, g);
  // Row 1 (time 1) has risk set {0, 1}; row 0 (time 2) has risk set {0}.
  EXPECT_NEAR(loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(g[0], 0.5, 1e-15);
  EXPECT_NEAR(g[1], -0.5, 1e-15);
}

TEST(CoxLoss, StableForLargeScores) {
  SurvivalLabels y{{1, 2, 3}, {1, 1, 0}};
  Eigen::VectorXd s(3);
  s << 800, 801, 799;
  const double loss = cox_loss(s, y);
  EXPECT_TRUE(std::isfinite(loss));
  Eigen::VectorXd shifted = s.array() - 800.0;
  EXPECT_NEAR(loss, cox_loss(shifted, y), 1e-9);
}

TEST(CoxLoss, GradientIsShiftInvariant) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto y = oracle::random_labels(8, rng);
    Eigen::VectorXd s = random_matrix(8, 1, rng).col(0);
    const Eigen::VectorXd g = cox_loss_gradient(s, y);
    // Shifting every score leaves the loss unchanged.
    EXPECT_NEAR(g.sum(), 0.0, 1e-12);
  }
}

TEST(CoxLoss, NoEventsIsAnError) {
  SurvivalLabels y{{1, 2}, {0, 0}};
  try {
    cox_loss(Eigen::VectorXd::Zero(2), y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoEventsInBatch);
  }
}

TEST(CoxMlp, UnitNormEmbeddings) {
  MlpArchitecture arch{4, 3, 5, FinalActivation::UnitNorm, 9};
  CoxMlp net(arch);
  std::mt19937_64 rng(2);
  const auto x = random_matrix(20, 4, rng);
  std::size_t degenerate = 0;
  const auto u = net.encode(x, &degenerate);
  ASSERT_EQ(u.cols(), 5);
  for (Eigen::Index r = 0; r < u.rows(); ++r) {
    if (degenerate == 0) EXPECT_NEAR(u.row(r).norm(), 1.0, 1e-12);
  }
  EXPECT_TRUE(net.risk_scores(x).isApprox(net.head_scores(u)));
}

TEST(CoxMlp, ParametersRoundTripAndJson) {
  MlpArchitecture arch{3, 2, 4, FinalActivation::Relu, 1};
  CoxMlp net(arch);
  const auto p = net.parameters();
  EXPECT_EQ(static_cast<std::size_t>(p.size()), net.parameter_count());
  Eigen::VectorXd q = p * 2.0;
  net.set_parameters(q);
  EXPECT_TRUE(net.parameters().isApprox(q));
  const auto back = CoxMlp::from_json(net.to_json());
  EXPECT_TRUE(back.parameters().isApprox(q));
  EXPECT_EQ(back.architecture().final_activation, FinalActivation::Relu);
}

TEST(CoxMlp, BackpropMatchesFiniteDifferences) {
  std::mt19937_64 rng(77);
  for (auto act : {FinalActivation::UnitNorm, FinalActivation::Relu}) {
    MlpArchitecture arch{3, 2, 3, act, 4};
    CoxMlp net(arch);
    // Random biases keep every row away from the zero vector, where the
    // unit-norm map is not differentiable.
    net.set_parameters(random_matrix(static_cast<Eigen::Index>(net.parameter_count()), 1, rng).col(0));
    const auto x = random_matrix(7, 3, rng);
    const auto y = oracle::random_labels(7, rng);
    Eigen::VectorXd g;
    net.loss_and_gradient(x, y, g);
    const Eigen::VectorXd p = net.parameters();
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const double h = 1e-6;
      Eigen::VectorXd pp = p, pm = p;
      pp[k] += h;
      pm[k] -= h;
      CoxMlp a = net, b = net;
      a.set_parameters(pp);
      b.set_parameters(pm);
      const double fd = (cox_loss(a.risk_scores(x), y) - cox_loss(b.risk_scores(x), y)) / (2 * h);
      EXPECT_NEAR(g[k], fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(Train, GridAndSelectionAreReproducible) {
  std::mt19937_64 rng(3);
  const auto x = random_matrix(120, 3, rng);
  SurvivalLabels y;
  for (Eigen::Index i = 0; i < 120; ++i) {
    y.times.push_back(std::exp(-x(i, 0)) + 0.01 * static_cast<double>(i % 7));
    y.events.push_back(i % 4 != 0);
  }
  TrainConfig cfg;
  cfg.batch_sizes = {32};
  cfg.learning_rates = {0.01};
  cfg.layer_counts = {1, 2};
  cfg.embedding_dims = {3};
  cfg.max_epochs = 15;
  cfg.patience = 5;
  EXPECT_EQ(expand_grid(cfg).size(), 2u);
  const auto tr = x.topRows(90);
  const auto va = x.bottomRows(30);
  std::vector<std::size_t> tri(90), vai(30);
  for (std::size_t i = 0; i < 90; ++i) tri[i] = i;
  for (std::size_t i = 0; i < 30; ++i) vai[i] = 90 + i;
  const auto a = train(tr, y.subset(tri), va, y.subset(vai), cfg);
  const auto b = train(tr, y.subset(tri), va, y.subset(vai), cfg);
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
  EXPECT_GT(a.grid[a.selected].best_val_concordance, 0.7);
  EXPECT_FALSE(a.log.empty());
  EXPECT_EQ(a.log_csv().rfind("grid_index,epoch,loss,val_concordance", 0), 0u);
  const auto back = CoxMlpModel::from_json(a.to_json());
  EXPECT_EQ(back.to_json().dump(), a.to_json().dump());
}

TEST(Train, InvalidConfigRejected) {
  TrainConfig cfg;
  cfg.learning_rates = {};
  EXPECT_THROW(cfg.validate(), Error);
}
