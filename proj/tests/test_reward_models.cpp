#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <sstream>

#include "capbandit/reward_models.hpp"

using namespace capbandit;

namespace {

Vector random_vector(Rng& rng, Eigen::Index d, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = n(rng);
  return v;
}

}  // namespace

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(800.0), 1.0, 1e-15);
  EXPECT_GE(sigmoid(-800.0), 0.0);
  EXPECT_NEAR(sigmoid(3.0) + sigmoid(-3.0), 1.0, 1e-15);
}

TEST(Logistic, FreshModelPredictsHalf) {
  LogisticPosterior m(3);
  EXPECT_DOUBLE_EQ(m.predict(Vector::Ones(3)), 0.5);
  EXPECT_TRUE(m.covariance().isApprox(Matrix::Identity(3, 3)));
}

TEST(Logistic, FirstUpdateMatchesHandComputation) {
  // Sigma = I, x = (1, 0), p = 0.5, w = 0.25: Sigma_11 = 1 - 0.25 / 1.25 = 0.8
  // and the mean moves by 0.8 * 0.5 = 0.4 along x.
  LogisticPosterior m(2);
  Vector x(2);
  x << 1.0, 0.0;
  m.update(x, 1);
  EXPECT_NEAR(m.covariance()(0, 0), 0.8, 1e-15);
  EXPECT_NEAR(m.covariance()(1, 1), 1.0, 1e-15);
  EXPECT_NEAR(m.mean()[0], 0.4, 1e-15);
  EXPECT_NEAR(m.mean()[1], 0.0, 1e-15);
  EXPECT_GT(m.predict(x), 0.5);
}

TEST(Logistic, ShermanMorrisonMatchesExplicitInverse) {
  Rng rng = make_rng(5);
  const Eigen::Index d = 6;
  LogisticPosterior m(d);
  Matrix precision = Matrix::Identity(d, d);
  for (int step = 0; step < 300; ++step) {
    const Vector x = random_vector(rng, d);
    const double p = sigmoid(m.mean().dot(x));
    const double w = std::clamp(p * (1 - p), 1e-4, 0.25);
    precision += w * x * x.transpose();
    m.update(x, uniform01(rng) < 0.5 ? 1 : 0);
    ASSERT_LT((m.covariance() - precision.inverse()).norm(), 1e-8) << "step " << step;
  }
  EXPECT_TRUE(m.covariance().isApprox(m.covariance().transpose(), 0.0));
}

TEST(Logistic, WeightIsClippedForSaturatedPredictions) {
  Vector mean(1);
  mean << 40.0;
  LogisticPosterior m(mean, Matrix::Identity(1, 1));
  m.update(Vector::Ones(1), 1);
  // w = 1e-4 at saturation, so Sigma = 1 / (1 + 1e-4).
  EXPECT_NEAR(m.covariance()(0, 0), 1.0 / 1.0001, 1e-12);
}

TEST(Logistic, DimensionMismatchThrows) {
  LogisticPosterior m(2);
  try {
    m.predict(Vector::Ones(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(Logistic, ThompsonSpreadScalesWithKappa) {
  Rng rng = make_rng(1);
  const Vector x = Vector::Ones(2);
  LogisticPosterior wide(2, {1.0, 1.0}), narrow(2, {1.0, 0.1}), none(2, {1.0, 0.0});
  double sw = 0, sn = 0;
  for (int i = 0; i < 2000; ++i) {
    sw += std::abs(wide.sample(x, rng) - 0.5);
    sn += std::abs(narrow.sample(x, rng) - 0.5);
    ASSERT_DOUBLE_EQ(none.sample(x, rng), 0.5);
  }
  EXPECT_GT(sw, 5 * sn);
}

TEST(Logistic, CholeskyFailureOnIndefiniteCovariance) {
  Matrix cov(2, 2);
  cov << 1.0, 0.0, 0.0, -1.0;
  LogisticPosterior m(Vector::Zero(2), cov);
  Rng rng = make_rng(0);
  try {
    m.sample(Vector::Ones(2), rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CholeskyFailure);
  }
}

TEST(Logistic, SaveLoadIsBitExact) {
  Rng rng = make_rng(9);
  LogisticPosterior m(4, {2.0, 0.3});
  for (int i = 0; i < 40; ++i) m.update(random_vector(rng, 4), i % 3 == 0);
  std::stringstream buf;
  m.save(buf);
  const auto back = LogisticPosterior::load(buf);
  EXPECT_EQ(back.mean(), m.mean());
  EXPECT_EQ(back.covariance(), m.covariance());
  EXPECT_EQ(back.updates(), m.updates());
  EXPECT_EQ(back.options().kappa, 0.3);
}

TEST(Tree, StumpFindsTheSplit) {
  std::vector<Vector> xs;
  std::vector<std::uint8_t> ys;
  for (int i = 0; i < 40; ++i) {
    xs.push_back(Vector::Constant(1, i));
    ys.push_back(i >= 20 ? 1 : 0);
  }
  std::vector<int> w(40, 1);
  std::vector<std::vector<std::uint32_t>> sorted(1);
  for (std::uint32_t i = 0; i < 40; ++i) sorted[0].push_back(i);
  const auto tree = RegressionTree::fit(xs, ys, w, sorted, 3, 10);
  EXPECT_DOUBLE_EQ(tree.predict(Vector::Constant(1, 5)), 0.0);
  EXPECT_DOUBLE_EQ(tree.predict(Vector::Constant(1, 30)), 1.0);
  EXPECT_EQ(tree.depth(), 1u);  // pure children are not split further
}

TEST(Tree, MinLeafBlocksSmallSplits) {
  std::vector<Vector> xs;
  std::vector<std::uint8_t> ys;
  for (int i = 0; i < 15; ++i) {
    xs.push_back(Vector::Constant(1, i));
    ys.push_back(i >= 10 ? 1 : 0);
  }
  std::vector<int> w(15, 1);
  std::vector<std::vector<std::uint32_t>> sorted(1);
  for (std::uint32_t i = 0; i < 15; ++i) sorted[0].push_back(i);
  const auto tree = RegressionTree::fit(xs, ys, w, sorted, 3, 10);
  EXPECT_EQ(tree.depth(), 0u);
  EXPECT_NEAR(tree.predict(Vector::Constant(1, 0)), 5.0 / 15.0, 1e-15);
}

TEST(TreeEnsemble, UnfittedBehaviour) {
  TreeEnsemble ens;
  Rng rng = make_rng(2);
  EXPECT_DOUBLE_EQ(ens.predict(Vector::Zero(2)), 0.5);
  const double s = ens.sample(Vector::Zero(2), rng);
  EXPECT_GE(s, 0.0);
  EXPECT_LT(s, 1.0);
}

TEST(TreeEnsemble, RefitsEveryPeriod) {
  TreeEnsemble ens({20, 3, 10, 20, 0.5}, 4, 0);
  Rng rng = make_rng(4);
  for (int i = 0; i < 19; ++i) ens.update(random_vector(rng, 2), 1);
  EXPECT_FALSE(ens.fitted());
  ens.update(random_vector(rng, 2), 1);
  EXPECT_TRUE(ens.fitted());
  EXPECT_EQ(ens.fit_count(), 1u);
  EXPECT_EQ(ens.trees().size(), 20u);
  for (int i = 0; i < 40; ++i) ens.update(random_vector(rng, 2), 0);
  EXPECT_EQ(ens.fit_count(), 3u);
  EXPECT_EQ(ens.buffer_size(), 60u);
}

TEST(TreeEnsemble, LearnsStepFunction) {
  TreeEnsemble ens({20, 3, 10, 20, 0.5}, 8, 1);
  Rng rng = make_rng(8);
  for (int i = 0; i < 2000; ++i) {
    const Vector x = Vector::Constant(1, 2 * uniform01(rng) - 1);
    const double mu = x[0] > 0 ? 0.9 : 0.2;
    ens.update(x, uniform01(rng) < mu);
  }
  EXPECT_NEAR(ens.predict(Vector::Constant(1, 0.5)), 0.9, 0.05);
  EXPECT_NEAR(ens.predict(Vector::Constant(1, -0.5)), 0.2, 0.05);
  for (const auto& t : ens.trees()) EXPECT_LE(t.depth(), 3u);
}

TEST(TreeEnsemble, PredictionsAreClipped) {
  std::vector<RegressionTree> trees{RegressionTree::constant(1.7),
                                    RegressionTree::constant(-0.2)};
  const auto ens = TreeEnsemble::from_trees(std::move(trees));
  EXPECT_DOUBLE_EQ(ens.trees()[0].predict(Vector::Zero(1)), 1.0);
  EXPECT_DOUBLE_EQ(ens.trees()[1].predict(Vector::Zero(1)), 0.0);
  EXPECT_DOUBLE_EQ(ens.predict(Vector::Zero(1)), 0.5);
}

TEST(TreeEnsemble, SaveLoadContinuesIdentically) {
  Rng rng = make_rng(6);
  TreeEnsemble a({5, 3, 4, 7, 0.5}, 12, 1);
  for (int i = 0; i < 30; ++i) a.update(random_vector(rng, 3), i % 2);
  std::stringstream buf;
  a.save(buf);
  auto b = TreeEnsemble::load(buf);
  EXPECT_EQ(b.fit_count(), a.fit_count());
  Rng r1 = make_rng(1), r2 = make_rng(1);
  for (int i = 0; i < 25; ++i) {
    const Vector x = random_vector(rng, 3);
    a.update(x, i % 3 == 0);
    b.update(x, i % 3 == 0);
    ASSERT_EQ(a.predict(x), b.predict(x));
    ASSERT_EQ(a.sample(x, r1), b.sample(x, r2));
  }
}

TEST(MarginalMean, SmoothedAverage) {
  MarginalMean m;
  EXPECT_DOUBLE_EQ(m.predict(), 0.5);
  m.update(1);
  m.update(1);
  m.update(0);
  EXPECT_DOUBLE_EQ(m.predict(), 2.5 / 4.0);
}

TEST(AgentModel, DispatchAndRoundTrip) {
  Rng rng = make_rng(3);
  std::vector<AgentModel> models{AgentModel(LogisticPosterior(2)),
                                 AgentModel(TreeEnsemble({3, 2, 2, 5, 0.5}, 1, 0)),
                                 AgentModel(MarginalMean{})};
  for (auto& m : models)
    for (int i = 0; i < 12; ++i) m.update(random_vector(rng, 2), i % 2);
  for (const auto& m : models) {
    EXPECT_EQ(m.updates(), 12u);
    std::stringstream buf;
    m.save(buf);
    const auto back = AgentModel::load(buf);
    const Vector x = random_vector(rng, 2);
    EXPECT_EQ(back.predict(x), m.predict(x));
    EXPECT_EQ(back.updates(), m.updates());
    EXPECT_EQ(back.state().index(), m.state().index());
  }
}

TEST(AgentModel, CorruptInputIsCheckpointError) {
  std::istringstream in("capbandit-model 1 3\nbogus 1 2 3\n");
  try {
    AgentModel::load(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CheckpointError);
  }
}
