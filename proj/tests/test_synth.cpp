#include <gtest/gtest.h>

#include <sstream>

#include "capbandit/policy.hpp"
#include "capbandit/synth.hpp"

using namespace capbandit;

TEST(Synth, ComplementaryColumnMeans) {
  const auto log = synth_generate(complementary_spec(5000), 1);
  ASSERT_EQ(log.size(), 5000u);
  ASSERT_TRUE(log.has_true_mu());
  const auto means = log.column_means();
  EXPECT_NEAR(means[0], 0.5, 0.02);
  EXPECT_NEAR(means[1], 0.5, 0.02);
  for (const auto& r : log.records) {
    const double delta = r.true_mu[0] - r.true_mu[1];
    ASSERT_EQ(delta > 0, r.context[0] > 0);
  }
}

TEST(Synth, DominantAgentsOracleValue) {
  SynthSpec s;
  s.rounds = 2000;
  s.agents = {AgentTruth::constant(0.9), AgentTruth::constant(0.6)};
  const auto log = synth_generate(s, 2);
  MuTable mu(static_cast<Eigen::Index>(log.size()), 2);
  for (std::size_t t = 0; t < log.size(); ++t)
    for (Eigen::Index a = 0; a < 2; ++a)
      mu(static_cast<Eigen::Index>(t), a) = log.records[t].true_mu[static_cast<std::size_t>(a)];
  EXPECT_NEAR(oracle_constrained_general(mu, two_agent_profile(0.5)).value, 0.75, 1e-12);
  const auto means = log.column_means();
  EXPECT_NEAR(means[0], 0.9, 0.02);
  EXPECT_NEAR(means[1], 0.6, 0.03);
}

TEST(Synth, SeededRegenerationIsByteIdentical) {
  const auto spec = complementary_spec(300);
  std::ostringstream a, b, c;
  write_task_log(a, synth_generate(spec, 5));
  write_task_log(b, synth_generate(spec, 5));
  write_task_log(c, synth_generate(spec, 6));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
}

TEST(Synth, GaussianLawAndBoxes) {
  SynthSpec s;
  s.dim = 2;
  s.rounds = 4000;
  s.law = SynthSpec::Law::Gaussian;
  s.mean = 1.0;
  s.sd = 2.0;
  Box quadrant{Vector::Zero(2), Vector::Constant(2, 1e9), 0.95};
  s.agents = {AgentTruth::regions({quadrant}, 0.1), AgentTruth::constant(0.5)};
  const auto log = synth_generate(s, 3);
  double mean = 0.0;
  for (const auto& r : log.records) {
    mean += r.context[0];
    const bool inside = r.context[0] >= 0 && r.context[1] >= 0;
    ASSERT_DOUBLE_EQ(r.true_mu[0], inside ? 0.95 : 0.1);
  }
  EXPECT_NEAR(mean / 4000, 1.0, 0.1);
}

TEST(Synth, InvalidDefinitionsRejected) {
  auto kind_of = [](const SynthSpec& s) {
    try {
      synth_generate(s, 0);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::IoError;
  };
  SynthSpec s = complementary_spec(10);
  s.agents.clear();
  EXPECT_EQ(kind_of(s), ErrorKind::InvalidSpec);
  s = complementary_spec(10);
  s.dim = 2;
  EXPECT_EQ(kind_of(s), ErrorKind::InvalidSpec);
  s = complementary_spec(10);
  s.low = 1;
  EXPECT_EQ(kind_of(s), ErrorKind::InvalidSpec);
  s = complementary_spec(10);
  s.agents[0] = AgentTruth::constant(1.5);
  EXPECT_EQ(kind_of(s), ErrorKind::InvalidSpec);
  s = complementary_spec(0);
  EXPECT_EQ(kind_of(s), ErrorKind::InvalidSpec);
}
