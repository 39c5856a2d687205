#include <gtest/gtest.h>

#include <functional>
#include <random>
#include <sstream>

#include "capbandit/policy.hpp"
#include "capbandit/reward_models.hpp"

using namespace capbandit;

namespace {

double brute_force_value(const MuTable& mu, const std::vector<int>& counts) {
  const int n = static_cast<int>(mu.rows());
  std::vector<int> left = counts;
  double best = -1e300;
  std::function<void(int, double)> rec = [&](int t, double acc) {
    if (t == n) {
      best = std::max(best, acc);
      return;
    }
    for (std::size_t a = 0; a < left.size(); ++a) {
      if (left[a] == 0) continue;
      --left[a];
      rec(t + 1, acc + mu(t, static_cast<Eigen::Index>(a)));
      ++left[a];
    }
  };
  rec(0, 0.0);
  return best / n;
}

}  // namespace

TEST(Select, QueuePenaltyExample) {
  QueueBank qb(two_agent_profile(0.5), 0.5, {2.0, 0.0});
  EXPECT_EQ(select({0.9, 0.6}, qb), 1u);
}

TEST(Select, PureArgmaxAndTies) {
  QueueBank qb(two_agent_profile(0.5), 0.0);
  EXPECT_EQ(select({0.3, 0.8}, qb), 1u);
  EXPECT_EQ(select({0.5, 0.5}, qb), 0u);
}

TEST(Select, ShiftInvariance) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  const auto p = validate_capacity_profile({0.2, 0.3, 0.5}, {false, false, false});
  for (int i = 0; i < 200; ++i) {
    QueueBank qb(p, 0.5, {u(rng), u(rng), u(rng)});
    std::vector<double> s{u(rng), u(rng), u(rng)}, shifted = s;
    const double c = 4 * u(rng) - 2;
    for (auto& v : shifted) v += c;
    ASSERT_EQ(select(s, qb), select(shifted, qb));
  }
}

TEST(Select, ZeroCapacityAgentNeverChosen) {
  QueueBank qb(two_agent_profile(1.0), 0.5, {100.0, 0.0});
  EXPECT_EQ(select({0.0, 1.0}, qb), 0u);
}

TEST(RandomSelect, FrequenciesAndDegenerate) {
  Rng rng = make_rng(2);
  const auto forced = two_agent_profile(1.0);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(random_select(forced, rng), 0u);
  const auto half = two_agent_profile(0.5);
  int first = 0;
  for (int i = 0; i < 10000; ++i) first += random_select(half, rng) == 0;
  EXPECT_NEAR(first / 10000.0, 0.5, 0.02);
}

TEST(RandomValue, WeightedMarginals) {
  MuTable mu(1, 2);
  mu << 0.91, 0.53;
  EXPECT_NEAR(random_value(mu, two_agent_profile(0.5)), 0.72, 1e-12);
}

TEST(OracleUnconstrained, Examples) {
  MuTable mu(2, 2);
  mu << 0.9, 0.1, 0.2, 0.7;
  const auto a = oracle_unconstrained(mu);
  EXPECT_EQ(a, (std::vector<int>{0, 1}));
  EXPECT_NEAR(assignment_value(mu, a), 0.8, 1e-12);
}

TEST(OracleTwoAgent, QuantileThreshold) {
  Rng rng = make_rng(3);
  std::vector<double> delta(2000);
  for (auto& d : delta) d = 2 * uniform01(rng) - 1;
  const auto o = oracle_constrained_two_agent(delta, 0.25);
  EXPECT_NEAR(o.threshold, 0.5, 0.05);
  EXPECT_EQ(std::count(o.assignment.begin(), o.assignment.end(), 0), 500);
  const auto all = oracle_constrained_two_agent(delta, 1.0);
  EXPECT_DOUBLE_EQ(all.threshold, *std::min_element(delta.begin(), delta.end()));
  EXPECT_EQ(std::count(all.assignment.begin(), all.assignment.end(), 0), 2000);
}

TEST(OracleTwoAgent, MatchesUnconstrainedAtSignFraction) {
  Rng rng = make_rng(4);
  const int n = 400;
  MuTable mu(n, 2);
  std::vector<double> delta(n);
  int positive = 0;
  for (int t = 0; t < n; ++t) {
    const double x = 2 * uniform01(rng) - 1;
    mu(t, 0) = sigmoid(4 * x);
    mu(t, 1) = sigmoid(-4 * x);
    delta[static_cast<std::size_t>(t)] = mu(t, 0) - mu(t, 1);
    positive += delta[static_cast<std::size_t>(t)] >= 0;
  }
  const auto o = oracle_constrained_two_agent(delta, positive / double(n));
  EXPECT_EQ(o.assignment, oracle_unconstrained(mu));
  const double v = assignment_value(mu, o.assignment);
  EXPECT_GT(v, mu.col(0).mean());
  EXPECT_GT(v, mu.col(1).mean());
}

TEST(OracleGeneral, ThreeAgentEnumeration) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  const auto p = validate_capacity_profile({1.0 / 3, 1.0 / 3, 1.0 / 3}, {false, false, false});
  for (int trial = 0; trial < 20; ++trial) {
    MuTable mu(6, 3);
    for (Eigen::Index t = 0; t < 6; ++t)
      for (Eigen::Index a = 0; a < 3; ++a) mu(t, a) = u(rng);
    const auto o = oracle_constrained_general(mu, p);
    EXPECT_EQ(o.counts, (std::vector<int>{2, 2, 2}));
    EXPECT_NEAR(o.value, brute_force_value(mu, {2, 2, 2}), 1e-9);
  }
}

TEST(OracleGeneral, AgreesWithSortingOracle) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 50 + trial;
    MuTable mu(n, 2);
    std::vector<double> delta(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
      mu(t, 0) = u(rng);
      mu(t, 1) = u(rng);
      delta[static_cast<std::size_t>(t)] = mu(t, 0) - mu(t, 1);
    }
    const double alpha = 0.1 * (trial % 10);
    const auto p = two_agent_profile(alpha);
    const auto general = oracle_constrained_general(mu, p);
    const auto sorted = oracle_constrained_two_agent(delta, alpha);
    EXPECT_EQ(general.assignment, sorted.assignment);
    EXPECT_NEAR(general.value, assignment_value(mu, sorted.assignment), 1e-12);
    EXPECT_GE(general.value, random_value(mu, p) - 1e-12);
    if (alpha > 0 && alpha < 1) {
      // The reported price gap separates selected from rejected gaps.
      const double tau = general.prices.threshold;
      for (int t = 0; t < n; ++t) {
        const double d = delta[static_cast<std::size_t>(t)];
        if (general.assignment[static_cast<std::size_t>(t)] == 0)
          EXPECT_GE(d, tau - 1e-6);
        else
          EXPECT_LE(d, tau + 1e-6);
      }
    }
  }
}

TEST(OracleGeneral, FreeAgentAbsorbsRest) {
  MuTable mu(4, 3);
  mu << 0.9, 0.1, 0.5,  //
      0.8, 0.1, 0.5,    //
      0.1, 0.9, 0.5,    //
      0.1, 0.1, 0.5;
  const auto p = validate_capacity_profile({0.5, 0.5, 0.0}, {false, false, true});
  const auto o = oracle_constrained_general(mu, p);
  EXPECT_EQ(o.assignment, (std::vector<int>{0, 0, 1, 2}));
}

TEST(DisagreementGain, Examples) {
  EXPECT_DOUBLE_EQ(disagreement_gain(std::vector<double>(10, 0.0), 0.5), 0.0);
  std::vector<double> half(10, 0.4);
  std::fill(half.begin() + 5, half.end(), -0.4);
  EXPECT_NEAR(disagreement_gain(half, 0.5), 0.2, 1e-15);
  try {
    disagreement_gain(half, 0.3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CapacityOutsideWindow);
  }
}

TEST(DisagreementGain, EqualsOracleMinusRandom) {
  Rng rng = make_rng(10);
  const int n = 200;
  MuTable mu(n, 2);
  std::vector<double> delta(n);
  int pos = 0, neg = 0;
  for (int t = 0; t < n; ++t) {
    mu(t, 0) = uniform01(rng);
    mu(t, 1) = t % 7 == 0 ? mu(t, 0) : uniform01(rng);
    delta[static_cast<std::size_t>(t)] = mu(t, 0) - mu(t, 1);
    pos += delta[static_cast<std::size_t>(t)] > 0;
    neg += delta[static_cast<std::size_t>(t)] < 0;
  }
  for (int k = pos; k <= n - neg; ++k) {
    const double alpha = k / double(n);
    const auto p = two_agent_profile(alpha);
    const double gain = oracle_constrained_general(mu, p).value - random_value(mu, p);
    ASSERT_NEAR(disagreement_gain(delta, alpha), gain, 1e-9) << k;
  }
}

TEST(OracleCsv, Format) {
  MuTable mu(2, 2);
  mu << 0.9, 0.1, 0.2, 0.7;
  std::ostringstream out;
  write_oracle_csv(out, mu, {0, 1});
  EXPECT_EQ(out.str(), "record_index,assigned_agent,mu_assigned\n0,1,0.9\n1,2,0.7\n");
}

TEST(PolicyKindNames, RoundTrip) {
  for (auto k : kAllPolicies) EXPECT_EQ(parse_policy_kind(to_string(k)), k);
  EXPECT_FALSE(parse_policy_kind("ucb").has_value());
}
