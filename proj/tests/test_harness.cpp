#include <gtest/gtest.h>

#include <sstream>

#include "capbandit/harness.hpp"

using namespace capbandit;

namespace {

TaskLog complementary(std::size_t n, std::uint64_t seed) {
  return synth_generate(complementary_spec(n), seed);
}

ExperimentConfig quiet_config() {
  ExperimentConfig cfg;
  cfg.runs = 3;
  return cfg;
}

}  // namespace

TEST(Online, RandomAtEndpointIsMarginalError) {
  const auto log = complementary(500, 1);
  const auto r = run_online(log, quiet_config(), PolicyKind::RandomNonContextual,
                            two_agent_profile(1.0), 3);
  EXPECT_DOUBLE_EQ(r.error_rate, 1.0 - log.column_means()[0]);
  EXPECT_EQ(r.counts, (std::vector<int>{500, 0}));
}

TEST(Online, FractionsTrackCapacity) {
  const auto log = complementary(10000, 2);
  for (auto kind : {PolicyKind::LogisticGreedy, PolicyKind::LearnedNonContextual,
                    PolicyKind::OracleConstrained}) {
    const auto r = run_online(log, quiet_config(), kind, two_agent_profile(0.3), 4);
    EXPECT_NEAR(r.fractions[0], 0.3, 0.01) << to_string(kind);
    EXPECT_NEAR(r.fractions[0] + r.fractions[1], 1.0, 1e-12);
  }
}

TEST(Online, OneRewardPerRound) {
  const auto log = complementary(800, 3);
  for (auto kind : {PolicyKind::LogisticTS, PolicyKind::TreeGreedy, PolicyKind::TreeTS,
                    PolicyKind::LearnedNonContextual}) {
    const auto r = run_online(log, quiet_config(), kind, two_agent_profile(0.5), 1);
    EXPECT_EQ(r.model_updates, 800u) << to_string(kind);
    EXPECT_GE(r.error_rate, 0.0);
    EXPECT_LE(r.error_rate, 1.0);
  }
}

TEST(Online, RespectsRoundLimit) {
  auto cfg = quiet_config();
  cfg.rounds = 100;
  const auto r = run_online(complementary(500, 3), cfg, PolicyKind::LogisticGreedy,
                            two_agent_profile(0.5), 1);
  EXPECT_EQ(r.rounds, 100u);
  EXPECT_EQ(r.counts[0] + r.counts[1], 100);
}

TEST(Online, DeterministicGivenSeed) {
  const auto log = complementary(600, 4);
  auto cfg = quiet_config();
  cfg.keep_trace = true;
  const auto a = run_online(log, cfg, PolicyKind::TreeTS, two_agent_profile(0.4), 9);
  const auto b = run_online(log, cfg, PolicyKind::TreeTS, two_agent_profile(0.4), 9);
  std::ostringstream ta, tb;
  write_trace_csv(ta, a.trace);
  write_trace_csv(tb, b.trace);
  EXPECT_EQ(ta.str(), tb.str());
  EXPECT_EQ(ta.str().substr(0, 40), "t,agent,reward,score_1,score_2,q_1,q_2\n0");
}

TEST(Online, CheckpointResumeIsIdentical) {
  const auto log = complementary(400, 5);
  auto cfg = quiet_config();
  for (auto kind : {PolicyKind::LogisticTS, PolicyKind::TreeTS, PolicyKind::LearnedNonContextual,
                    PolicyKind::RandomNonContextual}) {
    OnlineSimulator full(log, cfg, kind, two_agent_profile(0.5), 21);
    const auto expected = full.run();

    OnlineSimulator first(log, cfg, kind, two_agent_profile(0.5), 21);
    for (int i = 0; i < 173; ++i) first.step();
    std::stringstream buf;
    first.save_checkpoint(buf);

    OnlineSimulator resumed(log, cfg, kind, two_agent_profile(0.5), 21);
    resumed.load_checkpoint(buf);
    EXPECT_EQ(resumed.round(), 173u);
    const auto got = resumed.run();
    EXPECT_EQ(got.error_rate, expected.error_rate) << to_string(kind);
    EXPECT_EQ(got.counts, expected.counts);
    EXPECT_EQ(got.final_queue, expected.final_queue);
  }
}

TEST(Online, CheckpointMismatchIsRejected) {
  const auto log = complementary(100, 5);
  OnlineSimulator a(log, quiet_config(), PolicyKind::LogisticTS, two_agent_profile(0.5), 1);
  std::stringstream buf;
  a.save_checkpoint(buf);
  OnlineSimulator b(log, quiet_config(), PolicyKind::TreeTS, two_agent_profile(0.5), 1);
  try {
    b.load_checkpoint(buf);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CheckpointError);
  }
}

TEST(Batched, BatchOfOneEqualsOnline) {
  const auto log = complementary(1500, 6);
  for (auto kind : {PolicyKind::LogisticGreedy, PolicyKind::TreeGreedy,
                    PolicyKind::LearnedNonContextual, PolicyKind::OracleConstrained}) {
    const auto online = run_online(log, quiet_config(), kind, two_agent_profile(0.3), 2);
    const auto batched = run_batched(log, quiet_config(), kind, two_agent_profile(0.3), 2, 1);
    EXPECT_EQ(online.counts, batched.counts) << to_string(kind);
    EXPECT_LT(std::abs(online.error_rate - batched.error_rate), 1e-12);
  }
}

TEST(Batched, SingleBatchHitsApportionedCounts) {
  const auto log = complementary(999, 7);
  auto cfg = quiet_config();
  cfg.batch_rule = BatchCountRule::Exact;
  cfg.keep_trace = true;
  const auto p = two_agent_profile(0.3);
  const auto r = run_batched(log, cfg, PolicyKind::LogisticGreedy, p, 1, 999);
  ASSERT_EQ(r.batch_counts.size(), 1u);
  EXPECT_EQ(r.counts, apportion_counts(p, QueueBank(p), 999));
}

TEST(Batched, CountsSumToBatchAndRespectBounds) {
  const auto log = complementary(1003, 8);
  auto cfg = quiet_config();
  cfg.keep_trace = true;
  const auto r = run_batched(log, cfg, PolicyKind::TreeTS, two_agent_profile(0.4), 1, 10);
  ASSERT_EQ(r.batch_counts.size(), 101u);
  for (std::size_t b = 0; b < r.batch_counts.size(); ++b) {
    const auto& c = r.batch_counts[b];
    const int size = b + 1 == r.batch_counts.size() ? 3 : 10;
    EXPECT_EQ(c[0] + c[1], size);
    for (std::size_t a = 0; a < 2; ++a) {
      EXPECT_GE(c[a], r.batch_bounds[b].lower[a]);
      EXPECT_LE(c[a], r.batch_bounds[b].upper[a]);
    }
  }
  EXPECT_NEAR(r.fractions[0], 0.4, 0.02);
}

TEST(Offline, SeparableConstantAgents) {
  SynthSpec s;
  s.rounds = 300;
  s.agents = {AgentTruth::constant(1.0), AgentTruth::constant(0.0)};
  const auto log = synth_generate(s, 1);
  EXPECT_DOUBLE_EQ(run_offline_benchmark(log, ModelFamily::Logistic), 0.0);
  EXPECT_DOUBLE_EQ(run_offline_benchmark(log, ModelFamily::Tree), 0.0);
}

TEST(Offline, TreeNearUnconstrainedOracleOnRegions) {
  SynthSpec s;
  s.dim = 2;
  s.rounds = 4000;
  const Box q1{Vector::Zero(2), Vector::Constant(2, 2.0), 0.9};
  const Box q3{Vector::Constant(2, -2.0), Vector::Zero(2), 0.8};
  s.agents = {AgentTruth::regions({q1, q3}, 0.3), AgentTruth::constant(0.6)};
  const auto log = synth_generate(s, 2);
  const MuTable mu = reference_mu_table(log);
  double oracle_error = 0.0;
  const auto best = oracle_unconstrained(mu);
  oracle_error = realized_error(log, best);
  EXPECT_NEAR(run_offline_benchmark(log, ModelFamily::Tree), oracle_error, 0.05);
}

TEST(Regret, OraclePlayingItselfHasNone) {
  const auto log = complementary(2000, 9);
  auto cfg = quiet_config();
  cfg.keep_trace = true;
  const auto r = run_online(log, cfg, PolicyKind::OracleConstrained, two_agent_profile(0.5), 1);
  const auto rep = compute_regret(r.trace, reference_mu_table(log), two_agent_profile(0.5), 0.5);
  EXPECT_NEAR(rep.total, 0.0, 1e-12);
  EXPECT_GT(rep.oracle_value, 0.5);
}

TEST(Regret, RandomGrowsLinearly) {
  const auto log = complementary(5000, 10);
  auto cfg = quiet_config();
  cfg.keep_trace = true;
  const auto r = run_online(log, cfg, PolicyKind::RandomNonContextual, two_agent_profile(0.5), 1);
  const auto rep = compute_regret(r.trace, reference_mu_table(log), two_agent_profile(0.5), 0.5);
  EXPECT_GT(linear_slope(rep.cumulative), 0.05);
  EXPECT_GT(rep.plain_shortfall, 0.0);
}

TEST(Sweep, EndpointsAndReproducibility) {
  const auto log = complementary(400, 11);
  ExperimentConfig cfg;
  cfg.runs = 4;
  cfg.policies = {PolicyKind::RandomNonContextual, PolicyKind::LogisticGreedy};
  cfg.grid = {two_agent_profile(0.0), two_agent_profile(0.5), two_agent_profile(1.0)};
  cfg.offline_benchmark = true;
  const auto table = run_sweep(log, cfg);
  const auto means = log.column_means();
  EXPECT_DOUBLE_EQ(table.find("random", 1.0)->mean_error, 1.0 - means[0]);
  EXPECT_DOUBLE_EQ(table.find("random", 0.0)->mean_error, 1.0 - means[1]);
  EXPECT_DOUBLE_EQ(table.find("random", 0.0)->std_error, 0.0);
  EXPECT_EQ(table.find("logistic_greedy", 0.5)->errors.size(), 4u);
  EXPECT_NE(table.find("offline_tree", 0.5), nullptr);

  cfg.jobs = 3;
  const auto again = run_sweep(log, cfg);
  std::ostringstream a, b;
  write_sweep_csv(a, table);
  write_sweep_csv(b, again);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')),
            "policy,alpha_profile,mean_error,std_error,frac_agent_1,frac_agent_2");
}

TEST(Sweep, InvalidConfig) {
  ExperimentConfig cfg;
  cfg.runs = 0;
  EXPECT_THROW(run_sweep(complementary(10, 1), cfg), Error);
  cfg.runs = 1;
  cfg.eta = -1;
  EXPECT_THROW(run_sweep(complementary(10, 1), cfg), Error);
}

TEST(FreeAgent, QueueStaysZero) {
  SynthSpec s;
  s.rounds = 3000;
  s.agents = {AgentTruth::logistic(Vector::Constant(1, 4.0)),
              AgentTruth::logistic(Vector::Constant(1, -4.0)), AgentTruth::constant(0.7)};
  const auto log = synth_generate(s, 12);
  const auto p = validate_capacity_profile({0.5, 0.5, 0.0}, {false, false, true});
  auto cfg = quiet_config();
  cfg.keep_trace = true;
  const auto r = run_online(log, cfg, PolicyKind::LogisticGreedy, p, 3);
  for (const auto& row : r.trace) ASSERT_EQ(row.queue[2], 0.0);
  EXPECT_GT(r.counts[2], 0);
}
