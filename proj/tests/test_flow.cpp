#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "capbandit/flow.hpp"

using namespace capbandit;

TEST(Flow, SimplePathChoice) {
  // Two parallel routes from 0 to 3; the cheaper one saturates first.
  FlowNetwork net(4, 0, 3);
  const int a = net.add_arc(0, 1, 2, 1);
  net.add_arc(1, 3, 2, 1);
  const int b = net.add_arc(0, 2, 2, 5);
  net.add_arc(2, 3, 1, 0);
  const auto res = mcmf_solve(net);
  EXPECT_EQ(res.flow, 3);
  EXPECT_EQ(res.cost, 2 * 2 + 5);
  EXPECT_EQ(net.flow(a), 2);
  EXPECT_EQ(net.flow(b), 1);
  EXPECT_TRUE(net.feasible());
  EXPECT_TRUE(net.certify_optimal());
}

TEST(Flow, NegativeCostsWithoutCycles) {
  FlowNetwork net(3, 0, 2);
  net.add_arc(0, 1, 1, -7);
  net.add_arc(1, 2, 1, -3);
  net.add_arc(0, 2, 1, 4);
  const auto res = mcmf_solve(net);
  EXPECT_EQ(res.flow, 2);
  EXPECT_EQ(res.cost, -10 + 4);
}

TEST(Flow, MalformedNetworks) {
  EXPECT_THROW(FlowNetwork(1, 0, 0), Error);
  EXPECT_THROW(FlowNetwork(3, 0, 0), Error);
  FlowNetwork net(3, 0, 2);
  try {
    net.add_arc(0, 5, 1, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NetworkMalformed);
  }
  EXPECT_THROW(net.add_arc(0, 1, -1, 0), Error);
}

TEST(Flow, NegativeCycleDetected) {
  FlowNetwork net(4, 0, 3);
  net.add_arc(0, 1, 1, 0);
  net.add_arc(1, 2, 5, -2);
  net.add_arc(2, 1, 5, -2);
  net.add_arc(2, 3, 1, 0);
  EXPECT_THROW(mcmf_solve(net), Error);
}

TEST(Flow, UnreachableSinkGivesZeroFlow) {
  FlowNetwork net(3, 0, 2);
  net.add_arc(0, 1, 4, 1);
  const auto res = mcmf_solve(net);
  EXPECT_EQ(res.flow, 0);
  EXPECT_EQ(res.cost, 0);
}

TEST(Flow, RandomBipartiteAgreesWithPermutationSearch) {
  // Perfect matching between k left and k right nodes: compare with the best
  // permutation found by enumeration.
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> cost(-50, 50);
  for (int trial = 0; trial < 60; ++trial) {
    const int k = 1 + trial % 6;
    std::vector<std::vector<int>> c(static_cast<std::size_t>(k), std::vector<int>(static_cast<std::size_t>(k)));
    for (auto& row : c)
      for (auto& v : row) v = cost(rng);
    FlowNetwork net(2 * k + 2, 0, 2 * k + 1);
    for (int i = 0; i < k; ++i) {
      net.add_arc(0, 1 + i, 1, 0);
      net.add_arc(1 + k + i, 2 * k + 1, 1, 0);
      for (int j = 0; j < k; ++j)
        net.add_arc(1 + i, 1 + k + j, 1, c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    }
    const auto res = mcmf_solve(net);
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    long best = std::numeric_limits<long>::max();
    do {
      long s = 0;
      for (int i = 0; i < k; ++i) s += c[static_cast<std::size_t>(i)][static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    ASSERT_EQ(res.flow, k);
    ASSERT_EQ(res.cost, best) << "trial " << trial;
    ASSERT_TRUE(net.feasible());
    ASSERT_TRUE(net.certify_optimal());
  }
}
