#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "capbandit/batch.hpp"
#include "capbandit/capacity.hpp"
#include "capbandit/domain.hpp"
#include "capbandit/error.hpp"

namespace capbandit {

enum class PolicyKind {
  LogisticGreedy,
  LogisticTS,
  TreeGreedy,
  TreeTS,
  RandomNonContextual,
  LearnedNonContextual,
  OracleUnconstrained,
  OracleConstrained,
};

inline constexpr PolicyKind kAllPolicies[] = {
    PolicyKind::LogisticGreedy,      PolicyKind::LogisticTS,
    PolicyKind::TreeGreedy,          PolicyKind::TreeTS,
    PolicyKind::RandomNonContextual, PolicyKind::LearnedNonContextual,
    PolicyKind::OracleUnconstrained, PolicyKind::OracleConstrained,
};

constexpr std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::LogisticGreedy: return "logistic_greedy";
    case PolicyKind::LogisticTS: return "logistic_ts";
    case PolicyKind::TreeGreedy: return "tree_greedy";
    case PolicyKind::TreeTS: return "tree_ts";
    case PolicyKind::RandomNonContextual: return "random";
    case PolicyKind::LearnedNonContextual: return "learned_marginal";
    case PolicyKind::OracleUnconstrained: return "oracle_unconstrained";
    case PolicyKind::OracleConstrained: return "oracle_constrained";
  }
  return "unknown";
}

inline std::optional<PolicyKind> parse_policy_kind(std::string_view name) {
  for (auto kind : kAllPolicies)
    if (to_string(kind) == name) return kind;
  return std::nullopt;
}

constexpr bool is_contextual(PolicyKind kind) {
  return kind == PolicyKind::LogisticGreedy || kind == PolicyKind::LogisticTS ||
         kind == PolicyKind::TreeGreedy || kind == PolicyKind::TreeTS;
}

constexpr bool uses_thompson(PolicyKind kind) {
  return kind == PolicyKind::LogisticTS || kind == PolicyKind::TreeTS;
}

/// Rows are tasks, columns agents.
using MuTable = Matrix;

/// argmax_a (scores_a - eta Q_a) over eligible agents; lowest index wins ties.
inline std::size_t select(const std::vector<double>& scores, const QueueBank& qb) {
  if (scores.size() != qb.size())
    throw Error(ErrorKind::DimensionMismatch, "score vector length");
  const auto& profile = qb.profile();
  std::size_t best = scores.size();
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < scores.size(); ++a) {
    if (!profile.eligible(a)) continue;
    const double v = scores[a] - qb.eta() * qb[a];
    if (best == scores.size() || v > best_value) {
      best = a;
      best_value = v;
    }
  }
  return best;
}

/// Categorical draw with probabilities alpha over the constrained agents.
inline std::size_t random_select(const CapacityProfile& profile, Rng& rng) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  std::size_t last = 0;
  for (std::size_t a = 0; a < profile.size(); ++a) {
    if (profile.is_free(a) || profile.alphas[a] <= 0.0) continue;
    cumulative += profile.alphas[a];
    last = a;
    if (u < cumulative) return a;
  }
  return last;
}

/// Mean of mu_table(t, assignment[t]).
inline double assignment_value(const MuTable& mu, const std::vector<int>& assignment) {
  double sum = 0.0;
  for (std::size_t t = 0; t < assignment.size(); ++t)
    sum += mu(static_cast<Eigen::Index>(t), assignment[t]);
  return sum / static_cast<double>(assignment.size());
}

/// sum_a alpha_a * mean_t mu(t, a): expected reward of random assignment.
inline double random_value(const MuTable& mu, const CapacityProfile& profile) {
  double v = 0.0;
  for (Eigen::Index a = 0; a < mu.cols(); ++a)
    v += profile.alphas[static_cast<std::size_t>(a)] * mu.col(a).mean();
  return v;
}

/// Per-row argmax, ties to the lowest agent.
inline std::vector<int> oracle_unconstrained(const MuTable& mu) {
  std::vector<int> out(static_cast<std::size_t>(mu.rows()));
  for (Eigen::Index t = 0; t < mu.rows(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index a = 1; a < mu.cols(); ++a)
      if (mu(t, a) > mu(t, best)) best = a;
    out[static_cast<std::size_t>(t)] = static_cast<int>(best);
  }
  return out;
}

struct TwoAgentOracle {
  double threshold;  // smallest selected gap; +inf when nothing goes to agent 1
  std::vector<int> assignment;
};

/// The round(alpha n) records with the largest gap mu_1 - mu_2 go to agent 1
/// (earlier records first among equal gaps); the rest go to agent 2.
inline TwoAgentOracle oracle_constrained_two_agent(const std::vector<double>& delta,
                                                   double alpha) {
  if (delta.empty()) throw Error(ErrorKind::ValidationError, "empty gap list");
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw Error(ErrorKind::RangeViolation, "alpha outside [0,1]");
  const std::size_t n = delta.size();
  const auto k = static_cast<std::size_t>(std::llround(alpha * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return delta[a] > delta[b]; });
  TwoAgentOracle out{std::numeric_limits<double>::infinity(), std::vector<int>(n, 1)};
  for (std::size_t i = 0; i < k; ++i) {
    out.assignment[order[i]] = 0;
    out.threshold = delta[order[i]];
  }
  return out;
}

struct ShadowPrices {
  std::vector<double> lambdas;  // shifted so the smallest finite value is 0
  double threshold = std::numeric_limits<double>::quiet_NaN();  // lambda_1 - lambda_2
};

struct ConstrainedOracle {
  std::vector<int> assignment;
  double value = 0.0;
  std::vector<int> counts;
  ShadowPrices prices;
};

/// Exact count-constrained optimum over a finite sample. Counts are the
/// largest-remainder apportionment of alpha_a n; with free agents those counts
/// become upper bounds and each free agent may take any number of records.
inline ConstrainedOracle oracle_constrained_general(const MuTable& mu,
                                                    const CapacityProfile& profile) {
  if (mu.rows() == 0) throw Error(ErrorKind::InfeasibleCounts, "empty table");
  if (static_cast<std::size_t>(mu.cols()) != profile.size())
    throw Error(ErrorKind::DimensionMismatch, "table width differs from profile");
  const int n = static_cast<int>(mu.rows());
  const CountBounds bounds = exact_bounds(profile, QueueBank(profile, 0.0), n);
  BatchPlan plan;
  try {
    plan = assign_batch(mu, bounds);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Infeasible)
      throw Error(ErrorKind::InfeasibleCounts, e.what());
    throw;
  }
  ConstrainedOracle out;
  out.assignment = plan.assignment;
  out.counts = plan.counts;
  out.value = assignment_value(mu, plan.assignment);
  out.prices.lambdas = plan.shadow_prices;
  double lowest = std::numeric_limits<double>::infinity();
  for (double l : out.prices.lambdas)
    if (std::isfinite(l)) lowest = std::min(lowest, l);
  for (double& l : out.prices.lambdas)
    if (std::isfinite(l)) l -= lowest;
  if (out.prices.lambdas.size() == 2)
    out.prices.threshold = out.prices.lambdas[0] - out.prices.lambdas[1];
  return out;
}

/// Closed-form gain of the constrained oracle over random assignment when the
/// capacity admits every record with a positive gap for agent 1 and every
/// record with a negative gap for agent 2:
///   (1 - alpha) p1 E[gap | gap > 0] + alpha p2 E[-gap | gap < 0].
inline double disagreement_gain(const std::vector<double>& delta, double alpha) {
  if (delta.empty()) throw Error(ErrorKind::ValidationError, "empty gap list");
  const double n = static_cast<double>(delta.size());
  double positive = 0.0, negative = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (double d : delta) {
    if (d > 0) {
      positive += d;
      ++n_pos;
    } else if (d < 0) {
      negative -= d;
      ++n_neg;
    }
  }
  const double p1 = static_cast<double>(n_pos) / n;
  const double p2 = static_cast<double>(n_neg) / n;
  if (alpha < p1 - 1e-12 || alpha > 1.0 - p2 + 1e-12)
    throw Error(ErrorKind::CapacityOutsideWindow,
                "alpha must lie in [p1, 1 - p2] = [" + std::to_string(p1) + ", " +
                    std::to_string(1.0 - p2) + "]");
  return (1.0 - alpha) * positive / n + alpha * negative / n;
}

/// CSV `record_index,assigned_agent,mu_assigned` (1-based agents).
inline void write_oracle_csv(std::ostream& out, const MuTable& mu,
                             const std::vector<int>& assignment) {
  out << "record_index,assigned_agent,mu_assigned\n";
  for (std::size_t t = 0; t < assignment.size(); ++t)
    out << t << ',' << assignment[t] + 1 << ','
        << detail::format_double(mu(static_cast<Eigen::Index>(t), assignment[t])) << '\n';
}

}  // namespace capbandit
