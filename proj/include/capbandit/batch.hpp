#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <ostream>
#include <vector>

#include "capbandit/capacity.hpp"
#include "capbandit/domain.hpp"
#include "capbandit/error.hpp"
#include "capbandit/flow.hpp"

namespace capbandit {

/// Integer counts proportional to `weights`, summing to `total`: floors first,
/// then leftover units by largest fractional remainder, ties to the lowest
/// index.
inline std::vector<int> largest_remainder(const std::vector<double>& weights, int total) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<int> counts(weights.size(), 0);
  if (total <= 0 || sum <= 0.0) return counts;
  std::vector<double> remainder(weights.size());
  int assigned = 0;
  for (std::size_t a = 0; a < weights.size(); ++a) {
    const double share = weights[a] / sum * total;
    counts[a] = static_cast<int>(std::floor(share + 1e-9));
    remainder[a] = share - counts[a];
    assigned += counts[a];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) {
    return remainder[x] > remainder[y] + 1e-12;
  });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % order.size()) {
    if (weights[order[k]] <= 0.0) continue;
    ++counts[order[k]];
    ++assigned;
  }
  return counts;
}

/// Backlog-adjusted target counts for a batch of size B: d_a = max(B alpha_a -
/// Q_a, 0) over constrained agents, rescaled to sum to B and rounded by largest
/// remainder. Unconstrained agents get 0 here.
inline std::vector<int> apportion_counts(const CapacityProfile& profile,
                                         const QueueBank& qb, int batch_size) {
  if (batch_size < 1)
    throw Error(ErrorKind::ValidationError, "batch size must be >= 1");
  std::vector<double> desired(profile.size(), 0.0);
  double sum = 0.0;
  for (std::size_t a = 0; a < profile.size(); ++a) {
    if (profile.is_free(a)) continue;
    desired[a] = std::max(batch_size * profile.alphas[a] - qb[a], 0.0);
    sum += desired[a];
  }
  if (sum <= 0.0)
    for (std::size_t a = 0; a < profile.size(); ++a)
      desired[a] = profile.is_free(a) ? 0.0 : profile.alphas[a];
  return largest_remainder(desired, batch_size);
}

/// Per-agent bounds used by the batch matching.
struct CountBounds {
  std::vector<int> lower;
  std::vector<int> upper;

  static CountBounds exact(const std::vector<int>& counts) { return {counts, counts}; }
};

/// Bounds for an online batch. Each eligible constrained agent is guaranteed
/// floor(max(B alpha_a - Q_a, 0)) tasks; the R seats left over are flexible
/// and go to whichever eligible agents score best after the queue penalty.
/// With a free agent present the guarantees are dropped and only the upper
/// bounds stay. For B = 1 this reduces to argmax(mu - eta Q).
inline CountBounds count_bounds(const CapacityProfile& profile, const QueueBank& qb,
                                int batch_size) {
  if (batch_size < 1)
    throw Error(ErrorKind::ValidationError, "batch size must be >= 1");
  const std::size_t agents = profile.size();
  CountBounds b{std::vector<int>(agents, 0), std::vector<int>(agents, 0)};
  int guaranteed = 0;
  for (std::size_t a = 0; a < agents; ++a) {
    if (profile.is_free(a) || !profile.eligible(a)) continue;
    const double desired = std::max(batch_size * profile.alphas[a] - qb[a], 0.0);
    b.lower[a] = std::min(static_cast<int>(std::floor(desired + 1e-9)), batch_size);
    guaranteed += b.lower[a];
  }
  const int flexible = batch_size - guaranteed;
  for (std::size_t a = 0; a < agents; ++a) {
    if (!profile.eligible(a)) continue;
    b.upper[a] = profile.is_free(a) ? batch_size : b.lower[a] + flexible;
  }
  if (profile.has_free_agent()) std::fill(b.lower.begin(), b.lower.end(), 0);
  return b;
}

/// How a batch turns capacity targets into per-agent count constraints.
///   Bounded: count_bounds above (guaranteed seats plus flexible seats).
///   Exact:   the apportioned counts are hard; with a free agent they become
///            upper bounds and the free agent may take up to B tasks.
enum class BatchCountRule { Bounded, Exact };

inline CountBounds exact_bounds(const CapacityProfile& profile, const QueueBank& qb,
                                int batch_size) {
  CountBounds b = CountBounds::exact(apportion_counts(profile, qb, batch_size));
  if (profile.has_free_agent()) {
    std::fill(b.lower.begin(), b.lower.end(), 0);
    for (std::size_t a = 0; a < profile.size(); ++a)
      if (profile.is_free(a)) b.upper[a] = batch_size;
  }
  return b;
}

inline CountBounds batch_bounds(BatchCountRule rule, const CapacityProfile& profile,
                                const QueueBank& qb, int batch_size) {
  return rule == BatchCountRule::Exact ? exact_bounds(profile, qb, batch_size)
                                       : count_bounds(profile, qb, batch_size);
}

struct BatchPlan {
  std::vector<int> counts;      // tasks per agent
  std::vector<int> assignment;  // agent per task
  double total_score = 0.0;
  std::vector<double> shadow_prices;  // -potential of each agent node, unscaled
};

inline constexpr double kScoreScale = 1e6;  // coarsest cost resolution used
inline constexpr double kMaxScore = 1e3;

/// Score-maximizing assignment of the rows of `scores` (tasks) to columns
/// (agents) such that every agent a receives between lower[a] and upper[a]
/// tasks. Solved exactly as a min-cost flow on integer costs -round(score * s).
/// The scale s is the largest power of two that keeps every path cost inside
/// 64-bit range (never below 1e6), so scores closer than about 1e-15 relative
/// are the only ones treated as ties.
inline BatchPlan assign_batch(const Matrix& scores, const CountBounds& bounds) {
  const int tasks = static_cast<int>(scores.rows());
  const int agents = static_cast<int>(scores.cols());
  if (static_cast<int>(bounds.lower.size()) != agents ||
      static_cast<int>(bounds.upper.size()) != agents)
    throw Error(ErrorKind::CountMismatch, "bounds length differs from agent count");
  long lower_sum = 0, upper_sum = 0;
  for (int a = 0; a < agents; ++a) {
    if (bounds.lower[a] < 0 || bounds.upper[a] < bounds.lower[a])
      throw Error(ErrorKind::CountMismatch, "invalid bounds");
    lower_sum += bounds.lower[a];
    upper_sum += bounds.upper[a];
  }
  if (lower_sum > tasks || upper_sum < tasks)
    throw Error(ErrorKind::Infeasible, "bounds cannot cover the batch");
  for (int t = 0; t < tasks; ++t)
    for (int a = 0; a < agents; ++a) {
      const double s = scores(t, a);
      if (!std::isfinite(s) || std::abs(s) > kMaxScore)
        throw Error(ErrorKind::ScoreOverflow, "score magnitude above 1e3");
    }

  // Nodes: source, tasks, agents, sink.
  const int source = 0, first_agent = 1 + tasks, sink = first_agent + agents;
  FlowNetwork net(sink + 1, source, sink);
  using Int = FlowNetwork::Int;
  double max_abs = 0.0;
  for (int t = 0; t < tasks; ++t)
    for (int a = 0; a < agents; ++a) max_abs = std::max(max_abs, std::abs(scores(t, a)));
  const auto fits = [&](double scaled, Int w) {
    const long double arc = static_cast<long double>(scaled + 1.0) * w + w;
    const long double total = arc * 2.0L * (agents + 2) * (tasks + 1);
    return total < 1e18L;
  };
  // Secondary key: among score-optimal plans prefer lower agent indices. The
  // weight exceeds the largest possible sum of index offsets, so the primary
  // objective is untouched.
  Int weight = static_cast<Int>(tasks) * agents + 1;
  const int top = 52 - (max_abs > 0.0 ? std::ilogb(max_abs) + 1 : 0);
  double scale = 0.0;
  for (int k = top; std::ldexp(1.0, k) >= kScoreScale; --k) {
    if (fits(max_abs * std::ldexp(1.0, k), weight)) {
      scale = std::ldexp(1.0, k);
      break;
    }
  }
  if (scale == 0.0) {
    scale = kScoreScale;
    if (!fits(max_abs * scale, weight)) weight = 1;
  }
  Int max_scaled = 1;
  for (int t = 0; t < tasks; ++t)
    for (int a = 0; a < agents; ++a)
      max_scaled = std::max<Int>(max_scaled, std::llabs(std::llround(scores(t, a) * scale)));
  // Any residual cycle that trades a guaranteed seat for a flexible one passes
  // at most `agents` task arcs, so this bonus keeps guaranteed seats filled.
  const Int bonus = 2 * (agents + 1) * (max_scaled * weight + weight);
  std::vector<std::vector<int>> task_arcs(static_cast<std::size_t>(tasks));
  for (int t = 0; t < tasks; ++t) {
    net.add_arc(source, 1 + t, 1, 0);
    for (int a = 0; a < agents; ++a) {
      if (bounds.upper[a] == 0) {
        task_arcs[static_cast<std::size_t>(t)].push_back(-1);
        continue;
      }
      Int cost = -std::llround(scores(t, a) * scale) * weight;
      if (weight > 1) cost += a;
      task_arcs[static_cast<std::size_t>(t)].push_back(
          net.add_arc(1 + t, first_agent + a, 1, cost));
    }
  }
  for (int a = 0; a < agents; ++a) {
    const int lo = bounds.lower[a], hi = bounds.upper[a];
    if (lo == hi) {
      if (hi > 0) net.add_arc(first_agent + a, sink, hi, -bonus);
      continue;
    }
    if (lo > 0) net.add_arc(first_agent + a, sink, lo, -bonus);
    net.add_arc(first_agent + a, sink, hi - lo, 0);
  }
  const auto result = mcmf_solve(net);
  if (result.flow != tasks) throw Error(ErrorKind::Infeasible, "flow below batch size");

  BatchPlan plan;
  plan.counts.assign(static_cast<std::size_t>(agents), 0);
  plan.assignment.assign(static_cast<std::size_t>(tasks), -1);
  for (int t = 0; t < tasks; ++t)
    for (int a = 0; a < agents; ++a) {
      const int id = task_arcs[static_cast<std::size_t>(t)][static_cast<std::size_t>(a)];
      if (id >= 0 && net.flow(id) > 0) {
        plan.assignment[static_cast<std::size_t>(t)] = a;
        ++plan.counts[static_cast<std::size_t>(a)];
        plan.total_score += scores(t, a);
      }
    }
  for (int a = 0; a < agents; ++a)
    if (plan.counts[static_cast<std::size_t>(a)] < bounds.lower[a])
      throw Error(ErrorKind::Infeasible, "guaranteed seats left empty");
  const auto& h = net.potentials();
  for (int a = 0; a < agents; ++a) {
    const auto pot = h[static_cast<std::size_t>(first_agent + a)];
    plan.shadow_prices.push_back(
        pot >= FlowNetwork::kInf
            ? std::numeric_limits<double>::quiet_NaN()
            : -static_cast<double>(pot) / (scale * static_cast<double>(weight)));
  }
  return plan;
}

/// Exact per-agent counts.
inline BatchPlan assign_batch(const Matrix& scores, const std::vector<int>& counts) {
  if (static_cast<Eigen::Index>(counts.size()) != scores.cols())
    throw Error(ErrorKind::CountMismatch, "count vector length");
  long total = 0;
  for (int c : counts) {
    if (c < 0) throw Error(ErrorKind::CountMismatch, "negative count");
    total += c;
  }
  if (total != scores.rows())
    throw Error(ErrorKind::CountMismatch, "counts do not sum to the batch size");
  return assign_batch(scores, CountBounds::exact(counts));
}

/// CSV `batch_index,task_index,agent,score` (1-based agents).
inline void write_batch_plan_csv(std::ostream& out, std::size_t batch_index,
                                 const BatchPlan& plan, const Matrix& scores,
                                 bool header) {
  if (header) out << "batch_index,task_index,agent,score\n";
  for (std::size_t t = 0; t < plan.assignment.size(); ++t) {
    const int a = plan.assignment[t];
    out << batch_index << ',' << t << ',' << a + 1 << ','
        << detail::format_double(scores(static_cast<Eigen::Index>(t), a)) << '\n';
  }
}

}  // namespace capbandit
