#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <istream>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "capbandit/batch.hpp"
#include "capbandit/capacity.hpp"
#include "capbandit/domain.hpp"
#include "capbandit/error.hpp"
#include "capbandit/policy.hpp"
#include "capbandit/reward_models.hpp"
#include "capbandit/synth.hpp"

namespace capbandit {

struct ModelOptions {
  LogisticOptions logistic;
  TreeOptions tree;
};

struct ExperimentConfig {
  std::vector<PolicyKind> policies{PolicyKind::LogisticGreedy, PolicyKind::LogisticTS,
                                   PolicyKind::TreeGreedy, PolicyKind::TreeTS,
                                   PolicyKind::RandomNonContextual};
  std::vector<CapacityProfile> grid;
  double eta = 0.5;
  int runs = 100;
  std::uint64_t base_seed = 0;
  int batch_size = 0;       // 0: fully online
  BatchCountRule batch_rule = BatchCountRule::Bounded;
  std::size_t rounds = 0;   // 0: the whole log
  ModelOptions model;
  bool bias = true;
  bool standardize = false;
  bool keep_trace = false;
  bool offline_benchmark = false;
  int jobs = 1;

  void validate() const {
    if (runs < 1) throw Error(ErrorKind::ValidationError, "runs must be >= 1");
    if (!(eta >= 0.0)) throw Error(ErrorKind::ValidationError, "eta must be >= 0");
    if (batch_size < 0) throw Error(ErrorKind::ValidationError, "batch size must be >= 0");
    if (jobs < 1) throw Error(ErrorKind::ValidationError, "jobs must be >= 1");
    for (const auto& p : grid) validate_capacity_profile(p.alphas, p.unconstrained);
  }
};

/// Default grid {0, 0.2, 0.4, 0.5, 0.6, 0.8, 1} for agent 1 of two agents.
inline std::vector<CapacityProfile> default_two_agent_grid() {
  std::vector<CapacityProfile> grid;
  for (double a : {0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0}) grid.push_back(two_agent_profile(a));
  return grid;
}

struct TraceRow {
  std::size_t t = 0;
  int agent = 0;
  int reward = 0;
  std::vector<double> scores;  // model scores before the queue penalty
  std::vector<double> queue;   // Q_t, before this round's update
};

struct RunResult {
  double error_rate = 0.0;
  std::vector<double> fractions;
  std::vector<int> counts;
  std::vector<double> final_queue;
  std::uint64_t model_updates = 0;
  std::size_t rounds = 0;
  std::vector<TraceRow> trace;
  std::vector<std::vector<int>> batch_counts;  // per batch, batched runs only
  std::vector<CountBounds> batch_bounds;
};

/// Reward table used by the oracle policies: the true accuracies when the log
/// carries them, otherwise per-agent tree ensembles fitted on the full log.
inline MuTable reference_mu_table(const TaskLog& log, const ModelOptions& model = {}) {
  const auto n = static_cast<Eigen::Index>(log.size());
  const auto agents = static_cast<Eigen::Index>(log.agent_count());
  MuTable mu(n, agents);
  if (log.has_true_mu()) {
    for (Eigen::Index t = 0; t < n; ++t)
      for (Eigen::Index a = 0; a < agents; ++a)
        mu(t, a) = log.records[static_cast<std::size_t>(t)].true_mu[static_cast<std::size_t>(a)];
    return mu;
  }
  for (Eigen::Index a = 0; a < agents; ++a) {
    TreeOptions opt = model.tree;
    opt.refit_period = static_cast<int>(std::max<std::size_t>(log.size(), 1));
    TreeEnsemble ens(opt, 0, static_cast<std::uint64_t>(a));
    for (const auto& rec : log.records) ens.update(rec.context, rec.rewards[static_cast<std::size_t>(a)]);
    for (Eigen::Index t = 0; t < n; ++t)
      mu(t, a) = ens.predict(log.records[static_cast<std::size_t>(t)].context);
  }
  return mu;
}

namespace detail {

inline AgentModel make_model(PolicyKind kind, const ModelOptions& opt, std::size_t dim,
                             std::uint64_t seed, std::size_t agent) {
  switch (kind) {
    case PolicyKind::LogisticGreedy:
    case PolicyKind::LogisticTS:
      return AgentModel(LogisticPosterior(dim, opt.logistic));
    case PolicyKind::TreeGreedy:
    case PolicyKind::TreeTS:
      return AgentModel(TreeEnsemble(opt.tree, seed, agent));
    default:
      return AgentModel(MarginalMean{});
  }
}

inline bool uses_models(PolicyKind kind) {
  return is_contextual(kind) || kind == PolicyKind::LearnedNonContextual;
}

inline void finish_result(RunResult& r, std::size_t rounds, double reward_sum,
                          const QueueBank& qb) {
  r.rounds = rounds;
  r.error_rate = rounds ? 1.0 - reward_sum / static_cast<double>(rounds) : 0.0;
  r.fractions.resize(r.counts.size());
  for (std::size_t a = 0; a < r.counts.size(); ++a)
    r.fractions[a] = rounds ? r.counts[a] / static_cast<double>(rounds) : 0.0;
  r.final_queue = qb.values();
}

}  // namespace detail

/// Sequential assignment loop: score, select with the queue penalty, reveal the
/// chosen agent's reward only, update that agent's model, step the queues.
/// The simulator can be checkpointed between rounds and resumed bit-exactly.
class OnlineSimulator {
 public:
  /// `log` must already be in run order; features are prepared here.
  OnlineSimulator(const TaskLog& log, const ExperimentConfig& cfg, PolicyKind kind,
                  CapacityProfile profile, std::uint64_t seed)
      : log_(prepare_features(log, cfg.bias, cfg.standardize)),
        cfg_(cfg),
        kind_(kind),
        qb_(std::move(profile), cfg.eta),
        rng_(make_rng(seed, 0x504f4c49ULL)),
        seed_(seed) {
    if (log_.records.empty()) throw Error(ErrorKind::ValidationError, "empty log");
    if (qb_.size() != log_.agent_count())
      throw Error(ErrorKind::DimensionMismatch, "profile size differs from agent count");
    rounds_ = cfg.rounds ? std::min(cfg.rounds, log_.size()) : log_.size();
    counts_.assign(qb_.size(), 0);
    if (detail::uses_models(kind_))
      for (std::size_t a = 0; a < qb_.size(); ++a)
        models_.push_back(detail::make_model(kind_, cfg.model, log_.feature_dim, seed, a));
    if (kind_ == PolicyKind::OracleConstrained || kind_ == PolicyKind::OracleUnconstrained)
      mu_ = reference_mu_table(log_, cfg.model);
  }

  bool done() const { return t_ >= rounds_; }
  std::size_t round() const { return t_; }
  const QueueBank& queues() const { return qb_; }
  const std::vector<AgentModel>& models() const { return models_; }

  void step() {
    const auto& rec = log_.records[t_];
    const std::size_t agents = qb_.size();
    std::vector<double> scores(agents, 0.0);
    std::size_t chosen = 0;
    switch (kind_) {
      case PolicyKind::RandomNonContextual:
        chosen = random_select(qb_.profile(), rng_);
        break;
      case PolicyKind::OracleUnconstrained:
        for (std::size_t a = 0; a < agents; ++a)
          scores[a] = mu_(static_cast<Eigen::Index>(t_), static_cast<Eigen::Index>(a));
        chosen = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) -
                                          scores.begin());
        break;
      case PolicyKind::OracleConstrained:
        for (std::size_t a = 0; a < agents; ++a)
          scores[a] = mu_(static_cast<Eigen::Index>(t_), static_cast<Eigen::Index>(a));
        chosen = select(scores, qb_);
        break;
      default: {
        const auto mode = uses_thompson(kind_) ? ScoreMode::Thompson : ScoreMode::Greedy;
        for (std::size_t a = 0; a < agents; ++a)
          scores[a] = models_[a].score(rec.context, mode, rng_);
        chosen = select(scores, qb_);
      }
    }
    const int reward = rec.rewards[chosen];
    if (cfg_.keep_trace)
      trace_.push_back({t_, static_cast<int>(chosen), reward, scores, qb_.values()});
    if (!models_.empty()) models_[chosen].update(rec.context, reward);
    qb_.step(chosen);
    ++counts_[chosen];
    reward_sum_ += reward;
    ++t_;
  }

  RunResult run() {
    while (!done()) step();
    return result();
  }

  RunResult result() const {
    RunResult r;
    r.counts = counts_;
    for (const auto& m : models_) r.model_updates += m.updates();
    r.trace = trace_;
    detail::finish_result(r, t_, reward_sum_, qb_);
    return r;
  }

  /// Versioned text checkpoint of everything that evolves during a run.
  /// Trace rows are not part of the checkpoint.
  void save_checkpoint(std::ostream& out) const {
    out << "capbandit-checkpoint 1\n"
        << "policy " << to_string(kind_) << "\nseed " << seed_ << "\nround " << t_
        << "\nrounds " << rounds_ << "\nreward_sum ";
    serial::put(out, reward_sum_);
    out << "\nqueues " << qb_.size();
    for (double q : qb_.values()) {
      out << ' ';
      serial::put(out, q);
    }
    out << "\ncounts";
    for (int c : counts_) out << ' ' << c;
    out << "\nrng " << rng_ << "\nmodels " << models_.size() << '\n';
    for (const auto& m : models_) m.save(out);
    out << "end\n";
  }

  void load_checkpoint(std::istream& in) {
    serial::expect(in, "capbandit-checkpoint");
    if (serial::get_int<int>(in) != 1)
      throw Error(ErrorKind::CheckpointError, "unsupported checkpoint version");
    serial::expect(in, "policy");
    if (serial::token(in) != to_string(kind_))
      throw Error(ErrorKind::CheckpointError, "checkpoint policy differs");
    serial::expect(in, "seed");
    if (serial::get_int<std::uint64_t>(in) != seed_)
      throw Error(ErrorKind::CheckpointError, "checkpoint seed differs");
    serial::expect(in, "round");
    const auto t = serial::get_int<std::size_t>(in);
    serial::expect(in, "rounds");
    if (serial::get_int<std::size_t>(in) != rounds_)
      throw Error(ErrorKind::CheckpointError, "checkpoint round count differs");
    serial::expect(in, "reward_sum");
    const double reward_sum = serial::get_double(in);
    serial::expect(in, "queues");
    const auto agents = serial::get_int<std::size_t>(in);
    if (agents != qb_.size())
      throw Error(ErrorKind::CheckpointError, "checkpoint agent count differs");
    std::vector<double> q(agents);
    for (auto& v : q) v = serial::get_double(in);
    serial::expect(in, "counts");
    std::vector<int> counts(agents);
    for (auto& c : counts) c = serial::get_int<int>(in);
    serial::expect(in, "rng");
    Rng rng;
    if (!(in >> rng)) throw Error(ErrorKind::CheckpointError, "bad rng state");
    serial::expect(in, "models");
    const auto count = serial::get_int<std::size_t>(in);
    if (count != models_.size())
      throw Error(ErrorKind::CheckpointError, "checkpoint model count differs");
    std::vector<AgentModel> models;
    for (std::size_t a = 0; a < count; ++a) models.push_back(AgentModel::load(in));
    serial::expect(in, "end");

    t_ = t;
    reward_sum_ = reward_sum;
    qb_ = QueueBank(qb_.profile(), qb_.eta(), std::move(q));
    counts_ = std::move(counts);
    rng_ = rng;
    models_ = std::move(models);
    trace_.clear();
  }

 private:
  TaskLog log_;
  ExperimentConfig cfg_;
  PolicyKind kind_;
  QueueBank qb_;
  Rng rng_;
  std::uint64_t seed_;
  std::vector<AgentModel> models_;
  MuTable mu_;
  std::size_t rounds_ = 0;
  std::size_t t_ = 0;
  std::vector<int> counts_;
  double reward_sum_ = 0.0;
  std::vector<TraceRow> trace_;
};

inline RunResult run_online(const TaskLog& log, const ExperimentConfig& cfg, PolicyKind kind,
                            const CapacityProfile& profile, std::uint64_t seed) {
  return OnlineSimulator(log, cfg, kind, profile, seed).run();
}

/// Mini-batch loop: score every (task, agent) pair in the batch, match under
/// count bounds with queue-adjusted scores, reveal the chosen rewards, update
/// the models in task order, then apply the batch queue update.
inline RunResult run_batched(const TaskLog& raw, const ExperimentConfig& cfg, PolicyKind kind,
                             const CapacityProfile& profile, std::uint64_t seed,
                             int batch_size) {
  if (batch_size < 1) throw Error(ErrorKind::ValidationError, "batch size must be >= 1");
  const TaskLog log = prepare_features(raw, cfg.bias, cfg.standardize);
  if (log.records.empty()) throw Error(ErrorKind::ValidationError, "empty log");
  const std::size_t agents = log.agent_count();
  if (profile.size() != agents)
    throw Error(ErrorKind::DimensionMismatch, "profile size differs from agent count");
  const std::size_t rounds = cfg.rounds ? std::min(cfg.rounds, log.size()) : log.size();

  QueueBank qb(profile, cfg.eta);
  Rng rng = make_rng(seed, 0x504f4c49ULL);
  std::vector<AgentModel> models;
  if (detail::uses_models(kind))
    for (std::size_t a = 0; a < agents; ++a)
      models.push_back(detail::make_model(kind, cfg.model, log.feature_dim, seed, a));
  MuTable mu;
  if (kind == PolicyKind::OracleConstrained || kind == PolicyKind::OracleUnconstrained)
    mu = reference_mu_table(log, cfg.model);
  const auto mode = uses_thompson(kind) ? ScoreMode::Thompson : ScoreMode::Greedy;

  RunResult r;
  r.counts.assign(agents, 0);
  double reward_sum = 0.0;
  for (std::size_t start = 0; start < rounds; start += static_cast<std::size_t>(batch_size)) {
    const int size = static_cast<int>(std::min<std::size_t>(batch_size, rounds - start));
    Matrix scores(size, static_cast<Eigen::Index>(agents));
    std::vector<int> assignment(static_cast<std::size_t>(size));
    std::vector<int> counts(agents, 0);
    if (kind == PolicyKind::RandomNonContextual || kind == PolicyKind::OracleUnconstrained) {
      scores.setZero();
      for (int i = 0; i < size; ++i) {
        std::size_t a = 0;
        if (kind == PolicyKind::RandomNonContextual) {
          a = random_select(profile, rng);
        } else {
          const auto row = mu.row(static_cast<Eigen::Index>(start) + i);
          Eigen::Index best = 0;
          for (Eigen::Index b = 1; b < row.size(); ++b)
            if (row[b] > row[best]) best = b;
          a = static_cast<std::size_t>(best);
          for (Eigen::Index b = 0; b < row.size(); ++b) scores(i, b) = row[b];
        }
        assignment[static_cast<std::size_t>(i)] = static_cast<int>(a);
        ++counts[a];
      }
    } else {
      for (int i = 0; i < size; ++i) {
        const auto& rec = log.records[start + static_cast<std::size_t>(i)];
        for (std::size_t a = 0; a < agents; ++a)
          scores(i, static_cast<Eigen::Index>(a)) =
              kind == PolicyKind::OracleConstrained
                  ? mu(static_cast<Eigen::Index>(start) + i, static_cast<Eigen::Index>(a))
                  : models[a].score(rec.context, mode, rng);
      }
      Matrix adjusted = scores;
      for (std::size_t a = 0; a < agents; ++a)
        adjusted.col(static_cast<Eigen::Index>(a)).array() -= cfg.eta * qb[a];
      const auto bounds = batch_bounds(cfg.batch_rule, profile, qb, size);
      const auto plan = assign_batch(adjusted, bounds);
      assignment = plan.assignment;
      counts = plan.counts;
      if (cfg.keep_trace) r.batch_bounds.push_back(bounds);
    }
    for (int i = 0; i < size; ++i) {
      const std::size_t t = start + static_cast<std::size_t>(i);
      const auto& rec = log.records[t];
      const auto a = static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)]);
      const int reward = rec.rewards[a];
      if (cfg.keep_trace) {
        std::vector<double> row(agents);
        for (std::size_t b = 0; b < agents; ++b) row[b] = scores(i, static_cast<Eigen::Index>(b));
        r.trace.push_back({t, static_cast<int>(a), reward, std::move(row), qb.values()});
      }
      if (!models.empty()) models[a].update(rec.context, reward);
      ++r.counts[a];
      reward_sum += reward;
    }
    qb.batch_step(counts, size);
    if (cfg.keep_trace) r.batch_counts.push_back(counts);
  }
  for (const auto& m : models) r.model_updates += m.updates();
  detail::finish_result(r, rounds, reward_sum, qb);
  return r;
}

enum class ModelFamily { Logistic, Tree };

/// Optimistic offline benchmark: fit every agent's model on all records with
/// their counterfactual rewards, then assign each record to the argmax of the
/// fitted means with no capacity constraint. Returns the error rate.
inline double run_offline_benchmark(const TaskLog& raw, ModelFamily family,
                                    const ExperimentConfig& cfg = {}) {
  const TaskLog log = prepare_features(raw, cfg.bias, cfg.standardize);
  if (log.records.empty()) throw Error(ErrorKind::ValidationError, "empty log");
  const std::size_t agents = log.agent_count();
  std::vector<AgentModel> models;
  for (std::size_t a = 0; a < agents; ++a) {
    if (family == ModelFamily::Logistic) {
      models.emplace_back(LogisticPosterior(log.feature_dim, cfg.model.logistic));
    } else {
      TreeOptions opt = cfg.model.tree;
      opt.refit_period = static_cast<int>(log.size());
      models.emplace_back(TreeEnsemble(opt, cfg.base_seed, a));
    }
    for (const auto& rec : log.records) models[a].update(rec.context, rec.rewards[a]);
  }
  double reward_sum = 0.0;
  for (const auto& rec : log.records) {
    std::size_t best = 0;
    double best_mu = -1.0;
    for (std::size_t a = 0; a < agents; ++a) {
      const double m = models[a].predict(rec.context);
      if (m > best_mu) {
        best_mu = m;
        best = a;
      }
    }
    reward_sum += rec.rewards[best];
  }
  return 1.0 - reward_sum / static_cast<double>(log.size());
}

/// Realized error of a fixed assignment on a log.
inline double realized_error(const TaskLog& log, const std::vector<int>& assignment) {
  double sum = 0.0;
  for (std::size_t t = 0; t < assignment.size(); ++t)
    sum += log.records[t].rewards[static_cast<std::size_t>(assignment[t])];
  return 1.0 - sum / static_cast<double>(assignment.size());
}

// ---------------------------------------------------------------------------

struct RegretReport {
  std::vector<double> cumulative;  // modified (queue-penalized) regret after each round
  double total = 0.0;
  double oracle_value = 0.0;       // count-constrained oracle mean reward
  double plain_shortfall = 0.0;    // T * oracle_value - sum of mu(t, a_t)
  bool approximate = false;        // mu came from a fitted model, not the truth
};

/// Constrained-oracle value on a table; the sorting route for two constrained
/// agents, the flow solver otherwise.
inline double constrained_oracle_value(const MuTable& mu, const CapacityProfile& profile) {
  if (mu.cols() == 2 && !profile.has_free_agent()) {
    std::vector<double> delta(static_cast<std::size_t>(mu.rows()));
    for (Eigen::Index t = 0; t < mu.rows(); ++t)
      delta[static_cast<std::size_t>(t)] = mu(t, 0) - mu(t, 1);
    return assignment_value(mu, oracle_constrained_two_agent(delta, profile.alphas[0]).assignment);
  }
  return oracle_constrained_general(mu, profile).value;
}

/// Per-round shortfall of mu_{a_t}(x_t) - eta Q_{t,a_t} against the best
/// eligible agent under the same realized queue state, summed over rounds.
inline RegretReport compute_regret(const std::vector<TraceRow>& trace, const MuTable& mu,
                                   const CapacityProfile& profile, double eta,
                                   bool approximate = false) {
  RegretReport rep;
  rep.approximate = approximate;
  double chosen_sum = 0.0;
  for (const auto& row : trace) {
    const auto t = static_cast<Eigen::Index>(row.t);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < profile.size(); ++a) {
      if (!profile.eligible(a)) continue;
      best = std::max(best, mu(t, static_cast<Eigen::Index>(a)) - eta * row.queue[a]);
    }
    const double chosen = mu(t, row.agent) - eta * row.queue[static_cast<std::size_t>(row.agent)];
    rep.total += best - chosen;
    rep.cumulative.push_back(rep.total);
    chosen_sum += mu(t, row.agent);
  }
  if (!trace.empty()) {
    rep.oracle_value = constrained_oracle_value(mu.topRows(static_cast<Eigen::Index>(trace.size())), profile);
    rep.plain_shortfall = rep.oracle_value * static_cast<double>(trace.size()) - chosen_sum;
  }
  return rep;
}

/// Least-squares slope of y against 1..n.
inline double linear_slope(const std::vector<double>& y) {
  const double n = static_cast<double>(y.size());
  if (y.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double x = static_cast<double>(i + 1);
    sx += x;
    sy += y[i];
    sxx += x * x;
    sxy += x * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------

struct SweepRow {
  std::string policy;
  CapacityProfile profile;
  double mean_error = 0.0;
  double std_error = 0.0;  // standard deviation of the per-run errors
  std::vector<double> mean_fractions;
  std::vector<double> errors;  // one per run, in run order

  /// Standard error of the mean.
  double sem() const {
    return errors.size() > 1 ? std_error / std::sqrt(static_cast<double>(errors.size())) : 0.0;
  }
};

struct SweepTable {
  std::vector<SweepRow> rows;

  const SweepRow* find(std::string_view policy, double alpha1) const {
    for (const auto& r : rows)
      if (r.policy == policy && std::abs(r.profile.alphas[0] - alpha1) < 1e-12) return &r;
    return nullptr;
  }
};

inline std::string profile_label(const CapacityProfile& p) {
  std::string s;
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (a) s += '/';
    s += p.is_free(a) ? std::string("free") : detail::format_double(p.alphas[a]);
  }
  return s;
}

inline void summarize(SweepRow& row, const std::vector<RunResult>& runs) {
  const double n = static_cast<double>(runs.size());
  row.errors.clear();
  for (const auto& r : runs) row.errors.push_back(r.error_rate);
  row.mean_error = std::accumulate(row.errors.begin(), row.errors.end(), 0.0) / n;
  double ss = 0.0;
  for (double e : row.errors) ss += (e - row.mean_error) * (e - row.mean_error);
  row.std_error = runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  row.mean_fractions.assign(runs.front().fractions.size(), 0.0);
  for (const auto& r : runs)
    for (std::size_t a = 0; a < r.fractions.size(); ++a) row.mean_fractions[a] += r.fractions[a] / n;
}

/// Run `count` independent jobs on up to `jobs` threads; results land at their
/// own index so the reduction order never depends on scheduling.
template <typename Fn>
auto parallel_map(std::size_t count, int jobs, Fn fn) {
  using R = decltype(fn(std::size_t{0}));
  std::vector<std::optional<R>> out(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i].emplace(fn(i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  if (threads == 1 || count < 2) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < std::min(threads, count); ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<R> result;
  result.reserve(count);
  for (auto& o : out) result.push_back(std::move(*o));
  return result;
}

/// Capacity sweep: for every (policy, profile) cell, `runs` executions on
/// permutations seeded base_seed + k. Optional offline-benchmark rows repeat
/// the single offline error at every profile.
inline SweepTable run_sweep(const TaskLog& log, const ExperimentConfig& cfg) {
  cfg.validate();
  const auto grid = cfg.grid.empty() ? default_two_agent_grid() : cfg.grid;
  const std::size_t runs = static_cast<std::size_t>(cfg.runs);
  std::vector<TaskLog> permuted = parallel_map(runs, cfg.jobs, [&](std::size_t k) {
    return permute_log(log, cfg.base_seed + k);
  });
  SweepTable table;
  struct Cell {
    PolicyKind kind;
    CapacityProfile profile;
  };
  std::vector<Cell> cells;
  for (auto kind : cfg.policies)
    for (const auto& p : grid) cells.push_back({kind, p});
  const auto results = parallel_map(cells.size() * runs, cfg.jobs, [&](std::size_t i) {
    const auto& cell = cells[i / runs];
    const std::size_t k = i % runs;
    const auto seed = cfg.base_seed + k;
    return cfg.batch_size > 0
               ? run_batched(permuted[k], cfg, cell.kind, cell.profile, seed, cfg.batch_size)
               : run_online(permuted[k], cfg, cell.kind, cell.profile, seed);
  });
  for (std::size_t c = 0; c < cells.size(); ++c) {
    SweepRow row;
    row.policy = std::string(to_string(cells[c].kind));
    row.profile = cells[c].profile;
    std::vector<RunResult> cell_runs(results.begin() + static_cast<std::ptrdiff_t>(c * runs),
                                     results.begin() + static_cast<std::ptrdiff_t>((c + 1) * runs));
    summarize(row, cell_runs);
    table.rows.push_back(std::move(row));
  }
  if (cfg.offline_benchmark) {
    for (auto [family, name] : {std::pair{ModelFamily::Logistic, "offline_logistic"},
                                std::pair{ModelFamily::Tree, "offline_tree"}}) {
      const double err = run_offline_benchmark(log, family, cfg);
      for (const auto& p : grid) {
        SweepRow row;
        row.policy = name;
        row.profile = p;
        row.mean_error = err;
        row.errors.assign(1, err);
        table.rows.push_back(std::move(row));
      }
    }
  }
  return table;
}

/// CSV `policy,alpha_profile,mean_error,std_error,frac_agent_1,...,frac_agent_A`.
inline void write_sweep_csv(std::ostream& out, const SweepTable& table) {
  const std::size_t agents = table.rows.empty() ? 0 : table.rows.front().profile.size();
  out << "policy,alpha_profile,mean_error,std_error";
  for (std::size_t a = 0; a < agents; ++a) out << ",frac_agent_" << a + 1;
  out << '\n';
  for (const auto& r : table.rows) {
    out << r.policy << ',' << profile_label(r.profile) << ','
        << detail::format_double(r.mean_error) << ',' << detail::format_double(r.std_error);
    for (std::size_t a = 0; a < agents; ++a)
      out << ',' << (a < r.mean_fractions.size() ? detail::format_double(r.mean_fractions[a]) : "");
    out << '\n';
  }
}

/// Inverse of write_sweep_csv. Per-run errors are not stored in the CSV, so
/// `errors` stays empty on the rows read back.
inline SweepTable read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line))
    throw Error(ErrorKind::EmptyTable, "no header");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 4 || header[0] != "policy" || header[1] != "alpha_profile" ||
      header[2] != "mean_error" || header[3] != "std_error")
    throw Error(ErrorKind::ParseError, "row 1: not a sweep table header");
  const std::size_t agents = header.size() - 4;
  const auto number = [](std::string_view cell, std::size_t row, std::size_t col) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
      throw Error(ErrorKind::ParseError, detail::location(row, col) + ": not a number");
    return v;
  };
  SweepTable table;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw Error(ErrorKind::DimensionMismatch, "row " + std::to_string(row) + ": cell count");
    SweepRow r;
    r.policy = std::string(cells[0]);
    std::size_t start = 0;
    const std::string_view label = cells[1];
    while (true) {
      const auto slash = label.find('/', start);
      const auto part = label.substr(start, slash == std::string_view::npos ? slash : slash - start);
      r.profile.unconstrained.push_back(part == "free");
      r.profile.alphas.push_back(part == "free" ? 0.0 : number(part, row, 2));
      if (slash == std::string_view::npos) break;
      start = slash + 1;
    }
    r.mean_error = number(cells[2], row, 3);
    r.std_error = number(cells[3], row, 4);
    for (std::size_t a = 0; a < agents; ++a)
      r.mean_fractions.push_back(cells[4 + a].empty() ? 0.0 : number(cells[4 + a], row, 5 + a));
    table.rows.push_back(std::move(r));
  }
  if (table.rows.empty()) throw Error(ErrorKind::EmptyTable, "sweep table has no rows");
  return table;
}

/// CSV `t,agent,reward,score_1..A,q_1..A` (1-based agents).
inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  const std::size_t agents = trace.empty() ? 0 : trace.front().scores.size();
  out << "t,agent,reward";
  for (std::size_t a = 0; a < agents; ++a) out << ",score_" << a + 1;
  for (std::size_t a = 0; a < agents; ++a) out << ",q_" << a + 1;
  out << '\n';
  for (const auto& row : trace) {
    out << row.t << ',' << row.agent + 1 << ',' << row.reward;
    for (double s : row.scores) out << ',' << detail::format_double(s);
    for (double q : row.queue) out << ',' << detail::format_double(q);
    out << '\n';
  }
}

}  // namespace capbandit
