#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "capbandit/domain.hpp"
#include "capbandit/error.hpp"

namespace capbandit {

/// Logistic function, evaluated without overflow for large |z|.
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Bayesian logistic model with a Laplace (Gaussian) posterior maintained by
// rank-one Sherman-Morrison updates.

struct LogisticOptions {
  double prior_precision = 1.0;  // Sigma_1 = I / prior_precision
  double kappa = 0.5;            // Thompson draws use kappa^2 * Sigma
};

class LogisticPosterior {
 public:
  static constexpr double kMinWeight = 1e-4;
  static constexpr double kMaxWeight = 0.25;
  static constexpr double kJitter = 1e-8;
  static constexpr int kJitterRetries = 3;

  LogisticPosterior(std::size_t dim, LogisticOptions options = {})
      : mean_(Vector::Zero(static_cast<Eigen::Index>(dim))),
        cov_(Matrix::Identity(static_cast<Eigen::Index>(dim),
                              static_cast<Eigen::Index>(dim)) /
             options.prior_precision),
        options_(options) {
    if (dim == 0) throw Error(ErrorKind::DimensionMismatch, "zero dimension");
    if (!(options.prior_precision > 0.0))
      throw Error(ErrorKind::ValidationError, "prior precision must be positive");
    if (!(options.kappa >= 0.0))
      throw Error(ErrorKind::ValidationError, "kappa must be nonnegative");
  }

  LogisticPosterior(Vector mean, Matrix cov, LogisticOptions options = {})
      : mean_(std::move(mean)), cov_(std::move(cov)), options_(options) {
    if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size())
      throw Error(ErrorKind::DimensionMismatch, "covariance shape");
  }

  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return cov_; }
  const LogisticOptions& options() const { return options_; }
  std::uint64_t updates() const { return updates_; }

  /// sigma(mean . x)
  double predict(const Vector& x) const {
    check_dim(x);
    return sigmoid(mean_.dot(x));
  }

  /// sigma(theta . x) with theta ~ N(mean, kappa^2 Sigma).
  double sample(const Vector& x, Rng& rng) const {
    check_dim(x);
    const Matrix factor = cholesky_factor();
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(mean_.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
    const Vector theta = mean_ + options_.kappa * (factor * z);
    return sigmoid(theta.dot(x));
  }

  /// One online step on (x, r). The clipped curvature weight only enters the
  /// covariance; the mean step uses the unclipped residual r - p.
  void update(const Vector& x, int reward) {
    check_dim(x);
    const double p = sigmoid(mean_.dot(x));
    const double w = std::clamp(p * (1.0 - p), kMinWeight, kMaxWeight);
    const Vector sx = cov_ * x;
    const double denom = 1.0 + w * x.dot(sx);
    cov_ -= (w / denom) * (sx * sx.transpose());
    cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
    mean_ += cov_ * x * (static_cast<double>(reward) - p);
    ++updates_;
  }

  /// Lower Cholesky factor of Sigma. Adds 1e-8 I up to three times before
  /// giving up.
  Matrix cholesky_factor() const {
    Matrix m = cov_;
    for (int attempt = 0; attempt <= kJitterRetries; ++attempt) {
      Eigen::LLT<Matrix> llt(m);
      if (llt.info() == Eigen::Success) return llt.matrixL();
      m += kJitter * Matrix::Identity(m.rows(), m.cols());
    }
    throw Error(ErrorKind::CholeskyFailure,
                "covariance not positive definite after jitter");
  }

  void save(std::ostream& out) const;
  static LogisticPosterior load(std::istream& in);
  static LogisticPosterior load_body(std::istream& in);

 private:
  void check_dim(const Vector& x) const {
    if (x.size() != mean_.size())
      throw Error(ErrorKind::DimensionMismatch,
                  "context has dimension " + std::to_string(x.size()) +
                      ", model expects " + std::to_string(mean_.size()));
  }

  Vector mean_;
  Matrix cov_;
  LogisticOptions options_;
  std::uint64_t updates_ = 0;
};

// ---------------------------------------------------------------------------
// CART regression trees fitted on weighted (bootstrap multiplicity) samples.

struct TreeOptions {
  int trees = 20;
  int max_depth = 3;
  int min_leaf = 10;
  int refit_period = 20;
  double prior_mean = 0.5;
};

class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    bool operator==(const Node&) const = default;
  };

  RegressionTree() = default;
  explicit RegressionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  static RegressionTree constant(double value) {
    return RegressionTree({Node{-1, 0.0, -1, -1, value}});
  }

  /// Prediction clipped to [0,1].
  double predict(const Vector& x) const {
    int i = 0;
    while (nodes_[static_cast<std::size_t>(i)].feature >= 0) {
      const auto& n = nodes_[static_cast<std::size_t>(i)];
      i = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return std::clamp(nodes_[static_cast<std::size_t>(i)].value, 0.0, 1.0);
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t depth() const { return depth_of(0); }

  /// Feature-major sample storage: columns[f][i] is feature f of sample i.
  using Columns = std::vector<std::vector<double>>;

  /// Greedy variance-reduction fit. `sorted[f]` lists the sample indices with
  /// positive weight, ordered by feature f.
  static RegressionTree fit(const Columns& columns, const std::vector<std::uint8_t>& ys,
                            const std::vector<int>& weights,
                            std::vector<std::vector<std::uint32_t>> sorted,
                            int max_depth, int min_leaf) {
    RegressionTree tree;
    tree.grow(columns, ys, weights, std::move(sorted), 0, max_depth, min_leaf);
    return tree;
  }

  static RegressionTree fit(const std::vector<Vector>& xs,
                            const std::vector<std::uint8_t>& ys,
                            const std::vector<int>& weights,
                            std::vector<std::vector<std::uint32_t>> sorted,
                            int max_depth, int min_leaf) {
    Columns columns(xs.empty() ? 0 : static_cast<std::size_t>(xs.front().size()));
    for (std::size_t f = 0; f < columns.size(); ++f)
      for (const auto& x : xs) columns[f].push_back(x[static_cast<Eigen::Index>(f)]);
    return fit(columns, ys, weights, std::move(sorted), max_depth, min_leaf);
  }

  bool operator==(const RegressionTree&) const = default;

 private:
  std::size_t depth_of(int i) const {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.feature < 0) return 0;
    return 1 + std::max(depth_of(n.left), depth_of(n.right));
  }

  int grow(const Columns& xs, const std::vector<std::uint8_t>& ys,
           const std::vector<int>& weights,
           std::vector<std::vector<std::uint32_t>> sorted, int depth,
           int max_depth, int min_leaf) {
    const auto& any = sorted.front();
    double total_w = 0.0, total_s = 0.0;
    for (auto i : any) {
      total_w += weights[i];
      total_s += weights[i] * ys[i];
    }
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{-1, 0.0, -1, -1, total_w > 0 ? total_s / total_w : 0.5});
    if (depth >= max_depth || total_w < 2.0 * min_leaf) return index;

    // For binary targets the weighted SSE is S - S^2 / W.
    const auto sse = [](double w, double s) { return w > 0 ? s - s * s / w : 0.0; };
    const double parent = sse(total_w, total_s);
    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      const auto& order = sorted[f];
      const auto& column = xs[f];
      if (order.empty() || column[order.front()] == column[order.back()]) continue;
      double left_w = 0.0, left_s = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const auto i = order[k];
        left_w += weights[i];
        left_s += weights[i] * ys[i];
        const double here = column[i];
        const double next = column[order[k + 1]];
        if (!(here < next)) continue;
        if (left_w < min_leaf) continue;
        if (total_w - left_w < min_leaf) break;
        const double gain =
            parent - sse(left_w, left_s) - sse(total_w - left_w, total_s - left_s);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = here + (next - here) / 2.0;
          if (best_threshold >= next) best_threshold = here;
        }
      }
    }
    if (best_feature < 0) return index;

    std::vector<std::vector<std::uint32_t>> left(sorted.size()), right(sorted.size());
    const auto& split_column = xs[static_cast<std::size_t>(best_feature)];
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      left[f].reserve(sorted[f].size());
      right[f].reserve(sorted[f].size());
      for (auto i : sorted[f]) {
        if (split_column[i] <= best_threshold)
          left[f].push_back(i);
        else
          right[f].push_back(i);
      }
    }
    sorted.clear();
    const int l = grow(xs, ys, weights, std::move(left), depth + 1, max_depth, min_leaf);
    const int r = grow(xs, ys, weights, std::move(right), depth + 1, max_depth, min_leaf);
    auto& node = nodes_[static_cast<std::size_t>(index)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return index;
  }

  std::vector<Node> nodes_;
};

/// Bootstrap ensemble of regression trees with periodic refits. Every
/// observation is buffered; every `refit_period` updates each tree is refit on
/// its own bootstrap resample of the whole buffer.
class TreeEnsemble {
 public:
  TreeEnsemble(TreeOptions options = {}, std::uint64_t seed = 0,
               std::uint64_t agent = 0)
      : options_(options), seed_(seed), agent_(agent) {
    if (options.trees < 1 || options.max_depth < 0 || options.min_leaf < 1 ||
        options.refit_period < 1)
      throw Error(ErrorKind::ValidationError, "invalid tree ensemble options");
  }

  /// Ensemble from explicit trees, treated as fitted.
  static TreeEnsemble from_trees(std::vector<RegressionTree> trees,
                                 TreeOptions options = {}) {
    options.trees = static_cast<int>(trees.size());
    TreeEnsemble ens(options);
    ens.trees_ = std::move(trees);
    return ens;
  }

  bool fitted() const { return !trees_.empty(); }
  std::size_t fit_count() const { return fit_count_; }
  std::size_t buffer_size() const { return ys_.size(); }
  int updates_since_refit() const { return updates_since_refit_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  const TreeOptions& options() const { return options_; }

  /// Mean tree prediction, or the prior mean before the first fit.
  double predict(const Vector& x) const {
    if (!fitted()) return options_.prior_mean;
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict(x);
    return std::clamp(sum / static_cast<double>(trees_.size()), 0.0, 1.0);
  }

  /// Prediction of one uniformly chosen tree; uniform on [0,1] before the
  /// first fit.
  double sample(const Vector& x, Rng& rng) const {
    if (!fitted()) return uniform01(rng);
    return trees_[sample_tree(rng)].predict(x);
  }

  std::size_t sample_tree(Rng& rng) const {
    return static_cast<std::size_t>(uniform_index(rng, trees_.size()));
  }

  void update(const Vector& x, int reward) {
    if (!ys_.empty() && columns_.size() != static_cast<std::size_t>(x.size()))
      throw Error(ErrorKind::DimensionMismatch, "context dimension changed");
    append(x);
    ys_.push_back(static_cast<std::uint8_t>(reward));
    if (++updates_since_refit_ >= options_.refit_period) {
      refit();
      updates_since_refit_ = 0;
    }
  }

  void save(std::ostream& out) const;
  static TreeEnsemble load(std::istream& in);
  static TreeEnsemble load_body(std::istream& in);

 private:
  void refit() {
    const std::size_t n = ys_.size();
    const std::size_t dim = columns_.size();
    std::vector<std::vector<std::uint32_t>> base(dim);
    for (std::size_t f = 0; f < dim; ++f) {
      auto& order = base[f];
      order.resize(n);
      std::iota(order.begin(), order.end(), 0u);
      const auto& column = columns_[f];
      std::stable_sort(order.begin(), order.end(),
                       [&](auto a, auto b) { return column[a] < column[b]; });
    }
    std::vector<RegressionTree> trees;
    trees.reserve(static_cast<std::size_t>(options_.trees));
    std::vector<int> weights(n);
    for (int b = 0; b < options_.trees; ++b) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed_),
                        static_cast<std::uint32_t>(seed_ >> 32),
                        static_cast<std::uint32_t>(agent_),
                        static_cast<std::uint32_t>(fit_count_),
                        static_cast<std::uint32_t>(b)};
      Rng rng(seq);
      std::fill(weights.begin(), weights.end(), 0);
      for (std::size_t k = 0; k < n; ++k) ++weights[uniform_index(rng, n)];
      std::vector<std::vector<std::uint32_t>> sorted(dim);
      for (std::size_t f = 0; f < dim; ++f) {
        sorted[f].reserve(n);
        for (auto i : base[f])
          if (weights[i] > 0) sorted[f].push_back(i);
      }
      trees.push_back(RegressionTree::fit(columns_, ys_, weights, std::move(sorted),
                                          options_.max_depth, options_.min_leaf));
    }
    trees_ = std::move(trees);
    ++fit_count_;
  }

  void append(const Vector& x) {
    if (ys_.empty()) columns_.assign(static_cast<std::size_t>(x.size()), {});
    for (std::size_t f = 0; f < columns_.size(); ++f)
      columns_[f].push_back(x[static_cast<Eigen::Index>(f)]);
  }

  TreeOptions options_;
  std::uint64_t seed_ = 0;
  std::uint64_t agent_ = 0;
  RegressionTree::Columns columns_;
  std::vector<std::uint8_t> ys_;
  std::vector<RegressionTree> trees_;
  int updates_since_refit_ = 0;
  std::size_t fit_count_ = 0;
};

// ---------------------------------------------------------------------------

/// Smoothed running accuracy (sum + 0.5) / (count + 1), for the learned
/// non-contextual baseline.
class MarginalMean {
 public:
  double predict() const {
    return (sum_ + 0.5) / (static_cast<double>(count_) + 1.0);
  }
  void update(int reward) {
    ++count_;
    sum_ += reward;
  }
  std::uint64_t count() const { return count_; }
  double sum() const { return sum_; }

  void save(std::ostream& out) const;
  static MarginalMean load(std::istream& in);
  static MarginalMean load_body(std::istream& in);

 private:
  std::uint64_t count_ = 0;
  double sum_ = 0.0;
};

// ---------------------------------------------------------------------------

enum class ScoreMode { Greedy, Thompson };

/// One agent's reward model, whichever family the policy uses.
class AgentModel {
 public:
  using State = std::variant<LogisticPosterior, TreeEnsemble, MarginalMean>;

  explicit AgentModel(State state) : state_(std::move(state)) {}

  double predict(const Vector& x) const {
    return std::visit(
        [&](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, MarginalMean>)
            return m.predict();
          else
            return m.predict(x);
        },
        state_);
  }

  double score(const Vector& x, ScoreMode mode, Rng& rng) const {
    if (mode == ScoreMode::Greedy) return predict(x);
    return std::visit(
        [&](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, MarginalMean>)
            return m.predict();
          else
            return m.sample(x, rng);
        },
        state_);
  }

  void update(const Vector& x, int reward) {
    std::visit(
        [&](auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, MarginalMean>)
            m.update(reward);
          else
            m.update(x, reward);
        },
        state_);
    ++updates_;
  }

  std::uint64_t updates() const { return updates_; }
  const State& state() const { return state_; }

  void save(std::ostream& out) const;
  static AgentModel load(std::istream& in);

 private:
  State state_;
  std::uint64_t updates_ = 0;
};

// ---------------------------------------------------------------------------
// Text serialization. Every number is written in shortest round-trip decimal
// form, so save followed by load restores the state bit for bit.
//
//   capbandit-model 1
//   logistic <dim> <prior_precision> <kappa> <updates>
//   <mean...>
//   <covariance row-major...>
//
//   tree <trees> <max_depth> <min_leaf> <refit_period> <prior_mean> <seed>
//        <agent> <updates_since_refit> <fit_count> <buffer_len> <dim>
//   <x... r> per buffered observation
//   forest <tree_count>, then per tree: nodes <k> and k lines of
//   <feature> <threshold> <left> <right> <value>
//
//   marginal <count> <sum>

namespace serial {

inline void put(std::ostream& out, double v) { out << detail::format_double(v); }

inline std::string token(std::istream& in) {
  std::string t;
  if (!(in >> t)) throw Error(ErrorKind::CheckpointError, "unexpected end of input");
  return t;
}

inline void expect(std::istream& in, const std::string& word) {
  const auto t = token(in);
  if (t != word)
    throw Error(ErrorKind::CheckpointError, "expected '" + word + "', found '" + t + "'");
}

inline double get_double(std::istream& in) {
  const auto t = token(in);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw Error(ErrorKind::CheckpointError, "bad number '" + t + "'");
  return v;
}

template <typename Int>
Int get_int(std::istream& in) {
  const auto t = token(in);
  Int v{};
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw Error(ErrorKind::CheckpointError, "bad integer '" + t + "'");
  return v;
}

}  // namespace serial

inline void LogisticPosterior::save(std::ostream& out) const {
  out << "logistic " << dim() << ' ';
  serial::put(out, options_.prior_precision);
  out << ' ';
  serial::put(out, options_.kappa);
  out << ' ' << updates_ << '\n';
  for (Eigen::Index i = 0; i < mean_.size(); ++i) {
    if (i) out << ' ';
    serial::put(out, mean_[i]);
  }
  out << '\n';
  for (Eigen::Index i = 0; i < cov_.rows(); ++i)
    for (Eigen::Index j = 0; j < cov_.cols(); ++j) {
      if (i || j) out << ' ';
      serial::put(out, cov_(i, j));
    }
  out << '\n';
}

inline LogisticPosterior LogisticPosterior::load(std::istream& in) {
  serial::expect(in, "logistic");
  return load_body(in);
}

inline LogisticPosterior LogisticPosterior::load_body(std::istream& in) {
  const auto dim = serial::get_int<std::size_t>(in);
  LogisticOptions opt;
  opt.prior_precision = serial::get_double(in);
  opt.kappa = serial::get_double(in);
  const auto updates = serial::get_int<std::uint64_t>(in);
  const auto d = static_cast<Eigen::Index>(dim);
  Vector mean(d);
  for (Eigen::Index i = 0; i < d; ++i) mean[i] = serial::get_double(in);
  Matrix cov(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) cov(i, j) = serial::get_double(in);
  LogisticPosterior post(std::move(mean), std::move(cov), opt);
  post.updates_ = updates;
  return post;
}

inline void TreeEnsemble::save(std::ostream& out) const {
  const std::size_t dim = columns_.size();
  out << "tree " << options_.trees << ' ' << options_.max_depth << ' '
      << options_.min_leaf << ' ' << options_.refit_period << ' ';
  serial::put(out, options_.prior_mean);
  out << ' ' << seed_ << ' ' << agent_ << ' ' << updates_since_refit_ << ' '
      << fit_count_ << ' ' << ys_.size() << ' ' << dim << '\n';
  for (std::size_t k = 0; k < ys_.size(); ++k) {
    for (std::size_t j = 0; j < dim; ++j) {
      serial::put(out, columns_[j][k]);
      out << ' ';
    }
    out << static_cast<int>(ys_[k]) << '\n';
  }
  out << "forest " << trees_.size() << '\n';
  for (const auto& t : trees_) {
    out << "nodes " << t.nodes().size() << '\n';
    for (const auto& n : t.nodes()) {
      out << n.feature << ' ';
      serial::put(out, n.threshold);
      out << ' ' << n.left << ' ' << n.right << ' ';
      serial::put(out, n.value);
      out << '\n';
    }
  }
}

inline TreeEnsemble TreeEnsemble::load(std::istream& in) {
  serial::expect(in, "tree");
  return load_body(in);
}

inline TreeEnsemble TreeEnsemble::load_body(std::istream& in) {
  TreeOptions opt;
  opt.trees = serial::get_int<int>(in);
  opt.max_depth = serial::get_int<int>(in);
  opt.min_leaf = serial::get_int<int>(in);
  opt.refit_period = serial::get_int<int>(in);
  opt.prior_mean = serial::get_double(in);
  const auto seed = serial::get_int<std::uint64_t>(in);
  const auto agent = serial::get_int<std::uint64_t>(in);
  TreeEnsemble ens(opt, seed, agent);
  ens.updates_since_refit_ = serial::get_int<int>(in);
  ens.fit_count_ = serial::get_int<std::size_t>(in);
  const auto n = serial::get_int<std::size_t>(in);
  const auto dim = static_cast<Eigen::Index>(serial::get_int<std::size_t>(in));
  for (std::size_t k = 0; k < n; ++k) {
    Vector x(dim);
    for (Eigen::Index j = 0; j < dim; ++j) x[j] = serial::get_double(in);
    const int r = serial::get_int<int>(in);
    if (r != 0 && r != 1) throw Error(ErrorKind::CheckpointError, "non-binary reward");
    ens.append(x);
    ens.ys_.push_back(static_cast<std::uint8_t>(r));
  }
  serial::expect(in, "forest");
  const auto count = serial::get_int<std::size_t>(in);
  for (std::size_t t = 0; t < count; ++t) {
    serial::expect(in, "nodes");
    const auto k = serial::get_int<std::size_t>(in);
    std::vector<RegressionTree::Node> nodes(k);
    for (auto& node : nodes) {
      node.feature = serial::get_int<int>(in);
      node.threshold = serial::get_double(in);
      node.left = serial::get_int<int>(in);
      node.right = serial::get_int<int>(in);
      node.value = serial::get_double(in);
    }
    for (std::size_t i = 0; i < k; ++i) {
      const auto& node = nodes[i];
      if (node.feature < 0) continue;
      const auto in_range = [&](int c) {
        return c > static_cast<int>(i) && c < static_cast<int>(k);
      };
      if (node.feature >= dim || !in_range(node.left) || !in_range(node.right))
        throw Error(ErrorKind::CheckpointError, "malformed tree node");
    }
    if (count > 0 && k == 0) throw Error(ErrorKind::CheckpointError, "empty tree");
    ens.trees_.emplace_back(std::move(nodes));
  }
  return ens;
}

inline void MarginalMean::save(std::ostream& out) const {
  out << "marginal " << count_ << ' ';
  serial::put(out, sum_);
  out << '\n';
}

inline MarginalMean MarginalMean::load(std::istream& in) {
  serial::expect(in, "marginal");
  return load_body(in);
}

inline MarginalMean MarginalMean::load_body(std::istream& in) {
  MarginalMean m;
  m.count_ = serial::get_int<std::uint64_t>(in);
  m.sum_ = serial::get_double(in);
  return m;
}

inline void AgentModel::save(std::ostream& out) const {
  out << "capbandit-model 1 " << updates_ << '\n';
  std::visit([&](const auto& m) { m.save(out); }, state_);
}

inline AgentModel AgentModel::load(std::istream& in) {
  serial::expect(in, "capbandit-model");
  if (serial::get_int<int>(in) != 1)
    throw Error(ErrorKind::CheckpointError, "unsupported model version");
  const auto updates = serial::get_int<std::uint64_t>(in);
  const std::string kind = serial::token(in);
  AgentModel model = [&]() -> AgentModel {
    if (kind == "logistic") return AgentModel(LogisticPosterior::load_body(in));
    if (kind == "tree") return AgentModel(TreeEnsemble::load_body(in));
    if (kind == "marginal") return AgentModel(MarginalMean::load_body(in));
    throw Error(ErrorKind::CheckpointError, "unknown model kind '" + kind + "'");
  }();
  model.updates_ = updates;
  return model;
}

}  // namespace capbandit
