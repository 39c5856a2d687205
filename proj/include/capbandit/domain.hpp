#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "capbandit/error.hpp"

namespace capbandit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// All stochastic components draw from mt19937_64. A (seed, stream) pair is
/// expanded through std::seed_seq so that independent streams never share a
/// state even for adjacent seeds.
using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream & 0xffffffffu),
                    static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Unbiased integer in [0, n) by rejection.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

struct TaskRecord {
  Vector context;
  std::vector<std::uint8_t> rewards;  // counterfactual 0/1, one per agent
  std::vector<double> true_mu;        // empty unless the log is synthetic

  bool operator==(const TaskRecord& other) const {
    return context.size() == other.context.size() &&
           context == other.context && rewards == other.rewards &&
           true_mu == other.true_mu;
  }
};

struct TaskLog {
  std::vector<TaskRecord> records;
  std::vector<std::string> agent_names;
  std::size_t feature_dim = 0;

  std::size_t size() const { return records.size(); }
  std::size_t agent_count() const { return agent_names.size(); }
  bool has_true_mu() const {
    return !records.empty() && !records.front().true_mu.empty();
  }

  /// Mean of each agent's reward column.
  std::vector<double> column_means() const {
    std::vector<double> means(agent_count(), 0.0);
    for (const auto& rec : records)
      for (std::size_t a = 0; a < means.size(); ++a) means[a] += rec.rewards[a];
    for (auto& m : means) m /= static_cast<double>(records.size());
    return means;
  }

  bool operator==(const TaskLog&) const = default;
};

inline std::vector<std::string> default_agent_names(std::size_t agents) {
  std::vector<std::string> names;
  for (std::size_t a = 0; a < agents; ++a)
    names.push_back("agent" + std::to_string(a + 1));
  return names;
}

/// Long-run per-agent targets. Unconstrained ("free") agents carry alpha 0
/// and never accumulate a queue.
struct CapacityProfile {
  std::vector<double> alphas;
  std::vector<bool> unconstrained;

  std::size_t size() const { return alphas.size(); }
  bool is_free(std::size_t a) const { return unconstrained[a]; }
  bool has_free_agent() const {
    return std::find(unconstrained.begin(), unconstrained.end(), true) !=
           unconstrained.end();
  }
  /// Constrained agents with a zero target are never selected.
  bool eligible(std::size_t a) const {
    return unconstrained[a] || alphas[a] > 0.0;
  }

  bool operator==(const CapacityProfile&) const = default;
};

inline CapacityProfile validate_capacity_profile(std::vector<double> alphas,
                                                 std::vector<bool> unconstrained) {
  if (alphas.size() != unconstrained.size())
    throw Error(ErrorKind::DimensionMismatch,
                "alphas and unconstrained flags differ in length");
  double sum = 0.0;
  bool any_constrained = false;
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    if (!std::isfinite(alphas[a]))
      throw Error(ErrorKind::RangeViolation,
                  "alpha " + std::to_string(a + 1) + " is not finite");
    if (alphas[a] < 0.0 || alphas[a] > 1.0)
      throw Error(ErrorKind::RangeViolation,
                  "alpha " + std::to_string(a + 1) + " outside [0,1]");
    if (unconstrained[a]) {
      alphas[a] = 0.0;
      continue;
    }
    any_constrained = true;
    sum += alphas[a];
  }
  if (!any_constrained)
    throw Error(ErrorKind::NoConstrainedAgent, "profile has no constrained agent");
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error(ErrorKind::SumViolation,
                "constrained alphas sum to " + std::to_string(sum));
  return CapacityProfile{std::move(alphas), std::move(unconstrained)};
}

/// (alpha1, 1 - alpha1) with both agents constrained. The complement is
/// rounded to 12 decimals so that 1 - 0.8 is stored as 0.2.
inline CapacityProfile two_agent_profile(double alpha1) {
  const double alpha2 = std::round((1.0 - alpha1) * 1e12) / 1e12;
  return validate_capacity_profile({alpha1, alpha2}, {false, false});
}

// ---------------------------------------------------------------------------
// CSV reward logs: header `x1,...,xd,r_<name1>,...,r_<nameA>`, one task per row.

struct LoadOptions {
  std::vector<std::string> agent_names;  // empty: agent1..agentA
};

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

inline std::string location(std::size_t row, std::size_t col) {
  return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline TaskLog load_task_log(std::istream& in, const LoadOptions& options = {}) {
  std::string line;
  if (!std::getline(in, line) || line.empty())
    throw Error(ErrorKind::ParseError, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = detail::split_csv_line(line);
  std::size_t dim = 0;
  while (dim < header.size() && header[dim] == "x" + std::to_string(dim + 1)) ++dim;
  const std::size_t agents = header.size() - dim;
  if (dim == 0)
    throw Error(ErrorKind::ParseError, "row 1: header must start with x1");
  for (std::size_t c = dim; c < header.size(); ++c)
    if (header[c].substr(0, 2) != "r_" || header[c].size() < 3)
      throw Error(ErrorKind::ParseError,
                  detail::location(1, c + 1) + ": expected r_<agent> column");
  if (agents < 1)
    throw Error(ErrorKind::ParseError, "row 1: no reward columns");

  TaskLog log;
  log.feature_dim = dim;
  if (!options.agent_names.empty()) {
    if (options.agent_names.size() != agents)
      throw Error(ErrorKind::DimensionMismatch,
                  "configured agent names do not match reward columns");
    log.agent_names = options.agent_names;
  } else {
    log.agent_names = default_agent_names(agents);
  }

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw Error(ErrorKind::DimensionMismatch,
                  "row " + std::to_string(row) + ": expected " +
                      std::to_string(header.size()) + " cells, found " +
                      std::to_string(cells.size()));
    TaskRecord rec;
    rec.context.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t c = 0; c < dim; ++c) {
      const auto cell = cells[c];
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        throw Error(ErrorKind::ParseError,
                    detail::location(row, c + 1) + ": not a number");
      if (!std::isfinite(v))
        throw Error(ErrorKind::ParseError,
                    detail::location(row, c + 1) + ": non-finite feature");
      rec.context[static_cast<Eigen::Index>(c)] = v;
    }
    for (std::size_t c = dim; c < cells.size(); ++c) {
      if (cells[c] == "0") {
        rec.rewards.push_back(0);
      } else if (cells[c] == "1") {
        rec.rewards.push_back(1);
      } else if (cells[c].empty()) {
        throw Error(ErrorKind::ParseError,
                    detail::location(row, c + 1) + ": missing cell");
      } else {
        throw Error(ErrorKind::NonBinaryReward,
                    detail::location(row, c + 1) + ": reward '" +
                        std::string(cells[c]) + "'");
      }
    }
    log.records.push_back(std::move(rec));
  }
  if (log.records.empty())
    throw Error(ErrorKind::ParseError, "empty file: no data rows");
  return log;
}

inline void write_task_log(std::ostream& out, const TaskLog& log) {
  for (std::size_t c = 0; c < log.feature_dim; ++c)
    out << (c ? "," : "") << 'x' << c + 1;
  for (const auto& name : log.agent_names) out << ",r_" << name;
  out << '\n';
  for (const auto& rec : log.records) {
    for (Eigen::Index c = 0; c < rec.context.size(); ++c)
      out << (c ? "," : "") << detail::format_double(rec.context[c]);
    for (auto r : rec.rewards) out << ',' << static_cast<int>(r);
    out << '\n';
  }
}

/// Seeded Fisher-Yates shuffle of the records.
inline TaskLog permute_log(const TaskLog& log, std::uint64_t seed) {
  TaskLog out = log;
  Rng rng = make_rng(seed, 0x5045524dULL);
  for (std::size_t i = out.records.size(); i > 1; --i) {
    const auto j = uniform_index(rng, i);
    std::swap(out.records[i - 1], out.records[j]);
  }
  return out;
}

/// Feature transform applied before modeling: optional z-scoring (population
/// statistics of the whole log) followed by an optional constant 1.0 column.
inline TaskLog prepare_features(const TaskLog& log, bool bias, bool standardize) {
  TaskLog out = log;
  const auto d = static_cast<Eigen::Index>(log.feature_dim);
  if (standardize && !log.records.empty()) {
    Vector mean = Vector::Zero(d), sq = Vector::Zero(d);
    for (const auto& rec : log.records) {
      mean += rec.context;
      sq += rec.context.cwiseProduct(rec.context);
    }
    const double n = static_cast<double>(log.records.size());
    mean /= n;
    Vector sd = (sq / n - mean.cwiseProduct(mean)).cwiseMax(0.0).cwiseSqrt();
    for (Eigen::Index j = 0; j < d; ++j)
      if (sd[j] <= 0.0) sd[j] = 1.0;
    for (auto& rec : out.records)
      rec.context = (rec.context - mean).cwiseQuotient(sd);
  }
  if (bias) {
    for (auto& rec : out.records) {
      Vector x(d + 1);
      x.head(d) = rec.context;
      x[d] = 1.0;
      rec.context = std::move(x);
    }
    out.feature_dim += 1;
  }
  return out;
}

}  // namespace capbandit
