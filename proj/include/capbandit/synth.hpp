#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "capbandit/domain.hpp"
#include "capbandit/error.hpp"
#include "capbandit/reward_models.hpp"

namespace capbandit {

/// Axis-aligned region lo <= x < hi carrying a constant accuracy.
struct Box {
  Vector lo;
  Vector hi;
  double value = 0.5;

  bool contains(const Vector& x) const {
    for (Eigen::Index j = 0; j < x.size(); ++j)
      if (x[j] < lo[j] || x[j] >= hi[j]) return false;
    return true;
  }
};

/// Ground-truth accuracy mu_a(x) of one simulated agent.
struct AgentTruth {
  enum class Kind { Logistic, Constant, Boxes };

  Kind kind = Kind::Constant;
  Vector weights;          // Logistic: sigma(weights . x + intercept)
  double intercept = 0.0;
  double value = 0.5;      // Constant, and the Boxes fallback
  std::vector<Box> boxes;  // first containing box wins

  static AgentTruth logistic(Vector weights, double intercept = 0.0) {
    AgentTruth t;
    t.kind = Kind::Logistic;
    t.weights = std::move(weights);
    t.intercept = intercept;
    return t;
  }
  static AgentTruth constant(double value) {
    AgentTruth t;
    t.kind = Kind::Constant;
    t.value = value;
    return t;
  }
  static AgentTruth regions(std::vector<Box> boxes, double fallback) {
    AgentTruth t;
    t.kind = Kind::Boxes;
    t.boxes = std::move(boxes);
    t.value = fallback;
    return t;
  }

  double mu(const Vector& x) const {
    switch (kind) {
      case Kind::Logistic: return sigmoid(weights.dot(x) + intercept);
      case Kind::Constant: return value;
      case Kind::Boxes:
        for (const auto& b : boxes)
          if (b.contains(x)) return b.value;
        return value;
    }
    return value;
  }
};

struct SynthSpec {
  enum class Law { Uniform, Gaussian };

  std::size_t dim = 1;
  std::size_t rounds = 5000;
  Law law = Law::Uniform;
  double low = -1.0;   // Uniform box [low, high)^d
  double high = 1.0;
  double mean = 0.0;   // Gaussian N(mean, sd^2) per coordinate
  double sd = 1.0;
  std::vector<AgentTruth> agents;
  std::vector<std::string> agent_names;  // optional

  void validate() const {
    if (dim < 1) throw Error(ErrorKind::InvalidSpec, "dim must be >= 1");
    if (rounds < 1) throw Error(ErrorKind::InvalidSpec, "rounds must be >= 1");
    if (agents.empty()) throw Error(ErrorKind::InvalidSpec, "no agents");
    if (law == Law::Uniform && !(low < high))
      throw Error(ErrorKind::InvalidSpec, "uniform law needs low < high");
    if (law == Law::Gaussian && !(sd > 0.0))
      throw Error(ErrorKind::InvalidSpec, "gaussian law needs sd > 0");
    if (!agent_names.empty() && agent_names.size() != agents.size())
      throw Error(ErrorKind::InvalidSpec, "agent name count");
    const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    for (const auto& a : agents) {
      switch (a.kind) {
        case AgentTruth::Kind::Logistic:
          if (a.weights.size() != static_cast<Eigen::Index>(dim))
            throw Error(ErrorKind::InvalidSpec, "logistic weight length differs from dim");
          break;
        case AgentTruth::Kind::Constant:
          if (!in_unit(a.value)) throw Error(ErrorKind::InvalidSpec, "accuracy outside [0,1]");
          break;
        case AgentTruth::Kind::Boxes:
          if (!in_unit(a.value)) throw Error(ErrorKind::InvalidSpec, "accuracy outside [0,1]");
          for (const auto& b : a.boxes) {
            if (b.lo.size() != static_cast<Eigen::Index>(dim) ||
                b.hi.size() != static_cast<Eigen::Index>(dim))
              throw Error(ErrorKind::InvalidSpec, "box dimension differs from dim");
            if (!in_unit(b.value)) throw Error(ErrorKind::InvalidSpec, "accuracy outside [0,1]");
          }
          break;
      }
    }
  }
};

/// i.i.d. contexts with independent Bernoulli(mu_a(x)) rewards per agent. The
/// true accuracies are kept on every record for oracle and regret metrics.
inline TaskLog synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = make_rng(seed, 0x53594e54ULL);
  std::normal_distribution<double> normal(spec.mean, spec.sd);
  TaskLog log;
  log.feature_dim = spec.dim;
  log.agent_names = spec.agent_names.empty() ? default_agent_names(spec.agents.size())
                                             : spec.agent_names;
  log.records.reserve(spec.rounds);
  const auto d = static_cast<Eigen::Index>(spec.dim);
  for (std::size_t t = 0; t < spec.rounds; ++t) {
    TaskRecord rec;
    rec.context.resize(d);
    for (Eigen::Index j = 0; j < d; ++j)
      rec.context[j] = spec.law == SynthSpec::Law::Uniform
                           ? spec.low + (spec.high - spec.low) * uniform01(rng)
                           : normal(rng);
    for (const auto& agent : spec.agents) {
      const double mu = agent.mu(rec.context);
      rec.true_mu.push_back(mu);
      rec.rewards.push_back(uniform01(rng) < mu ? 1 : 0);
    }
    log.records.push_back(std::move(rec));
  }
  return log;
}

/// Two agents with mirrored expertise on x ~ U[-1, 1]:
/// mu_1 = sigma(slope x), mu_2 = sigma(-slope x).
inline SynthSpec complementary_spec(std::size_t rounds, double slope = 4.0) {
  SynthSpec s;
  s.dim = 1;
  s.rounds = rounds;
  s.agents = {AgentTruth::logistic(Vector::Constant(1, slope)),
              AgentTruth::logistic(Vector::Constant(1, -slope))};
  return s;
}

/// Two agents on x ~ U[-1, 1]^2. Agent 1 is strong in two opposite quadrants
/// (0.9 and 0.8) and weak elsewhere (0.3); agent 2 is a constant 0.6. No
/// linear score separates agent 1's good region.
inline SynthSpec regions_spec(std::size_t rounds) {
  SynthSpec s;
  s.dim = 2;
  s.rounds = rounds;
  const Box q1{Vector::Zero(2), Vector::Constant(2, 2.0), 0.9};
  const Box q3{Vector::Constant(2, -2.0), Vector::Zero(2), 0.8};
  s.agents = {AgentTruth::regions({q1, q3}, 0.3), AgentTruth::constant(0.6)};
  return s;
}

}  // namespace capbandit
