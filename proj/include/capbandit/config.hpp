#pragma once

// Experiment configuration files. The format is INI-style: `[section]`
// headers followed by `key = value` lines; `;` and `#` start comments.
//
//   [data]        path, true_mu, agents, bias, standardize
//   [synth]       preset, rounds, dim, law, low, high, mean, sd, slope,
//                 agent1 .. agentN
//   [experiment]  policies, alphas, profiles, free_agents, eta, runs, seed,
//                 batch_size, batch_sizes, batch_rule, rounds, offline, jobs
//   [model]       kappa, prior_precision, trees, max_depth, min_leaf,
//                 refit_period, prior_mean
//
// Lists are comma separated. `profiles` holds `;`-separated profiles whose
// entries are `/`-separated alphas or the word `free`, e.g. `0.4/0.6/free`.
// Synthetic agents are written as one of
//   logistic <w1> ... <wd> <intercept>
//   constant <value>
//   regions <fallback> <lo1,..,lod:hi1,..,hid=value> ...

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "capbandit/error.hpp"
#include "capbandit/harness.hpp"
#include "capbandit/policy.hpp"
#include "capbandit/synth.hpp"

namespace capbandit {

struct DataConfig {
  std::string path;     // CSV reward log
  std::string true_mu;  // optional CSV of true accuracies, one column per agent
  std::vector<std::string> agent_names;
};

struct AppConfig {
  DataConfig data;
  std::optional<SynthSpec> synth;
  ExperimentConfig experiment;
  std::vector<int> batch_sizes;  // batch-sim; 0 stands for the whole log
  std::string text;              // the raw file, for hashing
};

struct ExplainEntry {
  std::string key;
  std::string value;
  std::string rationale;
};

/// Defaults and where they come from, printed by `--explain`.
inline std::vector<ExplainEntry> explain_defaults() {
  return {
      {"data.bias", "true", "append a constant feature so logistic models can learn an intercept"},
      {"data.standardize", "false", "contexts are used as given; z-scoring is opt-in"},
      {"experiment.policies",
       "logistic_greedy,logistic_ts,tree_greedy,tree_ts,random",
       "the four contextual policies plus the random capacity-weighted baseline"},
      {"experiment.alphas", "0,0.2,0.4,0.5,0.6,0.8,1",
       "capacity of agent 1 in the two-agent sweep: interior points plus both endpoints"},
      {"experiment.eta", "0.5", "queue penalty weight of the reference capacity experiments"},
      {"experiment.runs", "100", "number of random permutations of the task sequence"},
      {"experiment.seed", "0", "base seed; run k uses seed + k"},
      {"experiment.batch_size", "0", "0 runs the fully online rule, one task at a time"},
      {"experiment.batch_sizes", "1,10,100,1000,0", "batch-sim grid; 0 means one batch of the whole log"},
      {"experiment.batch_rule", "bounded",
       "guaranteed plus flexible seats, so a batch of one matches the online rule"},
      {"experiment.rounds", "0", "0 uses every record of the log"},
      {"experiment.offline", "false", "add offline full-information benchmark rows to sweeps"},
      {"experiment.jobs", "1", "worker threads for independent runs"},
      {"model.kappa", "0.5", "Thompson draws use kappa^2 times the posterior covariance"},
      {"model.prior_precision", "1", "Gaussian prior N(0, I / prior_precision) on logistic weights"},
      {"model.trees", "20", "bootstrap trees per agent"},
      {"model.max_depth", "3", "maximum depth of every regression tree"},
      {"model.min_leaf", "10", "minimum bootstrap weight in a leaf"},
      {"model.refit_period", "20", "trees are refit after this many new observations"},
      {"model.prior_mean", "0.5", "tree prediction before the first fit"},
  };
}

namespace config_detail {

using boost::property_tree::ptree;

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (out.size() == 1 && out.front().empty()) out.clear();
  return out;
}

inline double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
    throw Error(ErrorKind::TypeError, key + ": expected a number, found '" + text + "'");
  return v;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& text) {
  Int v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw Error(ErrorKind::TypeError, key + ": expected an integer, found '" + text + "'");
  return v;
}

inline bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "yes" || text == "1" || text == "on") return true;
  if (text == "false" || text == "no" || text == "0" || text == "off") return false;
  throw Error(ErrorKind::TypeError, key + ": expected true or false, found '" + text + "'");
}

[[noreturn]] inline void validation(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::ValidationError, key + ": " + what);
}

/// Reads one section, rejecting keys outside `allowed`.
class Section {
 public:
  Section(std::string name, const ptree* tree, std::set<std::string> allowed,
          bool numbered_agents = false)
      : name_(std::move(name)), tree_(tree) {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_) {
      if (!child.empty())
        throw Error(ErrorKind::ParseError, name_ + "." + key + ": nested value");
      if (!allowed.count(key) && !(numbered_agents && key.rfind("agent", 0) == 0))
        throw Error(ErrorKind::UnknownKey, name_ + "." + key);
    }
  }

  std::optional<std::string> get(const std::string& key) const {
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return trim(*v);
  }
  std::string path(const std::string& key) const { return name_ + "." + key; }

 private:
  std::string name_;
  const ptree* tree_;
};

inline AgentTruth parse_agent(const std::string& key, const std::string& text, std::size_t dim) {
  std::istringstream in(text);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  if (words.empty()) validation(key, "empty agent description");
  const auto& kind = words.front();
  if (kind == "constant") {
    if (words.size() != 2) validation(key, "constant takes one value");
    return AgentTruth::constant(to_double(key, words[1]));
  }
  if (kind == "logistic") {
    if (words.size() != dim + 2)
      validation(key, "logistic takes " + std::to_string(dim) + " weights and an intercept");
    Vector w(static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < dim; ++j) w[static_cast<Eigen::Index>(j)] = to_double(key, words[j + 1]);
    return AgentTruth::logistic(std::move(w), to_double(key, words.back()));
  }
  if (kind == "regions") {
    if (words.size() < 2) validation(key, "regions needs a fallback value");
    std::vector<Box> boxes;
    for (std::size_t k = 2; k < words.size(); ++k) {
      const auto eq = words[k].find('=');
      const auto colon = words[k].find(':');
      if (eq == std::string::npos || colon == std::string::npos || colon > eq)
        validation(key, "region '" + words[k] + "' is not lo:hi=value");
      const auto lo = split(std::string_view(words[k]).substr(0, colon), ',');
      const auto hi = split(std::string_view(words[k]).substr(colon + 1, eq - colon - 1), ',');
      if (lo.size() != dim || hi.size() != dim)
        validation(key, "region corners need " + std::to_string(dim) + " coordinates");
      Box b{Vector(static_cast<Eigen::Index>(dim)), Vector(static_cast<Eigen::Index>(dim)),
            to_double(key, words[k].substr(eq + 1))};
      for (std::size_t j = 0; j < dim; ++j) {
        b.lo[static_cast<Eigen::Index>(j)] = to_double(key, lo[j]);
        b.hi[static_cast<Eigen::Index>(j)] = to_double(key, hi[j]);
      }
      boxes.push_back(std::move(b));
    }
    return AgentTruth::regions(std::move(boxes), to_double(key, words[1]));
  }
  validation(key, "unknown agent kind '" + kind + "'");
  return {};
}

inline SynthSpec synth_preset(const std::string& key, const std::string& name, std::size_t rounds,
                              double slope) {
  if (name == "complementary") return complementary_spec(rounds, slope);
  SynthSpec s;
  s.rounds = rounds;
  if (name == "dominant") {
    s.agents = {AgentTruth::constant(0.9), AgentTruth::constant(0.6)};
    return s;
  }
  if (name == "regions") return regions_spec(rounds);
  validation(key, "unknown preset '" + name + "'");
  return s;
}

}  // namespace config_detail

/// Parses and validates a configuration. `data.path` and `[synth]` are both
/// optional here; commands that need a log check for one of them.
inline AppConfig parse_config(std::istream& in) {
  using namespace config_detail;
  AppConfig cfg;
  {
    std::ostringstream buf;
    buf << in.rdbuf();
    cfg.text = buf.str();
  }
  ptree root;
  try {
    std::istringstream text(cfg.text);
    boost::property_tree::ini_parser::read_ini(text, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(e.line()) + ": " + e.message());
  }
  const std::set<std::string> sections{"data", "synth", "experiment", "model"};
  for (const auto& [name, child] : root) {
    if (child.empty() && !sections.count(name))
      throw Error(ErrorKind::UnknownKey, name + " (keys must live in a section)");
    if (!sections.count(name)) throw Error(ErrorKind::UnknownKey, "[" + name + "]");
  }
  const auto section = [&](const std::string& name) -> const ptree* {
    auto it = root.find(name);
    return it == root.not_found() ? nullptr : &it->second;
  };

  // [data]
  Section data("data", section("data"), {"path", "true_mu", "agents", "bias", "standardize"});
  if (auto v = data.get("path")) cfg.data.path = *v;
  if (auto v = data.get("true_mu")) cfg.data.true_mu = *v;
  if (auto v = data.get("agents")) cfg.data.agent_names = split(*v, ',');
  if (auto v = data.get("bias")) cfg.experiment.bias = to_bool(data.path("bias"), *v);
  if (auto v = data.get("standardize"))
    cfg.experiment.standardize = to_bool(data.path("standardize"), *v);

  // [synth]
  if (const ptree* tree = section("synth")) {
    Section synth("synth", tree,
                  {"preset", "rounds", "dim", "law", "low", "high", "mean", "sd", "slope"},
                  true);
    const auto rounds = synth.get("rounds")
                            ? to_int<std::size_t>(synth.path("rounds"), *synth.get("rounds"))
                            : std::size_t{5000};
    const double slope =
        synth.get("slope") ? to_double(synth.path("slope"), *synth.get("slope")) : 4.0;
    SynthSpec spec;
    spec.rounds = rounds;
    if (auto v = synth.get("preset")) spec = synth_preset(synth.path("preset"), *v, rounds, slope);
    if (auto v = synth.get("dim")) spec.dim = to_int<std::size_t>(synth.path("dim"), *v);
    if (auto v = synth.get("law")) {
      if (*v == "uniform")
        spec.law = SynthSpec::Law::Uniform;
      else if (*v == "gaussian")
        spec.law = SynthSpec::Law::Gaussian;
      else
        validation(synth.path("law"), "expected uniform or gaussian");
    }
    if (auto v = synth.get("low")) spec.low = to_double(synth.path("low"), *v);
    if (auto v = synth.get("high")) spec.high = to_double(synth.path("high"), *v);
    if (auto v = synth.get("mean")) spec.mean = to_double(synth.path("mean"), *v);
    if (auto v = synth.get("sd")) spec.sd = to_double(synth.path("sd"), *v);
    std::vector<AgentTruth> agents;
    for (std::size_t k = 1;; ++k) {
      const std::string key = "agent" + std::to_string(k);
      auto v = synth.get(key);
      if (!v) break;
      agents.push_back(parse_agent(synth.path(key), *v, spec.dim));
    }
    for (const auto& [key, child] : *tree) {
      if (key.rfind("agent", 0) != 0) continue;
      const auto idx = key.substr(5);
      std::size_t n = 0;
      auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), n);
      if (ec != std::errc() || ptr != idx.data() + idx.size() || n < 1 || n > agents.size())
        throw Error(ErrorKind::UnknownKey, "synth." + key);
    }
    if (!agents.empty()) spec.agents = std::move(agents);
    if (!cfg.data.agent_names.empty()) spec.agent_names = cfg.data.agent_names;
    try {
      spec.validate();
    } catch (const Error& e) {
      throw Error(ErrorKind::ValidationError, std::string("synth: ") + e.what());
    }
    cfg.synth = std::move(spec);
  }

  // [model]
  Section model("model", section("model"),
                {"kappa", "prior_precision", "trees", "max_depth", "min_leaf", "refit_period",
                 "prior_mean"});
  auto& m = cfg.experiment.model;
  if (auto v = model.get("kappa")) m.logistic.kappa = to_double(model.path("kappa"), *v);
  if (auto v = model.get("prior_precision"))
    m.logistic.prior_precision = to_double(model.path("prior_precision"), *v);
  if (auto v = model.get("trees")) m.tree.trees = to_int<int>(model.path("trees"), *v);
  if (auto v = model.get("max_depth")) m.tree.max_depth = to_int<int>(model.path("max_depth"), *v);
  if (auto v = model.get("min_leaf")) m.tree.min_leaf = to_int<int>(model.path("min_leaf"), *v);
  if (auto v = model.get("refit_period"))
    m.tree.refit_period = to_int<int>(model.path("refit_period"), *v);
  if (auto v = model.get("prior_mean")) m.tree.prior_mean = to_double(model.path("prior_mean"), *v);
  if (m.logistic.kappa < 0) validation("model.kappa", "must be >= 0");
  if (!(m.logistic.prior_precision > 0)) validation("model.prior_precision", "must be > 0");
  if (m.tree.trees < 1) validation("model.trees", "must be >= 1");
  if (m.tree.max_depth < 0) validation("model.max_depth", "must be >= 0");
  if (m.tree.min_leaf < 1) validation("model.min_leaf", "must be >= 1");
  if (m.tree.refit_period < 1) validation("model.refit_period", "must be >= 1");
  if (m.tree.prior_mean < 0 || m.tree.prior_mean > 1) validation("model.prior_mean", "must lie in [0,1]");

  // [experiment]
  Section exp("experiment", section("experiment"),
              {"policies", "alphas", "profiles", "free_agents", "eta", "runs", "seed",
               "batch_size", "batch_sizes", "batch_rule", "rounds", "offline", "jobs"});
  auto& e = cfg.experiment;
  if (auto v = exp.get("policies")) {
    e.policies.clear();
    for (const auto& name : split(*v, ',')) {
      auto kind = parse_policy_kind(name);
      if (!kind) validation(exp.path("policies"), "unknown policy '" + name + "'");
      e.policies.push_back(*kind);
    }
    if (e.policies.empty()) validation(exp.path("policies"), "no policies listed");
  }
  if (auto v = exp.get("eta")) e.eta = to_double(exp.path("eta"), *v);
  if (e.eta < 0) validation(exp.path("eta"), "must be >= 0");
  if (auto v = exp.get("runs")) e.runs = to_int<int>(exp.path("runs"), *v);
  if (e.runs < 1) validation(exp.path("runs"), "must be >= 1");
  if (auto v = exp.get("seed")) e.base_seed = to_int<std::uint64_t>(exp.path("seed"), *v);
  if (auto v = exp.get("batch_size")) e.batch_size = to_int<int>(exp.path("batch_size"), *v);
  if (e.batch_size < 0) validation(exp.path("batch_size"), "must be >= 0");
  cfg.batch_sizes = {1, 10, 100, 1000, 0};
  if (auto v = exp.get("batch_sizes")) {
    cfg.batch_sizes.clear();
    for (const auto& s : split(*v, ',')) {
      const int b = to_int<int>(exp.path("batch_sizes"), s);
      if (b < 0) validation(exp.path("batch_sizes"), "must be >= 0");
      cfg.batch_sizes.push_back(b);
    }
  }
  if (auto v = exp.get("batch_rule")) {
    if (*v == "bounded")
      e.batch_rule = BatchCountRule::Bounded;
    else if (*v == "exact")
      e.batch_rule = BatchCountRule::Exact;
    else
      validation(exp.path("batch_rule"), "expected bounded or exact");
  }
  if (auto v = exp.get("rounds")) e.rounds = to_int<std::size_t>(exp.path("rounds"), *v);
  if (auto v = exp.get("offline")) e.offline_benchmark = to_bool(exp.path("offline"), *v);
  if (auto v = exp.get("jobs")) e.jobs = to_int<int>(exp.path("jobs"), *v);
  if (e.jobs < 1) validation(exp.path("jobs"), "must be >= 1");

  std::vector<bool> free_flags;
  if (auto v = exp.get("free_agents")) {
    for (const auto& s : split(*v, ',')) {
      const auto idx = to_int<int>(exp.path("free_agents"), s);
      if (idx < 1) validation(exp.path("free_agents"), "agents are numbered from 1");
      if (free_flags.size() < static_cast<std::size_t>(idx)) free_flags.resize(static_cast<std::size_t>(idx), false);
      free_flags[static_cast<std::size_t>(idx - 1)] = true;
    }
  }
  const auto check_profile = [&](const std::string& key, std::vector<double> alphas,
                                 std::vector<bool> flags) {
    try {
      return validate_capacity_profile(std::move(alphas), std::move(flags));
    } catch (const Error& err) {
      throw Error(ErrorKind::ValidationError, key + ": " + err.what());
    }
  };
  if (exp.get("alphas") && exp.get("profiles"))
    validation(exp.path("profiles"), "give either alphas or profiles, not both");
  if (auto v = exp.get("profiles")) {
    for (const auto& text : split(*v, ';')) {
      std::vector<double> alphas;
      std::vector<bool> flags;
      for (const auto& entry : split(text, '/')) {
        flags.push_back(entry == "free");
        alphas.push_back(entry == "free" ? 0.0 : to_double(exp.path("profiles"), entry));
      }
      for (std::size_t a = 0; a < free_flags.size() && a < flags.size(); ++a)
        flags[a] = flags[a] || free_flags[a];
      e.grid.push_back(check_profile(exp.path("profiles"), std::move(alphas), std::move(flags)));
    }
  } else {
    std::vector<double> alphas{0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0};
    if (auto v = exp.get("alphas")) {
      alphas.clear();
      for (const auto& s : split(*v, ',')) alphas.push_back(to_double(exp.path("alphas"), s));
    }
    if (!free_flags.empty())
      validation(exp.path("free_agents"), "free agents need explicit profiles");
    for (double a : alphas)
      e.grid.push_back(check_profile(exp.path("alphas"), {a, 1.0 - a}, {false, false}));
  }
  if (e.grid.empty()) validation(exp.path("alphas"), "empty capacity grid");
  for (const auto& p : e.grid)
    if (p.size() != e.grid.front().size())
      validation(exp.path("profiles"), "profiles differ in agent count");
  return cfg;
}

inline AppConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config '" + path + "'");
  return parse_config(in);
}

}  // namespace capbandit
