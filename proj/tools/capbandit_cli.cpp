// capbandit: command-line front end for capacity-constrained routing
// experiments. Run `capbandit --help` or `capbandit <command> --help`.

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "capbandit/capbandit.hpp"
#include "capbandit/config.hpp"

namespace fs = std::filesystem;
using namespace capbandit;

namespace {

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::IoError, "sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct Options {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool trace = false;
  std::string input;  // plot
};

/// Collects outputs; everything is written under one directory and listed in
/// manifest.json together with the config hash.
class OutputDir {
 public:
  OutputDir(std::string dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create '" + dir_ + "': " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    const auto path = fs::path(dir_) / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
    artifacts_.push_back({{"path", name}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
    spdlog::info("wrote {}", path.string());
  }

  /// Artifacts from an earlier manifest in the same directory are kept unless
  /// they were rewritten. A command without a config (plot) inherits the
  /// earlier config hash and seed.
  void finish(const std::string& config_hash, std::uint64_t seed) {
    nlohmann::ordered_json m;
    m["command"] = command_;
    m["config_hash"] = config_hash;
    m["seed"] = seed;
    auto artifacts = nlohmann::ordered_json::array();
    const auto previous = read_previous();
    if (previous.is_object()) {
      if (config_hash.empty() && previous.contains("config_hash")) {
        m["config_hash"] = previous["config_hash"];
        m["seed"] = previous.value("seed", seed);
      }
      if (previous.contains("artifacts") && previous["artifacts"].is_array())
        for (const auto& a : previous["artifacts"])
          if (!rewritten(a.value("path", ""))) artifacts.push_back(a);
    }
    for (const auto& a : artifacts_) artifacts.push_back(a);
    m["artifacts"] = artifacts;
    write_raw("manifest.json", m.dump(2) + "\n");
  }

 private:
  nlohmann::ordered_json read_previous() const {
    std::ifstream in(fs::path(dir_) / "manifest.json");
    if (!in) return nullptr;
    return nlohmann::ordered_json::parse(in, nullptr, false);
  }

  bool rewritten(const std::string& path) const {
    for (const auto& a : artifacts_)
      if (a["path"] == path) return true;
    return false;
  }

  void write_raw(const std::string& name, const std::string& content) {
    const auto path = fs::path(dir_) / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
  }

  std::string dir_;
  std::string command_;
  nlohmann::ordered_json artifacts_ = nlohmann::ordered_json::array();
};

struct Loaded {
  AppConfig cfg;
  std::uint64_t seed = 0;
  std::string hash;
};

Loaded load_config(const Options& opt) {
  if (opt.config.empty()) throw Error(ErrorKind::ValidationError, "--config is required");
  Loaded l{parse_config_file(opt.config), 0, ""};
  if (opt.seed) l.cfg.experiment.base_seed = *opt.seed;
  if (opt.jobs) {
    if (*opt.jobs < 1) throw Error(ErrorKind::ValidationError, "--jobs must be >= 1");
    l.cfg.experiment.jobs = *opt.jobs;
  }
  l.seed = l.cfg.experiment.base_seed;
  l.hash = sha256_hex(l.cfg.text);
  return l;
}

/// Columns of numbers with a header row; used for true accuracy tables.
std::vector<std::vector<double>> read_numeric_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> values;
    std::size_t col = 0;
    for (auto cell : detail::split_csv_line(line)) {
      ++col;
      double v = 0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        throw Error(ErrorKind::ParseError, path + ": " + detail::location(row, col));
      values.push_back(v);
    }
    rows.push_back(std::move(values));
  }
  return rows;
}

TaskLog load_log(const AppConfig& cfg, std::uint64_t seed) {
  if (cfg.synth) {
    spdlog::info("generating {} synthetic records", cfg.synth->rounds);
    return synth_generate(*cfg.synth, seed);
  }
  if (cfg.data.path.empty())
    throw Error(ErrorKind::ValidationError, "data.path: required unless a [synth] section is given");
  std::istringstream in(read_file(cfg.data.path));
  TaskLog log = load_task_log(in, {cfg.data.agent_names});
  if (!cfg.data.true_mu.empty()) {
    const auto mu = read_numeric_csv(cfg.data.true_mu);
    if (mu.size() != log.size())
      throw Error(ErrorKind::DimensionMismatch, "data.true_mu: row count differs from the log");
    for (std::size_t t = 0; t < mu.size(); ++t) {
      if (mu[t].size() != log.agent_count())
        throw Error(ErrorKind::DimensionMismatch, "data.true_mu: column count differs from agents");
      log.records[t].true_mu = mu[t];
    }
  }
  spdlog::info("loaded {} records, {} agents, {} features", log.size(), log.agent_count(),
               log.feature_dim);
  return log;
}

void check_agents(const TaskLog& log, const ExperimentConfig& e) {
  for (const auto& p : e.grid)
    if (p.size() != log.agent_count())
      throw Error(ErrorKind::DimensionMismatch,
                  "experiment: capacity profiles have " + std::to_string(p.size()) +
                      " entries but the log has " + std::to_string(log.agent_count()) + " agents");
}

std::string file_label(const CapacityProfile& p) {
  std::string s = profile_label(p);
  for (char& c : s)
    if (c == '/') c = '-';
  return s;
}

std::string fmt_double(double v) { return detail::format_double(v); }

// --- commands --------------------------------------------------------------

void cmd_synth(const Options& opt) {
  const auto l = load_config(opt);
  if (!l.cfg.synth) throw Error(ErrorKind::ValidationError, "synth: the config has no [synth] section");
  const auto log = synth_generate(*l.cfg.synth, l.seed);
  OutputDir out(opt.out, "synth");
  std::ostringstream csv, mu;
  write_task_log(csv, log);
  for (std::size_t a = 0; a < log.agent_count(); ++a) mu << (a ? "," : "") << "mu_" << a + 1;
  mu << '\n';
  for (const auto& r : log.records) {
    for (std::size_t a = 0; a < r.true_mu.size(); ++a) mu << (a ? "," : "") << fmt_double(r.true_mu[a]);
    mu << '\n';
  }
  out.write("log.csv", csv.str());
  out.write("true_mu.csv", mu.str());
  out.finish(l.hash, l.seed);
}

void cmd_simulate(const Options& opt) {
  auto l = load_config(opt);
  const auto log = load_log(l.cfg, l.seed);
  auto& e = l.cfg.experiment;
  check_agents(log, e);
  const bool know_mu = log.has_true_mu();
  e.keep_trace = opt.trace || know_mu;
  const TaskLog run_log = permute_log(log, l.seed);
  const MuTable mu = know_mu ? reference_mu_table(run_log) : MuTable();
  OutputDir out(opt.out, "simulate");
  std::ostringstream table;
  table << "policy,alpha_profile,error_rate";
  for (std::size_t a = 0; a < log.agent_count(); ++a) table << ",frac_agent_" << a + 1;
  table << ",modified_regret,reward_shortfall\n";
  for (auto kind : e.policies) {
    for (const auto& p : e.grid) {
      const auto r = e.batch_size > 0 ? run_batched(run_log, e, kind, p, l.seed, e.batch_size)
                                      : run_online(run_log, e, kind, p, l.seed);
      table << to_string(kind) << ',' << profile_label(p) << ',' << fmt_double(r.error_rate);
      for (double f : r.fractions) table << ',' << fmt_double(f);
      if (know_mu) {
        const auto reg = compute_regret(r.trace, mu, p, e.eta);
        table << ',' << fmt_double(reg.total) << ',' << fmt_double(reg.plain_shortfall) << '\n';
      } else {
        table << ",,\n";
      }
      if (opt.trace) {
        std::ostringstream trace;
        write_trace_csv(trace, r.trace);
        out.write("trace_" + std::string(to_string(kind)) + "_" + file_label(p) + ".csv", trace.str());
      }
      spdlog::info("{} at {}: error {:.4f}", to_string(kind), profile_label(p), r.error_rate);
    }
  }
  out.write("simulate.csv", table.str());
  out.finish(l.hash, l.seed);
}

void cmd_sweep(const Options& opt) {
  auto l = load_config(opt);
  const auto log = load_log(l.cfg, l.seed);
  check_agents(log, l.cfg.experiment);
  spdlog::info("sweep: {} policies x {} profiles x {} runs", l.cfg.experiment.policies.size(),
               l.cfg.experiment.grid.size(), l.cfg.experiment.runs);
  const auto table = run_sweep(log, l.cfg.experiment);
  OutputDir out(opt.out, "sweep");
  std::ostringstream csv, svg;
  write_sweep_csv(csv, table);
  write_sweep_svg(svg, table);
  out.write("sweep.csv", csv.str());
  out.write("sweep.svg", svg.str());
  out.finish(l.hash, l.seed);
}

void cmd_batch_sim(const Options& opt) {
  auto l = load_config(opt);
  const auto log = load_log(l.cfg, l.seed);
  auto e = l.cfg.experiment;
  check_agents(log, e);
  const std::size_t rounds = e.rounds ? std::min(e.rounds, log.size()) : log.size();
  OutputDir out(opt.out, "batch-sim");
  std::ostringstream csv;
  csv << "batch_size,policy,alpha_profile,mean_error,std_error";
  for (std::size_t a = 0; a < log.agent_count(); ++a) csv << ",frac_agent_" << a + 1;
  csv << '\n';
  for (int b : l.cfg.batch_sizes) {
    e.batch_size = b == 0 ? static_cast<int>(rounds) : b;
    spdlog::info("batch size {}", e.batch_size);
    const auto table = run_sweep(log, e);
    for (const auto& row : table.rows) {
      csv << e.batch_size << ',' << row.policy << ',' << profile_label(row.profile) << ','
          << fmt_double(row.mean_error) << ',' << fmt_double(row.std_error);
      for (double f : row.mean_fractions) csv << ',' << fmt_double(f);
      csv << '\n';
    }
    if (opt.trace) {
      // Plans of the first run of the first (policy, profile) cell.
      auto traced = e;
      traced.keep_trace = true;
      const auto r = run_batched(permute_log(log, e.base_seed), traced, e.policies.front(),
                                 e.grid.front(), e.base_seed, e.batch_size);
      std::ostringstream plans;
      plans << "batch_index,task_index,agent,score\n";
      for (const auto& row : r.trace) {
        const auto size = static_cast<std::size_t>(e.batch_size);
        plans << row.t / size << ',' << row.t % size << ',' << row.agent + 1 << ','
              << fmt_double(row.scores[static_cast<std::size_t>(row.agent)]) << '\n';
      }
      out.write("batch_plans_b" + std::to_string(e.batch_size) + ".csv", plans.str());
    }
  }
  out.write("batch.csv", csv.str());
  out.finish(l.hash, l.seed);
}

void cmd_oracle(const Options& opt) {
  auto l = load_config(opt);
  const auto log = load_log(l.cfg, l.seed);
  const auto& e = l.cfg.experiment;
  check_agents(log, e);
  const bool approximate = !log.has_true_mu();
  if (approximate) spdlog::warn("no true accuracies; using tree ensembles fitted on the full log");
  const MuTable mu = reference_mu_table(prepare_features(log, e.bias, e.standardize), e.model);
  OutputDir out(opt.out, "oracle");
  std::ostringstream summary;
  summary << "alpha_profile,oracle_value,random_value,unconstrained_value,threshold,"
             "disagreement_gain,approximate\n";
  const double unconstrained = assignment_value(mu, oracle_unconstrained(mu));
  for (const auto& p : e.grid) {
    const auto o = oracle_constrained_general(mu, p);
    summary << profile_label(p) << ',' << fmt_double(o.value) << ','
            << fmt_double(random_value(mu, p)) << ',' << fmt_double(unconstrained) << ',';
    if (mu.cols() == 2 && !p.has_free_agent()) {
      std::vector<double> delta(static_cast<std::size_t>(mu.rows()));
      for (Eigen::Index t = 0; t < mu.rows(); ++t) delta[static_cast<std::size_t>(t)] = mu(t, 0) - mu(t, 1);
      const auto sorted = oracle_constrained_two_agent(delta, p.alphas[0]);
      if (std::isfinite(sorted.threshold)) summary << fmt_double(sorted.threshold);
      summary << ',';
      try {
        summary << fmt_double(disagreement_gain(delta, p.alphas[0]));
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::CapacityOutsideWindow) throw;
      }
    } else {
      summary << ',';
    }
    summary << ',' << (approximate ? "true" : "false") << '\n';
    std::ostringstream assignment;
    write_oracle_csv(assignment, mu, o.assignment);
    out.write("oracle_" + file_label(p) + ".csv", assignment.str());
  }
  out.write("oracle_summary.csv", summary.str());
  out.finish(l.hash, l.seed);
}

void cmd_offline(const Options& opt) {
  auto l = load_config(opt);
  const auto log = load_log(l.cfg, l.seed);
  OutputDir out(opt.out, "offline");
  std::ostringstream csv;
  csv << "family,error_rate\n";
  csv << "logistic," << fmt_double(run_offline_benchmark(log, ModelFamily::Logistic, l.cfg.experiment)) << '\n';
  csv << "tree," << fmt_double(run_offline_benchmark(log, ModelFamily::Tree, l.cfg.experiment)) << '\n';
  out.write("offline.csv", csv.str());
  out.finish(l.hash, l.seed);
}

void cmd_plot(const Options& opt) {
  const std::string input = opt.input.empty() ? (fs::path(opt.out) / "sweep.csv").string() : opt.input;
  const std::string text = read_file(input);
  std::istringstream in(text);
  const auto table = read_sweep_csv(in);
  std::string hash;
  std::uint64_t seed = opt.seed.value_or(0);
  if (!opt.config.empty()) {
    const auto l = load_config(opt);
    hash = l.hash;
    seed = l.seed;
  }
  OutputDir out(opt.out, "plot");
  std::ostringstream svg;
  write_sweep_svg(svg, table);
  out.write(fs::path(input).stem().string() + ".svg", svg.str());
  out.finish(hash, seed);
}

void print_explain() {
  std::cout << "Configuration defaults\n";
  for (const auto& e : explain_defaults())
    std::cout << "  " << e.key << " = " << e.value << "\n      " << e.rationale << '\n';
}

void configure_logging() {
  auto logger = spdlog::stderr_logger_mt("capbandit");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("CAPBANDIT_LOG_LEVEL")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to "off"; only accept real level names.
    if (level != spdlog::level::off || std::string(env) == "off")
      spdlog::set_level(level);
  }
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  Options opt;
  bool explain = false;

  CLI::App app{"Capacity-constrained contextual routing experiments"};
  app.require_subcommand(0, 1);
  app.add_flag("--explain", explain, "Print configuration defaults with their rationale");

  const auto common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opt.config, "Experiment configuration file");
    if (config_required) c->required();
    sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", opt.seed, "Base seed (overrides experiment.seed)");
    sub->add_option("--jobs", opt.jobs, "Worker threads (overrides experiment.jobs)");
    sub->add_flag("--trace", opt.trace, "Write per-round traces");
    sub->add_flag("--explain", explain, "Print configuration defaults with their rationale");
  };
  struct Command {
    const char* name;
    const char* help;
    void (*run)(const Options&);
  };
  const Command commands[] = {
      {"synth", "Generate a synthetic reward log", cmd_synth},
      {"simulate", "One run per policy and capacity profile", cmd_simulate},
      {"sweep", "Capacity sweep over permuted runs", cmd_sweep},
      {"batch-sim", "Mini-batch sweep over batch sizes", cmd_batch_sim},
      {"oracle", "Constrained and unconstrained oracle values", cmd_oracle},
      {"offline", "Offline full-information benchmark", cmd_offline},
      {"plot", "Render a sweep table as SVG", cmd_plot},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    common(sub, false);
    if (std::string(c.name) == "plot")
      sub->add_option("--input", opt.input, "Sweep CSV to plot (default <out>/sweep.csv)");
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error kind=UsageError detail=\"" << one_line(e.what()) << "\"\n";
    return 64;
  }

  if (explain) {
    print_explain();
    return 0;
  }
  try {
    for (auto [sub, cmd] : subs) {
      if (!sub->parsed()) continue;
      cmd->run(opt);
      return 0;
    }
    std::cerr << "error kind=UsageError detail=\"no command given; see --help\"\n";
    return 64;
  } catch (const Error& e) {
    std::string detail = e.what();
    const std::string prefix = std::string(to_string(e.kind())) + ": ";
    if (detail.rfind(prefix, 0) == 0) detail = detail.substr(prefix.size());
    std::cerr << "error kind=" << to_string(e.kind()) << " detail=\"" << one_line(detail) << "\"\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error kind=Internal detail=\"" << one_line(e.what()) << "\"\n";
    return 1;
  }
}
