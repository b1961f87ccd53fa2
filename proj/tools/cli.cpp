#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "robin/errors.hpp"
#include "robin/experiment.hpp"
#include "robin/ingest.hpp"
#include "robin/metrics.hpp"
#include "robin/oracle.hpp"
#include "robin/policy.hpp"

namespace robin::cli {

namespace {

using nlohmann::json;

std::string fmt(const char* spec, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, x);
  return buf;
}

std::string fmt_opt(const std::optional<double>& x) { return x ? fmt("%.6f", *x) : "absent"; }

struct SimulateArgs {
  std::string dataset;
  std::string synthetic;
  std::string remote_endpoint;
  std::string pairs;
  std::vector<std::string> policies{"all"};
  std::vector<std::uint64_t> budgets;
  std::uint64_t replications = 1;
  double delta = 0.007;
  std::string warmup = "experimental";
  std::string ucb_log = "auto";
  std::uint64_t seed = 0;
  std::uint64_t checkpoint_every = 1000;
  std::string out;
  unsigned jobs = 1;
  int remote_retries = 3;
  double remote_timeout = 10.0;
};

struct AllocateArgs {
  std::string variances;
  std::uint64_t budget = 0;
};

struct GenArgs {
  std::string spec;
  std::optional<std::uint64_t> samples_per_arm;
  std::uint64_t seed = 0;
  std::optional<double> human_noise;
  std::string out;
};

struct AnalyzeArgs {
  std::string results;
  std::string dataset;
  std::string curves;
};

WarmupMode parse_warmup(const std::string& text) {
  if (text == "experimental") return WarmupMode::experimental();
  if (text == "theory") return WarmupMode::theory();
  std::size_t used = 0;
  long long n = 0;
  try {
    n = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || n < 1) {
    throw ConfigError("--warmup must be 'experimental', 'theory' or a positive integer, got '" +
                      text + "'");
  }
  return WarmupMode::fixed(static_cast<std::uint64_t>(n));
}

ConfidenceLog parse_ucb_log(const std::string& text, const WarmupMode& warmup) {
  if (text == "union") return ConfidenceLog::kUnionBound;
  if (text == "single") return ConfidenceLog::kSingleCheck;
  return warmup.kind == WarmupMode::Kind::kExperimental ? ConfidenceLog::kSingleCheck
                                                        : ConfidenceLog::kUnionBound;
}

std::vector<PairPayload> load_pairs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open pairs file " + path);
  std::vector<PairPayload> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      pairs.push_back({j.at("pair_id").get<std::string>(), j.value("prompt", ""),
                       j.value("response", ""), j.value("rubric", "")});
    } catch (const json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (pairs.empty()) throw ParseError(path + ": no pairs");
  return pairs;
}

std::unique_ptr<JudgeOracle> build_oracle(const SimulateArgs& a) {
  if (!a.dataset.empty()) return std::make_unique<ReplayOracle>(load_dataset(a.dataset).pools);
  if (!a.synthetic.empty()) {
    const auto spec = load_synthetic_spec(a.synthetic);
    if (spec.samples_per_arm) {
      auto data = gen_synthetic(spec.arms, *spec.samples_per_arm, spec.pool_seed, spec.score_range_max);
      return std::make_unique<ReplayOracle>(std::move(data.pools));
    }
    return std::make_unique<SyntheticOracle>(spec.arms);
  }
  RemoteJudgeConfig rc;
  rc.endpoint = a.remote_endpoint;
  rc.max_retries = a.remote_retries;
  rc.timeout = std::chrono::milliseconds(static_cast<long long>(a.remote_timeout * 1000.0));
  return std::make_unique<RemoteJudgeOracle>(rc, load_pairs(a.pairs));
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const WarmupMode warmup = parse_warmup(a.warmup);
  auto oracle = build_oracle(a);

  std::vector<PolicyKind> kinds;
  for (const auto& name : a.policies) {
    if (name == "all") {
      kinds.insert(kinds.end(), {PolicyKind::kUniform, PolicyKind::kRobin, PolicyKind::kRobinHood});
      if (!oracle->has_ground_truth()) std::erase(kinds, PolicyKind::kRobin);
    } else {
      kinds.push_back(parse_policy_kind(name));
    }
  }
  std::vector<PolicyKind> unique;
  for (auto k : kinds) {
    if (std::find(unique.begin(), unique.end(), k) == unique.end()) unique.push_back(k);
  }
  kinds = unique;

  ExperimentConfig cfg;
  for (auto k : kinds) {
    PolicyConfig p;
    p.kind = k;
    p.warmup = warmup;
    if (k == PolicyKind::kRobinHood) {
      ConfidenceConfig c;
      c.delta = a.delta;
      c.log_kind = parse_ucb_log(a.ucb_log, warmup);
      p.confidence = c;
    }
    cfg.policies.push_back(std::move(p));
  }
  cfg.budgets = a.budgets;
  cfg.replications = a.replications;
  cfg.master_seed = a.seed;
  cfg.checkpoint_every = a.checkpoint_every;
  cfg.jobs = a.jobs;

  const ExperimentResult result = run_experiment(cfg, *oracle);

  json echo = {{"oracle", oracle->kind()},
               {"num_arms", oracle->num_arms()},
               {"dataset", a.dataset},
               {"synthetic", a.synthetic},
               {"remote_endpoint", a.remote_endpoint},
               {"policies", a.policies},
               {"budgets", a.budgets},
               {"replications", a.replications},
               {"delta", a.delta},
               {"warmup", a.warmup},
               {"ucb_log", a.ucb_log},
               {"master_seed", a.seed},
               {"checkpoint_every", a.checkpoint_every}};
  save_results(result, echo, a.out);

  out << "policy        budget     mean_wce     std_wce   reps\n";
  for (const auto& c : result.report.cells) {
    char line[160];
    std::snprintf(line, sizeof line, "%-12s %8llu  %11s %11s %6llu%s\n", c.policy.c_str(),
                  static_cast<unsigned long long>(c.budget), fmt_opt(c.mean_wce).c_str(),
                  fmt_opt(c.std_wce).c_str(), static_cast<unsigned long long>(c.replications),
                  c.single_replication ? "  (single replication, std undefined)" : "");
    out << line;
  }
  out << "results written to " << a.out << "\n";

  int code = kOk;
  for (const auto& f : result.failures) {
    err << "cell " << f.policy << " @ " << f.budget << " failed: " << f.message << "\n";
    if (f.minimum_budget) {
      err << "minimum feasible budget: " << *f.minimum_budget << "\n";
      code = kInfeasible;
    } else if (code == kOk) {
      code = kRuntime;
    }
  }
  return code;
}

std::vector<double> parse_variances(const std::string& text) {
  std::string body = text;
  if (std::ifstream file(text, std::ios::binary); file) {
    std::ostringstream ss;
    ss << file.rdbuf();
    body = ss.str();
  }
  for (char& ch : body) {
    if (ch == ',' || ch == ';' || ch == '\n' || ch == '\r' || ch == '\t') ch = ' ';
  }
  std::istringstream in(body);
  std::vector<double> v;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw InputError("--variances: '" + tok + "' is not a number");
    v.push_back(x);
  }
  if (v.empty()) throw InputError("--variances: no values given");
  return v;
}

int cmd_allocate(const AllocateArgs& a, std::ostream& out) {
  const VarianceProfile profile(parse_variances(a.variances));
  const auto pulls = robin_pulls(profile, a.budget);
  out << "arm,variance,share,pulls\n";
  for (std::size_t i = 0; i < profile.size(); ++i) {
    out << i << "," << format_real(profile.variances()[i]) << "," << format_real(profile.share(i))
        << "," << pulls[i] << "\n";
  }
  return kOk;
}

int cmd_gen_synthetic(const GenArgs& a, std::ostream& out) {
  const auto spec = load_synthetic_spec(a.spec);
  const std::uint64_t n = a.samples_per_arm.value_or(spec.samples_per_arm.value_or(30));
  Dataset data = gen_synthetic(spec.arms, n, a.seed, spec.score_range_max);
  if (a.human_noise) {
    RandomStream stream(derive_seed({a.seed, 0x4855ULL}));
    std::vector<ScorePool> pools;
    for (std::size_t i = 0; i < data.pools.size(); ++i) {
      const auto& p = data.pools[i];
      const double h = std::clamp(spec.arms[i].exact_mean() + *a.human_noise * stream.normal(), 0.0,
                                  spec.score_range_max);
      pools.emplace_back(p.pair_id(), p.samples(), h, data.score_range_max);
    }
    data.pools = std::move(pools);
  }
  save_dataset(data, a.out);
  out << "wrote " << data.pools.size() << " pairs x " << n << " samples to " << a.out << "\n";
  return kOk;
}

bool close(const std::optional<double>& a, const std::optional<double>& b) {
  if (!a || !b) return a.has_value() == b.has_value();
  return std::abs(*a - *b) <= 1e-12 * std::max(1.0, std::abs(*b));
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  const StoredResults stored = load_results(a.results);
  const AggregateReport rep = aggregate(stored.records);

  std::optional<std::vector<double>> human;
  if (!a.dataset.empty()) human = ReplayOracle(load_dataset(a.dataset).pools).human_scores();

  struct Corr {
    std::vector<std::optional<double>> p, s, k;
  };
  std::map<std::pair<std::string, std::uint64_t>, Corr> corr;
  for (const auto& r : stored.records) {
    auto& c = corr[{r.policy, r.budget}];
    if (human) {
      const auto& est = r.final_allocation.estimates;
      if (est.size() != human->size()) {
        throw ParseError("dataset has " + std::to_string(human->size()) + " pairs but results have " +
                         std::to_string(est.size()) + " arms");
      }
      auto safe = [&](auto f) -> std::optional<double> {
        try {
          return f(est, *human);
        } catch (const UndefinedError&) {
          return std::nullopt;
        }
      };
      c.p.push_back(safe([](auto& x, auto& y) { return pearson(x, y); }));
      c.s.push_back(safe([](auto& x, auto& y) { return spearman(x, y); }));
      c.k.push_back(safe([](auto& x, auto& y) { return kendall_tau(x, y); }));
    } else {
      const auto& last = r.checkpoints.back();
      c.p.push_back(last.pearson);
      c.s.push_back(last.spearman);
      c.k.push_back(last.kendall);
    }
  }
  auto mean_all = [](const std::vector<std::optional<double>>& v) -> std::optional<double> {
    if (v.empty()) return std::nullopt;
    double s = 0.0;
    for (const auto& x : v) {
      if (!x) return std::nullopt;
      s += *x;
    }
    return s / static_cast<double>(v.size());
  };

  out << "policy        budget     mean_wce     std_wce   reps     pearson    spearman     kendall\n";
  int code = kOk;
  for (const auto& c : rep.cells) {
    const auto& cc = corr[{c.policy, c.budget}];
    char line[200];
    std::snprintf(line, sizeof line, "%-12s %8llu  %11s %11s %6llu %11s %11s %11s\n",
                  c.policy.c_str(), static_cast<unsigned long long>(c.budget),
                  fmt_opt(c.mean_wce).c_str(), fmt_opt(c.std_wce).c_str(),
                  static_cast<unsigned long long>(c.replications), fmt_opt(mean_all(cc.p)).c_str(),
                  fmt_opt(mean_all(cc.s)).c_str(), fmt_opt(mean_all(cc.k)).c_str());
    out << line;

    const CellSummary* stored_cell = nullptr;
    for (const auto& s : stored.summary) {
      if (s.policy == c.policy && s.budget == c.budget) stored_cell = &s;
    }
    if (!stored_cell || !close(stored_cell->mean_wce, c.mean_wce) ||
        !close(stored_cell->std_wce, c.std_wce) || stored_cell->replications != c.replications) {
      err << "summary.csv disagrees with trajectories.csv for " << c.policy << " @ " << c.budget
          << "\n";
      code = kRuntime;
    }
  }
  if (stored.summary.size() != rep.cells.size()) {
    err << "summary.csv has " << stored.summary.size() << " rows, trajectories give "
        << rep.cells.size() << " cells\n";
    code = kRuntime;
  }

  const std::string curves =
      a.curves.empty() ? (std::filesystem::path(a.results) / "curves.csv").string() : a.curves;
  std::ofstream f(curves, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + curves);
  auto opt = [](const std::optional<double>& x) { return x ? format_real(*x) : std::string(); };
  f << "policy,budget,step,mean_wce,mean_pearson,mean_spearman,mean_kendall\n";
  for (const auto& p : rep.curves) {
    f << p.policy << "," << p.budget << "," << p.step << "," << opt(p.mean_wce) << ","
      << opt(p.mean_pearson) << "," << opt(p.mean_spearman) << "," << opt(p.mean_kendall) << "\n";
  }
  if (!f) throw IoError("write failed for " + curves);
  out << "curves written to " << curves << "\n";
  return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Variance-adaptive allocation of LLM-judge query budgets", "robin-alloc"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a seeded policy x budget experiment grid");
  auto* src = simulate->add_option_group("source");
  src->add_option("--dataset", sim.dataset, "Score pools (JSON Lines)")->check(CLI::ExistingFile);
  src->add_option("--synthetic", sim.synthetic, "Synthetic arm spec (JSON)")->check(CLI::ExistingFile);
  src->add_option("--remote-endpoint", sim.remote_endpoint, "Remote judge base URL");
  src->require_option(1);
  simulate->add_option("--pairs", sim.pairs, "Pair payloads for the remote judge (JSON Lines)")
      ->check(CLI::ExistingFile);
  simulate->add_option("--policy", sim.policies, "Policies to run (repeatable or comma separated)")
      ->delimiter(',')
      ->check(CLI::IsMember({"uniform", "robin", "robin-hood", "all"}));
  simulate->add_option("--budget", sim.budgets, "Query budget (repeatable or comma separated)")
      ->required()
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  simulate->add_option("--replications", sim.replications, "Replications per cell")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--delta", sim.delta, "ROBIN-HOOD failure probability in (0, 1]")
      ->check(CLI::Range(std::numeric_limits<double>::min(), 1.0));
  simulate->add_option("--warmup", sim.warmup, "experimental | theory | <pulls per arm>")
      ->check([](const std::string& text) {
        try {
          parse_warmup(text);
          return std::string();
        } catch (const ConfigError& e) {
          return std::string(e.what());
        }
      });
  simulate->add_option("--ucb-log", sim.ucb_log,
                       "UCB radius log term: union = log(4KB/delta), single = log(1/delta), auto "
                       "= single for the experimental warm-up, union otherwise")
      ->check(CLI::IsMember({"auto", "union", "single"}));
  simulate->add_option("--seed", sim.seed, "Master seed");
  simulate->add_option("--checkpoint-every", sim.checkpoint_every, "Trajectory checkpoint spacing")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--out", sim.out, "Results directory")->required();
  simulate->add_option("--jobs", sim.jobs, "Worker threads (results do not depend on it)")
      ->check(CLI::Range(1u, 256u));
  simulate->add_option("--remote-retries", sim.remote_retries, "Retries per remote query")
      ->check(CLI::Range(0, 20));
  simulate->add_option("--remote-timeout", sim.remote_timeout, "Remote timeout in seconds")
      ->check(CLI::PositiveNumber);

  AllocateArgs alloc;
  auto* allocate = app.add_subcommand("allocate", "Exact ROBIN pull counts for known variances");
  allocate->add_option("--variances", alloc.variances, "Comma list, or a file of numbers")->required();
  allocate->add_option("--budget", alloc.budget, "Query budget")->required()->check(CLI::PositiveNumber);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Write a synthetic score-pool dataset");
  gen_cmd->add_option("--spec", gen.spec, "Synthetic arm spec (JSON)")->required()->check(CLI::ExistingFile);
  gen_cmd->add_option("--samples-per-arm", gen.samples_per_arm, "Pool size per arm")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Seed for pool draws");
  gen_cmd->add_option("--human-noise", gen.human_noise,
                      "Attach human scores = true mean + N(0, sd^2), clamped to the scale")
      ->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--out", gen.out, "Output dataset path")->required();

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Summarise and cross-check a results directory");
  analyze->add_option("--results", an.results, "Results directory from simulate")
      ->required()
      ->check(CLI::ExistingDirectory);
  analyze->add_option("--dataset", an.dataset, "Dataset with human scores")->check(CLI::ExistingFile);
  analyze->add_option("--curves", an.curves, "Where to write the step vs mean WCE CSV");

  try {
    app.parse(argc, argv);
    if (simulate->parsed() && !sim.remote_endpoint.empty() && sim.pairs.empty()) {
      throw CLI::RequiresError("--remote-endpoint", "--pairs");
    }
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      app.exit(e, out, err);
      return kOk;
    }
    err << "error: " << e.what() << "\n";
    err << "run with --help for usage\n";
    return kUsage;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sim, out, err);
    if (allocate->parsed()) return cmd_allocate(alloc, out);
    if (gen_cmd->parsed()) return cmd_gen_synthetic(gen, out);
    if (analyze->parsed()) return cmd_analyze(an, out, err);
  } catch (const InfeasibleBudgetError& e) {
    err << "error: " << e.what() << "\nminimum feasible budget: " << e.minimum_budget() << "\n";
    return kInfeasible;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kInfeasible;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}

}  // namespace robin::cli
