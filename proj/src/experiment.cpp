#include "robin/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include "robin/errors.hpp"
#include "robin/rng.hpp"

namespace robin {

void ExperimentConfig::validate() const {
  if (policies.empty()) throw ConfigError("no policies requested");
  if (budgets.empty()) throw ConfigError("no budgets requested");
  for (auto b : budgets) {
    if (b == 0) throw ConfigError("budgets must be positive");
  }
  if (replications == 0) throw ConfigError("replications must be at least 1");
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t policy_index,
                               std::size_t budget_index, std::uint64_t replication) {
  return derive_seed({master_seed, policy_index, budget_index, replication});
}

const CellSummary& AggregateReport::cell(const std::string& policy, std::uint64_t budget) const {
  for (const auto& c : cells) {
    if (c.policy == policy && c.budget == budget) return c;
  }
  throw InputError("no cell for policy '" + policy + "' at budget " + std::to_string(budget));
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw InputError("cannot summarise an empty cell");
  MeanStd out;
  const double n = static_cast<double>(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1) {
    out.single = true;
    return out;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / (n - 1.0));
  return out;
}

namespace {

std::optional<double> mean_if_all(const std::vector<std::optional<double>>& xs) {
  double sum = 0.0;
  for (const auto& x : xs) {
    if (!x) return std::nullopt;
    sum += *x;
  }
  return sum / static_cast<double>(xs.size());
}

}  // namespace

AggregateReport aggregate(std::span<const TrialRecord> records) {
  std::vector<std::pair<std::string, std::uint64_t>> order;
  std::map<std::pair<std::string, std::uint64_t>, std::vector<const TrialRecord*>> groups;
  for (const auto& r : records) {
    if (r.checkpoints.empty()) throw InputError("trial record without checkpoints");
    auto key = std::make_pair(r.policy, r.budget);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }

  AggregateReport rep;
  for (const auto& key : order) {
    const auto& group = groups[key];
    CellSummary c;
    c.policy = key.first;
    c.budget = key.second;
    c.replications = group.size();
    c.single_replication = group.size() == 1;
    std::vector<std::optional<double>> last;
    for (const auto* r : group) last.push_back(r->checkpoints.back().wce);
    if (mean_if_all(last)) {
      std::vector<double> finals;
      for (const auto& v : last) finals.push_back(*v);
      const MeanStd ms = mean_std(finals);
      c.mean_wce = ms.mean;
      c.std_wce = ms.std;
      c.min_wce = *std::min_element(finals.begin(), finals.end());
      c.max_wce = *std::max_element(finals.begin(), finals.end());
    }
    rep.cells.push_back(c);

    const auto& first = group.front()->checkpoints;
    for (std::size_t j = 0; j < first.size(); ++j) {
      CurvePoint p;
      p.policy = key.first;
      p.budget = key.second;
      p.step = first[j].step;
      std::vector<std::optional<double>> w, pr, sp, kt;
      for (const auto* r : group) {
        if (r->checkpoints.size() != first.size() || r->checkpoints[j].step != p.step) {
          throw InputError("replications of one cell have different checkpoint steps");
        }
        const auto& cp = r->checkpoints[j];
        w.push_back(cp.wce);
        pr.push_back(cp.pearson);
        sp.push_back(cp.spearman);
        kt.push_back(cp.kendall);
      }
      p.mean_wce = mean_if_all(w);
      p.mean_pearson = mean_if_all(pr);
      p.mean_spearman = mean_if_all(sp);
      p.mean_kendall = mean_if_all(kt);
      rep.curves.push_back(std::move(p));
    }
  }
  return rep;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const JudgeOracle& oracle,
                                const ProgressFn& progress) {
  cfg.validate();
  const std::size_t k = oracle.num_arms();

  std::vector<PolicyConfig> policies = cfg.policies;
  for (auto& p : policies) {
    if (p.kind == PolicyKind::kRobin && !p.variance_profile) {
      if (!oracle.has_ground_truth()) {
        throw ConfigError("robin needs known variances, but the " + oracle.kind() +
                          " oracle has no ground truth");
      }
      p.variance_profile = VarianceProfile(oracle.ground_truth().variances);
    }
  }

  const std::size_t nb = cfg.budgets.size();
  const std::size_t cells = policies.size() * nb;
  const std::uint64_t reps = cfg.replications;

  ExperimentResult out;
  std::vector<std::optional<CellFailure>> failure(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    const auto& p = policies[c / nb];
    const auto b = cfg.budgets[c % nb];
    try {
      Allocator probe(p, k, b);
    } catch (const InfeasibleBudgetError& e) {
      failure[c] = CellFailure{p.name(), b, e.what(), e.minimum_budget()};
    } catch (const ConfigError& e) {
      failure[c] = CellFailure{p.name(), b, e.what(), std::nullopt};
    }
  }

  std::vector<std::optional<TrialRecord>> slots(cells * reps);
  out.seeds.resize(cells * reps);
  for (std::size_t t = 0; t < slots.size(); ++t) {
    const std::size_t c = t / reps;
    out.seeds[t] = replication_seed(cfg.master_seed, c / nb, c % nb, t % reps);
  }

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= slots.size()) return;
      const std::size_t c = t / reps;
      {
        std::lock_guard lock(mu);
        if (failure[c]) continue;
      }
      const auto& p = policies[c / nb];
      const auto b = cfg.budgets[c % nb];
      try {
        PolicyRun run = run_policy(p, oracle, b, out.seeds[t], cfg.checkpoint_every);
        run.record.replication = t % reps;
        std::lock_guard lock(mu);
        if (progress) progress(run.record);
        slots[t] = std::move(run.record);
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (!failure[c]) failure[c] = CellFailure{p.name(), b, e.what(), std::nullopt};
      }
    }
  };

  const unsigned jobs = std::max(1u, cfg.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  std::vector<std::uint64_t> kept_seeds;
  for (std::size_t t = 0; t < slots.size(); ++t) {
    if (slots[t]) {
      out.records.push_back(std::move(*slots[t]));
      kept_seeds.push_back(out.seeds[t]);
    }
  }
  out.seeds = std::move(kept_seeds);
  for (auto& f : failure) {
    if (f) out.failures.push_back(std::move(*f));
  }
  out.report = aggregate(out.records);
  return out;
}

}  // namespace robin
