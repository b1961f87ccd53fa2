#include "robin/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "robin/errors.hpp"
#include "robin/metrics.hpp"

namespace robin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double robin_ratio(double variance, std::uint64_t pulls) {
  if (variance == 0.0) return 0.0;
  if (pulls == 0) return kInf;
  return variance / static_cast<double>(pulls);
}

double robin_hood_ratio(const ArmState& s, double confidence_log) {
  return ucb_variance(biased_variance(s), s.pulls, confidence_log) / static_cast<double>(s.pulls);
}

// Higher ratio, then fewer pulls, then lower index.
bool prefer(double ra, std::uint64_t na, std::size_t ia, double rb, std::uint64_t nb,
            std::size_t ib) {
  if (ra != rb) return ra > rb;
  if (na != nb) return na < nb;
  return ia < ib;
}

std::uint64_t ceil_positive(double x) {
  return static_cast<std::uint64_t>(std::max(1.0, std::ceil(x)));
}

}  // namespace

std::string_view policy_label(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kUniform:
      return "uniform";
    case PolicyKind::kRobin:
      return "robin";
    case PolicyKind::kRobinHood:
      return "robin-hood";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view text) {
  if (text == "uniform") return PolicyKind::kUniform;
  if (text == "robin") return PolicyKind::kRobin;
  if (text == "robin-hood" || text == "robin_hood") return PolicyKind::kRobinHood;
  throw ConfigError("unknown policy '" + std::string(text) + "'");
}

VarianceProfile::VarianceProfile(std::vector<double> variances) : variances_(std::move(variances)) {
  if (variances_.empty()) throw ConfigError("variance profile needs at least one arm");
  for (double v : variances_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ConfigError("variances must be finite and nonnegative");
    }
    total_ += v;
  }
  if (!(total_ > 0.0)) throw ConfigError("variance profile has no positive entry");
}

std::uint64_t warmup_length(const ConfidenceConfig& cfg, const WarmupMode& mode) {
  cfg.validate();
  switch (mode.kind) {
    case WarmupMode::Kind::kExperimental:
      return std::max<std::uint64_t>(2, ceil_positive(4.0 * std::log(1.0 / cfg.delta)));
    case WarmupMode::Kind::kTheory:
      return ceil_positive(16.0 * std::log(4.0 * static_cast<double>(cfg.num_arms) *
                                           static_cast<double>(cfg.budget) / cfg.delta));
    case WarmupMode::Kind::kExplicit:
      if (mode.length < 1) throw ConfigError("explicit warm-up length must be at least 1");
      return mode.length;
  }
  return 1;
}

std::uint64_t minimum_feasible_budget(ConfidenceConfig cfg, const WarmupMode& mode) {
  // warmup_length is nondecreasing in the budget, so iterate to the fixed point.
  cfg.budget = 1;
  for (;;) {
    const std::uint64_t need = cfg.num_arms * warmup_length(cfg, mode);
    if (need <= cfg.budget) return cfg.budget;
    cfg.budget = need;
  }
}

Quota robin_quota(const VarianceProfile& profile, std::uint64_t budget) {
  long double total = 0.0L;
  for (double v : profile.variances()) total += v;
  Quota q;
  for (double v : profile.variances()) {
    const long double target = static_cast<long double>(v) * budget / total;
    q.lower.push_back(static_cast<std::uint64_t>(std::floor(target)));
    q.upper.push_back(static_cast<std::uint64_t>(std::ceil(target)));
  }
  return q;
}

std::size_t select_arm_robin(const VarianceProfile& profile, std::span<const std::uint64_t> pulls,
                             std::optional<std::uint64_t> budget) {
  if (pulls.size() != profile.size()) throw InputError("pull counts do not match the profile");
  if (!(profile.total() > 0.0)) throw ConfigError("variance profile has no positive entry");
  std::vector<double> ratio(pulls.size());
  for (std::size_t i = 0; i < pulls.size(); ++i) {
    ratio[i] = robin_ratio(profile.variances()[i], pulls[i]);
  }
  if (budget) {
    const Quota q = robin_quota(profile, *budget);
    const std::uint64_t used = std::accumulate(pulls.begin(), pulls.end(), std::uint64_t{0});
    if (used >= *budget) throw StateError("budget exhausted");
    std::uint64_t deficit = 0;
    for (std::size_t i = 0; i < pulls.size(); ++i) {
      if (pulls[i] < q.lower[i]) deficit += q.lower[i] - pulls[i];
    }
    const bool forced = deficit >= *budget - used;
    for (std::size_t i = 0; i < pulls.size(); ++i) {
      if (pulls[i] >= q.upper[i] || (forced && pulls[i] >= q.lower[i])) ratio[i] = -kInf;
    }
  }
  std::size_t best = 0;
  double best_ratio = ratio[0];
  for (std::size_t i = 1; i < pulls.size(); ++i) {
    const double r = ratio[i];
    if (prefer(r, pulls[i], i, best_ratio, pulls[best], best)) {
      best = i;
      best_ratio = r;
    }
  }
  return best;
}

std::size_t select_arm_robin_hood(std::span<const ArmState> states, const ConfidenceConfig& cfg) {
  if (states.empty()) throw InputError("no arms");
  for (const auto& s : states) {
    if (s.pulls == 0) throw StateError("warm-up incomplete: some arm has no pulls");
  }
  const double log_term = cfg.confidence_log();
  std::size_t best = 0;
  double best_ratio = robin_hood_ratio(states[0], log_term);
  for (std::size_t i = 1; i < states.size(); ++i) {
    const double r = robin_hood_ratio(states[i], log_term);
    if (prefer(r, states[i].pulls, i, best_ratio, states[best].pulls, best)) {
      best = i;
      best_ratio = r;
    }
  }
  return best;
}

Allocator::Allocator(const PolicyConfig& cfg, std::size_t num_arms, std::uint64_t budget)
    : kind_(cfg.kind), name_(cfg.name()), num_arms_(num_arms), budget_(budget), states_(num_arms) {
  if (num_arms == 0) throw ConfigError("need at least one arm");
  if (budget == 0) throw ConfigError("budget must be at least 1");

  switch (kind_) {
    case PolicyKind::kUniform:
      break;
    case PolicyKind::kRobin:
      if (!cfg.variance_profile) throw ConfigError("robin needs a variance profile");
      if (cfg.variance_profile->size() != num_arms) {
        throw ConfigError("variance profile has " + std::to_string(cfg.variance_profile->size()) +
                          " arms, oracle has " + std::to_string(num_arms));
      }
      profile_ = cfg.variance_profile;
      quota_ = robin_quota(*profile_, budget);
      deficit_ = std::accumulate(quota_.lower.begin(), quota_.lower.end(), std::uint64_t{0});
      forced_ = deficit_ >= budget;
      build_tree();
      break;
    case PolicyKind::kRobinHood: {
      if (!cfg.confidence) throw ConfigError("robin-hood needs a confidence configuration");
      ConfidenceConfig conf = *cfg.confidence;
      conf.num_arms = num_arms;
      conf.budget = budget;
      conf.validate();
      confidence_log_ = conf.confidence_log();
      warmup_ = warmup_length(conf, cfg.warmup);
      if (warmup_ > budget / num_arms) {
        const std::uint64_t need = minimum_feasible_budget(conf, cfg.warmup);
        const std::uint64_t need_exp = minimum_feasible_budget(conf, WarmupMode::experimental());
        const std::uint64_t need_theory = minimum_feasible_budget(conf, WarmupMode::theory());
        throw InfeasibleBudgetError(
            "budget " + std::to_string(budget) + " cannot cover a warm-up of " +
                std::to_string(warmup_) + " pulls on each of " + std::to_string(num_arms) +
                " arms; minimum feasible budget is " + std::to_string(need) +
                " (experimental warm-up needs " + std::to_string(need_exp) +
                ", theory warm-up needs " + std::to_string(need_theory) + ")",
            need);
      }
      break;
    }
  }
}

bool Allocator::beats(const Key& a, const Key& b) {
  return prefer(a.ratio, a.pulls, a.arm, b.ratio, b.pulls, b.arm);
}

Allocator::Key Allocator::key_for(std::size_t arm) const {
  const ArmState& s = states_[arm];
  if (kind_ == PolicyKind::kRobinHood) return {robin_hood_ratio(s, confidence_log_), s.pulls, arm};
  if (s.pulls >= quota_.upper[arm] || (forced_ && s.pulls >= quota_.lower[arm])) {
    return {-kInf, s.pulls, arm};
  }
  return {robin_ratio(profile_->variances()[arm], s.pulls), s.pulls, arm};
}

void Allocator::build_tree() {
  leaves_ = std::bit_ceil(num_arms_);
  tree_.assign(2 * leaves_, Key{-kInf, std::numeric_limits<std::uint64_t>::max(), num_arms_});
  for (std::size_t i = 0; i < num_arms_; ++i) tree_[leaves_ + i] = key_for(i);
  for (std::size_t n = leaves_ - 1; n >= 1; --n) {
    tree_[n] = beats(tree_[2 * n + 1], tree_[2 * n]) ? tree_[2 * n + 1] : tree_[2 * n];
  }
  tree_ready_ = true;
}

void Allocator::refresh(std::size_t arm) {
  std::size_t n = leaves_ + arm;
  tree_[n] = key_for(arm);
  for (n /= 2; n >= 1; n /= 2) {
    tree_[n] = beats(tree_[2 * n + 1], tree_[2 * n]) ? tree_[2 * n + 1] : tree_[2 * n];
  }
}

std::size_t Allocator::select() const {
  if (done()) throw StateError("budget exhausted");
  if (!tree_ready_) return static_cast<std::size_t>(step_ % num_arms_);
  return tree_[1].arm;
}

void Allocator::observe(std::size_t arm, double score) {
  const std::size_t expected = select();
  if (arm != expected) {
    throw InputError("observed arm " + std::to_string(arm) + " but the policy selected " +
                     std::to_string(expected));
  }
  states_[arm] = update(states_[arm], score);
  ++step_;
  if (kind_ == PolicyKind::kRobin) {
    if (states_[arm].pulls <= quota_.lower[arm]) --deficit_;
    if (!forced_ && !done() && deficit_ >= budget_ - step_) {
      forced_ = true;
      build_tree();
      return;
    }
  }
  if (tree_ready_) {
    refresh(arm);
  } else if (kind_ == PolicyKind::kRobinHood && step_ == warmup_ * num_arms_) {
    build_tree();
  }
}

Allocation Allocator::allocation() const {
  Allocation a;
  a.budget = budget_;
  a.policy_name = name_;
  a.pulls.reserve(num_arms_);
  a.estimates.reserve(num_arms_);
  a.excluded.assign(num_arms_, false);
  for (std::size_t i = 0; i < num_arms_; ++i) {
    a.pulls.push_back(states_[i].pulls);
    a.estimates.push_back(states_[i].mean);
    if (profile_ && profile_->variances()[i] == 0.0) a.excluded[i] = true;
  }
  return a;
}

std::vector<std::uint64_t> robin_pulls(const VarianceProfile& profile, std::uint64_t budget) {
  PolicyConfig cfg;
  cfg.kind = PolicyKind::kRobin;
  cfg.variance_profile = profile;
  Allocator alloc(cfg, profile.size(), budget);
  while (!alloc.done()) alloc.observe(alloc.select(), 0.0);
  return alloc.allocation().pulls;
}

std::vector<std::uint64_t> checkpoint_steps(std::uint64_t budget, std::uint64_t checkpoint_every) {
  std::vector<std::uint64_t> steps;
  if (checkpoint_every > 0) {
    for (std::uint64_t s = checkpoint_every; s < budget; s += checkpoint_every) steps.push_back(s);
  }
  steps.push_back(budget);
  return steps;
}

namespace {

template <typename F>
std::optional<double> defined_or_absent(F&& f) {
  try {
    return f();
  } catch (const UndefinedError&) {
    return std::nullopt;
  }
}

}  // namespace

PolicyRun run_policy(const PolicyConfig& cfg, const JudgeOracle& oracle, std::uint64_t budget,
                     std::uint64_t seed, std::uint64_t checkpoint_every) {
  const std::size_t k = oracle.num_arms();
  Allocator alloc(cfg, k, budget);

  std::optional<std::vector<double>> truth;
  if (oracle.has_ground_truth()) truth = oracle.ground_truth().means;
  const auto human = oracle.human_scores();

  std::vector<RandomStream> streams;
  streams.reserve(k);
  for (std::size_t i = 0; i < k; ++i) streams.emplace_back(derive_seed({seed, i}));

  PolicyRun run;
  run.record.policy = cfg.name();
  run.record.budget = budget;
  run.record.seed = seed;

  std::vector<double> estimates(k, 0.0);
  std::size_t unpulled = k;
  for (std::uint64_t next : checkpoint_steps(budget, checkpoint_every)) {
    while (alloc.step() < next) {
      const std::size_t arm = alloc.select();
      const double x = oracle.sample(arm, streams[arm]);
      if (alloc.states()[arm].pulls == 0) --unpulled;
      alloc.observe(arm, x);
      estimates[arm] = alloc.states()[arm].mean;
    }
    Checkpoint cp;
    cp.step = next;
    cp.partial = unpulled > 0;
    if (truth) cp.wce = wce(*truth, estimates).wce;
    if (human) {
      cp.pearson = defined_or_absent([&] { return pearson(estimates, *human); });
      cp.spearman = defined_or_absent([&] { return spearman(estimates, *human); });
      cp.kendall = defined_or_absent([&] { return kendall_tau(estimates, *human); });
    }
    run.record.checkpoints.push_back(cp);
  }
  run.allocation = alloc.allocation();
  run.record.final_allocation = run.allocation;
  return run;
}

}  // namespace robin
