#include "robin/oracle.hpp"

#include <httplib.h>

#include <cmath>
#include <json.hpp>
#include <numbers>
#include <thread>

#include "robin/errors.hpp"
#include "robin/estimation.hpp"

namespace robin {

namespace {

double normal_pdf(double z) {
  if (std::isinf(z)) return 0.0;
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// z * pdf(z), with the infinite limits taken as 0.
double z_pdf(double z) { return std::isinf(z) ? 0.0 : z * normal_pdf(z); }

struct TruncatedMoments {
  double mass;
  double mean;
  double variance;
};

TruncatedMoments truncated_moments(double mu, double var, double lo, double hi) {
  const double sd = std::sqrt(var);
  const double a = (lo - mu) / sd;
  const double b = (hi - mu) / sd;
  const double mass = normal_cdf(b) - normal_cdf(a);
  const double r = (normal_pdf(a) - normal_pdf(b)) / mass;
  const double mean = mu + sd * r;
  const double variance = var * (1.0 + (z_pdf(a) - z_pdf(b)) / mass - r * r);
  return {mass, mean, std::max(variance, 0.0)};
}

constexpr double kMinTruncatedMass = 1e-3;

}  // namespace

ScorePool::ScorePool(std::string pair_id, std::vector<double> samples,
                     std::optional<double> human_score, double score_max)
    : pair_id_(std::move(pair_id)), samples_(std::move(samples)), human_score_(human_score) {
  if (samples_.empty()) throw InputError("pair '" + pair_id_ + "' has no samples");
  ArmState st;
  for (double x : samples_) {
    if (!std::isfinite(x) || x < 0.0 || x > score_max) {
      throw InputError("pair '" + pair_id_ + "' has sample " + std::to_string(x) +
                       " outside [0, " + std::to_string(score_max) + "]");
    }
    st = update(st, x);
  }
  if (human_score_ && !std::isfinite(*human_score_)) {
    throw InputError("pair '" + pair_id_ + "' has a non-finite human score");
  }
  mean_ = st.mean;
  variance_ = biased_variance(st);
}

void SyntheticArmSpec::validate() const {
  if (!std::isfinite(mean)) throw InputError("synthetic arm mean must be finite");
  if (!std::isfinite(variance) || variance < 0.0) {
    throw InputError("synthetic arm variance must be finite and nonnegative");
  }
  if (std::isnan(lower) || std::isnan(upper) || !(lower < upper)) {
    throw InputError("synthetic arm range must satisfy lower < upper");
  }
  switch (noise) {
    case NoiseKind::kGaussian:
      break;
    case NoiseKind::kTruncatedGaussian:
      if (variance == 0.0) {
        if (mean < lower || mean > upper) throw InputError("degenerate truncated arm outside its range");
      } else if (truncated_moments(mean, variance, lower, upper).mass < kMinTruncatedMass) {
        throw InputError("truncation range keeps almost none of the normal's mass");
      }
      break;
    case NoiseKind::kUniform: {
      const double w = std::sqrt(3.0 * variance);
      if (mean - w < lower || mean + w > upper) {
        throw InputError("uniform arm support does not fit inside its range");
      }
      break;
    }
  }
}

double SyntheticArmSpec::exact_mean() const {
  if (noise == NoiseKind::kTruncatedGaussian && variance > 0.0) {
    return truncated_moments(mean, variance, lower, upper).mean;
  }
  return mean;
}

double SyntheticArmSpec::exact_variance() const {
  if (noise == NoiseKind::kTruncatedGaussian && variance > 0.0) {
    return truncated_moments(mean, variance, lower, upper).variance;
  }
  return variance;
}

double SyntheticArmSpec::draw(RandomStream& stream) const {
  if (variance == 0.0) return mean;
  const double sd = std::sqrt(variance);
  switch (noise) {
    case NoiseKind::kGaussian:
      return mean + sd * stream.normal();
    case NoiseKind::kTruncatedGaussian:
      for (;;) {
        const double x = mean + sd * stream.normal();
        if (x >= lower && x <= upper) return x;
      }
    case NoiseKind::kUniform: {
      const double w = std::sqrt(3.0 * variance);
      return mean - w + 2.0 * w * stream.uniform01();
    }
  }
  return mean;
}

void JudgeOracle::check_arm(std::size_t arm) const {
  if (arm >= num_arms()) {
    throw InputError("arm " + std::to_string(arm) + " out of range for " +
                     std::to_string(num_arms()) + " arms");
  }
}

ReplayOracle::ReplayOracle(std::vector<ScorePool> pools) : pools_(std::move(pools)) {
  if (pools_.empty()) throw InputError("replay oracle needs at least one pool");
}

double ReplayOracle::sample(std::size_t arm, RandomStream& stream) const {
  check_arm(arm);
  const auto& s = pools_[arm].samples();
  return s[stream.index(s.size())];
}

GroundTruth ReplayOracle::ground_truth() const {
  GroundTruth t;
  t.means.reserve(pools_.size());
  t.variances.reserve(pools_.size());
  for (const auto& p : pools_) {
    t.means.push_back(p.mean());
    t.variances.push_back(p.variance());
  }
  return t;
}

std::optional<std::vector<double>> ReplayOracle::human_scores() const {
  std::vector<double> h;
  h.reserve(pools_.size());
  for (const auto& p : pools_) {
    if (!p.human_score()) return std::nullopt;
    h.push_back(*p.human_score());
  }
  return h;
}

SyntheticOracle::SyntheticOracle(std::vector<SyntheticArmSpec> arms) : arms_(std::move(arms)) {
  if (arms_.empty()) throw InputError("synthetic oracle needs at least one arm");
  for (const auto& a : arms_) a.validate();
}

double SyntheticOracle::sample(std::size_t arm, RandomStream& stream) const {
  check_arm(arm);
  return arms_[arm].draw(stream);
}

GroundTruth SyntheticOracle::ground_truth() const {
  GroundTruth t;
  for (const auto& a : arms_) {
    t.means.push_back(a.exact_mean());
    t.variances.push_back(a.exact_variance());
  }
  return t;
}

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

SplitUrl split_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("remote endpoint must look like http://host[:port][/path], got '" +
                      endpoint + "'");
  }
  const auto path_start = endpoint.find('/', scheme_end + 3);
  SplitUrl out;
  if (path_start == std::string::npos) {
    out.origin = endpoint;
  } else {
    out.origin = endpoint.substr(0, path_start);
    out.prefix = endpoint.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  }
  return out;
}

bool is_transient(int status) { return status == 429 || status >= 500; }

}  // namespace

double remote_judge_sample(const RemoteJudgeConfig& cfg, const PairPayload& payload) {
  const SplitUrl url = split_endpoint(cfg.endpoint);
  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());

  const nlohmann::json body = {{"pair_id", payload.pair_id},
                               {"prompt", payload.prompt},
                               {"response", payload.response},
                               {"rubric", payload.rubric}};
  const std::string text = body.dump();
  const std::string path = url.prefix + "/judge";

  std::string last_failure;
  auto backoff = cfg.backoff;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    auto res = client.Post(path, text, "application/json");
    if (!res) {
      last_failure = "connection failed: " + httplib::to_string(res.error());
      continue;
    }
    if (is_transient(res->status)) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw QueryError("judge for pair '" + payload.pair_id + "' answered HTTP " +
                       std::to_string(res->status));
    }
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw ProtocolError("judge reply is not JSON: " + std::string(e.what()));
    }
    if (!reply.is_object() || !reply.contains("score") || !reply["score"].is_number()) {
      throw ProtocolError("judge reply lacks a numeric 'score' field: " + res->body);
    }
    const double score = reply["score"].get<double>();
    if (!std::isfinite(score) || score < 0.0 || score > cfg.score_max) {
      throw ProtocolError("judge score " + std::to_string(score) + " outside [0, " +
                          std::to_string(cfg.score_max) + "] for pair '" + payload.pair_id + "'");
    }
    return score;
  }
  throw QueryError("judge for pair '" + payload.pair_id + "' failed after " +
                   std::to_string(cfg.max_retries + 1) + " attempts: " + last_failure);
}

RemoteJudgeOracle::RemoteJudgeOracle(RemoteJudgeConfig cfg, std::vector<PairPayload> pairs)
    : cfg_(std::move(cfg)), pairs_(std::move(pairs)) {
  if (pairs_.empty()) throw InputError("remote oracle needs at least one pair");
  split_endpoint(cfg_.endpoint);
}

double RemoteJudgeOracle::sample(std::size_t arm, RandomStream& /*stream*/) const {
  check_arm(arm);
  return remote_judge_sample(cfg_, pairs_[arm]);
}

GroundTruth RemoteJudgeOracle::ground_truth() const {
  throw UnsupportedError("a remote judge has no ground truth");
}

}  // namespace robin
