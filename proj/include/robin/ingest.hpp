#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "robin/experiment.hpp"
#include "robin/oracle.hpp"

namespace robin {

/// Score pools plus the upper end M of the score scale [0, M].
struct Dataset {
  double score_range_max = 4.0;
  std::vector<ScorePool> pools;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// JSON Lines: a header {"score_range_max": M}, then one
/// {"pair_id": str, "samples": [num...], "human_score": num?} per pair.
/// Blank lines are ignored. Throws ParseError with the line number (or the
/// offending pair ids) on any problem; nothing is returned partially.
Dataset parse_dataset(std::istream& in, const std::string& source = "<stream>");
Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const Dataset& data, const std::filesystem::path& path);
std::string format_dataset(const Dataset& data);

/// Draws samples_per_arm scores per arm from each spec with stream
/// derive_seed(seed, arm). Every arm's support must sit inside
/// [0, score_max]. Throws InputError otherwise.
Dataset gen_synthetic(std::span<const SyntheticArmSpec> arms, std::uint64_t samples_per_arm,
                      std::uint64_t seed, double score_max);

/// Synthetic arm description read from JSON. Either an explicit "arms" list
/// or a seeded "random" block that draws K arm specs; "samples_per_arm", when
/// set, means "replay pools of that size" instead of the exact distributions.
struct SyntheticSpecFile {
  double score_range_max = 4.0;
  std::vector<SyntheticArmSpec> arms;
  std::optional<std::uint64_t> samples_per_arm;
  std::uint64_t pool_seed = 0;
};

SyntheticSpecFile parse_synthetic_spec(const nlohmann::json& doc);
SyntheticSpecFile load_synthetic_spec(const std::filesystem::path& path);

/// 17 significant digits, shortest form that round-trips.
std::string format_real(double x);

/// Writes trajectories.csv, summary.csv, allocations.csv and manifest.json
/// into dir (created if needed). Byte-identical for identical inputs.
/// Throws IoError naming the path on failure.
void save_results(const ExperimentResult& result, const nlohmann::json& config_echo,
                  const std::filesystem::path& dir);

struct AllocationRow {
  std::string policy;
  std::uint64_t budget = 0;
  std::uint64_t replication = 0;
  std::size_t arm = 0;
  std::uint64_t pulls = 0;
  double estimate = 0.0;
};

struct StoredResults {
  /// Rebuilt from trajectories.csv; final_allocation is filled from
  /// allocations.csv when that file exists.
  std::vector<TrialRecord> records;
  std::vector<CellSummary> summary;
  nlohmann::json manifest;
};

/// Reads a directory written by save_results. Throws ParseError/IoError.
StoredResults load_results(const std::filesystem::path& dir);

}  // namespace robin
