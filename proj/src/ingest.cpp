#include "robin/ingest.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "robin/errors.hpp"
#include "robin/rng.hpp"

#ifndef ROBIN_VERSION
#define ROBIN_VERSION "unknown"
#endif

namespace robin {

using nlohmann::json;

namespace {

std::string line_tag(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

double number_field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number()) {
    throw ParseError(where + "missing numeric field '" + key + "'");
  }
  return obj[key].get<double>();
}

}  // namespace

Dataset parse_dataset(std::istream& in, const std::string& source) {
  Dataset data;
  bool have_header = false;
  std::map<std::string, std::vector<std::size_t>> seen;
  std::string text;
  std::size_t lineno = 0;
  while (std::getline(in, text)) {
    ++lineno;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = line_tag(source, lineno);
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(where + "invalid JSON: " + e.what());
    }
    if (!obj.is_object()) throw ParseError(where + "expected a JSON object");

    if (!have_header) {
      const double m = number_field(obj, "score_range_max", where);
      if (!std::isfinite(m) || m <= 0.0) throw ParseError(where + "score_range_max must be positive");
      data.score_range_max = m;
      have_header = true;
      continue;
    }

    if (!obj.contains("pair_id") || !obj["pair_id"].is_string()) {
      throw ParseError(where + "missing string field 'pair_id'");
    }
    const std::string id = obj["pair_id"].get<std::string>();
    if (!obj.contains("samples") || !obj["samples"].is_array()) {
      throw ParseError(where + "pair '" + id + "' needs a 'samples' array");
    }
    std::vector<double> samples;
    for (const auto& v : obj["samples"]) {
      if (!v.is_number()) throw ParseError(where + "pair '" + id + "' has a non-numeric sample");
      samples.push_back(v.get<double>());
    }
    std::optional<double> human;
    if (obj.contains("human_score") && !obj["human_score"].is_null()) {
      human = number_field(obj, "human_score", where);
    }
    try {
      data.pools.emplace_back(id, std::move(samples), human, data.score_range_max);
    } catch (const InputError& e) {
      throw ParseError(where + e.what());
    }
    seen[id].push_back(lineno);
  }
  if (!have_header) throw ParseError(source + ": empty dataset");
  if (data.pools.empty()) throw ParseError(source + ": dataset has no pairs");

  std::string dupes;
  for (const auto& [id, lines] : seen) {
    if (lines.size() < 2) continue;
    dupes += (dupes.empty() ? "" : ", ") + id + " (lines";
    for (auto l : lines) dupes += " " + std::to_string(l);
    dupes += ")";
  }
  if (!dupes.empty()) throw ParseError(source + ": duplicate pair_id: " + dupes);
  return data;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path.string());
  return parse_dataset(in, path.string());
}

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

// Numbers go through format_real so the file is stable and exact.
std::string json_real(double x) { return format_real(x); }

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string opt_real(const std::optional<double>& x) { return x ? format_real(*x) : ""; }

}  // namespace

std::string format_dataset(const Dataset& data) {
  std::string out = "{\"score_range_max\":" + json_real(data.score_range_max) + "}\n";
  for (const auto& p : data.pools) {
    out += "{\"pair_id\":" + json(p.pair_id()).dump() + ",\"samples\":[";
    for (std::size_t i = 0; i < p.samples().size(); ++i) {
      if (i) out += ',';
      out += json_real(p.samples()[i]);
    }
    out += ']';
    if (p.human_score()) out += ",\"human_score\":" + json_real(*p.human_score());
    out += "}\n";
  }
  return out;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  write_file(path, format_dataset(data));
}

Dataset gen_synthetic(std::span<const SyntheticArmSpec> arms, std::uint64_t samples_per_arm,
                      std::uint64_t seed, double score_max) {
  if (samples_per_arm < 1) throw InputError("samples_per_arm must be at least 1");
  if (arms.empty()) throw InputError("no synthetic arms");
  Dataset data;
  data.score_range_max = score_max;
  const int width = std::max<int>(4, static_cast<int>(std::to_string(arms.size() - 1).size()));
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const auto& a = arms[i];
    a.validate();
    const bool bounded = a.variance == 0.0 ? (a.mean >= 0.0 && a.mean <= score_max)
                                           : (a.noise != NoiseKind::kGaussian && a.lower >= 0.0 &&
                                              a.upper <= score_max);
    if (!bounded) {
      throw InputError("synthetic arm " + std::to_string(i) + " can produce scores outside [0, " +
                       format_real(score_max) + "]");
    }
    RandomStream stream(derive_seed({seed, i}));
    std::vector<double> samples(samples_per_arm);
    for (auto& x : samples) x = a.draw(stream);
    std::string id = std::to_string(i);
    id = "pair-" + std::string(width - std::min<int>(width, id.size()), '0') + id;
    data.pools.emplace_back(std::move(id), std::move(samples), std::nullopt, score_max);
  }
  return data;
}

namespace {

NoiseKind parse_noise(const std::string& s) {
  if (s == "gaussian") return NoiseKind::kGaussian;
  if (s == "truncated_gaussian") return NoiseKind::kTruncatedGaussian;
  if (s == "uniform") return NoiseKind::kUniform;
  throw ParseError("unknown noise kind '" + s + "'");
}

std::pair<double, double> range_field(const json& obj, const char* key) {
  if (!obj.contains(key) || !obj[key].is_array() || obj[key].size() != 2 ||
      !obj[key][0].is_number() || !obj[key][1].is_number()) {
    throw ParseError(std::string("'") + key + "' must be a [low, high] pair");
  }
  const double lo = obj[key][0].get<double>();
  const double hi = obj[key][1].get<double>();
  if (!(lo <= hi)) throw ParseError(std::string("'") + key + "' must have low <= high");
  return {lo, hi};
}

}  // namespace

SyntheticSpecFile parse_synthetic_spec(const json& doc) {
  if (!doc.is_object()) throw ParseError("synthetic spec must be a JSON object");
  SyntheticSpecFile spec;
  spec.score_range_max = doc.value("score_range_max", 4.0);
  if (!(spec.score_range_max > 0.0)) throw ParseError("score_range_max must be positive");
  if (doc.contains("samples_per_arm")) {
    spec.samples_per_arm = doc["samples_per_arm"].get<std::uint64_t>();
    if (*spec.samples_per_arm < 1) throw ParseError("samples_per_arm must be at least 1");
  }
  spec.pool_seed = doc.value("pool_seed", std::uint64_t{0});
  const double m = spec.score_range_max;

  if (doc.contains("arms")) {
    for (const auto& a : doc["arms"]) {
      SyntheticArmSpec s;
      s.mean = number_field(a, "mean", "");
      s.variance = number_field(a, "variance", "");
      s.noise = parse_noise(a.value("noise", std::string("gaussian")));
      if (s.noise != NoiseKind::kGaussian) {
        s.lower = 0.0;
        s.upper = m;
      }
      if (a.contains("lower")) s.lower = number_field(a, "lower", "");
      if (a.contains("upper")) s.upper = number_field(a, "upper", "");
      spec.arms.push_back(s);
    }
  } else if (doc.contains("random")) {
    const json& r = doc["random"];
    const auto k = r.at("num_arms").get<std::uint64_t>();
    if (k < 1) throw ParseError("random.num_arms must be at least 1");
    const std::uint64_t seed = r.value("seed", std::uint64_t{0});
    const auto [mlo, mhi] = range_field(r, "mean_range");
    const auto [vlo, vhi] = range_field(r, "variance_range");
    const double skew = r.value("variance_skew", 1.0);
    const NoiseKind noise = parse_noise(r.value("noise", std::string("truncated_gaussian")));
    RandomStream stream(derive_seed({seed, 0x5eedULL}));
    for (std::uint64_t i = 0; i < k; ++i) {
      SyntheticArmSpec s;
      s.mean = mlo + (mhi - mlo) * stream.uniform01();
      s.variance = vlo + (vhi - vlo) * std::pow(stream.uniform01(), skew);
      s.noise = noise;
      if (noise != NoiseKind::kGaussian) {
        s.lower = 0.0;
        s.upper = m;
      }
      if (noise == NoiseKind::kUniform) {
        const double w = std::min(s.mean, m - s.mean);
        s.variance = std::min(s.variance, w * w / 3.0);
      }
      spec.arms.push_back(s);
    }
  } else {
    throw ParseError("synthetic spec needs an 'arms' list or a 'random' block");
  }
  try {
    for (const auto& a : spec.arms) a.validate();
  } catch (const InputError& e) {
    throw ParseError(std::string("invalid synthetic arm: ") + e.what());
  }
  return spec;
}

SyntheticSpecFile load_synthetic_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open synthetic spec " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  try {
    return parse_synthetic_spec(doc);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_results(const ExperimentResult& result, const json& config_echo,
                  const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  for (const auto& r : result.records) {
    if (r.policy.find_first_of(",\"\n") != std::string::npos) {
      throw InputError("policy label '" + r.policy + "' cannot be written to CSV");
    }
  }

  std::string traj = "policy,budget,replication,step,wce,pearson,spearman,kendall\n";
  std::string alloc = "policy,budget,replication,arm,pulls,estimate\n";
  for (const auto& r : result.records) {
    const std::string head =
        r.policy + "," + std::to_string(r.budget) + "," + std::to_string(r.replication) + ",";
    for (const auto& cp : r.checkpoints) {
      traj += head + std::to_string(cp.step) + "," + opt_real(cp.wce) + "," +
              opt_real(cp.pearson) + "," + opt_real(cp.spearman) + "," + opt_real(cp.kendall) +
              "\n";
    }
    const auto& a = r.final_allocation;
    for (std::size_t i = 0; i < a.pulls.size(); ++i) {
      alloc += head + std::to_string(i) + "," + std::to_string(a.pulls[i]) + "," +
               format_real(a.estimates[i]) + "\n";
    }
  }

  std::string summary = "policy,budget,mean_wce,std_wce,n_replications\n";
  for (const auto& c : result.report.cells) {
    summary += c.policy + "," + std::to_string(c.budget) + "," + opt_real(c.mean_wce) + "," +
               opt_real(c.std_wce) + "," + std::to_string(c.replications) + "\n";
  }

  json manifest;
  manifest["tool"] = "robin-alloc";
  manifest["version"] = ROBIN_VERSION;
  manifest["config"] = config_echo;
  json runs = json::array();
  for (std::size_t i = 0; i < result.records.size(); ++i) {
    const auto& r = result.records[i];
    runs.push_back({{"policy", r.policy},
                    {"budget", r.budget},
                    {"replication", r.replication},
                    {"seed", r.seed}});
  }
  manifest["runs"] = std::move(runs);
  json failures = json::array();
  for (const auto& f : result.failures) {
    json j = {{"policy", f.policy}, {"budget", f.budget}, {"message", f.message}};
    if (f.minimum_budget) j["minimum_budget"] = *f.minimum_budget;
    failures.push_back(std::move(j));
  }
  manifest["failures"] = std::move(failures);

  write_file(dir / "trajectories.csv", traj);
  write_file(dir / "summary.csv", summary);
  write_file(dir / "allocations.csv", alloc);
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> lines;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      if (t.header != expected) throw ParseError(path.string() + ": unexpected header");
      continue;
    }
    if (cells.size() != expected.size()) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(expected.size()) + " columns");
    }
    t.rows.push_back(std::move(cells));
    t.lines.push_back(lineno);
  }
  if (t.header.empty()) throw ParseError(path.string() + ": empty file");
  return t;
}

std::string where(const std::filesystem::path& p, std::size_t line) {
  return p.string() + ":" + std::to_string(line) + ": ";
}

double to_real(const std::string& s, const std::string& at) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(at + "bad number '" + s + "'");
  }
}

std::uint64_t to_uint(const std::string& s, const std::string& at) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw ParseError(at + "bad integer '" + s + "'");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw ParseError(at + "bad integer '" + s + "'");
  }
}

std::optional<double> to_opt_real(const std::string& s, const std::string& at) {
  if (s.empty()) return std::nullopt;
  return to_real(s, at);
}

}  // namespace

StoredResults load_results(const std::filesystem::path& dir) {
  StoredResults out;
  const auto traj_path = dir / "trajectories.csv";
  const auto traj = read_csv(
      traj_path, {"policy", "budget", "replication", "step", "wce", "pearson", "spearman", "kendall"});

  using Key = std::tuple<std::string, std::uint64_t, std::uint64_t>;
  std::map<Key, std::size_t> index;
  for (std::size_t i = 0; i < traj.rows.size(); ++i) {
    const auto& row = traj.rows[i];
    const std::string at = where(traj_path, traj.lines[i]);
    Key key{row[0], to_uint(row[1], at), to_uint(row[2], at)};
    auto [it, inserted] = index.try_emplace(key, out.records.size());
    if (inserted) {
      TrialRecord r;
      r.policy = row[0];
      r.budget = std::get<1>(key);
      r.replication = std::get<2>(key);
      out.records.push_back(std::move(r));
    }
    auto& rec = out.records[it->second];
    Checkpoint cp;
    cp.step = to_uint(row[3], at);
    cp.wce = to_opt_real(row[4], at);
    cp.pearson = to_opt_real(row[5], at);
    cp.spearman = to_opt_real(row[6], at);
    cp.kendall = to_opt_real(row[7], at);
    if (!rec.checkpoints.empty() && cp.step <= rec.checkpoints.back().step) {
      throw ParseError(at + "checkpoint steps are not increasing");
    }
    rec.checkpoints.push_back(cp);
  }

  const auto alloc_path = dir / "allocations.csv";
  if (std::filesystem::exists(alloc_path)) {
    const auto alloc =
        read_csv(alloc_path, {"policy", "budget", "replication", "arm", "pulls", "estimate"});
    for (std::size_t i = 0; i < alloc.rows.size(); ++i) {
      const auto& row = alloc.rows[i];
      const std::string at = where(alloc_path, alloc.lines[i]);
      Key key{row[0], to_uint(row[1], at), to_uint(row[2], at)};
      auto it = index.find(key);
      if (it == index.end()) throw ParseError(at + "allocation for an unknown run");
      auto& a = out.records[it->second].final_allocation;
      const auto arm = to_uint(row[3], at);
      if (arm != a.pulls.size()) throw ParseError(at + "arms out of order");
      a.policy_name = row[0];
      a.budget = std::get<1>(key);
      a.pulls.push_back(to_uint(row[4], at));
      a.estimates.push_back(to_real(row[5], at));
      a.excluded.push_back(false);
    }
  }

  const auto sum_path = dir / "summary.csv";
  const auto sum =
      read_csv(sum_path, {"policy", "budget", "mean_wce", "std_wce", "n_replications"});
  for (std::size_t i = 0; i < sum.rows.size(); ++i) {
    const auto& row = sum.rows[i];
    const std::string at = where(sum_path, sum.lines[i]);
    CellSummary c;
    c.policy = row[0];
    c.budget = to_uint(row[1], at);
    c.mean_wce = to_opt_real(row[2], at);
    c.std_wce = to_opt_real(row[3], at);
    c.replications = to_uint(row[4], at);
    c.single_replication = c.replications == 1;
    out.summary.push_back(c);
  }

  const auto man_path = dir / "manifest.json";
  std::ifstream man(man_path, std::ios::binary);
  if (!man) throw IoError("cannot open " + man_path.string());
  try {
    out.manifest = json::parse(man);
  } catch (const json::exception& e) {
    throw ParseError(man_path.string() + ": " + e.what());
  }
  if (const auto runs = out.manifest.find("runs"); runs != out.manifest.end()) {
    for (const auto& r : *runs) {
      Key key{r.at("policy").get<std::string>(), r.at("budget").get<std::uint64_t>(),
              r.at("replication").get<std::uint64_t>()};
      if (auto it = index.find(key); it != index.end()) {
        out.records[it->second].seed = r.at("seed").get<std::uint64_t>();
      }
    }
  }
  return out;
}

}  // namespace robin
