#include "bpre/reporting.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "bpre/cells.hpp"
#include "bpre/environment.hpp"
#include "bpre/oracle.hpp"
#include "bpre/parallel.hpp"
#include "bpre/rare_event.hpp"
#include "bpre/rate.hpp"
#include "bpre/simulator.hpp"

namespace bpre {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Typed option lookup; type mismatches become configuration errors.
template <class T>
T option(const json& opts, const char* key, T fallback) {
  if (!opts.contains(key) || opts.at(key).is_null()) return fallback;
  try {
    return opts.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidConfig, std::string("option \"") + key + "\" has the wrong type");
  }
}

template <class T>
T required(const json& opts, const char* key) {
  if (!opts.contains(key) || opts.at(key).is_null()) {
    throw Error(ErrorCode::InvalidConfig, std::string("missing option \"") + key + "\"");
  }
  return option<T>(opts, key, T{});
}

std::vector<int> horizons(const json& opts) {
  if (!opts.contains("n")) throw Error(ErrorCode::InvalidConfig, "missing option \"n\"");
  const json& n = opts.at("n");
  std::vector<int> out;
  if (n.is_array()) {
    for (const auto& v : n) {
      if (!v.is_number_integer()) throw Error(ErrorCode::InvalidConfig, "option \"n\" must hold integers");
      out.push_back(v.get<int>());
    }
  } else if (n.is_number_integer()) {
    out.push_back(n.get<int>());
  } else if (n.is_string()) {
    for (double x : parse_grid(n.get<std::string>())) out.push_back(static_cast<int>(std::lround(x)));
  } else {
    throw Error(ErrorCode::InvalidConfig, "option \"n\" must be an integer or a list");
  }
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, "option \"n\" is empty");
  for (int v : out) {
    if (v < 1) throw Error(ErrorCode::InvalidConfig, "horizons must be >= 1");
  }
  return out;
}

std::vector<double> grid_option(const json& opts, const char* key, const std::string& fallback) {
  if (!opts.contains(key)) return parse_grid(fallback);
  const json& g = opts.at(key);
  if (g.is_string()) return parse_grid(g.get<std::string>());
  if (g.is_array()) {
    std::vector<double> out;
    for (const auto& v : g) {
      if (!v.is_number()) throw Error(ErrorCode::InvalidConfig, std::string("option \"") + key + "\" must hold numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }
  throw Error(ErrorCode::InvalidConfig, std::string("option \"") + key + "\" must be a grid string or a list");
}

Side side_option(const json& opts) {
  const auto s = option<std::string>(opts, "side", "lower");
  if (s == "lower") return Side::Lower;
  if (s == "upper") return Side::Upper;
  throw Error(ErrorCode::InvalidConfig, "side must be \"lower\" or \"upper\"");
}

OffspringDistribution pmf_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "offspring law must be a pmf object");
  std::vector<std::pair<std::uint64_t, double>> pmf;
  for (const auto& [key, value] : j.items()) {
    if (key.empty() || key.find_first_not_of("0123456789") != std::string::npos || !value.is_number()) {
      throw Error(ErrorCode::InvalidConfig, "pmf entries must map decimal integers to numbers");
    }
    pmf.emplace_back(std::stoull(key), value.get<double>());
  }
  return OffspringDistribution(std::move(pmf));
}

class Csv {
 public:
  Csv(std::string schema, const std::string& hash, std::vector<std::string> columns) {
    out_ << "#schema=" << schema << " config_hash=" << hash << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
  }

  Csv& row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
    return *this;
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

std::string num(double x) { return format_double(x); }
std::string num(std::uint64_t x) { return std::to_string(x); }
std::string num(int x) { return std::to_string(x); }

// JSON artifacts carry doubles as round-trip strings only when non-finite.
json jnum(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

std::string dump(json j, const std::string& hash) {
  j["config_hash"] = hash;
  return j.dump(2) + "\n";
}

double rate_of(double estimate, int n) {
  return estimate > 0.0 ? -std::log(estimate) / n : std::numeric_limits<double>::infinity();
}

std::vector<Artifact> cmd_rate(const CommandRequest& rq, const EnvironmentLaw& env, const std::string& hash) {
  const auto grid = grid_option(rq.options, "c_grid", "");
  Csv csv("rate/1", hash, {"c", "psi", "lambda_c", "chi", "t_c", "slope"});
  for (double c : grid) {
    const double ps = psi(env, c);
    double lam = kNaN;
    if (env.degenerate() ? c == env.lbar() : (c > env.lmin() && c < env.lmax())) lam = lambda_star(env, c);
    double chi = kNaN;
    double tc = kNaN;
    double slope = kNaN;
    if (env.strongly_supercritical() && c > 0.0 && c < env.lbar()) {
      const ChiResult r = chi_and_tc(env, c);
      chi = r.chi;
      tc = r.t_c;
      slope = r.slope;
    }
    csv.row({num(c), num(ps), num(lam), num(chi), num(tc), num(slope)});
  }
  return {{"rate.csv", csv.str()}};
}

std::vector<Artifact> cmd_simulate(const CommandRequest& rq, const EnvironmentLaw& env, const std::string& hash) {
  SimConfig cfg{env, required<int>(rq.options, "n"), option<std::uint64_t>(rq.options, "z0", 1), rq.seed,
                rq.replicas, rq.workers};
  validate(cfg);
  const bool with_tau = rq.options.contains("threshold_N");
  const Population big_n(option<std::uint64_t>(rq.options, "threshold_N", 0));
  std::vector<std::string> cols{"replica", "Z_n", "S_n"};
  if (with_tau) cols.push_back("tau_N");
  Csv csv("simulate/1", hash, cols);
  const auto rows = parallel_map<std::vector<std::string>>(cfg.replicas, cfg.workers, [&](std::uint64_t r) {
    const Trajectory t = run(cfg, r);
    std::vector<std::string> row{num(r), to_decimal(t.z.back()), num(t.s.back())};
    if (with_tau) row.push_back(num(take_off_time(t.z, big_n)));
    return row;
  });
  for (const auto& row : rows) csv.row(row);
  return {{"simulate.csv", csv.str()}};
}

std::vector<Artifact> cmd_oracle(const CommandRequest& rq, const EnvironmentLaw& env, const std::string& hash) {
  const int n = required<int>(rq.options, "n");
  const auto z0 = option<std::uint64_t>(rq.options, "z0", 1);
  const auto tolerance = option<double>(rq.options, "tolerance", 1e-12);
  std::uint64_t k = 0;
  if (rq.options.contains("K")) {
    k = required<std::uint64_t>(rq.options, "K");
  } else {
    const Population x = floor_exp(required<double>(rq.options, "c") * n);
    if (!fits_u64(x)) throw Error(ErrorCode::CapTooSmall, "threshold e^{cn} exceeds any cap");
    k = x.convert_to<std::uint64_t>();
  }
  const auto cap = option<std::uint64_t>(rq.options, "cap", std::max<std::uint64_t>(k, z0));
  const ExactDistribution dist = exact_zn_distribution(env, n, z0, cap);
  json j = {{"n", n}, {"z0", z0}, {"K", k}, {"cap", cap},
            {"probs_below", jnum(dist.prob_at_most(k, tolerance))}, {"overflow", jnum(dist.overflow)}};
  std::vector<Artifact> out{{"oracle.json", dump(j, hash)}};
  if (option<bool>(rq.options, "full_pmf", false)) {
    Csv csv("oracle-pmf/1", hash, {"z", "prob"});
    for (std::size_t z = 0; z < dist.probs.size(); ++z) csv.row({num(static_cast<std::uint64_t>(z)), num(dist.probs[z])});
    out.push_back({"oracle_pmf.csv", csv.str()});
  }
  return out;
}

void estimate_row(Csv& csv, const EstimatorResult& e, bool require_rate) {
  if (require_rate && e.is_zero()) {
    throw Error(ErrorCode::ZeroEstimate, "estimate at n=" + std::to_string(e.n) + " is exactly zero");
  }
  csv.row({num(e.n), num(e.c), num(e.estimate), num(e.std_error), num(e.ess), std::string(to_string(e.method)),
           num(rate_of(e.estimate, e.n)), e.is_zero() ? "1" : "0"});
}

const std::vector<std::string> kEstimateColumns{"n", "c", "estimate", "stderr", "ess", "method", "rate", "zero"};

std::vector<Artifact> cmd_estimate_lower(const CommandRequest& rq, const EnvironmentLaw& env, const std::string& hash) {
  const double c = required<double>(rq.options, "c");
  const bool require_rate = option<bool>(rq.options, "require_rate", false);
  std::optional<double> phase;
  if (rq.options.contains("phase_fraction")) phase = required<double>(rq.options, "phase_fraction");
  const IsOptions is{option<std::uint64_t>(rq.options, "z0", 1), rq.workers};
  Csv csv("estimate/1", hash, kEstimateColumns);
  for (int n : horizons(rq.options)) {
    estimate_row(csv, is_estimate_lower_full(env, n, c, rq.replicas, rq.seed, is), require_rate);
    if (env.mean_p1() > 0.0 && c < env.lbar()) {
      const LowerEstimates both = is_estimate_lower(env, n, c, rq.replicas, rq.seed, phase, is);
      estimate_row(csv, both.two_phase, false);
      estimate_row(csv, both.tilt_only, false);
    }
  }
  return {{"estimate_lower.csv", csv.str()}};
}

std::vector<Artifact> cmd_estimate_upper(const CommandRequest& rq, const EnvironmentLaw& env, const std::string& hash) {
  const double c = required<double>(rq.options, "c");
  const bool require_rate = option<bool>(rq.options, "require_rate", false);
  const IsOptions is{option<std::uint64_t>(rq.options, "z0", 1), rq.workers};
  Csv csv("estimate/1", hash, kEstimateColumns);
  for (int n : horizons(rq.options)) estimate_row(csv, is_estimate_upper(env, n, c, rq.replicas, rq.seed, is), require_rate);
  return {{"estimate_upper.csv", csv.str()}};
}

std::vector<Artifact> cmd_trajectory(const CommandRequest& rq, const EnvironmentLaw& env, const std::string& hash) {
  const int n = required<int>(rq.options, "n");
  const double c = required<double>(rq.options, "c");
  const Side side = side_option(rq.options);
  const auto grid = grid_option(rq.options, "grid", "0:1:0.05");
  const IsOptions is{option<std::uint64_t>(rq.options, "z0", 1), rq.workers};
  const TrajectoryProfile p = conditional_trajectory_profile(env, n, c, rq.replicas, rq.seed, grid, side, is);
  Csv csv("trajectory/1", hash, {"t", "mean", "stderr", "reference"});
  for (std::size_t g = 0; g < p.grid.size(); ++g) {
    csv.row({num(p.grid[g]), num(p.mean[g]), num(p.std_error[g]), num(p.reference[g])});
  }
  json j = {{"n", n}, {"c", c}, {"side", side == Side::Lower ? "lower" : "upper"},
            {"sup_distance", jnum(p.sup_distance)}, {"sup_distance_stderr", jnum(p.sup_distance_error)},
            {"ess", jnum(p.ess)}, {"event_probability", jnum(p.event_probability)}};
  return {{"trajectory.csv", csv.str()}, {"trajectory.json", dump(j, hash)}};
}

std::vector<Artifact> cmd_takeoff(const CommandRequest& rq, const EnvironmentLaw& env, const std::string& hash) {
  const int n = required<int>(rq.options, "n");
  const double c = required<double>(rq.options, "c");
  const auto threshold = option<std::uint64_t>(rq.options, "threshold_N", 10);
  const IsOptions is{option<std::uint64_t>(rq.options, "z0", 1), rq.workers};
  const TakeOffStats s = take_off_stats(env, n, c, threshold, rq.replicas, rq.seed, is);
  Csv csv("takeoff/1", hash, {"k", "fraction", "weight"});
  for (int k = 0; k <= n; ++k) csv.row({num(k), num(static_cast<double>(k) / n), num(s.histogram[k])});
  json j = {{"n", n}, {"c", c}, {"threshold_N", threshold}, {"mean_fraction", jnum(s.mean_fraction)},
            {"stderr", jnum(s.std_error)}, {"ess", jnum(s.ess)}, {"event_probability", jnum(s.event_probability)}};
  if (env.strongly_supercritical() && c > 0.0 && c < env.lbar()) j["t_c"] = jnum(chi_and_tc(env, c).t_c);
  return {{"takeoff.csv", csv.str()}, {"takeoff.json", dump(j, hash)}};
}

std::vector<Artifact> cmd_cells(const CommandRequest& rq, const json& config, const std::string& hash) {
  CellTreeConfig cfg;
  cfg.n = required<int>(rq.options, "n");
  cfg.c = required<double>(rq.options, "c");
  cfg.seed = rq.seed;
  cfg.replicas = rq.replicas;
  cfg.workers = rq.workers;
  cfg.z0 = option<std::uint64_t>(rq.options, "z0", 1);
  if (rq.options.contains("law1") && rq.options.contains("law2")) {
    cfg.law1 = pmf_from_json(rq.options.at("law1"));
    cfg.law2 = pmf_from_json(rq.options.at("law2"));
  } else {
    const EnvironmentLaw env = environment_from_json(config);
    if (env.size() != 2) throw Error(ErrorCode::InvalidConfig, "cells needs law1/law2 or exactly two environments");
    cfg.law1 = env[0].dist;
    cfg.law2 = env[1].dist;
  }
  if (rq.options.contains("joint")) {
    JointOffspring joint;
    for (const auto& a : rq.options.at("joint")) {
      if (!a.is_array() || a.size() != 3) throw Error(ErrorCode::InvalidConfig, "joint atoms are [k1, k2, prob]");
      joint.atoms.push_back({{a[0].get<std::uint64_t>(), a[1].get<std::uint64_t>()}, a[2].get<double>()});
    }
    cfg.joint = joint;
  }
  const CellTreeResult tree = simulate_cell_tree(cfg);
  Csv csv("cells/1", hash, {"replicate", "N_below", "N_above"});
  for (std::size_t r = 0; r < tree.replicates.size(); ++r) {
    csv.row({num(static_cast<std::uint64_t>(r)), num(tree.replicates[r].below), num(tree.replicates[r].above)});
  }
  json j = {{"n", cfg.n}, {"c", cfg.c}, {"mean_below", jnum(tree.mean_below)}, {"stderr_below", jnum(tree.se_below)},
            {"mean_above", jnum(tree.mean_above)}, {"stderr_above", jnum(tree.se_above)}};
  try {
    const double p = exact_population_tail(cell_lineage_environment(cfg), cfg.n, cfg.z0, cfg.c, Side::Lower);
    const double rhs = std::ldexp(p, cfg.n);
    const double diff = tree.mean_below - rhs;
    double z = 0.0;
    if (tree.se_below > 0.0) {
      z = diff / tree.se_below;
    } else if (std::abs(diff) > 1e-9 * std::max(1.0, rhs)) {
      z = std::copysign(std::numeric_limits<double>::infinity(), diff);
    }
    j["identity"] = {{"lhs", jnum(tree.mean_below)}, {"lhs_stderr", jnum(tree.se_below)}, {"rhs", jnum(rhs)},
                     {"z_score", jnum(z)}, {"pass", std::abs(z) <= 3.0}};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::CapTooSmall) throw;
    j["identity"] = nullptr;
    j["identity_skipped"] = e.what();
  }
  return {{"cells.csv", csv.str()}, {"cells.json", dump(j, hash)}};
}

int major_version(const std::string& v) { return std::atoi(v.c_str()); }

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::vector<double> parse_grid(const std::string& spec) {
  auto to_double = [&](const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw Error(ErrorCode::InvalidConfig, "cannot parse \"" + s + "\" in grid \"" + spec + "\"");
    }
    return v;
  };
  std::vector<double> out;
  if (spec.empty()) throw Error(ErrorCode::InvalidConfig, "empty grid");
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw Error(ErrorCode::InvalidConfig, "grid must be start:stop:step");
    const double a = to_double(parts[0]);
    const double b = to_double(parts[1]);
    const double step = to_double(parts[2]);
    if (!(step > 0.0) || b < a) throw Error(ErrorCode::InvalidConfig, "grid needs start <= stop and step > 0");
    const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9));
    if (count > 1'000'000) throw Error(ErrorCode::InvalidConfig, "grid has more than 10^6 points");
    for (long i = 0; i <= count; ++i) out.push_back(a + static_cast<double>(i) * step);
    return out;
  }
  std::stringstream ss(spec);
  for (std::string p; std::getline(ss, p, ',');) out.push_back(to_double(p));
  return out;
}

json effective_config(const CommandRequest& request) {
  return {{"command", request.command},
          {"config", request.config},
          {"options", request.options},
          {"seed", request.seed},
          {"replicas", request.replicas}};
}

std::string config_hash(const CommandRequest& request) { return fnv1a_hex(effective_config(request).dump()); }

std::vector<Artifact> execute(const CommandRequest& rq) {
  const std::string hash = config_hash(rq);
  if (rq.replicas < 1) throw Error(ErrorCode::InvalidConfig, "replicas must be >= 1");
  if (rq.command == "cells") return cmd_cells(rq, rq.config, hash);
  const EnvironmentLaw env = environment_from_json(rq.config);
  if (rq.command == "rate") return cmd_rate(rq, env, hash);
  if (rq.command == "simulate") return cmd_simulate(rq, env, hash);
  if (rq.command == "oracle") return cmd_oracle(rq, env, hash);
  if (rq.command == "estimate-lower") return cmd_estimate_lower(rq, env, hash);
  if (rq.command == "estimate-upper") return cmd_estimate_upper(rq, env, hash);
  if (rq.command == "trajectory") return cmd_trajectory(rq, env, hash);
  if (rq.command == "takeoff") return cmd_takeoff(rq, env, hash);
  throw Error(ErrorCode::InvalidConfig, "unknown command \"" + rq.command + "\"");
}

RunRecord make_record(const CommandRequest& request, const std::vector<Artifact>& artifacts, std::string out_dir,
                      std::string started, std::string finished) {
  RunRecord r;
  r.tool_version = std::string(kToolVersion);
  r.command = request.command;
  r.config_hash = config_hash(request);
  r.config = effective_config(request);
  r.seed = request.seed;
  if (request.config.contains("environments")) {
    try {
      r.fingerprint = environment_from_json(request.config).fingerprint();
    } catch (const Error&) {
    }
  }
  r.started = std::move(started);
  r.finished = std::move(finished);
  r.out_dir = std::move(out_dir);
  for (const auto& a : artifacts) r.outputs.emplace_back(a.name, fnv1a_hex(a.content));
  return r;
}

json record_to_json(const RunRecord& r) {
  json outputs = json::object();
  for (const auto& [name, h] : r.outputs) outputs[name] = h;
  return {{"tool_version", r.tool_version}, {"command", r.command}, {"config_hash", r.config_hash},
          {"config", r.config},             {"seed", r.seed},       {"fingerprint", r.fingerprint},
          {"started", r.started},           {"finished", r.finished}, {"out_dir", r.out_dir},
          {"outputs", outputs}};
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  try {
    r.tool_version = j.at("tool_version").get<std::string>();
    r.command = j.at("command").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.config = j.at("config");
    r.seed = j.at("seed").get<std::uint64_t>();
    r.fingerprint = j.value("fingerprint", "");
    r.started = j.value("started", "");
    r.finished = j.value("finished", "");
    r.out_dir = j.value("out_dir", ".");
    for (const auto& [name, h] : j.at("outputs").items()) r.outputs.emplace_back(name, h.get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed run record: ") + e.what());
  }
  return r;
}

CommandRequest request_from_record(const RunRecord& record, unsigned workers) {
  CommandRequest rq;
  rq.command = record.command;
  rq.config = record.config.value("config", json::object());
  rq.options = record.config.value("options", json::object());
  rq.replicas = record.config.value("replicas", std::uint64_t{1000});
  rq.seed = record.seed;
  rq.workers = workers;
  return rq;
}

std::string first_divergence(std::string_view expected, std::string_view actual) {
  const std::size_t limit = std::min(expected.size(), actual.size());
  std::size_t i = 0;
  while (i < limit && expected[i] == actual[i]) ++i;
  if (i == limit && expected.size() == actual.size()) return "";
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t k = 0; k < i; ++k) {
    if (expected[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "byte " + std::to_string(i) + " (line " + std::to_string(line) + ", column " + std::to_string(col) + ")";
}

bool ReproduceReport::pass() const {
  if (checks.empty()) return false;
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

ReproduceReport reproduce(const RunRecord& record, unsigned workers) {
  if (major_version(record.tool_version) != major_version(std::string(kToolVersion))) {
    throw Error(ErrorCode::VersionMismatch,
                "record written by " + record.tool_version + ", this is " + std::string(kToolVersion));
  }
  const CommandRequest request = request_from_record(record, workers);
  ReproduceReport report;
  const std::string hash = config_hash(request);
  const std::string echo_hash = fnv1a_hex(record.config.dump());
  if (hash != record.config_hash || echo_hash != record.config_hash) {
    report.checks.push_back({"config_hash", false,
                             "record hash " + record.config_hash + ", config echo hashes to " + echo_hash +
                                 ", replayed request hashes to " + hash});
  }
  const auto artifacts = execute(request);
  std::map<std::string, std::string> fresh;
  for (const auto& a : artifacts) fresh[a.name] = a.content;

  for (const auto& [name, h] : record.outputs) {
    ArtifactCheck check{name, false, ""};
    const auto it = fresh.find(name);
    if (it == fresh.end()) {
      check.detail = "artifact not produced on replay";
      report.checks.push_back(check);
      continue;
    }
    std::ifstream in(record.out_dir + "/" + name, std::ios::binary);
    if (in) {
      const std::string stored((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      const std::string where = first_divergence(stored, it->second);
      check.pass = where.empty();
      check.detail = check.pass ? "identical bytes" : "first divergence at " + where;
    } else {
      check.pass = fnv1a_hex(it->second) == h;
      check.detail = check.pass ? "hash matches (stored file missing)" : "hash differs (stored file missing)";
    }
    report.checks.push_back(check);
  }
  return report;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyPmf:
    case ErrorCode::NegativeProb:
    case ErrorCode::DuplicateKey:
    case ErrorCode::MassNotOne:
    case ErrorCode::InvalidWeight:
    case ErrorCode::WeightsNotOne:
    case ErrorCode::ZeroMeanComponent:
    case ErrorCode::NotStronglySupercritical:
    case ErrorCode::COutOfRange:
    case ErrorCode::TOutOfRange:
    case ErrorCode::SideMismatch:
    case ErrorCode::InvalidConfig:
    case ErrorCode::ParseError:
    case ErrorCode::VersionMismatch:
      return 2;
    default:
      return 3;
  }
}

json error_json(std::string_view code, std::string_view message, std::string_view command) {
  return {{"error", std::string(code)}, {"message", std::string(message)}, {"command", std::string(command)}};
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace bpre
