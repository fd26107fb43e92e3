// bpre: rate functions, simulation, exact oracles and importance sampling
// for branching processes in random environment.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bpre/error.hpp"
#include "bpre/reporting.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Flags {
  std::string config_path;
  std::uint64_t seed = 0;
  std::uint64_t replicas = 1000;
  std::string out_dir = ".";
  unsigned workers = 1;

  std::string c_grid;
  std::string n;
  std::uint64_t z0 = 1;
  double c = 0.0;
  std::uint64_t cap = 0;
  std::uint64_t k = 0;
  double tolerance = 1e-12;
  bool full_pmf = false;
  double phase_fraction = 0.0;
  std::uint64_t threshold_n = 10;
  std::string grid;
  std::string side;
  bool require_rate = false;

  std::string record_path;
  long record_index = -1;
};

json read_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw bpre::Error(bpre::ErrorCode::InvalidConfig, "cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw bpre::Error(bpre::ErrorCode::ParseError, e.what());
  }
}

json parse_horizons(const std::string& s) {
  if (s.find_first_of(",:") == std::string::npos) return std::stoi(s);
  return s;
}

// Writes every artifact then appends the run record; nothing is written if
// the command failed.
void persist(const bpre::CommandRequest& rq, const std::vector<bpre::Artifact>& artifacts, const std::string& out_dir,
             const std::string& started) {
  fs::create_directories(out_dir);
  for (const auto& a : artifacts) {
    std::ofstream out(fs::path(out_dir) / a.name, std::ios::binary);
    out << a.content;
    std::cout << (fs::path(out_dir) / a.name).string() << '\n';
  }
  const auto record = bpre::make_record(rq, artifacts, out_dir, started, bpre::utc_timestamp());
  std::ofstream log(fs::path(out_dir) / "runs.jsonl", std::ios::app);
  log << bpre::record_to_json(record).dump() << '\n';
}

int run_reproduce(const Flags& f) {
  std::ifstream in(f.record_path);
  if (!in) throw bpre::Error(bpre::ErrorCode::InvalidConfig, "cannot open run log " + f.record_path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw bpre::Error(bpre::ErrorCode::InvalidConfig, "run log is empty");
  const long idx = f.record_index < 0 ? static_cast<long>(lines.size()) + f.record_index : f.record_index;
  if (idx < 0 || idx >= static_cast<long>(lines.size())) {
    throw bpre::Error(bpre::ErrorCode::InvalidConfig, "record index out of range");
  }
  json j;
  try {
    j = json::parse(lines[idx]);
  } catch (const json::parse_error& e) {
    throw bpre::Error(bpre::ErrorCode::ParseError, e.what());
  }
  const auto report = bpre::reproduce(bpre::record_from_json(j), f.workers);
  for (const auto& c : report.checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
  }
  return report.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Large deviations of branching processes in random environment"};
  app.require_subcommand(1);
  Flags f;
  app.add_option("--config", f.config_path, "Environment law and per-command sections (JSON)");
  app.add_option("--seed", f.seed, "Root seed");
  app.add_option("--replicas", f.replicas, "Monte Carlo replicas");
  app.add_option("--out-dir", f.out_dir, "Directory for artifacts and runs.jsonl");
  app.add_option("--workers", f.workers, "Worker threads; results do not depend on it");
  app.fallthrough();

  auto* rate = app.add_subcommand("rate", "psi, lambda_c, chi, t_c over a grid of c");
  rate->add_option("--c-grid", f.c_grid, "start:stop:step or a comma list");

  auto* simulate = app.add_subcommand("simulate", "Simulate trajectories");
  auto* oracle = app.add_subcommand("oracle", "Exact law of Z_n by dynamic programming");
  auto* lower = app.add_subcommand("estimate-lower", "Importance-sampled P(Z_n <= e^{cn})");
  auto* upper = app.add_subcommand("estimate-upper", "Importance-sampled P(Z_n >= e^{cn})");
  auto* trajectory = app.add_subcommand("trajectory", "Conditional trajectory profile");
  auto* takeoff = app.add_subcommand("takeoff", "Conditional take-off time");
  auto* cells = app.add_subcommand("cells", "Binary cell tree with parasites");
  auto* repro = app.add_subcommand("reproduce", "Replay a run record and compare artifacts");

  for (auto* sub : {simulate, oracle, lower, upper, trajectory, takeoff, cells}) {
    sub->add_option("--n", f.n, "Horizon (a list for the estimators)");
    sub->add_option("--z0", f.z0, "Initial population");
  }
  for (auto* sub : {oracle, lower, upper, trajectory, takeoff, cells}) sub->add_option("--c", f.c, "Threshold exponent");
  oracle->add_option("--cap", f.cap, "Truncation cap of the DP");
  oracle->add_option("--K", f.k, "Threshold K in P(Z_n <= K)");
  oracle->add_option("--tolerance", f.tolerance, "Largest acceptable overflow mass");
  oracle->add_flag("--full-pmf", f.full_pmf, "Also write the pmf");
  lower->add_option("--phase-fraction", f.phase_fraction, "Holding phase length as a fraction of n");
  for (auto* sub : {lower, upper}) sub->add_flag("--require-rate", f.require_rate, "Fail on a zero estimate");
  for (auto* sub : {simulate, takeoff}) sub->add_option("--threshold-N", f.threshold_n, "Take-off threshold N");
  trajectory->add_option("--grid", f.grid, "Time grid in [0, 1]");
  trajectory->add_option("--side", f.side, "lower or upper")->check(CLI::IsMember({"lower", "upper"}));
  repro->add_option("--record", f.record_path, "Path to runs.jsonl")->required();
  repro->add_option("--index", f.record_index, "Record line; negative counts from the end");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << bpre::error_json("ParseError", e.what(), "").dump() << '\n';
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    if (command == "reproduce") return run_reproduce(f);

    bpre::CommandRequest rq;
    rq.command = command;
    rq.config = read_config(f.config_path);
    rq.seed = f.seed;
    rq.replicas = f.replicas;
    rq.workers = f.workers;
    if (rq.config.contains(command)) rq.options = rq.config.at(command);
    for (const auto* other : app.get_subcommands({})) rq.config.erase(other->get_name());
    auto given = [&](const char* flag) {
      const CLI::Option* opt = sub->get_option_no_throw(flag);
      return opt != nullptr && opt->count() > 0;
    };
    auto set = [&](const char* flag, const char* key, json value) {
      if (given(flag)) rq.options[key] = std::move(value);
    };
    set("--c-grid", "c_grid", f.c_grid);
    if (given("--n")) rq.options["n"] = parse_horizons(f.n);
    set("--z0", "z0", f.z0);
    set("--c", "c", f.c);
    set("--cap", "cap", f.cap);
    set("--K", "K", f.k);
    set("--tolerance", "tolerance", f.tolerance);
    set("--full-pmf", "full_pmf", f.full_pmf);
    set("--phase-fraction", "phase_fraction", f.phase_fraction);
    set("--require-rate", "require_rate", f.require_rate);
    set("--threshold-N", "threshold_N", f.threshold_n);
    set("--grid", "grid", f.grid);
    set("--side", "side", f.side);

    const std::string started = bpre::utc_timestamp();
    const auto artifacts = bpre::execute(rq);
    persist(rq, artifacts, f.out_dir, started);
    return 0;
  } catch (const bpre::Error& e) {
    std::cerr << bpre::error_json(bpre::to_string(e.code()), e.what(), command).dump() << '\n';
    return bpre::exit_code_for(e.code());
  } catch (const std::invalid_argument& e) {
    std::cerr << bpre::error_json("InvalidConfig", e.what(), command).dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << bpre::error_json("Internal", e.what(), command).dump() << '\n';
    return 3;
  }
}
