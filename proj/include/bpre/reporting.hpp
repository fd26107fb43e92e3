#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpre/error.hpp"

namespace bpre {

inline constexpr std::string_view kToolVersion = "1.0.0";

/// Shortest decimal form that parses back to the same double; inf, -inf and nan spelled out.
std::string format_double(double x);

/// "a:b:step" (inclusive, step > 0) or a comma separated list.
std::vector<double> parse_grid(const std::string& spec);

struct Artifact {
  std::string name;
  std::string content;
};

/// One command invocation. `options` holds the command's section of the
/// config document with command-line flags already merged in.
struct CommandRequest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json options = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::uint64_t replicas = 1000;
  unsigned workers = 1;
};

/// The inputs that determine a command's outputs. The worker count and the
/// output directory are deliberately absent.
nlohmann::json effective_config(const CommandRequest& request);
std::string config_hash(const CommandRequest& request);

/// Runs the command and returns its artifacts in memory.
std::vector<Artifact> execute(const CommandRequest& request);

struct RunRecord {
  std::string tool_version;
  std::string command;
  std::string config_hash;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string fingerprint;
  std::string started;
  std::string finished;
  std::string out_dir;
  /// Artifact name and FNV-1a hash of its bytes.
  std::vector<std::pair<std::string, std::string>> outputs;
};

RunRecord make_record(const CommandRequest& request, const std::vector<Artifact>& artifacts, std::string out_dir,
                      std::string started, std::string finished);
nlohmann::json record_to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& j);
CommandRequest request_from_record(const RunRecord& record, unsigned workers);

/// Byte offset, line and column of the first difference, or empty when equal.
std::string first_divergence(std::string_view expected, std::string_view actual);

struct ArtifactCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ReproduceReport {
  std::vector<ArtifactCheck> checks;

  bool pass() const;
};

/// Re-executes the record's command and compares each artifact against the
/// file stored in the record's output directory (or against the recorded hash
/// when the file is gone).
ReproduceReport reproduce(const RunRecord& record, unsigned workers = 1);

/// 2 for configuration errors, 3 for numeric failures.
int exit_code_for(ErrorCode code);

nlohmann::json error_json(std::string_view code, std::string_view message, std::string_view command);

std::string utc_timestamp();

}  // namespace bpre
