#pragma once

#include "occuriesz/core.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace occuriesz {

using Json = nlohmann::json;

// One experiment: a process recipe, an operation with its parameters, and the replication layout.
// Schema and the operation catalogue are documented in README.md.
struct ExperimentConfig {
  std::string id = "experiment";
  ProcessSpec process;
  Json sde;  // raw SDE block (coefficient families), null when absent
  std::string operation;
  Json parameters = Json::object();
  std::size_t replications = 1;
  int workers = 0;  // 0: OCCURIESZ_WORKERS, else hardware concurrency
  std::filesystem::path output = "out";
  std::uint64_t seed = 0;  // master seed; replication r uses derive_seed(seed, r)
};

// YAML or JSON, chosen by extension (.json) or a leading '{'. Throws ParseError with a line number.
ExperimentConfig load_config(const std::filesystem::path& file);
ExperimentConfig parse_config(std::string_view text, bool json);
ExperimentConfig config_from_json(const Json& j);
// Canonical form with every default filled in.
Json to_json(const ExperimentConfig& config);

// Subcommand owning an operation: simulate, potential, limits, regularity or oracle; empty if unknown.
std::string_view operation_group(std::string_view operation);
std::vector<std::string> operations_in(std::string_view group);

// Every violated constraint, each naming the condition it breaks.
std::vector<std::string> config_violations(const ExperimentConfig& config);
void validate(const ExperimentConfig& config);  // throws ValidationError

// SHA-256 of the canonical config without output directory and worker count.
std::string config_hash(const ExperimentConfig& config);
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& file);

struct FileRecord {
  std::string path;  // relative to the output directory
  std::string sha256;
};

struct CheckResult {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct ExperimentManifest {
  std::string config_hash;
  std::string tool_version;
  Json config;
  std::vector<std::uint64_t> seeds;
  std::vector<FileRecord> files;
  std::vector<std::size_t> failed_replications;
  std::vector<CheckResult> checks;
  double wall_seconds = 0.0;
  int workers = 1;
  std::filesystem::path directory;  // where the manifest lives; not serialized

  bool checks_passed() const;
};

Json to_json(const ExperimentManifest& manifest);
ExperimentManifest manifest_from_json(const Json& j);
ExperimentManifest read_manifest(const std::filesystem::path& file);

inline constexpr const char* kManifestName = "manifest.json";

// Validates, runs the operation over the replications and writes results plus manifest.json
// into config.output. Output bytes do not depend on the worker count.
ExperimentManifest run(const ExperimentConfig& config);

struct ReplayOptions {
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;  // override the recorded master seed
  std::optional<std::filesystem::path> output;  // default: <manifest dir>/replay
};

// Re-runs the recorded config and compares every output checksum; throws ReproducibilityError
// listing the differing files.
ExperimentManifest replay(const std::filesystem::path& manifest_file, const ReplayOptions& options = {});

// Plot-ready series for each result file: <stem>.plot.tsv (and <stem>.svg when svg is set).
// Results without series produce a file that says "no data".
std::vector<std::filesystem::path> emit_plotdata(const std::vector<std::filesystem::path>& results,
                                                 const std::filesystem::path& out_dir, bool svg = true);

}  // namespace occuriesz
