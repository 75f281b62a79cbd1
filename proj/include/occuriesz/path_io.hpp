#pragma once

#include "occuriesz/core.hpp"

#include <filesystem>

namespace occuriesz {

inline constexpr std::uint32_t kPathSchemaVersion = 1;

struct PathHeader {
  ProcessKind kind = ProcessKind::FBM;
  double hurst = 0.5;
  double beta_stable = 2.0;
  std::uint32_t dim = 1;
  std::uint64_t n_steps = 0;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  std::uint32_t schema_version = kPathSchemaVersion;
};

PathHeader make_header(const ProcessSpec& spec, std::uint64_t seed);

struct StoredPath {
  PathHeader header;
  SamplePath path;
};

// Columnar little-endian binary: fixed header, then the time column, then one column
// per coordinate. Round trips bit-exactly.
void write_path_binary(const std::filesystem::path& file, const SamplePath& path, const PathHeader& header);
StoredPath read_path_binary(const std::filesystem::path& file);

// Comment line with header fields, a column line, then rows t,x1..xd at 17 significant digits.
void write_path_csv(const std::filesystem::path& file, const SamplePath& path, const PathHeader& header);
StoredPath read_path_csv(const std::filesystem::path& file);

}  // namespace occuriesz
