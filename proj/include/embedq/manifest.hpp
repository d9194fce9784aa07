#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "embedq/metric_column.hpp"

namespace embedq {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kManifestName = "trace.json";

struct EmbeddingEntry {
  std::string name;
  std::string coords;  // relative to the dataset root
};

struct GraphRecord {
  std::string space_id;  // "hd" or an embedding name
  std::uint32_t k = 0;
  std::string exactness;
  std::uint64_t seed = 0;
  std::string path;  // stem; `.indices.bin`, `.distances.bin`, `.json` appended
};

struct MetricRecord {
  std::optional<std::string> embedding;  // empty for bundle-level columns
  MetricKind metric = MetricKind::neighborhood_preservation;
  nlohmann::json params = nlohmann::json::object();
  float vmin = 0.0f;
  float vmax = 1.0f;
  std::string path;  // stem; `.bin` and `.json` appended
};

/// On-disk description of a dataset root. Paths are relative to the
/// directory holding `trace.json`.
struct Manifest {
  int schema_version = kSchemaVersion;
  std::string dataset;
  std::string hd_points;
  std::vector<EmbeddingEntry> embeddings;
  std::optional<std::string> metadata;
  std::string neighbors_dir = "cache/neighbors";
  std::string metrics_dir = "cache/metrics";
  std::vector<std::uint32_t> k_list = {10, 50, 100, 200};
  std::uint64_t seed = 42;

  // Filled in by precompute.
  std::vector<GraphRecord> graphs;
  std::vector<MetricRecord> metrics;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);

/// Accepts either the manifest file or the dataset directory containing it.
std::filesystem::path resolve_manifest_path(const std::filesystem::path& p);

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& m);

/// Canonical serialized form; byte-stable for equal manifests.
std::string serialize_manifest(const Manifest& m);

}  // namespace embedq
