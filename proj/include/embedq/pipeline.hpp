#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "embedq/bundle.hpp"
#include "embedq/manifest.hpp"
#include "embedq/metric_column.hpp"

namespace embedq {

struct PrecomputeConfig {
  std::vector<std::uint32_t> k_list = {10, 50, 100, 200};
  std::uint64_t seed = 42;
  std::uint32_t triplets_per_point = 500;
  /// Unset: every point when n <= 1000, else 1000 sampled anchors.
  std::optional<std::size_t> anchor_count;
  std::uint32_t stability_k = 50;
  double recall_target = 0.95;
  bool force = false;

  static PrecomputeConfig from_manifest(const Manifest& m);
};

/// Wall time per stage, in seconds.
struct StageTimes {
  double hd_knn = 0.0;
  double ld_knn = 0.0;
  double preservation = 0.0;
  double triplets = 0.0;
  double rank_correlation = 0.0;
  double stability = 0.0;

  double total() const {
    return hd_knn + ld_knn + preservation + triplets + rank_correlation +
           stability;
  }
};

/// One column the configuration calls for.
struct PlannedColumn {
  std::optional<std::string> embedding;  // empty: bundle-level
  MetricKind metric = MetricKind::neighborhood_preservation;
  nlohmann::json params;
  std::string path;  // cache stem relative to the dataset root
};

struct ColumnPlan {
  std::vector<std::uint32_t> k_list;  // feasible k values
  std::uint32_t kmax = 0;
  std::uint32_t ld_k = 0;             // LD graphs also serve stability
  std::uint32_t stability_k = 0;      // 0 when fewer than 2 embeddings
  std::vector<PlannedColumn> columns;
  std::vector<std::string> warnings;
};

ColumnPlan plan_columns(std::size_t n, const std::vector<std::string>& embeddings,
                        const Manifest& layout, const PrecomputeConfig& config);

struct PrecomputeReport {
  std::size_t computed_columns = 0;
  std::size_t reused_columns = 0;
  std::size_t computed_graphs = 0;
  std::vector<std::string> warnings;
  StageTimes times;
};

/// Builds every neighbor graph and metric column for the bundle, persisting
/// under its root. Columns already in the cache are reused unless
/// `config.force`; a rerun on unchanged inputs writes identical bytes.
/// Holds `{root}/cache/.lock` for the duration.
Manifest precompute(const DatasetBundle& bundle, const PrecomputeConfig& config,
                    PrecomputeReport* report = nullptr);

/// The same computation without touching disk; fills the bundle's graph and
/// column maps. Used by the benchmark.
StageTimes compute_in_memory(DatasetBundle& bundle, const PrecomputeConfig& config);

enum class CacheState { present, missing, corrupt };
std::string_view to_string(CacheState s);

struct ColumnStatus {
  PlannedColumn column;
  CacheState state = CacheState::missing;
  std::string detail;
};

struct StatusReport {
  std::string dataset;
  std::size_t n = 0;
  std::vector<ColumnStatus> columns;
  std::vector<std::string> warnings;

  std::size_t count(CacheState s) const;
};

/// Read-only inspection of the cache against the manifest's configuration.
StatusReport status(const std::filesystem::path& manifest_path);

/// Loads every graph and column the manifest records into the bundle.
/// Unreadable entries are skipped and described in the returned list.
std::vector<std::string> attach_cache(DatasetBundle& bundle);

}  // namespace embedq
