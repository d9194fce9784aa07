#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "embedq/graph.hpp"
#include "embedq/manifest.hpp"
#include "embedq/matrix.hpp"
#include "embedq/metric_column.hpp"

namespace embedq {

inline constexpr std::size_t kMaxCategories = 1024;

struct Embedding {
  std::string name;
  MatrixF coords;  // n x 2
  std::map<std::string, MetricColumn> metrics;  // keyed by MetricColumn::key()
  std::map<std::uint32_t, NeighborGraph> ld_neighbors;
};

enum class MetadataKind { categorical, continuous };

struct MetadataColumn {
  std::string name;
  MetadataKind kind = MetadataKind::categorical;
  std::vector<std::string> labels;  // categorical
  std::vector<float> numbers;       // continuous

  std::size_t size() const {
    return kind == MetadataKind::categorical ? labels.size() : numbers.size();
  }
};

struct DatasetBundle {
  std::string name;
  std::filesystem::path root;
  Manifest manifest;
  MatrixF hd_points;  // n x d
  std::vector<Embedding> embeddings;
  std::vector<MetadataColumn> metadata;
  std::map<std::uint32_t, NeighborGraph> hd_neighbors;
  std::map<std::string, MetricColumn> bundle_metrics;  // point stability

  std::size_t n() const noexcept { return hd_points.rows(); }
  std::size_t d() const noexcept { return hd_points.cols(); }

  const Embedding* find_embedding(std::string_view name) const;
  const MetadataColumn* find_metadata(std::string_view name) const;
};

/// Embedding names double as cache directory names.
bool is_valid_embedding_name(std::string_view name);

/// Loads `trace.json` (or the directory holding it) plus every array it
/// references. `.csv` inputs are parsed and converted in memory. Precomputed
/// caches are not attached here; see attach_cache().
DatasetBundle load_bundle(const std::filesystem::path& manifest_path);

/// Structural validation shared by the loader and in-memory constructors.
void validate_bundle(const DatasetBundle& bundle);

/// Loads an f32 array from either the binary format or a CSV file.
MatrixF load_matrix_any(const std::filesystem::path& path);

std::vector<MetadataColumn> load_metadata(const std::filesystem::path& path);
void write_metadata_json(const std::filesystem::path& path,
                         const std::vector<MetadataColumn>& columns);

}  // namespace embedq
