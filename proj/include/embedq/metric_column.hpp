#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace embedq {

enum class MetricKind {
  neighborhood_preservation,
  triplet_accuracy,
  distance_rank_correlation,
  point_stability,
  hd_distance_to_anchor,
};

std::string_view to_string(MetricKind kind);
/// Throws Error(invalid_argument) for unknown names.
MetricKind parse_metric_kind(std::string_view name);

struct MetricColumn {
  MetricKind metric = MetricKind::neighborhood_preservation;
  nlohmann::json params = nlohmann::json::object();
  std::vector<float> values;
  float vmin = 0.0f;
  float vmax = 1.0f;

  /// Stable identity of (metric, params), e.g.
  /// `neighborhood_preservation{"k":10,...}`.
  std::string key() const;
};

/// Display range: the theoretical range for bounded metrics, the observed
/// range otherwise.
void assign_display_range(MetricColumn& column);

}  // namespace embedq
