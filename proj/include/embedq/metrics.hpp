#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "embedq/graph.hpp"
#include "embedq/matrix.hpp"
#include "embedq/metric_column.hpp"

namespace embedq {

enum class TripletMode { sampled, exhaustive };

/// Largest per-point triplet count allowed in exhaustive mode.
inline constexpr std::uint64_t kMaxExhaustiveTriplets = 1'000'000;

struct TripletSampler {
  std::uint64_t seed = 42;
  std::uint32_t triplets_per_point = 500;
  TripletMode mode = TripletMode::sampled;
};

/// Number of (j, l) pairs per point in exhaustive mode: (n-1)(n-2)/2.
std::uint64_t exhaustive_triplet_count(std::size_t n);

/// Reference points shared by every point for rank correlation.
struct AnchorSet {
  std::uint64_t seed = 0;
  bool all_points = false;
  std::vector<std::uint32_t> indices;

  static AnchorSet all(std::size_t n);
  /// m distinct indices drawn from [0, n) with the counter-based generator.
  static AnchorSet sample(std::size_t n, std::size_t m, std::uint64_t seed);
  /// Every point when n <= 1000, otherwise 1000 sampled points.
  static AnchorSet default_for(std::size_t n, std::uint64_t seed);
};

inline constexpr std::size_t kDefaultAnchorCount = 1000;

/// Fraction of each point's first-k HD neighbors that are also among its
/// first-k LD neighbors.
MetricColumn neighborhood_preservation(const NeighborGraph& hd_graph,
                                       const NeighborGraph& ld_graph,
                                       std::uint32_t k);

/// Per-point share of triplets (i, j, l) whose distance order from i agrees
/// between the two spaces. Triplets tied in either space are left out; a
/// point with no informative triplet scores 0.5.
MetricColumn triplet_accuracy(const MatrixF& hd_points, const MatrixF& ld_coords,
                              const TripletSampler& sampler);

/// Same as triplet_accuracy for several embeddings at once; the HD side of
/// each triplet is evaluated once and shared.
std::vector<MetricColumn> triplet_accuracy(
    const MatrixF& hd_points, std::span<const MatrixF* const> ld_coords,
    const TripletSampler& sampler);

/// Spearman correlation, per point, between HD and LD distances to the
/// anchors (the point itself excluded).
MetricColumn distance_rank_correlation(const MatrixF& hd_points,
                                       const MatrixF& ld_coords,
                                       const AnchorSet& anchors);

std::vector<MetricColumn> distance_rank_correlation(
    const MatrixF& hd_points, std::span<const MatrixF* const> ld_coords,
    const AnchorSet& anchors);

/// 1-based average ranks; ties share the mean of the positions they cover.
std::vector<double> average_ranks(std::span<const float> values);

/// Pearson correlation of average ranks. 0 when either side is constant.
double spearman_rho(std::span<const float> x, std::span<const float> y);

/// Mean pairwise Jaccard similarity of each point's first-k neighbor sets
/// across all embeddings.
MetricColumn point_stability(std::span<const NeighborGraph* const> ld_graphs,
                             std::uint32_t k);

/// Exact Euclidean distance from `anchor` to every point.
std::vector<float> hd_distances_to_point(const MatrixF& hd_points,
                                         std::size_t anchor);

/// Sorted union of the selection's first-k HD neighbors, minus the selection.
std::vector<std::uint32_t> hd_neighbor_union(
    std::span<const std::uint32_t> selection, const NeighborGraph& hd_graph,
    std::uint32_t k);

}  // namespace embedq
