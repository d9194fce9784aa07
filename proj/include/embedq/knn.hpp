#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "embedq/graph.hpp"
#include "embedq/matrix.hpp"

namespace embedq {

/// Below this size the approximate builder falls back to brute force.
inline constexpr std::size_t kExactFallbackMaxN = 2000;

/// Exact k-NN under Euclidean distance, ties broken by smaller index.
/// Uses a k-d tree for points with at most 3 columns, brute force otherwise;
/// both produce identical graphs. Requires 1 <= k <= n-1.
NeighborGraph build_exact_knn(const MatrixF& points, std::uint32_t k,
                              std::string space_id = {});

struct NnDescentOptions {
  std::uint32_t max_iterations = 20;
  /// Stop when fewer than delta * n * k entries changed in an iteration.
  double delta = 0.001;
  /// Cap on forward and reverse candidates sampled per point per iteration.
  std::uint32_t sample_size = 30;
  /// Points probed with brute force to estimate recall after convergence.
  std::uint32_t probe_points = 200;
};

/// Approximate k-NN by neighbor descent over a random initial graph. The
/// result is a pure function of (points, k, seed, options); the worker count
/// does not affect it. When the probed recall falls short of
/// `recall_target`, the candidate sample is widened and descent resumes
/// within the iteration budget.
NeighborGraph build_approx_knn(const MatrixF& points, std::uint32_t k,
                               double recall_target, std::uint64_t seed,
                               std::string space_id = {},
                               const NnDescentOptions& options = {});

/// Mean over points of |approx_i ∩ exact_i| / k.
double knn_recall(const NeighborGraph& approx, const NeighborGraph& exact);

/// Verifies the structural invariants (no self loops, no repeats, sorted
/// rows, indices in range). Throws Error(corrupt).
void check_graph(const NeighborGraph& graph);

/// Persists a graph as `{stem}.indices.bin`, `{stem}.distances.bin` (each
/// with a sidecar) and the descriptor `{stem}.json`, written last.
void write_graph(const std::filesystem::path& stem, const NeighborGraph& graph);
NeighborGraph read_graph(const std::filesystem::path& stem);
std::filesystem::path graph_descriptor_path(const std::filesystem::path& stem);

}  // namespace embedq
