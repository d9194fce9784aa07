#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "embedq/bundle.hpp"
#include "embedq/matrix.hpp"

namespace embedq {

struct GaussianMixture {
  MatrixF points;
  std::vector<std::uint32_t> labels;
};

/// Isotropic unit-variance clusters around centers drawn from
/// N(0, center_spread^2 I). Deterministic in `seed`.
GaussianMixture make_gaussian_mixture(std::size_t n, std::size_t d,
                                      std::size_t clusters, std::uint64_t seed,
                                      double center_spread = 4.0);

/// 2-D Gaussian random linear projection.
MatrixF random_projection(const MatrixF& points, std::uint64_t seed);

/// Shuffles positions among the members of every other cluster, which keeps
/// the cluster layout but destroys neighborhoods inside those clusters.
MatrixF scramble_clusters(const MatrixF& coords,
                          const std::vector<std::uint32_t>& labels,
                          std::uint64_t seed);

/// Gaussian-mixture bundle with a `projection` and a `scrambled` embedding
/// plus a categorical `cluster` column, held in memory.
DatasetBundle make_demo_bundle(std::size_t n, std::size_t d,
                               std::size_t clusters, std::uint64_t seed);

/// The 4-point hand-check instance: HD x = [0, 1, 2, 10]; embedding
/// `line_warped` puts the points at y = [0, 10, 1, 2], `line_identity`
/// at y = x.
DatasetBundle make_line4_bundle();

/// `embeddings` random projections of one Gaussian mixture, for benchmarks.
DatasetBundle make_bench_bundle(std::size_t n, std::size_t d,
                                std::size_t embeddings, std::uint64_t seed);

/// Writes arrays, metadata and `trace.json` under `root`.
void write_bundle(const std::filesystem::path& root, const DatasetBundle& bundle,
                  std::uint64_t seed,
                  std::vector<std::uint32_t> k_list = {10, 50, 100, 200});

}  // namespace embedq
