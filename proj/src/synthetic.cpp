#include "embedq/synthetic.hpp"

#include <cmath>
#include <string>

#include "embedq/array_io.hpp"
#include "embedq/rng.hpp"

namespace embedq {

namespace fs = std::filesystem;

namespace {
// Stream ids above any point index.
constexpr std::uint64_t kCenterStream = 1ull << 40;
constexpr std::uint64_t kProjectionStream = 1ull << 41;
constexpr std::uint64_t kScrambleStream = 1ull << 42;
}  // namespace

GaussianMixture make_gaussian_mixture(std::size_t n, std::size_t d,
                                      std::size_t clusters, std::uint64_t seed,
                                      double center_spread) {
  if (clusters == 0) clusters = 1;
  MatrixF centers(clusters, d);
  CounterRng crng(seed, RngTag::synthetic, kCenterStream);
  for (std::size_t c = 0; c < clusters; ++c) {
    for (std::size_t j = 0; j < d; ++j) {
      centers(c, j) = static_cast<float>(center_spread * crng.normal());
    }
  }
  GaussianMixture gm{MatrixF(n, d), std::vector<std::uint32_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(seed, RngTag::synthetic, i);
    const std::uint32_t c = rng.below(static_cast<std::uint32_t>(clusters));
    gm.labels[i] = c;
    for (std::size_t j = 0; j < d; ++j) {
      gm.points(i, j) = static_cast<float>(centers(c, j) + rng.normal());
    }
  }
  return gm;
}

MatrixF random_projection(const MatrixF& points, std::uint64_t seed) {
  const std::size_t d = points.cols();
  CounterRng rng(seed, RngTag::synthetic, kProjectionStream);
  std::vector<double> proj(2 * d);
  for (auto& w : proj) w = rng.normal() / std::sqrt(static_cast<double>(d));
  MatrixF out(points.rows(), 2);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double x = 0.0, y = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      x += proj[j] * points(i, j);
      y += proj[d + j] * points(i, j);
    }
    out(i, 0) = static_cast<float>(x);
    out(i, 1) = static_cast<float>(y);
  }
  return out;
}

MatrixF scramble_clusters(const MatrixF& coords,
                          const std::vector<std::uint32_t>& labels,
                          std::uint64_t seed) {
  MatrixF out = coords;
  std::uint32_t max_label = 0;
  for (auto l : labels) max_label = std::max(max_label, l);
  CounterRng rng(seed, RngTag::synthetic, kScrambleStream);
  for (std::uint32_t c = 1; c <= max_label; c += 2) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) members.push_back(i);
    }
    std::vector<std::size_t> perm = members;
    for (std::size_t t = perm.size(); t > 1; --t) {
      std::swap(perm[t - 1], perm[rng.below(static_cast<std::uint32_t>(t))]);
    }
    for (std::size_t t = 0; t < members.size(); ++t) {
      out(members[t], 0) = coords(perm[t], 0);
      out(members[t], 1) = coords(perm[t], 1);
    }
  }
  return out;
}

DatasetBundle make_demo_bundle(std::size_t n, std::size_t d,
                               std::size_t clusters, std::uint64_t seed) {
  GaussianMixture gm = make_gaussian_mixture(n, d, clusters, seed);
  DatasetBundle b;
  b.name = "gaussian_mixture";
  const MatrixF proj = random_projection(gm.points, seed);
  b.embeddings.push_back({"projection", proj, {}, {}});
  b.embeddings.push_back({"scrambled", scramble_clusters(proj, gm.labels, seed), {}, {}});
  MetadataColumn label{"cluster", MetadataKind::categorical, {}, {}};
  for (auto l : gm.labels) label.labels.push_back("c" + std::to_string(l));
  b.metadata.push_back(std::move(label));
  b.hd_points = std::move(gm.points);
  return b;
}

DatasetBundle make_line4_bundle() {
  DatasetBundle b;
  b.name = "line4";
  b.hd_points = MatrixF(4, 1, {0.0f, 1.0f, 2.0f, 10.0f});
  b.embeddings.push_back(
      {"line_warped", MatrixF(4, 2, {0, 0, 10, 0, 1, 0, 2, 0}), {}, {}});
  b.embeddings.push_back(
      {"line_identity", MatrixF(4, 2, {0, 0, 1, 0, 2, 0, 10, 0}), {}, {}});
  b.metadata.push_back(
      {"side", MetadataKind::categorical, {"left", "left", "left", "right"}, {}});
  b.metadata.push_back({"x", MetadataKind::continuous, {}, {0, 1, 2, 10}});
  return b;
}

DatasetBundle make_bench_bundle(std::size_t n, std::size_t d,
                                std::size_t embeddings, std::uint64_t seed) {
  GaussianMixture gm = make_gaussian_mixture(n, d, 8, seed);
  DatasetBundle b;
  b.name = "bench";
  for (std::size_t e = 0; e < embeddings; ++e) {
    b.embeddings.push_back({"projection_" + std::to_string(e),
                            random_projection(gm.points, seed + 1000 * (e + 1)),
                            {}, {}});
  }
  b.hd_points = std::move(gm.points);
  return b;
}

void write_bundle(const fs::path& root, const DatasetBundle& b,
                  std::uint64_t seed, std::vector<std::uint32_t> k_list) {
  Manifest m;
  m.k_list = std::move(k_list);
  m.dataset = b.name;
  m.seed = seed;
  m.hd_points = "hd_points.bin";
  write_array(root / m.hd_points, b.hd_points);
  for (const auto& e : b.embeddings) {
    const std::string rel = "embeddings/" + e.name + ".bin";
    write_array(root / rel, e.coords);
    m.embeddings.push_back({e.name, rel});
  }
  if (!b.metadata.empty()) {
    m.metadata = "metadata.json";
    write_metadata_json(root / *m.metadata, b.metadata);
  }
  write_manifest(root / kManifestName, m);
}

}  // namespace embedq
