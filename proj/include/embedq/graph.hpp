#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "embedq/matrix.hpp"

namespace embedq {

enum class Exactness { exact, approximate };

std::string_view to_string(Exactness e);
Exactness parse_exactness(std::string_view s);

/// k-NN lists for one point set. Rows are sorted by (distance, index) and
/// never contain the row's own index or repeated entries.
struct NeighborGraph {
  MatrixU32 indices;   // n x k
  MatrixF distances;   // n x k, Euclidean
  Exactness exactness = Exactness::exact;
  std::string space_id;
  std::uint64_t seed = 0;

  std::size_t n() const noexcept { return indices.rows(); }
  std::uint32_t k() const noexcept {
    return static_cast<std::uint32_t>(indices.cols());
  }
  /// First `k` neighbors of point i; rows are distance-sorted so this is the
  /// k-NN list for any k up to the stored one.
  std::span<const std::uint32_t> first_k(std::size_t i, std::uint32_t k) const {
    return indices.row(i).first(k);
  }
};

}  // namespace embedq
