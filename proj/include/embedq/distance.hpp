#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace embedq {

/// Squared Euclidean distance with a fixed 8-lane accumulation order.
///
/// Every distance in the engine goes through this kernel, so the same pair
/// always produces the same bits regardless of which code path asks, and the
/// result is symmetric in its arguments. Comparisons are done on squared
/// values; sqrt is only applied to what gets stored.
inline float squared_distance(const float* a, const float* b, std::size_t d) {
  float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t j = 0;
  for (; j + 8 <= d; j += 8) {
    for (int l = 0; l < 8; ++l) {
      const float diff = a[j + l] - b[j + l];
      acc[l] += diff * diff;
    }
  }
  for (int l = 0; j < d; ++j, ++l) {
    const float diff = a[j] - b[j];
    acc[l] += diff * diff;
  }
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
         ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

inline float squared_distance(std::span<const float> a,
                              std::span<const float> b) {
  return squared_distance(a.data(), b.data(), a.size());
}

inline float euclidean_distance(std::span<const float> a,
                                std::span<const float> b) {
  return std::sqrt(squared_distance(a, b));
}

}  // namespace embedq
