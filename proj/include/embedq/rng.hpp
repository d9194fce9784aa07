#pragma once

#include <array>
#include <cstdint>

namespace embedq {

/// Philox4x32-10 block function (Salmon et al., SC'11). Pure: the output is
/// a function of (counter, key) only, so any point can regenerate its own
/// stream without coordination.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Operation tags keep the streams of different consumers disjoint.
enum class RngTag : std::uint32_t {
  knn_init = 1,
  nn_descent_sample = 2,
  triplets = 3,
  anchors = 4,
  synthetic = 5,
  recall_probe = 6,
};

/// Stream keyed by (seed, tag, stream id). Stream id is normally a point
/// index, which makes per-point sampling independent of scheduling.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, RngTag tag, std::uint64_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, bound); bound > 0. Unbiased (rejection).
  std::uint32_t below(std::uint32_t bound);
  /// Standard normal via Box-Muller.
  double normal();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_{};
  std::uint64_t stream_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Avalanche mix for deriving keys and hash priorities.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace embedq
