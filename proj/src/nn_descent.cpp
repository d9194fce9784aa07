#include <algorithm>
#include <atomic>
#include <cmath>
#include <memory>
#include <thread>
#include <unordered_set>
#include <vector>

#include "embedq/distance.hpp"
#include "embedq/error.hpp"
#include "embedq/knn.hpp"
#include "embedq/parallel.hpp"
#include "embedq/rng.hpp"

namespace embedq {

namespace {

struct Key {
  float sq;
  std::uint32_t id;
  bool operator<(const Key& o) const {
    return sq < o.sq || (sq == o.sq && id < o.id);
  }
};

class SpinLock {
 public:
  void lock() noexcept {
    while (flag_.test_and_set(std::memory_order_acquire)) {
      // Yield now and then: workers may outnumber cores.
      for (int spins = 0; flag_.test(std::memory_order_relaxed); ++spins) {
        if ((spins & 63) == 63) std::this_thread::yield();
      }
    }
  }
  void unlock() noexcept { flag_.clear(std::memory_order_release); }

 private:
  std::atomic_flag flag_;
};

// Bounded k-NN pools for every point, stored flat. A pool's final content
// after a round of insertions is the best-k (by (sq, id)) of its initial
// content plus all offered candidates, whatever order they arrive in; this is
// what makes the parallel join deterministic.
class Pools {
 public:
  Pools(std::size_t n, std::uint32_t k)
      : n_(n), k_(k), sq_(n * k), id_(n * k), is_new_(n * k), fresh_(n * k),
        locks_(std::make_unique<SpinLock[]>(n)),
        worst_(std::make_unique<std::atomic<float>[]>(n)) {}

  std::uint32_t k() const { return k_; }
  float* sq(std::size_t i) { return sq_.data() + i * k_; }
  std::uint32_t* id(std::size_t i) { return id_.data() + i * k_; }
  std::uint8_t* is_new(std::size_t i) { return is_new_.data() + i * k_; }
  std::uint8_t* fresh(std::size_t i) { return fresh_.data() + i * k_; }

  void refresh_worst(std::size_t i) {
    worst_[i].store(sq(i)[k_ - 1], std::memory_order_relaxed);
  }

  void try_insert(std::size_t p, std::uint32_t cand, float d) {
    // worst only shrinks, so a stale read can only let extra work through.
    if (d > worst_[p].load(std::memory_order_relaxed)) return;
    std::lock_guard<SpinLock> guard(locks_[p]);
    float* s = sq(p);
    std::uint32_t* ids = id(p);
    const Key key{d, cand};
    if (!(key < Key{s[k_ - 1], ids[k_ - 1]})) return;
    std::uint32_t pos = 0;
    {
      std::uint32_t lo = 0, hi = k_;
      while (lo < hi) {
        const std::uint32_t mid = (lo + hi) / 2;
        if (Key{s[mid], ids[mid]} < key) {
          lo = mid + 1;
        } else {
          hi = mid;
        }
      }
      pos = lo;
    }
    // Same id means same pair, and the kernel is symmetric, so a repeat
    // lands exactly on its existing key.
    if (ids[pos] == cand && s[pos] == d) return;
    std::uint8_t* nw = is_new(p);
    std::uint8_t* fr = fresh(p);
    for (std::uint32_t t = k_ - 1; t > pos; --t) {
      s[t] = s[t - 1];
      ids[t] = ids[t - 1];
      nw[t] = nw[t - 1];
      fr[t] = fr[t - 1];
    }
    s[pos] = d;
    ids[pos] = cand;
    nw[pos] = 1;
    fr[pos] = 1;
    worst_[p].store(s[k_ - 1], std::memory_order_relaxed);
  }

 private:
  std::size_t n_;
  std::uint32_t k_;
  std::vector<float> sq_;
  std::vector<std::uint32_t> id_;
  std::vector<std::uint8_t> is_new_;
  std::vector<std::uint8_t> fresh_;
  std::unique_ptr<SpinLock[]> locks_;
  std::unique_ptr<std::atomic<float>[]> worst_;
};

std::uint64_t priority(std::uint64_t round_key, std::uint32_t owner,
                       std::uint32_t other) {
  return splitmix64(round_key ^ ((static_cast<std::uint64_t>(owner) << 32) | other));
}

struct Prioritized {
  std::uint64_t prio;
  std::uint32_t id;
  bool operator<(const Prioritized& o) const {
    return prio < o.prio || (prio == o.prio && id < o.id);
  }
};

void keep_smallest(std::vector<Prioritized>& v, std::size_t cap) {
  if (v.size() > cap) {
    std::nth_element(v.begin(), v.begin() + cap, v.end());
    v.resize(cap);
  }
  std::sort(v.begin(), v.end());
}

void init_random(const MatrixF& points, Pools& pools, std::uint64_t seed) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  const std::uint32_t k = pools.k();
  parallel_for(n, [&](std::size_t i) {
    CounterRng rng(seed, RngTag::knn_init, i);
    // Floyd's sampling over the n-1 candidates other than i.
    const auto others = static_cast<std::uint32_t>(n - 1);
    std::unordered_set<std::uint32_t> chosen;
    chosen.reserve(k * 2);
    std::vector<std::uint32_t> picks;
    picks.reserve(k);
    for (std::uint32_t j = others - k; j < others; ++j) {
      const std::uint32_t t = rng.below(j + 1);
      const std::uint32_t pick = chosen.count(t) ? j : t;
      chosen.insert(pick);
      picks.push_back(pick);
    }
    std::vector<Key> row;
    row.reserve(k);
    for (std::uint32_t p : picks) {
      const std::uint32_t id = p >= i ? p + 1 : p;
      row.push_back({squared_distance(points.row(i).data(), points.row(id).data(), d), id});
    }
    std::sort(row.begin(), row.end());
    for (std::uint32_t t = 0; t < k; ++t) {
      pools.sq(i)[t] = row[t].sq;
      pools.id(i)[t] = row[t].id;
      pools.is_new(i)[t] = 1;
      pools.fresh(i)[t] = 0;
    }
    pools.refresh_worst(i);
  });
}

struct CandidateLists {
  std::vector<std::vector<std::uint32_t>> fresh;
  std::vector<std::vector<std::uint32_t>> old;
};

// Samples up to `cap` new and `cap` old forward entries per point, adds
// reverse edges (also capped), and clears the new flag of sampled entries.
CandidateLists sample_candidates(Pools& pools, std::size_t n, std::uint32_t cap,
                                 std::uint64_t round_key) {
  const std::uint32_t k = pools.k();
  std::vector<std::vector<Prioritized>> fwd_new(n), fwd_old(n);
  parallel_for(n, [&](std::size_t i) {
    const auto owner = static_cast<std::uint32_t>(i);
    auto& fn = fwd_new[i];
    auto& fo = fwd_old[i];
    for (std::uint32_t t = 0; t < k; ++t) {
      const std::uint32_t id = pools.id(i)[t];
      (pools.is_new(i)[t] ? fn : fo).push_back({priority(round_key, owner, id), id});
    }
    keep_smallest(fn, cap);
    keep_smallest(fo, cap);
    for (std::uint32_t t = 0; t < k; ++t) {
      if (!pools.is_new(i)[t]) continue;
      const std::uint32_t id = pools.id(i)[t];
      if (std::any_of(fn.begin(), fn.end(),
                      [id](const Prioritized& p) { return p.id == id; })) {
        pools.is_new(i)[t] = 0;
      }
    }
  });

  // Reverse edges, gathered serially so list order is fixed.
  std::vector<std::vector<Prioritized>> rev_new(n), rev_old(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto owner = static_cast<std::uint32_t>(i);
    for (const auto& p : fwd_new[i]) {
      rev_new[p.id].push_back({priority(round_key, p.id, owner), owner});
    }
    for (const auto& p : fwd_old[i]) {
      rev_old[p.id].push_back({priority(round_key, p.id, owner), owner});
    }
  }

  CandidateLists lists;
  lists.fresh.resize(n);
  lists.old.resize(n);
  parallel_for(n, [&](std::size_t i) {
    keep_smallest(rev_new[i], cap);
    keep_smallest(rev_old[i], cap);
    auto& nw = lists.fresh[i];
    auto& od = lists.old[i];
    for (const auto& p : fwd_new[i]) nw.push_back(p.id);
    for (const auto& p : rev_new[i]) nw.push_back(p.id);
    for (const auto& p : fwd_old[i]) od.push_back(p.id);
    for (const auto& p : rev_old[i]) od.push_back(p.id);
    std::sort(nw.begin(), nw.end());
    nw.erase(std::unique(nw.begin(), nw.end()), nw.end());
    std::sort(od.begin(), od.end());
    od.erase(std::unique(od.begin(), od.end()), od.end());
    std::vector<std::uint32_t> only_old;
    std::set_difference(od.begin(), od.end(), nw.begin(), nw.end(),
                        std::back_inserter(only_old));
    od.swap(only_old);
  });
  return lists;
}

void local_join(const MatrixF& points, Pools& pools, const CandidateLists& lists) {
  const std::size_t d = points.cols();
  parallel_for(points.rows(), [&](std::size_t i) {
    const auto& nw = lists.fresh[i];
    const auto& od = lists.old[i];
    for (std::size_t x = 0; x < nw.size(); ++x) {
      const std::uint32_t a = nw[x];
      const float* pa = points.row(a).data();
      for (std::size_t y = x + 1; y < nw.size(); ++y) {
        const std::uint32_t b = nw[y];
        const float dist = squared_distance(pa, points.row(b).data(), d);
        pools.try_insert(a, b, dist);
        pools.try_insert(b, a, dist);
      }
      for (const std::uint32_t b : od) {
        if (a == b) continue;
        const float dist = squared_distance(pa, points.row(b).data(), d);
        pools.try_insert(a, b, dist);
        pools.try_insert(b, a, dist);
      }
    }
  }, 16);
}

double probe_recall(const MatrixF& points, Pools& pools, std::uint64_t seed,
                    std::uint32_t probes) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  const std::uint32_t k = pools.k();
  probes = static_cast<std::uint32_t>(std::min<std::size_t>(probes, n));
  std::vector<double> hits(probes);
  parallel_for(probes, [&](std::size_t p) {
    CounterRng rng(seed, RngTag::recall_probe, p);
    const std::size_t i = rng.below(static_cast<std::uint32_t>(n));
    std::vector<Key> all;
    all.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      all.push_back({squared_distance(points.row(i).data(), points.row(j).data(), d),
                     static_cast<std::uint32_t>(j)});
    }
    std::nth_element(all.begin(), all.begin() + (k - 1), all.end());
    std::vector<std::uint32_t> truth(k), found(pools.id(i), pools.id(i) + k);
    for (std::uint32_t t = 0; t < k; ++t) truth[t] = all[t].id;
    std::sort(truth.begin(), truth.end());
    std::sort(found.begin(), found.end());
    std::vector<std::uint32_t> common;
    std::set_intersection(truth.begin(), truth.end(), found.begin(), found.end(),
                          std::back_inserter(common));
    hits[p] = static_cast<double>(common.size()) / k;
  }, 1);
  double sum = 0.0;
  for (double h : hits) sum += h;
  return probes ? sum / probes : 1.0;
}

}  // namespace

NeighborGraph build_approx_knn(const MatrixF& points, std::uint32_t k,
                               double recall_target, std::uint64_t seed,
                               std::string space_id,
                               const NnDescentOptions& options) {
  const std::size_t n = points.rows();
  if (k < 1 || k + 1 > n) {
    throw Error(ErrorKind::invalid_argument,
                "k=" + std::to_string(k) + " out of range [1, " +
                    std::to_string(n > 0 ? n - 1 : 0) + "]");
  }
  if (!(recall_target > 0.0 && recall_target <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "recall_target must lie in (0, 1]");
  }
  if (n <= kExactFallbackMaxN) {
    NeighborGraph g = build_exact_knn(points, k, std::move(space_id));
    g.seed = seed;
    return g;
  }

  Pools pools(n, k);
  init_random(points, pools, seed);

  std::uint32_t cap = std::min(options.sample_size, k);
  const auto threshold = options.delta * static_cast<double>(n) * k;
  std::uint32_t iteration = 0;
  while (iteration < options.max_iterations) {
    for (; iteration < options.max_iterations; ++iteration) {
      const std::uint64_t round_key =
          splitmix64(seed ^ (0x5bd1e995ull * (iteration + 1)));
      CandidateLists lists = sample_candidates(pools, n, cap, round_key);
      std::fill_n(pools.fresh(0), n * k, std::uint8_t{0});
      local_join(points, pools, lists);
      std::size_t changed = 0;
      for (std::size_t t = 0; t < n * k; ++t) changed += pools.fresh(0)[t];
      if (static_cast<double>(changed) <= threshold) {
        ++iteration;
        break;
      }
    }
    if (iteration >= options.max_iterations ||
        probe_recall(points, pools, seed, options.probe_points) >= recall_target ||
        cap >= k) {
      break;
    }
    // Short of target: widen the sample and rejoin everything.
    cap = std::min(k, cap * 2);
    std::fill_n(pools.is_new(0), n * k, std::uint8_t{1});
  }

  NeighborGraph g;
  g.indices = MatrixU32(n, k);
  g.distances = MatrixF(n, k);
  g.exactness = Exactness::approximate;
  g.space_id = std::move(space_id);
  g.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t t = 0; t < k; ++t) {
      g.indices(i, t) = pools.id(i)[t];
      g.distances(i, t) = std::sqrt(pools.sq(i)[t]);
    }
  }
  return g;
}

}  // namespace embedq
