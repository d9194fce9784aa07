#include "embedq/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "embedq/distance.hpp"
#include "embedq/error.hpp"
#include "embedq/parallel.hpp"

namespace embedq {

namespace {

struct Candidate {
  float sq;
  std::uint32_t id;
  bool operator<(const Candidate& o) const {
    return sq < o.sq || (sq == o.sq && id < o.id);
  }
};

void check_k(std::size_t n, std::uint32_t k) {
  if (k < 1 || k + 1 > n) {
    throw Error(ErrorKind::invalid_argument,
                "k=" + std::to_string(k) + " out of range [1, " +
                    std::to_string(n > 0 ? n - 1 : 0) + "]");
  }
}

NeighborGraph empty_graph(std::size_t n, std::uint32_t k, std::string space_id) {
  NeighborGraph g;
  g.indices = MatrixU32(n, k);
  g.distances = MatrixF(n, k);
  g.exactness = Exactness::exact;
  g.space_id = std::move(space_id);
  return g;
}

void store_row(NeighborGraph& g, std::size_t i, const Candidate* best) {
  for (std::uint32_t j = 0; j < g.k(); ++j) {
    g.indices(i, j) = best[j].id;
    g.distances(i, j) = std::sqrt(best[j].sq);
  }
}

void brute_force(const MatrixF& points, NeighborGraph& g) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  const std::uint32_t k = g.k();
#pragma omp parallel
  {
    std::vector<Candidate> all(n - 1);
#pragma omp for schedule(dynamic, 16)
    for (long long ii = 0; ii < static_cast<long long>(n); ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      const float* p = points.row(i).data();
      std::size_t c = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        all[c++] = {squared_distance(p, points.row(j).data(), d),
                    static_cast<std::uint32_t>(j)};
      }
      std::nth_element(all.begin(), all.begin() + (k - 1), all.end());
      std::sort(all.begin(), all.begin() + k);
      store_row(g, i, all.data());
    }
  }
}

// k-d tree over at most 3 coordinates. Pruning uses the same distance kernel
// applied to the query clamped into the node box, which is a lower bound on
// every kernel value inside the box under IEEE rounding, so the search is
// exact with respect to the brute-force ordering.
class KdTree {
 public:
  static constexpr std::size_t kLeafSize = 16;

  explicit KdTree(const MatrixF& points) : pts_(points), dim_(points.cols()) {
    order_.resize(points.rows());
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.reserve(2 * points.rows() / kLeafSize + 2);
    build(0, order_.size());
  }

  void query(std::size_t self, std::uint32_t k, Candidate* best) const {
    std::vector<Candidate> heap;  // sorted ascending, size <= k
    heap.reserve(k + 1);
    search(0, pts_.row(self).data(), static_cast<std::uint32_t>(self), k, heap);
    std::copy(heap.begin(), heap.end(), best);
  }

 private:
  struct Node {
    float lo[3];
    float hi[3];
    std::uint32_t begin, end;
    std::int32_t left = -1, right = -1;
  };

  std::int32_t build(std::size_t begin, std::size_t end) {
    Node node{};
    node.begin = static_cast<std::uint32_t>(begin);
    node.end = static_cast<std::uint32_t>(end);
    for (std::size_t c = 0; c < dim_; ++c) {
      node.lo[c] = node.hi[c] = pts_(order_[begin], c);
    }
    for (std::size_t t = begin; t < end; ++t) {
      for (std::size_t c = 0; c < dim_; ++c) {
        node.lo[c] = std::min(node.lo[c], pts_(order_[t], c));
        node.hi[c] = std::max(node.hi[c], pts_(order_[t], c));
      }
    }
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= kLeafSize) return id;
    std::size_t axis = 0;
    for (std::size_t c = 1; c < dim_; ++c) {
      if (node.hi[c] - node.lo[c] > node.hi[axis] - node.lo[axis]) axis = c;
    }
    if (node.hi[axis] == node.lo[axis]) return id;  // all coincident
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end, [&](std::uint32_t a, std::uint32_t b) {
                       return pts_(a, axis) < pts_(b, axis);
                     });
    const auto l = build(begin, mid);
    const auto r = build(mid, end);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  float box_bound(const Node& node, const float* q) const {
    float clamped[3];
    for (std::size_t c = 0; c < dim_; ++c) {
      clamped[c] = std::clamp(q[c], node.lo[c], node.hi[c]);
    }
    return squared_distance(q, clamped, dim_);
  }

  static void offer(std::vector<Candidate>& heap, std::uint32_t k, Candidate c) {
    if (heap.size() == k && !(c < heap.back())) return;
    heap.insert(std::upper_bound(heap.begin(), heap.end(), c), c);
    if (heap.size() > k) heap.pop_back();
  }

  void search(std::int32_t id, const float* q, std::uint32_t self,
              std::uint32_t k, std::vector<Candidate>& heap) const {
    const Node& node = nodes_[id];
    if (node.left < 0) {
      for (std::uint32_t t = node.begin; t < node.end; ++t) {
        const std::uint32_t j = order_[t];
        if (j == self) continue;
        offer(heap, k, {squared_distance(q, pts_.row(j).data(), dim_), j});
      }
      return;
    }
    const float bl = box_bound(nodes_[node.left], q);
    const float br = box_bound(nodes_[node.right], q);
    const bool left_first = bl <= br;
    const std::int32_t first = left_first ? node.left : node.right;
    const std::int32_t second = left_first ? node.right : node.left;
    const float bfirst = left_first ? bl : br;
    const float bsecond = left_first ? br : bl;
    // Equal bound may still hold a smaller index at the same distance.
    if (heap.size() < k || bfirst <= heap.back().sq) search(first, q, self, k, heap);
    if (heap.size() < k || bsecond <= heap.back().sq) search(second, q, self, k, heap);
  }

  const MatrixF& pts_;
  std::size_t dim_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace

NeighborGraph build_exact_knn(const MatrixF& points, std::uint32_t k,
                              std::string space_id) {
  const std::size_t n = points.rows();
  check_k(n, k);
  NeighborGraph g = empty_graph(n, k, std::move(space_id));
  if (points.cols() <= 3 && n > 256) {
    const KdTree tree(points);
    parallel_for(n, [&](std::size_t i) {
      std::vector<Candidate> best(k);
      tree.query(i, k, best.data());
      store_row(g, i, best.data());
    });
  } else {
    brute_force(points, g);
  }
  return g;
}

double knn_recall(const NeighborGraph& approx, const NeighborGraph& exact) {
  if (approx.n() != exact.n() || approx.k() != exact.k()) {
    throw Error(ErrorKind::shape_mismatch,
                "recall needs graphs of equal shape: " +
                    std::to_string(approx.n()) + "x" +
                    std::to_string(approx.k()) + " vs " +
                    std::to_string(exact.n()) + "x" + std::to_string(exact.k()));
  }
  if (approx.space_id != exact.space_id) {
    throw Error(ErrorKind::invalid_argument,
                "recall across different spaces: '" + approx.space_id +
                    "' vs '" + exact.space_id + "'");
  }
  if (approx.n() == 0) return 1.0;
  const std::uint32_t k = approx.k();
  double total = 0.0;
  std::vector<std::uint32_t> a(k), b(k);
  for (std::size_t i = 0; i < approx.n(); ++i) {
    auto ra = approx.indices.row(i);
    auto rb = exact.indices.row(i);
    std::copy(ra.begin(), ra.end(), a.begin());
    std::copy(rb.begin(), rb.end(), b.begin());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t hits = 0;
    for (std::size_t x = 0, y = 0; x < k && y < k;) {
      if (a[x] == b[y]) {
        ++hits, ++x, ++y;
      } else if (a[x] < b[y]) {
        ++x;
      } else {
        ++y;
      }
    }
    total += static_cast<double>(hits) / k;
  }
  return total / static_cast<double>(approx.n());
}

void check_graph(const NeighborGraph& g) {
  const std::size_t n = g.n();
  const std::uint32_t k = g.k();
  if (g.distances.rows() != n || g.distances.cols() != k) {
    throw Error(ErrorKind::corrupt, "graph '" + g.space_id +
                                        "': indices and distances differ in shape");
  }
  if (k == 0 || k + 1 > n) {
    throw Error(ErrorKind::corrupt, "graph '" + g.space_id + "': k=" +
                                        std::to_string(k) + " invalid for n=" +
                                        std::to_string(n));
  }
  std::vector<std::uint32_t> seen;
  for (std::size_t i = 0; i < n; ++i) {
    seen.assign(g.indices.row(i).begin(), g.indices.row(i).end());
    for (std::uint32_t j = 0; j < k; ++j) {
      const auto id = g.indices(i, j);
      const float dist = g.distances(i, j);
      if (id >= n || id == i) {
        throw Error(ErrorKind::corrupt, "graph '" + g.space_id + "': row " +
                                            std::to_string(i) +
                                            " has invalid neighbor " +
                                            std::to_string(id));
      }
      if (!(dist >= 0.0f) || !std::isfinite(dist) ||
          (j > 0 && dist < g.distances(i, j - 1))) {
        throw Error(ErrorKind::corrupt, "graph '" + g.space_id + "': row " +
                                            std::to_string(i) +
                                            " is not distance-sorted");
      }
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
      throw Error(ErrorKind::corrupt, "graph '" + g.space_id + "': row " +
                                          std::to_string(i) +
                                          " repeats a neighbor");
    }
  }
}

}  // namespace embedq
