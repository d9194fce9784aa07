#include "embedq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "embedq/distance.hpp"
#include "embedq/error.hpp"
#include "embedq/parallel.hpp"
#include "embedq/rng.hpp"

namespace embedq {

using nlohmann::json;

namespace {

MetricColumn make_column(MetricKind kind, json params, std::size_t n) {
  MetricColumn c;
  c.metric = kind;
  c.params = std::move(params);
  c.values.assign(n, 0.0f);
  return c;
}

std::size_t sorted_intersection(std::vector<std::uint32_t>& a,
                                std::vector<std::uint32_t>& b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t hits = 0;
  for (std::size_t x = 0, y = 0; x < a.size() && y < b.size();) {
    if (a[x] == b[y]) {
      ++hits, ++x, ++y;
    } else if (a[x] < b[y]) {
      ++x;
    } else {
      ++y;
    }
  }
  return hits;
}

void require_same_rows(const MatrixF& hd, const MatrixF& ld) {
  if (hd.rows() != ld.rows()) {
    throw Error(ErrorKind::shape_mismatch,
                "point count mismatch: " + std::to_string(hd.rows()) + " HD vs " +
                    std::to_string(ld.rows()) + " LD");
  }
}

inline int sign(float v) { return (v > 0.0f) - (v < 0.0f); }

// Maps r in [0, n-2) onto [0, n) \ {a, b} for a < b.
inline std::uint32_t skip_two(std::uint32_t r, std::uint32_t a, std::uint32_t b) {
  if (r >= a) ++r;
  if (r >= b) ++r;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------

std::uint64_t exhaustive_triplet_count(std::size_t n) {
  if (n < 3) return 0;
  return static_cast<std::uint64_t>(n - 1) * (n - 2) / 2;
}

AnchorSet AnchorSet::all(std::size_t n) {
  AnchorSet s;
  s.all_points = true;
  s.indices.resize(n);
  std::iota(s.indices.begin(), s.indices.end(), 0u);
  return s;
}

AnchorSet AnchorSet::sample(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m > n) {
    throw Error(ErrorKind::invalid_argument,
                "cannot draw " + std::to_string(m) + " anchors from " +
                    std::to_string(n) + " points");
  }
  AnchorSet s;
  s.seed = seed;
  CounterRng rng(seed, RngTag::anchors, 0);
  std::unordered_set<std::uint32_t> chosen;
  const auto total = static_cast<std::uint32_t>(n);
  for (auto j = static_cast<std::uint32_t>(n - m); j < total; ++j) {
    const std::uint32_t t = rng.below(j + 1);
    chosen.insert(chosen.count(t) ? j : t);
  }
  s.indices.assign(chosen.begin(), chosen.end());
  std::sort(s.indices.begin(), s.indices.end());
  return s;
}

AnchorSet AnchorSet::default_for(std::size_t n, std::uint64_t seed) {
  if (n <= kDefaultAnchorCount) return all(n);
  return sample(n, kDefaultAnchorCount, seed);
}

// ---------------------------------------------------------------------------

MetricColumn neighborhood_preservation(const NeighborGraph& hd_graph,
                                       const NeighborGraph& ld_graph,
                                       std::uint32_t k) {
  if (hd_graph.n() != ld_graph.n()) {
    throw Error(ErrorKind::shape_mismatch, "graphs cover different point counts");
  }
  if (k == 0 || k > hd_graph.k() || k > ld_graph.k()) {
    throw Error(ErrorKind::invalid_argument,
                "k=" + std::to_string(k) + " exceeds stored k (hd " +
                    std::to_string(hd_graph.k()) + ", ld " +
                    std::to_string(ld_graph.k()) + ")");
  }
  const std::size_t n = hd_graph.n();
  MetricColumn col = make_column(
      MetricKind::neighborhood_preservation,
      {{"k", k},
       {"hd_exactness", std::string(to_string(hd_graph.exactness))},
       {"ld_exactness", std::string(to_string(ld_graph.exactness))}},
      n);
  parallel_for(n, [&](std::size_t i) {
    auto h = hd_graph.first_k(i, k);
    auto l = ld_graph.first_k(i, k);
    std::vector<std::uint32_t> a(h.begin(), h.end()), b(l.begin(), l.end());
    col.values[i] = static_cast<float>(
        static_cast<double>(sorted_intersection(a, b)) / k);
  });
  assign_display_range(col);
  return col;
}

// ---------------------------------------------------------------------------

std::vector<MetricColumn> triplet_accuracy(
    const MatrixF& hd, std::span<const MatrixF* const> lds,
    const TripletSampler& sampler) {
  const std::size_t n = hd.rows();
  if (n < 3) {
    throw Error(ErrorKind::invalid_argument,
                "triplet accuracy needs at least 3 points, got " +
                    std::to_string(n));
  }
  for (const MatrixF* ld : lds) require_same_rows(hd, *ld);
  const bool exhaustive = sampler.mode == TripletMode::exhaustive;
  if (exhaustive && exhaustive_triplet_count(n) > kMaxExhaustiveTriplets) {
    throw Error(ErrorKind::invalid_argument,
                "exhaustive triplets need (n-1)(n-2)/2 <= 1e6 per point; n=" +
                    std::to_string(n));
  }
  if (!exhaustive && sampler.triplets_per_point == 0) {
    throw Error(ErrorKind::invalid_argument, "triplets_per_point must be positive");
  }
  json params = {{"mode", exhaustive ? "exhaustive" : "sampled"}};
  if (!exhaustive) {
    params["seed"] = sampler.seed;
    params["triplets_per_point"] = sampler.triplets_per_point;
  }
  std::vector<MetricColumn> cols;
  for (std::size_t e = 0; e < lds.size(); ++e) {
    cols.push_back(make_column(MetricKind::triplet_accuracy, params, n));
  }
  const std::size_t d = hd.cols();
  const std::size_t m = lds.size();

  parallel_for(n, [&](std::size_t i) {
    std::vector<std::uint64_t> agree(m, 0), counted(m, 0);
    auto visit = [&](std::uint32_t j, std::uint32_t l, float hj, float hl) {
      const int hs = sign(hj - hl);
      if (hs == 0) return;
      for (std::size_t e = 0; e < m; ++e) {
        const MatrixF& ld = *lds[e];
        const int ls = sign(squared_distance(ld.row(i), ld.row(j)) -
                            squared_distance(ld.row(i), ld.row(l)));
        if (ls == 0) continue;
        ++counted[e];
        agree[e] += (hs == ls);
      }
    };
    const float* pi = hd.row(i).data();
    if (exhaustive) {
      std::vector<float> hsq(n);
      for (std::size_t j = 0; j < n; ++j) {
        hsq[j] = squared_distance(pi, hd.row(j).data(), d);
      }
      for (std::uint32_t j = 0; j < n; ++j) {
        if (j == i) continue;
        for (std::uint32_t l = j + 1; l < n; ++l) {
          if (l == i) continue;
          visit(j, l, hsq[j], hsq[l]);
        }
      }
    } else {
      CounterRng rng(sampler.seed, RngTag::triplets, i);
      const auto self = static_cast<std::uint32_t>(i);
      const auto others = static_cast<std::uint32_t>(n - 1);
      for (std::uint32_t t = 0; t < sampler.triplets_per_point; ++t) {
        std::uint32_t j = rng.below(others);
        if (j >= self) ++j;
        const std::uint32_t l = skip_two(rng.below(others - 1),
                                         std::min(self, j), std::max(self, j));
        visit(j, l, squared_distance(pi, hd.row(j).data(), d),
              squared_distance(pi, hd.row(l).data(), d));
      }
    }
    for (std::size_t e = 0; e < m; ++e) {
      cols[e].values[i] =
          counted[e] == 0
              ? 0.5f
              : static_cast<float>(static_cast<double>(agree[e]) /
                                   static_cast<double>(counted[e]));
    }
  }, exhaustive ? 1 : 64);

  for (auto& c : cols) assign_display_range(c);
  return cols;
}

MetricColumn triplet_accuracy(const MatrixF& hd_points, const MatrixF& ld_coords,
                              const TripletSampler& sampler) {
  const MatrixF* one[] = {&ld_coords};
  return std::move(triplet_accuracy(hd_points, one, sampler).front());
}

// ---------------------------------------------------------------------------

std::vector<double> average_ranks(std::span<const float> values) {
  const std::size_t m = values.size();
  std::vector<std::uint32_t> order(m);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return values[a] < values[b] || (values[a] == values[b] && a < b);
  });
  std::vector<double> ranks(m);
  for (std::size_t s = 0; s < m;) {
    std::size_t e = s + 1;
    while (e < m && values[order[e]] == values[order[s]]) ++e;
    // Positions s..e-1 (0-based) -> mean 1-based rank (s+1 + e) / 2.
    const double r = 0.5 * static_cast<double>(s + 1 + e);
    for (std::size_t t = s; t < e; ++t) ranks[order[t]] = r;
    s = e;
  }
  return ranks;
}

namespace {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    mx += x[t];
    my += y[t];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    const double dx = x[t] - mx;
    const double dy = y[t] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

double spearman_rho(std::span<const float> x, std::span<const float> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::shape_mismatch,
                "spearman_rho: lengths differ (" + std::to_string(x.size()) +
                    " vs " + std::to_string(y.size()) + ")");
  }
  if (x.size() < 3) {
    throw Error(ErrorKind::invalid_argument, "spearman_rho needs at least 3 values");
  }
  return pearson(average_ranks(x), average_ranks(y));
}

std::vector<MetricColumn> distance_rank_correlation(
    const MatrixF& hd, std::span<const MatrixF* const> lds,
    const AnchorSet& anchors) {
  const std::size_t n = hd.rows();
  for (const MatrixF* ld : lds) require_same_rows(hd, *ld);
  {
    std::vector<std::uint32_t> sorted = anchors.indices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw Error(ErrorKind::invalid_argument, "anchor set has duplicates");
    }
    if (!sorted.empty() && sorted.back() >= n) {
      throw Error(ErrorKind::invalid_argument, "anchor index out of range");
    }
    // Anchors are points themselves, and each loses itself as a reference.
    const std::size_t usable = sorted.empty() ? 0 : sorted.size() - 1;
    if (usable < 3) {
      throw Error(ErrorKind::invalid_argument,
                  "rank correlation needs at least 3 usable anchors per point, "
                  "anchor set gives " + std::to_string(usable));
    }
  }
  json params = {{"anchors", anchors.indices.size()}};
  if (!anchors.all_points) params["seed"] = anchors.seed;
  std::vector<MetricColumn> cols;
  for (std::size_t e = 0; e < lds.size(); ++e) {
    cols.push_back(make_column(MetricKind::distance_rank_correlation, params, n));
  }
  const std::size_t d = hd.cols();
  parallel_for(n, [&](std::size_t i) {
    std::vector<float> hsq;
    std::vector<float> lsq;
    hsq.reserve(anchors.indices.size());
    lsq.reserve(anchors.indices.size());
    for (std::uint32_t a : anchors.indices) {
      if (a == i) continue;
      hsq.push_back(squared_distance(hd.row(i).data(), hd.row(a).data(), d));
    }
    const std::vector<double> hrank = average_ranks(hsq);
    for (std::size_t e = 0; e < lds.size(); ++e) {
      const MatrixF& ld = *lds[e];
      lsq.clear();
      for (std::uint32_t a : anchors.indices) {
        if (a == i) continue;
        lsq.push_back(squared_distance(ld.row(i), ld.row(a)));
      }
      cols[e].values[i] = static_cast<float>(pearson(hrank, average_ranks(lsq)));
    }
  }, 16);
  for (auto& c : cols) assign_display_range(c);
  return cols;
}

MetricColumn distance_rank_correlation(const MatrixF& hd_points,
                                       const MatrixF& ld_coords,
                                       const AnchorSet& anchors) {
  const MatrixF* one[] = {&ld_coords};
  return std::move(distance_rank_correlation(hd_points, one, anchors).front());
}

// ---------------------------------------------------------------------------

MetricColumn point_stability(std::span<const NeighborGraph* const> graphs,
                             std::uint32_t k) {
  if (graphs.size() < 2) {
    throw Error(ErrorKind::invalid_argument,
                "point stability needs at least 2 embeddings, got " +
                    std::to_string(graphs.size()));
  }
  const std::size_t n = graphs.front()->n();
  for (const NeighborGraph* g : graphs) {
    if (g->n() != n) {
      throw Error(ErrorKind::shape_mismatch, "embedding graphs differ in point count");
    }
    if (k == 0 || k > g->k()) {
      throw Error(ErrorKind::invalid_argument,
                  "k=" + std::to_string(k) + " exceeds stored k " +
                      std::to_string(g->k()) + " of graph '" + g->space_id + "'");
    }
  }
  MetricColumn col = make_column(
      MetricKind::point_stability, {{"k", k}, {"embeddings", graphs.size()}}, n);
  const std::size_t m = graphs.size();
  const double pairs = static_cast<double>(m * (m - 1) / 2);
  parallel_for(n, [&](std::size_t i) {
    std::vector<std::vector<std::uint32_t>> sets(m);
    for (std::size_t e = 0; e < m; ++e) {
      auto row = graphs[e]->first_k(i, k);
      sets[e].assign(row.begin(), row.end());
      std::sort(sets[e].begin(), sets[e].end());
    }
    double sum = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) {
        const std::size_t inter = sorted_intersection(sets[a], sets[b]);
        sum += static_cast<double>(inter) / static_cast<double>(2 * k - inter);
      }
    }
    col.values[i] = static_cast<float>(sum / pairs);
  });
  assign_display_range(col);
  return col;
}

// ---------------------------------------------------------------------------

std::vector<float> hd_distances_to_point(const MatrixF& hd, std::size_t anchor) {
  if (anchor >= hd.rows()) {
    throw Error(ErrorKind::invalid_argument,
                "anchor " + std::to_string(anchor) + " out of range for n=" +
                    std::to_string(hd.rows()));
  }
  std::vector<float> out(hd.rows());
  const auto a = hd.row(anchor);
  parallel_for(hd.rows(), [&](std::size_t j) {
    out[j] = euclidean_distance(a, hd.row(j));
  }, 1024);
  return out;
}

std::vector<std::uint32_t> hd_neighbor_union(
    std::span<const std::uint32_t> selection, const NeighborGraph& g,
    std::uint32_t k) {
  if (selection.empty()) {
    throw Error(ErrorKind::invalid_argument, "selection is empty");
  }
  if (k == 0 || k > g.k()) {
    throw Error(ErrorKind::invalid_argument,
                "k=" + std::to_string(k) + " outside [1, " +
                    std::to_string(g.k()) + "]");
  }
  std::vector<std::uint32_t> selected(selection.begin(), selection.end());
  std::sort(selected.begin(), selected.end());
  selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
  if (selected.back() >= g.n()) {
    throw Error(ErrorKind::invalid_argument,
                "point index " + std::to_string(selected.back()) +
                    " out of range for n=" + std::to_string(g.n()));
  }
  std::vector<std::uint32_t> out;
  out.reserve(selected.size() * k);
  for (std::uint32_t i : selected) {
    auto row = g.first_k(i, k);
    out.insert(out.end(), row.begin(), row.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  std::vector<std::uint32_t> result;
  std::set_difference(out.begin(), out.end(), selected.begin(), selected.end(),
                      std::back_inserter(result));
  return result;
}

}  // namespace embedq
