#pragma once

// Brute-force reference implementations used to check the engine.
// Points are integer-valued, so squared distances are exact int64 values and
// the orderings seen here are the orderings the float engine must reproduce.
// Nothing in this file calls into the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

using Points = std::vector<std::vector<long long>>;
using Lists = std::vector<std::vector<std::uint32_t>>;

inline long long sqdist(const Points& p, std::size_t a, std::size_t b) {
  long long s = 0;
  for (std::size_t c = 0; c < p[a].size(); ++c) {
    const long long diff = p[a][c] - p[b][c];
    s += diff * diff;
  }
  return s;
}

/// Full sort of every other point by (squared distance, index).
inline Lists knn(const Points& p, std::size_t k) {
  Lists out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::vector<std::pair<long long, std::uint32_t>> all;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (j != i) all.emplace_back(sqdist(p, i, j), static_cast<std::uint32_t>(j));
    }
    std::sort(all.begin(), all.end());
    for (std::size_t t = 0; t < k; ++t) out[i].push_back(all[t].second);
  }
  return out;
}

inline std::size_t intersection_size(const std::vector<std::uint32_t>& a,
                                     const std::vector<std::uint32_t>& b) {
  std::set<std::uint32_t> sa(a.begin(), a.end());
  std::size_t c = 0;
  for (auto x : b) c += sa.count(x);
  return c;
}

inline std::vector<double> preservation(const Lists& hd, const Lists& ld, std::size_t k) {
  std::vector<double> v(hd.size());
  for (std::size_t i = 0; i < hd.size(); ++i) {
    std::vector<std::uint32_t> a(hd[i].begin(), hd[i].begin() + k);
    std::vector<std::uint32_t> b(ld[i].begin(), ld[i].begin() + k);
    v[i] = static_cast<double>(intersection_size(a, b)) / static_cast<double>(k);
  }
  return v;
}

inline int sign(long long x) { return (x > 0) - (x < 0); }

using Dist = std::vector<std::vector<long long>>;

/// All pairwise squared distances.
inline Dist all_sqdist(const Points& p) {
  Dist m(p.size(), std::vector<long long>(p.size()));
  for (std::size_t a = 0; a < p.size(); ++a) {
    for (std::size_t b = 0; b < p.size(); ++b) m[a][b] = sqdist(p, a, b);
  }
  return m;
}

/// From squared-distance matrices. Every unordered pair (j, l) per point; ties in either space are dropped.
inline std::vector<double> triplets_sq(const Dist& hd, const Dist& ld) {
  const std::size_t n = hd.size();
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    long long agree = 0, counted = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      for (std::size_t l = j + 1; l < n; ++l) {
        if (l == i) continue;
        const int sh = sign(hd[i][j] - hd[i][l]);
        const int sl = sign(ld[i][j] - ld[i][l]);
        if (sh == 0 || sl == 0) continue;
        ++counted;
        agree += sh == sl;
      }
    }
    v[i] = counted == 0 ? 0.5 : static_cast<double>(agree) / static_cast<double>(counted);
  }
  return v;
}

inline std::vector<double> triplets(const Points& hd, const Points& ld) {
  return triplets_sq(all_sqdist(hd), all_sqdist(ld));
}

/// Average ranks by counting: 1 + #smaller + (#equal - 1) / 2.
template <typename T>
std::vector<double> ranks(const std::vector<T>& x) {
  std::vector<double> r(x.size());
  for (std::size_t a = 0; a < x.size(); ++a) {
    std::size_t less = 0, equal = 0;
    for (const auto& y : x) {
      less += y < x[a];
      equal += y == x[a];
    }
    r[a] = 1.0 + static_cast<double>(less) + (static_cast<double>(equal) - 1.0) / 2.0;
  }
  return r;
}

template <typename T>
double spearman(const std::vector<T>& x, const std::vector<T>& y) {
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double m = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / m;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / m;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t a = 0; a < rx.size(); ++a) {
    sxy += (rx[a] - mx) * (ry[a] - my);
    sxx += (rx[a] - mx) * (rx[a] - mx);
    syy += (ry[a] - my) * (ry[a] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

/// From squared-distance matrices, against every other point.
inline std::vector<double> rank_correlation_sq(const Dist& hd, const Dist& ld) {
  const std::size_t n = hd.size();
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<long long> x, y;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      x.push_back(hd[i][j]);
      y.push_back(ld[i][j]);
    }
    v[i] = spearman(x, y);
  }
  return v;
}

inline std::vector<double> rank_correlation(const Points& hd, const Points& ld) {
  return rank_correlation_sq(all_sqdist(hd), all_sqdist(ld));
}

inline double jaccard(const std::vector<std::uint32_t>& a,
                      const std::vector<std::uint32_t>& b) {
  std::set<std::uint32_t> u(a.begin(), a.end());
  u.insert(b.begin(), b.end());
  return static_cast<double>(intersection_size(a, b)) / static_cast<double>(u.size());
}

inline std::vector<double> stability(const std::vector<Lists>& graphs, std::size_t k) {
  const std::size_t n = graphs.front().size();
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < graphs.size(); ++a) {
      for (std::size_t b = a + 1; b < graphs.size(); ++b) {
        std::vector<std::uint32_t> x(graphs[a][i].begin(), graphs[a][i].begin() + k);
        std::vector<std::uint32_t> y(graphs[b][i].begin(), graphs[b][i].begin() + k);
        sum += jaccard(x, y);
        ++pairs;
      }
    }
    v[i] = sum / static_cast<double>(pairs);
  }
  return v;
}

inline Points random_points(std::mt19937_64& gen, std::size_t n, std::size_t d,
                            long long lo, long long hi) {
  std::uniform_int_distribution<long long> coord(lo, hi);
  Points p(n, std::vector<long long>(d));
  for (auto& row : p) {
    for (auto& c : row) c = coord(gen);
  }
  return p;
}

/// Rotation by an angle with rational sine and cosine, optional reflection,
/// positive integer scale, integer translation. Integer in, integer out, so
/// every distance stays exact.
struct RigidMotion {
  long long a, b, c;  // cos = a/c, sin = b/c
  bool reflect;
  long long scale;
  long long tx, ty;
};

inline RigidMotion random_motion(std::mt19937_64& gen) {
  static constexpr long long triples[][3] = {
      {3, 4, 5}, {5, 12, 13}, {8, 15, 17}, {7, 24, 25}, {20, 21, 29}};
  std::uniform_int_distribution<int> pick(0, 4), flip(0, 1), sgn(0, 3);
  std::uniform_int_distribution<long long> scale(1, 2), shift(-1000, 1000);
  const auto& t = triples[pick(gen)];
  long long a = t[0], b = t[1];
  const int s = sgn(gen);
  if (s & 1) a = -a;
  if (s & 2) b = -b;
  return {a, b, t[2], flip(gen) == 1, scale(gen), shift(gen), shift(gen)};
}

/// Applies the motion; coordinates are multiplied by scale * c overall.
inline Points apply(const RigidMotion& m, const Points& p) {
  Points out = p;
  for (auto& row : out) {
    const long long x = row[0];
    const long long y = m.reflect ? -row[1] : row[1];
    row[0] = m.scale * (m.a * x - m.b * y) + m.tx;
    row[1] = m.scale * (m.b * x + m.a * y) + m.ty;
  }
  return out;
}

}  // namespace oracle
