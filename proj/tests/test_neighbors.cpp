#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "embedq/distance.hpp"
#include "embedq/error.hpp"
#include "embedq/knn.hpp"
#include "embedq/parallel.hpp"
#include "embedq/synthetic.hpp"
#include "support.hpp"

using namespace embedq;
using testing_support::TempDir;
using testing_support::to_lists;
using testing_support::to_matrix;

namespace {

MatrixF line(std::initializer_list<float> xs) {
  return MatrixF(xs.size(), 1, std::vector<float>(xs));
}

NeighborGraph graph_from(std::vector<std::vector<std::uint32_t>> rows,
                         std::string space = "s") {
  NeighborGraph g;
  g.indices = MatrixU32(rows.size(), rows.front().size());
  g.distances = MatrixF(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      g.indices(i, j) = rows[i][j];
      g.distances(i, j) = static_cast<float>(j);
    }
  }
  g.space_id = std::move(space);
  return g;
}

void expect_invariants(const NeighborGraph& g, const MatrixF& points) {
  EXPECT_NO_THROW(check_graph(g));
  for (std::size_t i = 0; i < g.n(); ++i) {
    for (std::uint32_t j = 0; j < g.k(); ++j) {
      const float truth = euclidean_distance(points.row(i), points.row(g.indices(i, j)));
      EXPECT_NEAR(g.distances(i, j), truth, 1e-5 * std::max(1.0f, truth));
    }
  }
}

}  // namespace

TEST(ExactKnn, LineK1BreaksTiesByIndex) {
  const NeighborGraph g = build_exact_knn(line({0, 1, 2, 10}), 1, "hd");
  EXPECT_EQ(to_lists(g.indices), (oracle::Lists{{1}, {0}, {1}, {2}}));
  EXPECT_EQ(g.exactness, Exactness::exact);
  EXPECT_EQ(g.space_id, "hd");
  EXPECT_FLOAT_EQ(g.distances(3, 0), 8.0f);
}

TEST(ExactKnn, LineK3RowOrder) {
  const NeighborGraph g = build_exact_knn(line({0, 1, 2, 10}), 3);
  EXPECT_EQ(to_lists(g.indices),
            (oracle::Lists{{1, 2, 3}, {0, 2, 3}, {1, 0, 3}, {2, 1, 0}}));
}

TEST(ExactKnn, KOutOfRange) {
  const MatrixF p = line({0, 1, 2, 10});
  EXPECT_THROW(build_exact_knn(p, 4), Error);
  EXPECT_THROW(build_exact_knn(p, 0), Error);
  EXPECT_THROW(build_approx_knn(p, 4, 0.95, 1), Error);
}

// Brute force (d > 3) and the k-d tree (d <= 3, n > 256) against a full sort.
TEST(ExactKnn, MatchesFullSortOracle) {
  std::mt19937_64 gen(11);
  struct Case {
    std::size_t n, d, k;
    long long range;
  };
  for (const Case c : {Case{50, 1, 5, 10}, Case{300, 2, 10, 20}, Case{600, 2, 7, 5},
                       Case{700, 3, 12, 100}, Case{400, 8, 9, 3}, Case{200, 20, 15, 50},
                       Case{1000, 2, 30, 1000}}) {
    const oracle::Points p = oracle::random_points(gen, c.n, c.d, -c.range, c.range);
    const NeighborGraph g = build_exact_knn(to_matrix(p), static_cast<std::uint32_t>(c.k));
    EXPECT_EQ(to_lists(g.indices), oracle::knn(p, c.k)) << "n=" << c.n << " d=" << c.d;
    for (std::size_t i = 0; i < c.n; ++i) {
      for (std::size_t j = 0; j < c.k; ++j) {
        const double truth = std::sqrt(static_cast<double>(
            oracle::sqdist(p, i, g.indices(i, j))));
        ASSERT_NEAR(g.distances(i, j), truth, 1e-5 * std::max(1.0, truth));
      }
    }
  }
}

TEST(ExactKnn, RigidMotionKeepsIndices) {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 100 + gen() % 400;
    const oracle::Points p = oracle::random_points(gen, n, 2, -20, 20);
    const auto motion = oracle::random_motion(gen);
    const NeighborGraph a = build_exact_knn(to_matrix(p), 10);
    const NeighborGraph b = build_exact_knn(to_matrix(oracle::apply(motion, p)), 10);
    EXPECT_TRUE(a.indices.bit_equal(b.indices));
    const double factor = static_cast<double>(motion.scale * motion.c);
    for (std::size_t i = 0; i < a.distances.size(); ++i) {
      EXPECT_NEAR(b.distances.data()[i], factor * a.distances.data()[i],
                  1e-5 * factor * std::max(1.0f, a.distances.data()[i]));
    }
  }
}

TEST(ApproxKnn, SmallInputsFallBackToExact) {
  std::mt19937_64 gen(2);
  const MatrixF p = to_matrix(oracle::random_points(gen, 500, 6, -9, 9));
  const NeighborGraph a = build_approx_knn(p, 10, 0.95, 3, "hd");
  EXPECT_EQ(a.exactness, Exactness::exact);
  EXPECT_TRUE(a.indices.bit_equal(build_exact_knn(p, 10).indices));
}

TEST(ApproxKnn, HighRecallAndValidOnMixture) {
  const auto mix = make_gaussian_mixture(5000, 16, 6, 4);
  const NeighborGraph approx = build_approx_knn(mix.points, 15, 0.95, 9, "hd");
  EXPECT_EQ(approx.exactness, Exactness::approximate);
  expect_invariants(approx, mix.points);
  const NeighborGraph exact = build_exact_knn(mix.points, 15, "hd");
  EXPECT_GE(knn_recall(approx, exact), 0.95);
}

TEST(ApproxKnn, DuplicatePointsStayValid) {
  // 2500 points on only 40 distinct locations.
  std::mt19937_64 gen(8);
  oracle::Points p = oracle::random_points(gen, 40, 5, -3, 3);
  while (p.size() < 2500) p.push_back(p[gen() % 40]);
  const MatrixF m = to_matrix(p);
  const NeighborGraph g = build_approx_knn(m, 20, 0.95, 1);
  expect_invariants(g, m);
}

TEST(ApproxKnn, IndependentOfWorkerCount) {
  const auto mix = make_gaussian_mixture(4000, 12, 5, 21);
  set_worker_count(1);
  const NeighborGraph one = build_approx_knn(mix.points, 12, 0.95, 77);
  set_worker_count(4);
  const NeighborGraph four = build_approx_knn(mix.points, 12, 0.95, 77);
  set_worker_count(0);
  EXPECT_TRUE(one.indices.bit_equal(four.indices));
  EXPECT_TRUE(one.distances.bit_equal(four.distances));
  const NeighborGraph again = build_approx_knn(mix.points, 12, 0.95, 77);
  EXPECT_TRUE(one.indices.bit_equal(again.indices));
}

TEST(KnnRecall, Arithmetic) {
  const NeighborGraph g = graph_from({{1, 2}, {0, 2}});
  EXPECT_DOUBLE_EQ(knn_recall(g, g), 1.0);
  EXPECT_DOUBLE_EQ(knn_recall(graph_from({{1, 2}, {0, 3}}), graph_from({{1, 2}, {0, 2}})),
                   0.75);
  EXPECT_DOUBLE_EQ(knn_recall(graph_from({{3, 4}, {3, 4}}), graph_from({{1, 2}, {0, 2}})),
                   0.0);
}

TEST(KnnRecall, Mismatches) {
  EXPECT_THROW(knn_recall(graph_from({{1, 2}, {0, 2}}), graph_from({{1}, {0}})), Error);
  EXPECT_THROW(knn_recall(graph_from({{1}, {0}}), graph_from({{1}, {0}, {0}})), Error);
  EXPECT_THROW(knn_recall(graph_from({{1}, {0}}, "a"), graph_from({{1}, {0}}, "b")), Error);
}

TEST(CheckGraph, RejectsBrokenRows) {
  EXPECT_THROW(check_graph(graph_from({{0}, {0}})), Error);        // self loop
  EXPECT_THROW(check_graph(graph_from({{1, 1}, {0, 2}, {0, 1}})), Error);  // repeat
  NeighborGraph unsorted = graph_from({{1, 2}, {0, 2}, {0, 1}});
  unsorted.distances(0, 0) = 5;
  EXPECT_THROW(check_graph(unsorted), Error);
}

TEST(GraphIo, RoundTrip) {
  TempDir dir("graph");
  const auto mix = make_gaussian_mixture(300, 4, 3, 1);
  NeighborGraph g = build_exact_knn(mix.points, 8, "emb");
  g.seed = 99;
  write_graph(dir.path() / "g", g);
  EXPECT_TRUE(std::filesystem::exists(graph_descriptor_path(dir.path() / "g")));
  const NeighborGraph back = read_graph(dir.path() / "g");
  EXPECT_TRUE(back.indices.bit_equal(g.indices));
  EXPECT_TRUE(back.distances.bit_equal(g.distances));
  EXPECT_EQ(back.space_id, "emb");
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.exactness, Exactness::exact);
  std::filesystem::remove(graph_descriptor_path(dir.path() / "g"));
  EXPECT_THROW(read_graph(dir.path() / "g"), Error);
}

TEST(Distance, KernelIsSymmetric) {
  std::mt19937 gen(3);
  std::normal_distribution<float> z;
  for (std::size_t d : {1u, 7u, 8u, 9u, 50u, 129u}) {
    std::vector<float> a(d), b(d);
    for (auto& v : a) v = z(gen);
    for (auto& v : b) v = z(gen);
    EXPECT_EQ(squared_distance(a, b), squared_distance(b, a));
    EXPECT_EQ(squared_distance(a, a), 0.0f);
  }
}
