// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass criterion names as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "embedq/knn.hpp"
#include "embedq/metrics.hpp"
#include "embedq/parallel.hpp"
#include "embedq/pipeline.hpp"
#include "embedq/synthetic.hpp"
#include "oracle.hpp"
#include "service_contract.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace embedq;
using testing_support::only_column;
using testing_support::TempDir;
using testing_support::to_lists;
using testing_support::to_matrix;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few mismatches so a failure line says what went wrong.
class Mismatches {
 public:
  void add(const std::string& what) {
    if (count_++ < 5) notes_ << (count_ > 1 ? "; " : "") << what;
  }
  bool empty() const { return count_ == 0; }
  std::string summary() const {
    return std::to_string(count_) + " mismatches: " + notes_.str();
  }

 private:
  std::size_t count_ = 0;
  std::ostringstream notes_;
};

PrecomputeConfig exhaustive_config(std::uint32_t k, std::size_t n) {
  PrecomputeConfig c;
  c.k_list = {k};
  c.seed = 42;
  c.triplets_per_point = static_cast<std::uint32_t>(kMaxExhaustiveTriplets);
  c.anchor_count = n;
  c.stability_k = k;
  return c;
}

// Every column of a computed bundle, keyed by embedding and column key.
std::map<std::string, const MetricColumn*> all_columns(const DatasetBundle& b) {
  std::map<std::string, const MetricColumn*> out;
  for (const auto& e : b.embeddings) {
    for (const auto& [key, col] : e.metrics) out[e.name + "/" + key] = &col;
  }
  for (const auto& [key, col] : b.bundle_metrics) out["_bundle/" + key] = &col;
  return out;
}

// ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(20240501);
  Mismatches bad;
  double worst_rank = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(20, 300)(gen);
    const std::size_t d = std::uniform_int_distribution<std::size_t>(2, 20)(gen);
    const std::uint32_t k = std::array<std::uint32_t, 3>{1, 5, 10}[gen() % 3];
    const auto hd = oracle::random_points(gen, n, d, -50, 50);
    // A faithful-ish view, an unrelated layout, and a jittered copy.
    oracle::Points first_two(n, std::vector<long long>(2));
    for (std::size_t i = 0; i < n; ++i) first_two[i] = {hd[i][0], hd[i][1]};
    const auto unrelated = oracle::random_points(gen, n, 2, -20, 20);
    oracle::Points jitter = first_two;
    for (auto& row : jitter) {
      for (auto& c : row) c += static_cast<long long>(gen() % 7) - 3;
    }
    const std::vector<oracle::Points> lds = {first_two, unrelated, jitter};

    DatasetBundle b = testing_support::make_bundle(hd, lds);
    compute_in_memory(b, exhaustive_config(k, n));

    const auto tag = [&](const std::string& what) {
      return "instance " + std::to_string(inst) + " (n=" + std::to_string(n) +
             ", k=" + std::to_string(k) + ") " + what;
    };
    const oracle::Dist hd_dist = oracle::all_sqdist(hd);
    const oracle::Lists hd_knn = oracle::knn(hd, k);
    if (to_lists(b.hd_neighbors.at(k).indices) != hd_knn) bad.add(tag("hd graph"));
    std::vector<oracle::Lists> ld_knn;
    for (std::size_t e = 0; e < lds.size(); ++e) {
      const Embedding& emb = b.embeddings[e];
      ld_knn.push_back(oracle::knn(lds[e], k));
      const auto pres = oracle::preservation(hd_knn, ld_knn.back(), k);
      const auto& pc = only_column(emb.metrics, MetricKind::neighborhood_preservation);
      const auto trip = oracle::triplets_sq(hd_dist, oracle::all_sqdist(lds[e]));
      const auto& tc = only_column(emb.metrics, MetricKind::triplet_accuracy);
      const auto rank = oracle::rank_correlation_sq(hd_dist, oracle::all_sqdist(lds[e]));
      const auto& rc = only_column(emb.metrics, MetricKind::distance_rank_correlation);
      if (tc.params["mode"] != "exhaustive") bad.add(tag("triplets not exhaustive"));
      if (rc.params["anchors"] != n) bad.add(tag("anchors are not all points"));
      for (std::size_t i = 0; i < n; ++i) {
        if (pc.values[i] != static_cast<float>(pres[i])) {
          bad.add(tag(emb.name + " preservation at " + std::to_string(i)));
        }
        if (tc.values[i] != static_cast<float>(trip[i])) {
          bad.add(tag(emb.name + " triplets at " + std::to_string(i)));
        }
        const double diff = std::abs(static_cast<double>(rc.values[i]) - rank[i]);
        worst_rank = std::max(worst_rank, diff);
        if (!(diff <= 1e-6)) bad.add(tag(emb.name + " rank at " + std::to_string(i)));
      }
    }
    const auto stab = oracle::stability(ld_knn, k);
    const auto& sc = only_column(b.bundle_metrics, MetricKind::point_stability);
    for (std::size_t i = 0; i < n; ++i) {
      if (sc.values[i] != static_cast<float>(stab[i])) {
        bad.add(tag("stability at " + std::to_string(i)));
      }
    }
  }
  const double elapsed = seconds_since(t0);
  Outcome o;
  o.pass = bad.empty() && elapsed < 120.0;
  std::ostringstream s;
  s << "50 instances, max |rank diff| " << worst_rank << ", " << elapsed << " s (limit 120)";
  if (!bad.empty()) s << "; " << bad.summary();
  o.detail = s.str();
  return o;
}

Outcome hand_check() {
  DatasetBundle b = make_line4_bundle();
  PrecomputeConfig config = exhaustive_config(1, 4);
  compute_in_memory(b, config);
  const Embedding* warped = b.find_embedding("line_warped");
  const auto& pres = only_column(warped->metrics, MetricKind::neighborhood_preservation);
  const auto& trip = only_column(warped->metrics, MetricKind::triplet_accuracy);

  // The oracle has to agree with the hand-derived numbers first.
  const oracle::Points hd = {{0}, {1}, {2}, {10}};
  const oracle::Points ld = {{0, 0}, {10, 0}, {1, 0}, {2, 0}};
  const std::vector<double> want_pres = {0, 0, 0, 1};
  const std::vector<double> want_trip = {1.0 / 3, 0, 0, 2.0 / 3};
  const bool oracle_ok =
      oracle::preservation(oracle::knn(hd, 1), oracle::knn(ld, 1), 1) == want_pres &&
      oracle::triplets(hd, ld) == want_trip;

  std::vector<float> pres_f(want_pres.begin(), want_pres.end());
  std::vector<float> trip_f;
  for (double v : want_trip) trip_f.push_back(static_cast<float>(v));
  Outcome o;
  o.pass = oracle_ok && pres.values == pres_f && trip.values == trip_f;
  std::ostringstream s;
  s << "preservation(k=1) = [";
  for (float v : pres.values) s << v << " ";
  s << "], triplets = [";
  for (float v : trip.values) s << v << " ";
  s << "], oracle " << (oracle_ok ? "agrees" : "DISAGREES");
  o.detail = s.str();
  return o;
}

Outcome rigid_motion() {
  std::mt19937_64 gen(777);
  Mismatches bad;
  std::size_t compared = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(20, 300)(gen);
    const std::size_t d = std::uniform_int_distribution<std::size_t>(2, 20)(gen);
    const std::uint32_t k = std::array<std::uint32_t, 3>{1, 5, 10}[gen() % 3];
    const auto hd = oracle::random_points(gen, n, d, -50, 50);
    const auto a = oracle::random_points(gen, n, 2, -20, 20);
    oracle::Points bpts(n, std::vector<long long>(2));
    for (std::size_t i = 0; i < n; ++i) {
      bpts[i] = {std::clamp<long long>(hd[i][0], -20, 20),
                 std::clamp<long long>(hd[i][1], -20, 20)};
    }
    DatasetBundle base = testing_support::make_bundle(hd, {a, bpts});
    DatasetBundle moved = testing_support::make_bundle(
        hd, {oracle::apply(oracle::random_motion(gen), a),
             oracle::apply(oracle::random_motion(gen), bpts)});
    compute_in_memory(base, exhaustive_config(k, n));
    compute_in_memory(moved, exhaustive_config(k, n));
    const auto before = all_columns(base);
    const auto after = all_columns(moved);
    if (before.size() != 7 || after.size() != before.size()) {
      bad.add("instance " + std::to_string(inst) + ": column sets differ");
      continue;
    }
    for (const auto& [key, col] : before) {
      const auto it = after.find(key);
      const auto& v = col->values;
      if (it == after.end() || it->second->values.size() != v.size() ||
          std::memcmp(v.data(), it->second->values.data(), v.size() * sizeof(float)) != 0) {
        bad.add("instance " + std::to_string(inst) + ": " + key);
      }
      ++compared;
    }
  }
  Outcome o;
  o.pass = bad.empty();
  o.detail = "20 instances, " + std::to_string(compared) + " columns compared bitwise" +
             (bad.empty() ? "" : "; " + bad.summary());
  return o;
}

Outcome ann_quality() {
  const auto mix = make_gaussian_mixture(20000, 50, 8, 42);
  const auto t0 = Clock::now();
  const NeighborGraph approx = build_approx_knn(mix.points, 50, 0.95, 42, "hd");
  const double elapsed = seconds_since(t0);
  const NeighborGraph exact = build_exact_knn(mix.points, 50, "hd");
  const double recall = knn_recall(approx, exact);
  bool valid = approx.exactness == Exactness::approximate;
  try {
    check_graph(approx);
  } catch (const std::exception&) {
    valid = false;
  }
  Outcome o;
  o.pass = valid && recall >= 0.95 && elapsed < 120.0;
  std::ostringstream s;
  s << "n=20000 d=50 k=50 recall " << recall << " (need >= 0.95), build " << elapsed
    << " s on " << std::thread::hardware_concurrency() << " core(s) (limit 120)";
  if (!valid) s << "; graph invariants violated";
  o.detail = s.str();
  return o;
}

Outcome sampling_fidelity() {
  const DatasetBundle demo = make_demo_bundle(200, 20, 8, 42);
  TripletSampler full;
  full.mode = TripletMode::exhaustive;
  TripletSampler s500;
  s500.triplets_per_point = 500;
  TripletSampler s2000;
  s2000.triplets_per_point = 2000;
  bool pass = true;
  std::ostringstream s;
  for (const auto& e : demo.embeddings) {
    const auto ref = triplet_accuracy(demo.hd_points, e.coords, full).values;
    const auto a = triplet_accuracy(demo.hd_points, e.coords, s500).values;
    const auto b = triplet_accuracy(demo.hd_points, e.coords, s2000).values;
    std::size_t in500 = 0, in2000 = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
      in500 += std::abs(a[i] - ref[i]) <= 0.08f;
      in2000 += std::abs(b[i] - ref[i]) <= 0.05f;
    }
    const double f500 = static_cast<double>(in500) / ref.size();
    const double f2000 = static_cast<double>(in2000) / ref.size();
    pass = pass && f500 >= 0.95 && f2000 >= 0.95;
    s << e.name << ": " << 100 * f500 << "% within 0.08 at 500/pt, " << 100 * f2000
      << "% within 0.05 at 2000/pt; ";
  }
  return {pass, s.str() + "need >= 95%"};
}

Outcome determinism() {
  TempDir a("det"), b("det");
  const DatasetBundle demo = make_demo_bundle(5000, 20, 8, 42);
  write_bundle(a.path(), demo, 42);
  write_bundle(b.path(), demo, 42);
  const auto t0 = Clock::now();
  set_worker_count(1);
  {
    const DatasetBundle loaded = load_bundle(a.path());
    precompute(loaded, PrecomputeConfig::from_manifest(loaded.manifest));
  }
  set_worker_count(8);
  {
    const DatasetBundle loaded = load_bundle(b.path());
    precompute(loaded, PrecomputeConfig::from_manifest(loaded.manifest));
  }
  set_worker_count(0);
  std::size_t files = 0;
  Mismatches bad;
  std::set<std::string> seen;
  for (const auto& entry : fs::recursive_directory_iterator(a.path())) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), a.path()).generic_string();
    seen.insert(rel);
    ++files;
    const fs::path other = b.path() / rel;
    if (!fs::exists(other) || read_file(entry.path()) != read_file(other)) bad.add(rel);
  }
  for (const auto& entry : fs::recursive_directory_iterator(b.path())) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), b.path()).generic_string();
    if (!seen.count(rel)) bad.add("only in second run: " + rel);
  }
  Outcome o;
  o.pass = bad.empty() && files > 20;
  o.detail = "demo n=5000 d=20, workers 1 vs 8: " + std::to_string(files) +
             " files compared, " + std::to_string(seconds_since(t0)) + " s" +
             (bad.empty() ? "" : "; " + bad.summary());
  return o;
}

Outcome scaling() {
  std::vector<double> totals;
  std::ostringstream s;
  for (std::size_t n : {10000u, 20000u, 40000u}) {
    DatasetBundle b = make_bench_bundle(n, 50, 5, 42);
    PrecomputeConfig config;
    config.k_list = {50};
    config.seed = 42;
    const auto t0 = Clock::now();
    compute_in_memory(b, config);
    totals.push_back(seconds_since(t0));
    s << "n=" << n << ": " << totals.back() << " s; ";
  }
  const double r1 = totals[1] / totals[0], r2 = totals[2] / totals[1];
  Outcome o;
  o.pass = r1 <= 3.0 && r2 <= 3.0 && totals[2] < 600.0;
  s << "ratios " << r1 << ", " << r2 << " (limit 3), 40k limit 600 s, "
    << std::thread::hardware_concurrency() << " core(s)";
  o.detail = s.str();
  return o;
}

Outcome service_contract() {
  TempDir dir("contract");
  contract::write_fixtures(dir.path());
  const auto failures = contract::run(dir.path());
  Outcome o;
  o.pass = failures.empty();
  o.detail = failures.empty() ? "all endpoint examples and byte-identity checks hold"
                              : std::to_string(failures.size()) + " failures: " +
                                    failures.front();
  for (const auto& f : failures) std::cerr << "  contract: " << f << "\n";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"oracle_equivalence", oracle_equivalence},
      {"hand_check_line4", hand_check},
      {"rigid_motion_invariance", rigid_motion},
      {"ann_recall", ann_quality},
      {"sampling_fidelity", sampling_fidelity},
      {"determinism", determinism},
      {"scaling", scaling},
      {"service_contract", service_contract},
  };
  std::set<std::string> wanted(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (!wanted.empty() && !wanted.count(name)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
