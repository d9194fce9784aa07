#include "embedq/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>

#include "embedq/array_io.hpp"
#include "embedq/error.hpp"
#include "embedq/knn.hpp"
#include "embedq/metrics.hpp"

namespace embedq {

namespace fs = std::filesystem;
using nlohmann::json;

PrecomputeConfig PrecomputeConfig::from_manifest(const Manifest& m) {
  PrecomputeConfig c;
  c.k_list = m.k_list;
  c.seed = m.seed;
  return c;
}

std::string_view to_string(CacheState s) {
  switch (s) {
    case CacheState::present: return "present";
    case CacheState::missing: return "missing";
    case CacheState::corrupt: return "corrupt";
  }
  return "unknown";
}

std::size_t StatusReport::count(CacheState s) const {
  return static_cast<std::size_t>(std::count_if(
      columns.begin(), columns.end(),
      [s](const ColumnStatus& c) { return c.state == s; }));
}

// ---------------------------------------------------------------------------
// Planning

namespace {

constexpr const char* kBundleDir = "_bundle";

std::string join(const std::string& dir, const std::string& leaf) {
  return (fs::path(dir) / leaf).generic_string();
}

AnchorSet anchors_for(std::size_t n, const PrecomputeConfig& config) {
  if (config.anchor_count && *config.anchor_count < n) {
    return AnchorSet::sample(n, *config.anchor_count, config.seed);
  }
  if (config.anchor_count) return AnchorSet::all(n);
  return AnchorSet::default_for(n, config.seed);
}

TripletSampler sampler_for(std::size_t n, const PrecomputeConfig& config) {
  TripletSampler s;
  s.seed = config.seed;
  s.triplets_per_point = config.triplets_per_point;
  // Enumerating is cheaper and exact once it needs no more triplets than
  // sampling would draw.
  s.mode = exhaustive_triplet_count(n) <= config.triplets_per_point
               ? TripletMode::exhaustive
               : TripletMode::sampled;
  return s;
}

}  // namespace

ColumnPlan plan_columns(std::size_t n, const std::vector<std::string>& embeddings,
                        const Manifest& layout, const PrecomputeConfig& config) {
  ColumnPlan plan;
  std::set<std::uint32_t> ks(config.k_list.begin(), config.k_list.end());
  for (std::uint32_t k : ks) {
    if (k == 0) {
      plan.warnings.push_back("k=0 skipped: neighborhood size must be positive");
    } else if (k + 1 > n) {
      plan.warnings.push_back("k=" + std::to_string(k) + " skipped: needs at least " +
                              std::to_string(k + 1) + " points, dataset has " +
                              std::to_string(n));
    } else {
      plan.k_list.push_back(k);
    }
  }
  if (plan.k_list.empty()) {
    const auto k = static_cast<std::uint32_t>(n - 1);
    plan.warnings.push_back("no requested k fits; using k=" + std::to_string(k));
    plan.k_list.push_back(k);
  }
  plan.kmax = plan.k_list.back();
  if (embeddings.size() >= 2) {
    plan.stability_k =
        static_cast<std::uint32_t>(std::min<std::size_t>(config.stability_k, n - 1));
  }
  plan.ld_k = std::max(plan.kmax, plan.stability_k);

  const std::string hd_exactness(to_string(
      n <= kExactFallbackMaxN ? Exactness::exact : Exactness::approximate));
  const TripletSampler sampler = sampler_for(n, config);
  const AnchorSet anchors = anchors_for(n, config);
  const bool rank_ok = anchors.indices.size() >= 4;
  if (!rank_ok) {
    plan.warnings.push_back("distance_rank_correlation skipped: needs at least 4 "
                            "anchors so every point keeps 3");
  }
  if (n < 3) {
    plan.warnings.push_back("triplet_accuracy skipped: needs at least 3 points");
  }

  for (const auto& emb : embeddings) {
    const std::string dir = join(layout.metrics_dir, emb);
    for (std::uint32_t k : plan.k_list) {
      plan.columns.push_back({emb, MetricKind::neighborhood_preservation,
                              {{"k", k},
                               {"hd_exactness", hd_exactness},
                               {"ld_exactness", "exact"}},
                              join(dir, "neighborhood_preservation_k" +
                                            std::to_string(k))});
    }
    if (n >= 3) {
      if (sampler.mode == TripletMode::exhaustive) {
        plan.columns.push_back({emb, MetricKind::triplet_accuracy,
                                {{"mode", "exhaustive"}},
                                join(dir, "triplet_accuracy_exhaustive")});
      } else {
        plan.columns.push_back(
            {emb, MetricKind::triplet_accuracy,
             {{"mode", "sampled"},
              {"seed", sampler.seed},
              {"triplets_per_point", sampler.triplets_per_point}},
             join(dir, "triplet_accuracy_s" + std::to_string(sampler.seed) + "_t" +
                           std::to_string(sampler.triplets_per_point))});
      }
    }
    if (rank_ok) {
      json params = {{"anchors", anchors.indices.size()}};
      std::string leaf =
          "distance_rank_correlation_a" + std::to_string(anchors.indices.size());
      if (!anchors.all_points) {
        params["seed"] = anchors.seed;
        leaf += "_s" + std::to_string(anchors.seed);
      }
      plan.columns.push_back({emb, MetricKind::distance_rank_correlation,
                              std::move(params), join(dir, leaf)});
    }
  }
  if (plan.stability_k > 0) {
    plan.columns.push_back(
        {std::nullopt, MetricKind::point_stability,
         {{"k", plan.stability_k}, {"embeddings", embeddings.size()}},
         join(join(layout.metrics_dir, kBundleDir),
              "point_stability_k" + std::to_string(plan.stability_k))});
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Column cache

namespace {

fs::path suffixed(const fs::path& stem, const char* suffix) {
  fs::path p = stem;
  p += suffix;
  return p;
}

struct Inspection {
  CacheState state = CacheState::missing;
  std::string detail;
  json descriptor;
};

Inspection inspect_column(const fs::path& root, const PlannedColumn& col,
                          std::size_t n) {
  Inspection out;
  const fs::path stem = root / col.path;
  const fs::path desc_path = suffixed(stem, ".json");
  if (!fs::exists(desc_path)) {
    out.detail = "no descriptor";
    return out;
  }
  try {
    out.descriptor = json::parse(read_file(desc_path));
    if (out.descriptor.at("metric_name").get<std::string>() != to_string(col.metric)) {
      out.state = CacheState::corrupt;
      out.detail = "descriptor names a different metric";
      return out;
    }
    if (out.descriptor.at("params") != col.params) {
      out.detail = "cached with different parameters";
      return out;
    }
    const MatrixF values = read_array_f32(suffixed(stem, ".bin"));
    if (values.rows() != n || values.cols() != 1) {
      out.state = CacheState::corrupt;
      out.detail = "array shape does not match n";
      return out;
    }
  } catch (const std::exception& e) {
    out.state = CacheState::corrupt;
    out.detail = e.what();
    return out;
  }
  out.state = CacheState::present;
  return out;
}

void write_column(const fs::path& root, const PlannedColumn& planned,
                  const MetricColumn& col) {
  const fs::path stem = root / planned.path;
  write_array(suffixed(stem, ".bin"), MatrixF(col.values.size(), 1, col.values));
  const json desc = {{"metric_name", std::string(to_string(col.metric))},
                     {"params", col.params},
                     {"vmin", col.vmin},
                     {"vmax", col.vmax}};
  // Written after the array; a descriptor never points at a partial file.
  atomic_write_file(suffixed(stem, ".json"), desc.dump() + "\n");
}

MetricColumn read_column(const fs::path& stem) {
  const json desc = json::parse(read_file(suffixed(stem, ".json")));
  MetricColumn col;
  col.metric = parse_metric_kind(desc.at("metric_name").get<std::string>());
  col.params = desc.at("params");
  col.vmin = desc.at("vmin").get<float>();
  col.vmax = desc.at("vmax").get<float>();
  const MatrixF values = read_array_f32(suffixed(stem, ".bin"));
  if (values.cols() != 1) {
    throw Error(ErrorKind::corrupt, "metric array must have one column: " +
                                        stem.string());
  }
  col.values = values.storage();
  return col;
}

class CacheLock {
 public:
  explicit CacheLock(fs::path path) : path_(std::move(path)) {
    fs::create_directories(path_.parent_path());
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) {
      throw Error(ErrorKind::locked,
                  "another precompute holds " + path_.string() +
                      " (remove it if no run is active)");
    }
    std::fclose(f);
  }
  ~CacheLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  CacheLock(const CacheLock&) = delete;
  CacheLock& operator=(const CacheLock&) = delete;

 private:
  fs::path path_;
};

class Stopwatch {
 public:
  explicit Stopwatch(double& sink)
      : sink_(sink), start_(std::chrono::steady_clock::now()) {}
  ~Stopwatch() {
    sink_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
                 .count();
  }

 private:
  double& sink_;
  std::chrono::steady_clock::time_point start_;
};

// Shared driver for the persisted and in-memory paths.
class Engine {
 public:
  using ColumnSink = std::function<void(const PlannedColumn&, MetricColumn&&)>;
  using GraphSink = std::function<void(const NeighborGraph&)>;

  Engine(const DatasetBundle& bundle, const PrecomputeConfig& config,
         const ColumnPlan& plan, std::optional<fs::path> cache_root,
         const Manifest& layout)
      : b_(bundle), config_(config), plan_(plan), root_(std::move(cache_root)),
        layout_(layout) {}

  void run(const std::vector<const PlannedColumn*>& todo, const ColumnSink& sink,
           const GraphSink& graph_sink, StageTimes& times,
           std::size_t& computed_graphs) {
    times_ = &times;
    computed_graphs_ = &computed_graphs;
    graph_sink_ = &graph_sink;

    std::vector<const PlannedColumn*> triplets, ranks;
    const PlannedColumn* stability = nullptr;
    std::vector<const PlannedColumn*> preservation;
    for (const PlannedColumn* c : todo) {
      switch (c->metric) {
        case MetricKind::neighborhood_preservation: preservation.push_back(c); break;
        case MetricKind::triplet_accuracy: triplets.push_back(c); break;
        case MetricKind::distance_rank_correlation: ranks.push_back(c); break;
        case MetricKind::point_stability: stability = c; break;
        case MetricKind::hd_distance_to_anchor: break;
      }
    }

    // Graphs first so stage timings stay separable.
    if (!preservation.empty()) hd_graph();
    for (const PlannedColumn* c : preservation) ld_graph(*c->embedding);
    if (stability) {
      for (const auto& e : b_.embeddings) ld_graph(e.name);
    }

    {
      Stopwatch sw(times.preservation);
      for (const PlannedColumn* c : preservation) {
        const std::uint32_t k = c->params.at("k").get<std::uint32_t>();
        sink(*c, neighborhood_preservation(hd_graph(), ld_graph(*c->embedding), k));
      }
    }
    if (!triplets.empty()) {
      Stopwatch sw(times.triplets);
      const TripletSampler sampler = sampler_for(b_.n(), config_);
      auto cols = triplet_accuracy(b_.hd_points, coords_of(triplets), sampler);
      for (std::size_t t = 0; t < triplets.size(); ++t) sink(*triplets[t], std::move(cols[t]));
    }
    if (!ranks.empty()) {
      Stopwatch sw(times.rank_correlation);
      const AnchorSet anchors = anchors_for(b_.n(), config_);
      auto cols = distance_rank_correlation(b_.hd_points, coords_of(ranks), anchors);
      for (std::size_t t = 0; t < ranks.size(); ++t) sink(*ranks[t], std::move(cols[t]));
    }
    if (stability) {
      Stopwatch sw(times.stability);
      std::vector<const NeighborGraph*> graphs;
      for (const auto& e : b_.embeddings) graphs.push_back(&ld_graph(e.name));
      sink(*stability, point_stability(graphs, plan_.stability_k));
    }
  }

  fs::path hd_stem() const { return *root_ / layout_.neighbors_dir / "hd"; }
  fs::path ld_stem(const std::string& name) const {
    return *root_ / layout_.neighbors_dir / "ld" / name;
  }

 private:
  std::vector<const MatrixF*> coords_of(const std::vector<const PlannedColumn*>& cols) {
    std::vector<const MatrixF*> out;
    for (const PlannedColumn* c : cols) out.push_back(&b_.find_embedding(*c->embedding)->coords);
    return out;
  }

  std::optional<NeighborGraph> cached_graph(const fs::path& stem, std::uint32_t k,
                                            Exactness expected) {
    if (!root_ || config_.force || !fs::exists(graph_descriptor_path(stem))) {
      return std::nullopt;
    }
    try {
      NeighborGraph g = read_graph(stem);
      if (g.n() == b_.n() && g.k() >= k && g.exactness == expected &&
          (expected == Exactness::exact || g.seed == config_.seed)) {
        return g;
      }
    } catch (const Error&) {
    }
    return std::nullopt;
  }

  const NeighborGraph& hd_graph() {
    if (hd_) return *hd_;
    const Exactness expected =
        b_.n() <= kExactFallbackMaxN ? Exactness::exact : Exactness::approximate;
    if (root_) hd_ = cached_graph(hd_stem(), plan_.kmax, expected);
    if (!hd_) {
      Stopwatch sw(times_->hd_knn);
      hd_ = build_approx_knn(b_.hd_points, plan_.kmax, config_.recall_target,
                             config_.seed, "hd");
      ++*computed_graphs_;
      if (root_) write_graph(hd_stem(), *hd_);
    }
    (*graph_sink_)(*hd_);
    return *hd_;
  }

  const NeighborGraph& ld_graph(const std::string& name) {
    auto it = ld_.find(name);
    if (it != ld_.end()) return it->second;
    std::optional<NeighborGraph> g;
    if (root_) g = cached_graph(ld_stem(name), plan_.ld_k, Exactness::exact);
    if (!g) {
      Stopwatch sw(times_->ld_knn);
      g = build_exact_knn(b_.find_embedding(name)->coords, plan_.ld_k, name);
      g->seed = config_.seed;
      ++*computed_graphs_;
      if (root_) write_graph(ld_stem(name), *g);
    }
    (*graph_sink_)(*g);
    return ld_.emplace(name, std::move(*g)).first->second;
  }

  const DatasetBundle& b_;
  const PrecomputeConfig& config_;
  const ColumnPlan& plan_;
  std::optional<fs::path> root_;
  const Manifest& layout_;
  std::optional<NeighborGraph> hd_;
  std::map<std::string, NeighborGraph> ld_;
  StageTimes* times_ = nullptr;
  std::size_t* computed_graphs_ = nullptr;
  const GraphSink* graph_sink_ = nullptr;
};

std::vector<std::string> embedding_names(const DatasetBundle& b) {
  std::vector<std::string> names;
  for (const auto& e : b.embeddings) names.push_back(e.name);
  return names;
}

std::optional<GraphRecord> graph_record(const fs::path& root, const fs::path& stem) {
  const fs::path desc_path = graph_descriptor_path(stem);
  if (!fs::exists(desc_path)) return std::nullopt;
  const json d = json::parse(read_file(desc_path));
  return GraphRecord{d.at("space_id").get<std::string>(), d.at("k").get<std::uint32_t>(),
                     d.at("exactness").get<std::string>(), d.at("seed").get<std::uint64_t>(),
                     fs::relative(stem, root).generic_string()};
}

}  // namespace

// ---------------------------------------------------------------------------

Manifest precompute(const DatasetBundle& bundle, const PrecomputeConfig& config,
                    PrecomputeReport* report) {
  validate_bundle(bundle);
  const fs::path& root = bundle.root;
  CacheLock lock(root / "cache" / ".lock");

  PrecomputeReport local;
  PrecomputeReport& rep = report ? *report : local;
  const ColumnPlan plan =
      plan_columns(bundle.n(), embedding_names(bundle), bundle.manifest, config);
  rep.warnings = plan.warnings;

  std::vector<const PlannedColumn*> todo;
  for (const auto& col : plan.columns) {
    if (!config.force && inspect_column(root, col, bundle.n()).state == CacheState::present) {
      ++rep.reused_columns;
    } else {
      todo.push_back(&col);
    }
  }

  Engine engine(bundle, config, plan, root, bundle.manifest);
  engine.run(
      todo,
      [&](const PlannedColumn& planned, MetricColumn&& col) {
        if (col.params != planned.params) {
          throw Error(ErrorKind::corrupt, "internal: planned params " +
                                              planned.params.dump() +
                                              " differ from computed " +
                                              col.params.dump());
        }
        write_column(root, planned, col);
        ++rep.computed_columns;
      },
      [](const NeighborGraph&) {}, rep.times, rep.computed_graphs);

  Manifest m = bundle.manifest;
  m.k_list = config.k_list;
  m.seed = config.seed;
  m.graphs.clear();
  if (auto r = graph_record(root, engine.hd_stem())) m.graphs.push_back(*r);
  for (const auto& e : bundle.embeddings) {
    if (auto r = graph_record(root, engine.ld_stem(e.name))) m.graphs.push_back(*r);
  }
  m.metrics.clear();
  for (const auto& col : plan.columns) {
    const Inspection ins = inspect_column(root, col, bundle.n());
    if (ins.state != CacheState::present) {
      throw Error(ErrorKind::io, "column " + col.path + " missing after precompute: " +
                                     ins.detail);
    }
    m.metrics.push_back({col.embedding, col.metric, col.params,
                         ins.descriptor.at("vmin").get<float>(),
                         ins.descriptor.at("vmax").get<float>(), col.path});
  }
  m.warnings = plan.warnings;
  const fs::path manifest_path = root / kManifestName;
  const std::string bytes = serialize_manifest(m);
  if (!fs::exists(manifest_path) || read_file(manifest_path) != bytes) {
    atomic_write_file(manifest_path, bytes);
  }
  return m;
}

StageTimes compute_in_memory(DatasetBundle& bundle, const PrecomputeConfig& config) {
  validate_bundle(bundle);
  const ColumnPlan plan =
      plan_columns(bundle.n(), embedding_names(bundle), bundle.manifest, config);
  std::vector<const PlannedColumn*> todo;
  for (const auto& col : plan.columns) todo.push_back(&col);
  StageTimes times;
  std::size_t graphs = 0;
  std::vector<std::pair<const PlannedColumn*, MetricColumn>> done;
  std::vector<NeighborGraph> built;
  Engine engine(bundle, config, plan, std::nullopt, bundle.manifest);
  engine.run(
      todo,
      [&](const PlannedColumn& planned, MetricColumn&& col) {
        done.emplace_back(&planned, std::move(col));
      },
      [&](const NeighborGraph& g) { built.push_back(g); }, times, graphs);
  for (auto& g : built) {
    if (g.space_id == "hd") {
      bundle.hd_neighbors[g.k()] = std::move(g);
    } else {
      for (auto& e : bundle.embeddings) {
        if (e.name == g.space_id) e.ld_neighbors[g.k()] = std::move(g);
      }
    }
  }
  for (auto& [planned, col] : done) {
    if (!planned->embedding) {
      bundle.bundle_metrics[col.key()] = std::move(col);
      continue;
    }
    for (auto& e : bundle.embeddings) {
      if (e.name == *planned->embedding) e.metrics[col.key()] = std::move(col);
    }
  }
  return times;
}

// ---------------------------------------------------------------------------

namespace {

std::size_t peek_rows(const fs::path& path) {
  if (path.extension() == ".csv") return load_matrix_any(path).rows();
  const fs::path side = sidecar_path(path);
  if (!fs::exists(side)) {
    throw Error(ErrorKind::missing_file, "missing sidecar " + side.string());
  }
  return json::parse(read_file(side)).at("shape").at(0).get<std::size_t>();
}

}  // namespace

StatusReport status(const fs::path& manifest_path) {
  const fs::path file = resolve_manifest_path(manifest_path);
  const Manifest m = read_manifest(file);
  const fs::path root = file.parent_path();
  StatusReport rep;
  rep.dataset = m.dataset;
  rep.n = peek_rows(root / m.hd_points);
  std::vector<std::string> names;
  for (const auto& e : m.embeddings) names.push_back(e.name);
  const ColumnPlan plan =
      plan_columns(rep.n, names, m, PrecomputeConfig::from_manifest(m));
  rep.warnings = plan.warnings;
  for (const auto& col : plan.columns) {
    const Inspection ins = inspect_column(root, col, rep.n);
    rep.columns.push_back({col, ins.state, ins.detail});
  }
  return rep;
}

std::vector<std::string> attach_cache(DatasetBundle& bundle) {
  std::vector<std::string> problems;
  for (const auto& rec : bundle.manifest.graphs) {
    try {
      NeighborGraph g = read_graph(bundle.root / rec.path);
      if (g.n() != bundle.n()) {
        throw Error(ErrorKind::shape_mismatch, "graph covers " +
                                                   std::to_string(g.n()) + " points");
      }
      if (rec.space_id == "hd") {
        bundle.hd_neighbors[g.k()] = std::move(g);
        continue;
      }
      bool placed = false;
      for (auto& e : bundle.embeddings) {
        if (e.name == rec.space_id) {
          e.ld_neighbors[g.k()] = std::move(g);
          placed = true;
        }
      }
      if (!placed) problems.push_back("graph for unknown space '" + rec.space_id + "'");
    } catch (const std::exception& ex) {
      problems.push_back("graph " + rec.path + ": " + ex.what());
    }
  }
  for (const auto& rec : bundle.manifest.metrics) {
    try {
      MetricColumn col = read_column(bundle.root / rec.path);
      if (col.values.size() != bundle.n()) {
        throw Error(ErrorKind::shape_mismatch, "column has " +
                                                   std::to_string(col.values.size()) +
                                                   " values");
      }
      if (!rec.embedding) {
        bundle.bundle_metrics[col.key()] = std::move(col);
        continue;
      }
      bool placed = false;
      for (auto& e : bundle.embeddings) {
        if (e.name == *rec.embedding) {
          e.metrics[col.key()] = std::move(col);
          placed = true;
          break;
        }
      }
      if (!placed) problems.push_back("column for unknown embedding '" + *rec.embedding + "'");
    } catch (const std::exception& ex) {
      problems.push_back("column " + rec.path + ": " + ex.what());
    }
  }
  return problems;
}

}  // namespace embedq
