#include "embedq/manifest.hpp"

#include "embedq/array_io.hpp"
#include "embedq/error.hpp"

namespace embedq {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T require(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw Error(ErrorKind::schema, std::string("manifest: missing field '") +
                                       key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema,
                std::string("manifest: bad field '") + key + "': " + e.what());
  }
}

}  // namespace

json to_json(const Manifest& m) {
  json j;
  j["schema_version"] = m.schema_version;
  j["dataset"] = m.dataset;
  j["hd_points"] = m.hd_points;
  j["embeddings"] = json::array();
  for (const auto& e : m.embeddings) {
    j["embeddings"].push_back({{"name", e.name}, {"coords", e.coords}});
  }
  if (m.metadata) j["metadata"] = *m.metadata;
  j["cache"] = {{"neighbors", m.neighbors_dir}, {"metrics", m.metrics_dir}};
  j["k_list"] = m.k_list;
  j["seed"] = m.seed;

  json graphs = json::array();
  for (const auto& g : m.graphs) {
    graphs.push_back({{"space_id", g.space_id},
                      {"k", g.k},
                      {"exactness", g.exactness},
                      {"seed", g.seed},
                      {"path", g.path}});
  }
  json metrics = json::array();
  for (const auto& r : m.metrics) {
    json rec = {{"metric_name", std::string(to_string(r.metric))},
                {"params", r.params},
                {"vmin", r.vmin},
                {"vmax", r.vmax},
                {"path", r.path}};
    rec["embedding"] = r.embedding ? json(*r.embedding) : json(nullptr);
    metrics.push_back(std::move(rec));
  }
  j["precomputed"] = {
      {"neighbors", graphs}, {"metrics", metrics}, {"warnings", m.warnings}};
  return j;
}

Manifest manifest_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::schema, "manifest: not an object");
  Manifest m;
  m.schema_version = require<int>(j, "schema_version");
  if (m.schema_version != kSchemaVersion) {
    throw Error(ErrorKind::schema, "manifest: unknown schema_version " +
                                       std::to_string(m.schema_version));
  }
  m.dataset = require<std::string>(j, "dataset");
  m.hd_points = require<std::string>(j, "hd_points");
  for (const auto& e : require<json>(j, "embeddings")) {
    m.embeddings.push_back(
        {require<std::string>(e, "name"), require<std::string>(e, "coords")});
  }
  if (j.contains("metadata") && !j["metadata"].is_null()) {
    m.metadata = require<std::string>(j, "metadata");
  }
  if (j.contains("cache")) {
    const json& c = j["cache"];
    m.neighbors_dir = c.value("neighbors", m.neighbors_dir);
    m.metrics_dir = c.value("metrics", m.metrics_dir);
  }
  if (j.contains("k_list")) m.k_list = require<std::vector<std::uint32_t>>(j, "k_list");
  if (j.contains("seed")) m.seed = require<std::uint64_t>(j, "seed");

  if (j.contains("precomputed")) {
    const json& p = j["precomputed"];
    for (const auto& g : p.value("neighbors", json::array())) {
      m.graphs.push_back({require<std::string>(g, "space_id"),
                          require<std::uint32_t>(g, "k"),
                          require<std::string>(g, "exactness"),
                          require<std::uint64_t>(g, "seed"),
                          require<std::string>(g, "path")});
    }
    for (const auto& r : p.value("metrics", json::array())) {
      MetricRecord rec;
      if (r.contains("embedding") && !r["embedding"].is_null()) {
        rec.embedding = r["embedding"].get<std::string>();
      }
      rec.metric = parse_metric_kind(require<std::string>(r, "metric_name"));
      rec.params = r.value("params", json::object());
      rec.vmin = require<float>(r, "vmin");
      rec.vmax = require<float>(r, "vmax");
      rec.path = require<std::string>(r, "path");
      m.metrics.push_back(std::move(rec));
    }
    m.warnings = p.value("warnings", std::vector<std::string>{});
  }
  return m;
}

fs::path resolve_manifest_path(const fs::path& p) {
  if (fs::is_directory(p)) return p / kManifestName;
  return p;
}

Manifest read_manifest(const fs::path& path) {
  const fs::path file = resolve_manifest_path(path);
  if (!fs::exists(file)) {
    throw Error(ErrorKind::missing_file, "manifest not found: " + file.string());
  }
  json j;
  try {
    j = json::parse(read_file(file));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema,
                "manifest " + file.string() + " is not valid JSON: " + e.what());
  }
  return manifest_from_json(j);
}

std::string serialize_manifest(const Manifest& m) {
  return to_json(m).dump(2) + "\n";
}

void write_manifest(const fs::path& path, const Manifest& m) {
  atomic_write_file(resolve_manifest_path(path), serialize_manifest(m));
}

}  // namespace embedq
