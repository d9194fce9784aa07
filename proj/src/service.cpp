#include "embedq/service.hpp"

#include <charconv>
#include <limits>

#include <httplib.h>
#include <json.hpp>

#include "embedq/array_io.hpp"
#include "embedq/error.hpp"
#include "embedq/metrics.hpp"
#include "embedq/pipeline.hpp"

namespace embedq {

using nlohmann::json;

namespace {

constexpr const char* kPrecomputeHint =
    "run `embedq precompute --data <dir>` to build the cache";

Reply json_reply(int status, const json& body) {
  Reply r;
  r.status = status;
  r.body = body.dump();
  return r;
}

Reply error_reply(int status, const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  return json_reply(status, extra);
}

Reply binary_reply(std::string bytes, std::size_t rows, std::size_t cols) {
  Reply r;
  r.body = std::move(bytes);
  r.content_type = "application/octet-stream";
  r.headers.emplace_back("X-Shape", std::to_string(rows) + "," + std::to_string(cols));
  r.headers.emplace_back("X-Dtype", "f32");
  return r;
}

std::string float_bytes(const std::vector<float>& values) {
  return encode_payload(MatrixF(values.size(), 1, values));
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

json describe(const MetricColumn& c) {
  return {{"metric_name", std::string(to_string(c.metric))},
          {"params", c.params},
          {"vmin", c.vmin},
          {"vmax", c.vmax}};
}

}  // namespace

Service::Service(DatasetBundle bundle, std::vector<std::string> cache_problems,
                 ServiceOptions options)
    : bundle_(std::move(bundle)),
      cache_problems_(std::move(cache_problems)),
      options_(std::move(options)) {
  json body;
  body["dataset"] = bundle_.name;
  body["n"] = bundle_.n();
  body["d"] = bundle_.d();
  body["embeddings"] = json::array();
  body["metrics"] = json::object();
  for (const auto& e : bundle_.embeddings) {
    body["embeddings"].push_back(e.name);
    json list = json::array();
    for (const auto& [key, col] : e.metrics) list.push_back(describe(col));
    for (const auto& [key, col] : bundle_.bundle_metrics) list.push_back(describe(col));
    body["metrics"][e.name] = std::move(list);
    coords_bytes_[e.name] = encode_payload(e.coords);
  }
  body["metadata"] = json::array();
  for (const auto& c : bundle_.metadata) {
    body["metadata"].push_back(
        {{"name", c.name},
         {"kind", c.kind == MetadataKind::categorical ? "categorical" : "continuous"}});
  }
  const NeighborGraph* g = hd_graph();
  body["hd_neighbors_k"] = g ? json(g->k()) : json(nullptr);
  body["cache_problems"] = cache_problems_;
  manifest_body_ = body.dump();
}

const NeighborGraph* Service::hd_graph() const {
  if (bundle_.hd_neighbors.empty()) return nullptr;
  return &bundle_.hd_neighbors.rbegin()->second;
}

Reply Service::manifest() const {
  Reply r;
  r.body = manifest_body_;
  return r;
}

Reply Service::coords(const std::string& embedding) const {
  auto it = coords_bytes_.find(embedding);
  if (it == coords_bytes_.end()) {
    return error_reply(404, "unknown embedding '" + embedding + "'");
  }
  return binary_reply(it->second, bundle_.n(), 2);
}

Reply Service::metric(const std::string& embedding, const std::string& metric,
                      const std::multimap<std::string, std::string>& query) const {
  const Embedding* emb = bundle_.find_embedding(embedding);
  if (!emb) return error_reply(404, "unknown embedding '" + embedding + "'");
  MetricKind kind;
  try {
    kind = parse_metric_kind(metric);
  } catch (const Error&) {
    return error_reply(404, "unknown metric '" + metric + "'");
  }
  const auto& pool =
      kind == MetricKind::point_stability ? bundle_.bundle_metrics : emb->metrics;
  std::vector<const MetricColumn*> candidates;
  for (const auto& [key, col] : pool) {
    if (col.metric == kind) candidates.push_back(&col);
  }
  if (candidates.empty()) {
    return error_reply(404, "no precomputed '" + metric + "' column for '" +
                                embedding + "'",
                       {{"hint", kPrecomputeHint}});
  }
  json available = json::array();
  for (const MetricColumn* c : candidates) available.push_back(c->params);

  std::vector<const MetricColumn*> matches;
  for (const MetricColumn* c : candidates) {
    bool ok = true;
    for (const auto& [name, value] : query) {
      if (!c->params.contains(name)) continue;
      const json& have = c->params[name];
      if (have.is_number_integer()) {
        std::uint64_t v;
        if (!parse_u64(value, v)) {
          return error_reply(422, "parameter '" + name + "' must be a non-negative integer",
                             {{"value", value}});
        }
        ok = ok && have.get<std::uint64_t>() == v;
      } else if (have.is_string()) {
        ok = ok && have.get<std::string>() == value;
      } else {
        ok = ok && have.dump() == value;
      }
    }
    if (ok) matches.push_back(c);
  }
  if (auto k = query.find("k"); k != query.end()) {
    std::uint64_t v;
    if (!parse_u64(k->second, v) || v == 0) {
      return error_reply(422, "k must be a positive integer", {{"value", k->second}});
    }
  }
  if (matches.empty()) {
    json extra = {{"available", available}};
    json ks = json::array();
    for (const MetricColumn* c : candidates) {
      if (c->params.contains("k")) ks.push_back(c->params["k"]);
    }
    if (!ks.empty()) extra["available_k"] = ks;
    return error_reply(404, "no '" + metric + "' column matches the query", extra);
  }
  if (matches.size() > 1) {
    return error_reply(422, "query matches several columns; add parameters",
                       {{"available", available}});
  }
  const MetricColumn& col = *matches.front();
  Reply r = binary_reply(float_bytes(col.values), col.values.size(), 1);
  r.headers.emplace_back("X-Vmin", json(col.vmin).dump());
  r.headers.emplace_back("X-Vmax", json(col.vmax).dump());
  r.headers.emplace_back("X-Metric", describe(col).dump());
  return r;
}

Reply Service::selection_neighbors(const std::string& json_body) const {
  json req;
  try {
    req = json::parse(json_body);
  } catch (const json::exception& e) {
    return error_reply(400, std::string("malformed JSON: ") + e.what());
  }
  if (!req.is_object() || !req.contains("indices") || !req["indices"].is_array() ||
      !req.contains("k") || !req["k"].is_number_integer()) {
    return error_reply(422, "expected {\"indices\": [int, ...], \"k\": int}");
  }
  std::vector<std::uint32_t> indices;
  for (const auto& v : req["indices"]) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0 ||
        v.get<std::int64_t>() >= static_cast<std::int64_t>(bundle_.n())) {
      return error_reply(422, "index out of range", {{"value", v}});
    }
    indices.push_back(v.get<std::uint32_t>());
  }
  if (indices.empty()) return error_reply(422, "selection is empty");
  {
    std::vector<std::uint32_t> sorted = indices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      return error_reply(422, "selection indices must be unique");
    }
  }
  const NeighborGraph* g = hd_graph();
  if (!g) {
    return error_reply(404, "no high-dimensional neighbor graph in cache",
                       {{"hint", kPrecomputeHint}});
  }
  const std::int64_t k = req["k"].get<std::int64_t>();
  if (k < 1 || k > static_cast<std::int64_t>(g->k())) {
    return error_reply(422, "k must lie in [1, " + std::to_string(g->k()) + "]",
                       {{"max_k", g->k()}});
  }
  const auto result = hd_neighbor_union(indices, *g, static_cast<std::uint32_t>(k));
  return json_reply(200, {{"indices", result}});
}

Reply Service::hd_distances(const std::string& point) const {
  std::uint64_t i;
  if (!parse_u64(point, i) || i >= bundle_.n()) {
    return error_reply(404, "point '" + point + "' out of range [0, " +
                                std::to_string(bundle_.n()) + ")");
  }
  return binary_reply(float_bytes(hd_distances_to_point(bundle_.hd_points, i)),
                      bundle_.n(), 1);
}

Reply Service::metadata(const std::string& column) const {
  const MetadataColumn* c = bundle_.find_metadata(column);
  if (!c) return error_reply(404, "unknown metadata column '" + column + "'");
  if (c->kind == MetadataKind::categorical) return json_reply(200, c->labels);
  return binary_reply(float_bytes(c->numbers), c->numbers.size(), 1);
}

namespace {

void send(httplib::Response& res, const Reply& r) {
  res.status = r.status;
  for (const auto& [k, v] : r.headers) res.set_header(k, v);
  res.set_content(r.body, r.content_type);
}

}  // namespace

void Service::register_routes(httplib::Server& server) const {
  server.set_default_headers(
      {{"Access-Control-Allow-Origin", options_.cors_origin},
       {"Access-Control-Expose-Headers", "X-Shape, X-Dtype, X-Vmin, X-Vmax, X-Metric"}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  server.Get("/api/manifest", [this](const httplib::Request&, httplib::Response& res) {
    send(res, manifest());
  });
  server.Get(R"(/api/embeddings/([^/]+)/coords)",
             [this](const httplib::Request& req, httplib::Response& res) {
               send(res, coords(req.matches[1]));
             });
  server.Get(R"(/api/embeddings/([^/]+)/metrics/([^/]+))",
             [this](const httplib::Request& req, httplib::Response& res) {
               std::multimap<std::string, std::string> query(req.params.begin(),
                                                             req.params.end());
               send(res, metric(req.matches[1], req.matches[2], query));
             });
  server.Post("/api/selection/neighbors",
              [this](const httplib::Request& req, httplib::Response& res) {
                send(res, selection_neighbors(req.body));
              });
  server.Get(R"(/api/points/([^/]+)/hd_distances)",
             [this](const httplib::Request& req, httplib::Response& res) {
               send(res, hd_distances(req.matches[1]));
             });
  server.Get(R"(/api/metadata/([^/]+))",
             [this](const httplib::Request& req, httplib::Response& res) {
               send(res, metadata(req.matches[1]));
             });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(json{{"error", httplib::status_message(res.status)}}.dump(),
                      "application/json");
    }
  });
  server.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          what = e.what();
        } catch (...) {
        }
        res.status = 500;
        res.set_content(json{{"error", what}}.dump(), "application/json");
      });
}

Service open_service(const std::string& data_dir, ServiceOptions options) {
  DatasetBundle bundle = load_bundle(data_dir);
  std::vector<std::string> problems = attach_cache(bundle);
  return Service(std::move(bundle), std::move(problems), std::move(options));
}

}  // namespace embedq
