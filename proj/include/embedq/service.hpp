#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "embedq/bundle.hpp"

namespace httplib {
class Server;
}

namespace embedq {

struct ServiceOptions {
  std::string cors_origin = "*";
};

/// Transport-independent response.
struct Reply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
  std::vector<std::pair<std::string, std::string>> headers;
};

/// Read-only view of one precomputed bundle. Every handler is const and the
/// bundle is never modified after construction, so requests may run
/// concurrently.
class Service {
 public:
  /// `bundle` should already have its cache attached (see attach_cache).
  explicit Service(DatasetBundle bundle, std::vector<std::string> cache_problems = {},
                   ServiceOptions options = {});

  Reply manifest() const;
  Reply coords(const std::string& embedding) const;
  Reply metric(const std::string& embedding, const std::string& metric,
               const std::multimap<std::string, std::string>& query) const;
  Reply selection_neighbors(const std::string& json_body) const;
  Reply hd_distances(const std::string& point) const;
  Reply metadata(const std::string& column) const;

  void register_routes(httplib::Server& server) const;

  const DatasetBundle& bundle() const { return bundle_; }

 private:
  const NeighborGraph* hd_graph() const;

  DatasetBundle bundle_;
  std::vector<std::string> cache_problems_;
  ServiceOptions options_;
  std::string manifest_body_;
  std::map<std::string, std::string> coords_bytes_;
};

/// Loads the bundle at `data_dir`, attaches its cache and builds a Service.
Service open_service(const std::string& data_dir, ServiceOptions options = {});

}  // namespace embedq
