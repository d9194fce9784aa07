#include "embedq/bundle.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "embedq/array_io.hpp"
#include "embedq/csv.hpp"
#include "embedq/error.hpp"

namespace embedq {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Exactness e) {
  return e == Exactness::exact ? "exact" : "approximate";
}

Exactness parse_exactness(std::string_view s) {
  if (s == "exact") return Exactness::exact;
  if (s == "approximate") return Exactness::approximate;
  throw Error(ErrorKind::invalid_argument,
              "unknown exactness '" + std::string(s) + "'");
}

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::neighborhood_preservation: return "neighborhood_preservation";
    case MetricKind::triplet_accuracy: return "triplet_accuracy";
    case MetricKind::distance_rank_correlation: return "distance_rank_correlation";
    case MetricKind::point_stability: return "point_stability";
    case MetricKind::hd_distance_to_anchor: return "hd_distance_to_anchor";
  }
  return "unknown";
}

MetricKind parse_metric_kind(std::string_view name) {
  for (auto kind : {MetricKind::neighborhood_preservation,
                    MetricKind::triplet_accuracy,
                    MetricKind::distance_rank_correlation,
                    MetricKind::point_stability,
                    MetricKind::hd_distance_to_anchor}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorKind::invalid_argument,
              "unknown metric '" + std::string(name) + "'");
}

std::string MetricColumn::key() const {
  return std::string(to_string(metric)) + params.dump();
}

void assign_display_range(MetricColumn& column) {
  switch (column.metric) {
    case MetricKind::neighborhood_preservation:
    case MetricKind::triplet_accuracy:
    case MetricKind::point_stability:
      column.vmin = 0.0f;
      column.vmax = 1.0f;
      return;
    case MetricKind::distance_rank_correlation:
      column.vmin = -1.0f;
      column.vmax = 1.0f;
      return;
    case MetricKind::hd_distance_to_anchor:
      break;
  }
  float lo = 0.0f, hi = 0.0f;
  if (!column.values.empty()) {
    lo = hi = column.values.front();
    for (float v : column.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  column.vmin = lo;
  column.vmax = hi;
}

const Embedding* DatasetBundle::find_embedding(std::string_view name) const {
  for (const auto& e : embeddings) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

const MetadataColumn* DatasetBundle::find_metadata(std::string_view name) const {
  for (const auto& c : metadata) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

bool is_valid_embedding_name(std::string_view name) {
  if (name.empty() || name.size() > 128) return false;
  if (name.front() == '_' || name.front() == '.' || name.front() == '-') {
    return false;
  }
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

namespace {

void check_finite(const MatrixF& m, const std::string& what) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        throw Error(ErrorKind::non_finite,
                    "non-finite value in " + what + " at row " +
                        std::to_string(r) + ", column " + std::to_string(c));
      }
    }
  }
}

bool parse_float(const std::string& s, float& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t')) --e;
  if (b == e) return false;
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e && std::isfinite(out);
}

}  // namespace

MatrixF load_matrix_any(const fs::path& path) {
  if (!fs::exists(path)) {
    throw Error(ErrorKind::missing_file, "missing array file " + path.string());
  }
  if (path.extension() == ".csv") return read_csv_matrix(path);
  return read_array_f32(path);
}

std::vector<MetadataColumn> load_metadata(const fs::path& path) {
  if (!fs::exists(path)) {
    throw Error(ErrorKind::missing_file, "missing metadata file " + path.string());
  }
  std::vector<MetadataColumn> columns;
  if (path.extension() == ".csv") {
    const CsvTable table = read_csv(path);
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      MetadataColumn col;
      col.name = table.header[c];
      bool numeric = !table.rows.empty();
      std::vector<float> numbers;
      numbers.reserve(table.rows.size());
      for (const auto& row : table.rows) {
        float v;
        if (!parse_float(row[c], v)) {
          numeric = false;
          break;
        }
        numbers.push_back(v);
      }
      if (numeric) {
        col.kind = MetadataKind::continuous;
        col.numbers = std::move(numbers);
      } else {
        col.kind = MetadataKind::categorical;
        for (const auto& row : table.rows) col.labels.push_back(row[c]);
      }
      columns.push_back(std::move(col));
    }
    return columns;
  }
  json j;
  try {
    j = json::parse(read_file(path));
    for (const auto& c : j.at("columns")) {
      MetadataColumn col;
      col.name = c.at("name").get<std::string>();
      const auto kind = c.at("kind").get<std::string>();
      if (kind == "categorical") {
        col.kind = MetadataKind::categorical;
        col.labels = c.at("values").get<std::vector<std::string>>();
      } else if (kind == "continuous") {
        col.kind = MetadataKind::continuous;
        col.numbers = c.at("values").get<std::vector<float>>();
      } else {
        throw Error(ErrorKind::schema, "metadata column '" + col.name +
                                           "' has unknown kind '" + kind + "'");
      }
      columns.push_back(std::move(col));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::schema,
                "malformed metadata " + path.string() + ": " + e.what());
  }
  return columns;
}

void write_metadata_json(const fs::path& path,
                         const std::vector<MetadataColumn>& columns) {
  json j;
  j["columns"] = json::array();
  for (const auto& c : columns) {
    json col = {{"name", c.name}};
    if (c.kind == MetadataKind::categorical) {
      col["kind"] = "categorical";
      col["values"] = c.labels;
    } else {
      col["kind"] = "continuous";
      col["values"] = c.numbers;
    }
    j["columns"].push_back(std::move(col));
  }
  atomic_write_file(path, j.dump() + "\n");
}

void validate_bundle(const DatasetBundle& b) {
  const std::size_t n = b.hd_points.rows();
  if (n < 2) {
    throw Error(ErrorKind::shape_mismatch,
                "hd_points needs at least 2 rows, has " + std::to_string(n));
  }
  if (b.hd_points.cols() < 1) {
    throw Error(ErrorKind::shape_mismatch, "hd_points has no columns");
  }
  check_finite(b.hd_points, "hd_points");
  std::set<std::string> names;
  for (const auto& e : b.embeddings) {
    if (!is_valid_embedding_name(e.name)) {
      throw Error(ErrorKind::schema, "invalid embedding name '" + e.name + "'");
    }
    if (!names.insert(e.name).second) {
      throw Error(ErrorKind::schema, "duplicate embedding name '" + e.name + "'");
    }
    if (e.coords.cols() != 2) {
      throw Error(ErrorKind::shape_mismatch,
                  "embedding '" + e.name + "' has " +
                      std::to_string(e.coords.cols()) + " columns, expected 2");
    }
    if (e.coords.rows() != n) {
      throw Error(ErrorKind::shape_mismatch,
                  "embedding '" + e.name + "' has " +
                      std::to_string(e.coords.rows()) + " rows, expected " +
                      std::to_string(n));
    }
    check_finite(e.coords, "embedding '" + e.name + "'");
  }
  for (const auto& c : b.metadata) {
    if (c.size() != n) {
      throw Error(ErrorKind::shape_mismatch,
                  "metadata column '" + c.name + "' has " +
                      std::to_string(c.size()) + " values, expected " +
                      std::to_string(n));
    }
    if (c.kind == MetadataKind::categorical) {
      std::set<std::string> distinct(c.labels.begin(), c.labels.end());
      if (distinct.size() > kMaxCategories) {
        throw Error(ErrorKind::schema,
                    "metadata column '" + c.name + "' has " +
                        std::to_string(distinct.size()) +
                        " categories, limit is " +
                        std::to_string(kMaxCategories));
      }
    } else {
      for (std::size_t i = 0; i < c.numbers.size(); ++i) {
        if (!std::isfinite(c.numbers[i])) {
          throw Error(ErrorKind::non_finite,
                      "non-finite value in metadata column '" + c.name +
                          "' at row " + std::to_string(i));
        }
      }
    }
  }
}

DatasetBundle load_bundle(const fs::path& manifest_path) {
  const fs::path file = resolve_manifest_path(manifest_path);
  DatasetBundle b;
  b.manifest = read_manifest(file);
  b.root = file.parent_path();
  b.name = b.manifest.dataset;
  b.hd_points = load_matrix_any(b.root / b.manifest.hd_points);
  for (const auto& entry : b.manifest.embeddings) {
    Embedding e;
    e.name = entry.name;
    e.coords = load_matrix_any(b.root / entry.coords);
    b.embeddings.push_back(std::move(e));
  }
  if (b.manifest.metadata) {
    b.metadata = load_metadata(b.root / *b.manifest.metadata);
  }
  validate_bundle(b);
  return b;
}

}  // namespace embedq
