#include <json.hpp>

#include "embedq/array_io.hpp"
#include "embedq/error.hpp"
#include "embedq/knn.hpp"

namespace embedq {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path with_suffix(const fs::path& stem, const char* suffix) {
  fs::path p = stem;
  p += suffix;
  return p;
}

}  // namespace

fs::path graph_descriptor_path(const fs::path& stem) {
  return with_suffix(stem, ".json");
}

void write_graph(const fs::path& stem, const NeighborGraph& graph) {
  write_array(with_suffix(stem, ".indices.bin"), graph.indices);
  write_array(with_suffix(stem, ".distances.bin"), graph.distances);
  const json desc = {{"space_id", graph.space_id},
                     {"k", graph.k()},
                     {"exactness", std::string(to_string(graph.exactness))},
                     {"seed", graph.seed}};
  atomic_write_file(graph_descriptor_path(stem), desc.dump() + "\n");
}

NeighborGraph read_graph(const fs::path& stem) {
  const fs::path desc_path = graph_descriptor_path(stem);
  if (!fs::exists(desc_path)) {
    throw Error(ErrorKind::missing_file, "missing graph descriptor " +
                                             desc_path.string());
  }
  NeighborGraph g;
  try {
    const json desc = json::parse(read_file(desc_path));
    g.space_id = desc.at("space_id").get<std::string>();
    g.exactness = parse_exactness(desc.at("exactness").get<std::string>());
    g.seed = desc.at("seed").get<std::uint64_t>();
    g.indices = read_array_u32(with_suffix(stem, ".indices.bin"));
    g.distances = read_array_f32(with_suffix(stem, ".distances.bin"));
    if (desc.at("k").get<std::uint32_t>() != g.k()) {
      throw Error(ErrorKind::corrupt, "graph descriptor k disagrees with array");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::corrupt,
                "bad graph descriptor " + desc_path.string() + ": " + e.what());
  }
  check_graph(g);
  return g;
}

}  // namespace embedq
