#include "embedq/array_io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "embedq/error.hpp"

namespace embedq {

static_assert(std::endian::native == std::endian::little,
              "array payloads are memcpy'd; big-endian hosts need byte swaps");

namespace fs = std::filesystem;
using nlohmann::json;

fs::path sidecar_path(const fs::path& array_path) {
  fs::path p = array_path;
  p.replace_filename(array_path.stem().string() + ".meta.json");
  return p;
}

void atomic_write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot open " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::io, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::io, "rename failed for " + path.string() + ": " +
                                   ec.message());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::missing_file, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

template <typename T>
constexpr const char* dtype_name();
template <>
constexpr const char* dtype_name<float>() { return "f32"; }
template <>
constexpr const char* dtype_name<std::uint32_t>() { return "u32"; }

template <typename T>
std::string payload_bytes(const Matrix<T>& m) {
  std::string bytes(m.size() * sizeof(T), '\0');
  if (!bytes.empty()) std::memcpy(bytes.data(), m.data(), bytes.size());
  return bytes;
}

template <typename T>
void write_impl(const fs::path& path, const Matrix<T>& m) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw Error(ErrorKind::invalid_argument,
                "refusing to write empty array " + path.string());
  }
  if constexpr (std::is_floating_point_v<T>) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!std::isfinite(m.data()[i])) {
        throw Error(ErrorKind::non_finite,
                    "non-finite value at row " + std::to_string(i / m.cols()) +
                        ", column " + std::to_string(i % m.cols()));
      }
    }
  }
  json meta = {{"dtype", dtype_name<T>()},
               {"shape", {m.rows(), m.cols()}},
               {"order", "row-major"},
               {"endian", "little"}};
  // Payload first: the sidecar is the commit marker.
  atomic_write_file(path, payload_bytes(m));
  atomic_write_file(sidecar_path(path), meta.dump() + "\n");
}

template <typename T>
Matrix<T> read_impl(const fs::path& path) {
  const fs::path side = sidecar_path(path);
  if (!fs::exists(side)) {
    throw Error(ErrorKind::missing_file, "missing sidecar " + side.string());
  }
  json meta;
  try {
    meta = json::parse(read_file(side));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::corrupt,
                "unparsable sidecar " + side.string() + ": " + e.what());
  }
  if (meta.value("dtype", "") != dtype_name<T>() ||
      meta.value("order", "") != "row-major" ||
      meta.value("endian", "") != "little" || !meta.contains("shape") ||
      !meta["shape"].is_array() || meta["shape"].size() != 2) {
    throw Error(ErrorKind::corrupt, "unsupported array header " + side.string() +
                                        ": " + meta.dump());
  }
  const auto rows = meta["shape"][0].get<std::size_t>();
  const auto cols = meta["shape"][1].get<std::size_t>();
  const std::string bytes = read_file(path);
  if (bytes.size() != rows * cols * sizeof(T)) {
    throw Error(ErrorKind::shape_mismatch,
                path.string() + ": header declares " + std::to_string(rows) +
                    "x" + std::to_string(cols) + " but payload has " +
                    std::to_string(bytes.size()) + " bytes");
  }
  Matrix<T> m(rows, cols);
  if (!bytes.empty()) std::memcpy(m.data(), bytes.data(), bytes.size());
  return m;
}

}  // namespace

void write_array(const fs::path& path, const MatrixF& matrix) {
  write_impl(path, matrix);
}
void write_array(const fs::path& path, const MatrixU32& matrix) {
  write_impl(path, matrix);
}
MatrixF read_array_f32(const fs::path& path) { return read_impl<float>(path); }
MatrixU32 read_array_u32(const fs::path& path) {
  return read_impl<std::uint32_t>(path);
}
std::string encode_payload(const MatrixF& matrix) {
  return payload_bytes(matrix);
}

}  // namespace embedq
