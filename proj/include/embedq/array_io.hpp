#pragma once

#include <filesystem>
#include <string>

#include "embedq/matrix.hpp"

namespace embedq {

// Binary array files: raw row-major little-endian payload plus a JSON sidecar
// `{stem}.meta.json` holding dtype, shape, order and endianness.

std::filesystem::path sidecar_path(const std::filesystem::path& array_path);

void write_array(const std::filesystem::path& path, const MatrixF& matrix);
void write_array(const std::filesystem::path& path, const MatrixU32& matrix);

MatrixF read_array_f32(const std::filesystem::path& path);
MatrixU32 read_array_u32(const std::filesystem::path& path);

/// Payload bytes exactly as write_array lays them out on disk.
std::string encode_payload(const MatrixF& matrix);

/// Writes to a sibling temporary file then renames over the target.
void atomic_write_file(const std::filesystem::path& path,
                       const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace embedq
