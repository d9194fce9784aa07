#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "embedq/matrix.hpp"

namespace embedq {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Comma-separated, header row first, optional double-quoted cells.
CsvTable read_csv(const std::filesystem::path& path);

/// Numeric CSV (header row skipped) as a float matrix.
MatrixF read_csv_matrix(const std::filesystem::path& path);

}  // namespace embedq
