#pragma once

#include <atomic>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "embedq/bundle.hpp"
#include "embedq/metric_column.hpp"
#include "oracle.hpp"

namespace testing_support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("embedq_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline embedq::MatrixF to_matrix(const oracle::Points& p) {
  embedq::MatrixF m(p.size(), p.front().size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t c = 0; c < p[i].size(); ++c) m(i, c) = static_cast<float>(p[i][c]);
  }
  return m;
}

inline oracle::Lists to_lists(const embedq::MatrixU32& m) {
  oracle::Lists out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out[i].assign(m.row(i).begin(), m.row(i).end());
  }
  return out;
}

/// The single column of `kind` in a column map; throws when absent or
/// ambiguous.
inline const embedq::MetricColumn& only_column(
    const std::map<std::string, embedq::MetricColumn>& columns,
    embedq::MetricKind kind) {
  const embedq::MetricColumn* found = nullptr;
  for (const auto& [key, col] : columns) {
    if (col.metric != kind) continue;
    if (found) throw std::runtime_error("several columns of one kind");
    found = &col;
  }
  if (!found) throw std::runtime_error("column missing");
  return *found;
}

inline embedq::DatasetBundle make_bundle(const oracle::Points& hd,
                                         const std::vector<oracle::Points>& lds) {
  embedq::DatasetBundle b;
  b.name = "instance";
  b.manifest.dataset = "instance";
  b.hd_points = to_matrix(hd);
  for (std::size_t e = 0; e < lds.size(); ++e) {
    embedq::Embedding emb;
    emb.name = "e" + std::to_string(e);
    emb.coords = to_matrix(lds[e]);
    b.embeddings.push_back(std::move(emb));
  }
  return b;
}

}  // namespace testing_support
