#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <tuple>
#include <vector>

#include "popcal/dataset.hpp"

namespace testutil {

inline popcal::RatingDataset make_dataset(
    const std::vector<std::tuple<std::string, std::string, double>>& rows,
    popcal::RatingScale scale = {1.0, 5.0}) {
  popcal::DatasetBuilder b(scale);
  std::int64_t ts = 1;
  for (const auto& [user, item, rating] : rows) {
    auto u = b.intern_user(user);
    auto i = b.intern_item(item);
    b.add(u, i, rating, ts++);
  }
  return b.build_last_wins();
}

// scratch directory for file-based tests, wiped per call site name
inline std::string scratch_dir(const std::string& name) {
  namespace fs = std::filesystem;
  fs::path dir = fs::path("popcal_test_tmp") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

inline std::string write_file(const std::string& dir, const std::string& name,
                              const std::string& contents) {
  std::string path = dir + "/" + name;
  std::ofstream out(path, std::ios::trunc);
  out << contents;
  return path;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace testutil
