#pragma once
// Shared fixtures for the unit tests.

#include <filesystem>
#include <random>
#include <string>

#include "lidisco/core.hpp"

namespace testutil {

inline lidisco::OrientedBox random_box(std::mt19937_64& g, double spread = 5.0) {
  std::uniform_real_distribution<double> pos(-spread, spread), dim(0.5, 5.0), yaw(-lidisco::kPi, lidisco::kPi),
      z(-1.0, 2.0);
  lidisco::OrientedBox b;
  b.cx = pos(g);
  b.cy = pos(g);
  b.cz = z(g);
  b.length = dim(g);
  b.width = dim(g);
  b.height = dim(g);
  b.yaw = yaw(g);
  return lidisco::canonicalize(b);
}

inline lidisco::OrientedBox box(double cx, double cy, double l, double w, double yaw = 0.0) {
  lidisco::OrientedBox b;
  b.cx = cx;
  b.cy = cy;
  b.length = l;
  b.width = w;
  b.yaw = yaw;
  return b;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("lidisco_" + tag + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
