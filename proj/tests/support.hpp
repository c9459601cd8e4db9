#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Geometry>
#include <gtest/gtest.h>
#include <unistd.h>

#include "mvedit/camera.hpp"
#include "mvedit/error.hpp"
#include "mvedit/flow.hpp"

namespace mvtest {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("mvedit-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

/// Runs `body` and returns the ErrorKind it threw; fails the test if it did not throw.
template <typename F>
mvedit::ErrorKind error_kind(F&& body) {
  try {
    body();
  } catch (const mvedit::Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an mvedit::Error";
  return mvedit::ErrorKind::Io;
}

inline mvedit::Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

/// Camera at the origin looking down +Z with pp at the image centre.
inline mvedit::CameraView simple_camera(int width, int height, double focal, std::string id = "cam") {
  return mvedit::make_camera(std::move(id), mvedit::intrinsics(focal, (width - 1) / 2.0, (height - 1) / 2.0),
                             mvedit::Mat3::Identity(), mvedit::Vec3::Zero(), width, height);
}

inline mvedit::FlowField random_flow(int width, int height, std::mt19937_64& rng, double scale = 5.0,
                                     double valid_fraction = 0.8) {
  std::uniform_real_distribution<double> u(-scale, scale), p(0.0, 1.0);
  mvedit::FlowField f(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (p(rng) < valid_fraction) f.set(x, y, u(rng), u(rng));
    }
  }
  return f;
}

}  // namespace mvtest
