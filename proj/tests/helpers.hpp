#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "faceval/dataset.hpp"

namespace faceval::testing {

inline FaceAnnotation make_annotation(const std::string& id,
                                      const std::string& identity,
                                      const Box& box, double yaw = 0.0,
                                      double pitch = 0.0, double roll = 0.0) {
  FaceAnnotation a;
  a.annotation_id = id;
  a.identity_id = identity;
  a.bbox = box;
  const double w = box.width(), h = box.height();
  a.landmarks = {{{box.x_min + 0.3 * w, box.y_min + 0.4 * h},
                  {box.x_min + 0.7 * w, box.y_min + 0.4 * h},
                  {box.x_min + 0.5 * w, box.y_min + 0.6 * h},
                  {box.x_min + 0.35 * w, box.y_min + 0.8 * h},
                  {box.x_min + 0.65 * w, box.y_min + 0.8 * h}}};
  a.pose = {yaw, pitch, roll};
  return a;
}

inline FrameRecord make_frame(const std::string& frame_id,
                              const std::string& capture_id, Location loc,
                              Modality mod, Illumination ill,
                              std::vector<FaceAnnotation> annotations = {}) {
  FrameRecord f;
  f.frame_id = frame_id;
  f.capture_id = capture_id;
  f.location = loc;
  f.modality = mod;
  f.illumination = ill;
  f.width = 1280;
  f.height = 800;
  f.annotations = std::move(annotations);
  return f;
}

/// Runs fn and checks that it throws E with the substring in the message.
template <typename E, typename Fn>
bool throws_with(Fn&& fn, const std::string& needle) {
  try {
    fn();
  } catch (const E& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  } catch (...) {
    return false;
  }
  return false;
}

/// Unique scratch directory under the system temp dir, removed on
/// destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("faceval_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace faceval::testing
