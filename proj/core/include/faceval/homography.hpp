#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "faceval/dataset.hpp"
#include "faceval/geometry.hpp"

namespace faceval {

/// A keypoint match between the RGB frame (src) and the IR frame (dst)
/// of one capture.
struct Correspondence {
  std::string capture_id;
  Point src;
  Point dst;
  std::optional<double> confidence;
};

/// Plane-to-plane projective map, normalized so H(2,2) == 1.
struct Homography {
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();
  int inliers = 0;
  double mean_error_px = 0.0;
};

struct RansacConfig {
  double inlier_threshold_px = 3.0;
  int max_iterations = 2000;
  double confidence = 0.999;
  int min_inliers = 10;
  uint64_t rng_seed = 0;
};

void validate_ransac_config(const RansacConfig& config);

/// Projects a point through H. Throws GeometryError when the homogeneous
/// w coordinate collapses (|w| < 1e-12).
Point warp_point(const Eigen::Matrix3d& h, const Point& p);

/// Average of forward and backward reprojection distance.
double symmetric_transfer_error(const Eigen::Matrix3d& h,
                                const Eigen::Matrix3d& h_inv,
                                const Point& src, const Point& dst);

/// Exact least-squares homography from >= 4 correspondences: Hartley
/// normalization (centroid shift, mean distance sqrt(2)), 2n x 9 DLT
/// system solved by SVD, then denormalization. Throws GeometryError on
/// rank-deficient (collinear) input.
Eigen::Matrix3d fit_homography_dlt(const std::vector<Point>& src,
                                   const std::vector<Point>& dst);

/// RANSAC over 4-point samples with symmetric transfer error as the
/// inlier test; the returned model is refit on all inliers. Deterministic
/// given config.rng_seed.
Homography estimate_homography(const std::vector<Correspondence>& matches,
                               const RansacConfig& config);

/// Warps the four corners and returns their axis-aligned bounding box.
Box warp_box(const Eigen::Matrix3d& h, const Box& box);

Landmarks warp_landmarks(const Eigen::Matrix3d& h, const Landmarks& lm);

/// Inverse with a determinant guard (|det| must exceed 1e-12).
Eigen::Matrix3d invert_homography(const Eigen::Matrix3d& h);

// --- homography store -----------------------------------------------------
// JSON file holding one entry per key; keys are locations ("console") or,
// for per-capture overrides, capture ids. Entries carry the 9 row-major
// matrix values plus the fit diagnostics.

struct HomographyStore {
  std::map<std::string, Homography> by_location;
  std::map<std::string, Homography> by_capture;

  /// Capture-specific entry first, then the location-wide one.
  const Homography* lookup(const std::string& capture_id,
                           Location location) const;
};

HomographyStore load_homography_store(const std::filesystem::path& path);
void save_homography_store(const HomographyStore& store,
                           const std::filesystem::path& path);

std::vector<Correspondence> load_correspondences(
    const std::filesystem::path& path);
void save_correspondences(const std::vector<Correspondence>& matches,
                          const std::filesystem::path& path);

}  // namespace faceval
