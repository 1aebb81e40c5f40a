#pragma once

#include <vector>

#include "faceval/dataset.hpp"

namespace faceval {

/// Normalized 1-D histogram. Bins are [e_i, e_{i+1}) except the last,
/// which also includes its upper edge; a value exactly on an interior
/// edge therefore falls into the higher bin.
struct Histogram1D {
  std::vector<double> edges;
  std::vector<double> counts;  // normalized, sums to 1

  friend bool operator==(const Histogram1D&, const Histogram1D&) = default;
};

/// Per-angle marginal pose distributions, individually normalized.
struct PoseHistogram {
  Histogram1D yaw;
  Histogram1D pitch;
  Histogram1D roll;

  friend bool operator==(const PoseHistogram&, const PoseHistogram&) = default;
};

/// n_bins uniform bins covering [-180, 180]; the default is 36 bins of 10
/// degrees.
std::vector<double> uniform_pose_edges(int n_bins = 36);

/// Bin index for a value under the edge rule above. Edges must be strictly
/// increasing and cover the value.
size_t bin_index(const std::vector<double>& edges, double value);

PoseHistogram compute_pose_histogram(
    const std::vector<const FaceAnnotation*>& annotations,
    const std::vector<double>& bin_edges);
PoseHistogram compute_pose_histogram(
    const std::vector<FaceAnnotation>& annotations,
    const std::vector<double>& bin_edges);

/// All annotations of the manifest.
PoseHistogram compute_pose_histogram(const Manifest& manifest,
                                     const std::vector<double>& bin_edges);

/// Mean over the three angles of the L1 distance between the normalized
/// marginals. Symmetric, in [0, 2], zero iff equal. Requires identical
/// bin edges.
double histogram_distance(const PoseHistogram& a, const PoseHistogram& b);

}  // namespace faceval
