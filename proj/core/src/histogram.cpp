#include "faceval/histogram.hpp"

#include <algorithm>
#include <cmath>

namespace faceval {

std::vector<double> uniform_pose_edges(int n_bins) {
  if (n_bins < 1) throw ValidationError("pose histogram needs >= 1 bin");
  std::vector<double> edges(n_bins + 1);
  for (int i = 0; i <= n_bins; ++i) {
    edges[i] = -180.0 + 360.0 * static_cast<double>(i) / n_bins;
  }
  edges.front() = -180.0;
  edges.back() = 180.0;
  return edges;
}

namespace {

void check_edges(const std::vector<double>& edges) {
  if (edges.size() < 2) {
    throw ValidationError("histogram edges need at least two entries");
  }
  for (size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      throw ValidationError("histogram edges must be strictly increasing");
    }
  }
  if (edges.front() > -180.0 || edges.back() < 180.0) {
    throw ValidationError("pose histogram edges must cover [-180, 180]");
  }
}

}  // namespace

size_t bin_index(const std::vector<double>& edges, double value) {
  if (value < edges.front() || value > edges.back()) {
    throw ValidationError("histogram value outside the covered range");
  }
  // First edge strictly greater than the value; interior-edge values go up.
  auto it = std::upper_bound(edges.begin(), edges.end(), value);
  if (it == edges.end()) return edges.size() - 2;  // value == last edge
  size_t idx = static_cast<size_t>(it - edges.begin());
  return idx == 0 ? 0 : idx - 1;
}

PoseHistogram compute_pose_histogram(
    const std::vector<const FaceAnnotation*>& annotations,
    const std::vector<double>& bin_edges) {
  check_edges(bin_edges);
  if (annotations.empty()) {
    throw ValidationError("cannot compute a pose histogram of zero annotations");
  }
  const size_t n_bins = bin_edges.size() - 1;
  PoseHistogram h;
  for (Histogram1D* m : {&h.yaw, &h.pitch, &h.roll}) {
    m->edges = bin_edges;
    m->counts.assign(n_bins, 0.0);
  }
  for (const FaceAnnotation* a : annotations) {
    h.yaw.counts[bin_index(bin_edges, a->pose.yaw)] += 1.0;
    h.pitch.counts[bin_index(bin_edges, a->pose.pitch)] += 1.0;
    h.roll.counts[bin_index(bin_edges, a->pose.roll)] += 1.0;
  }
  const double n = static_cast<double>(annotations.size());
  for (Histogram1D* m : {&h.yaw, &h.pitch, &h.roll}) {
    for (double& c : m->counts) c /= n;
  }
  return h;
}

PoseHistogram compute_pose_histogram(
    const std::vector<FaceAnnotation>& annotations,
    const std::vector<double>& bin_edges) {
  std::vector<const FaceAnnotation*> ptrs;
  ptrs.reserve(annotations.size());
  for (const auto& a : annotations) ptrs.push_back(&a);
  return compute_pose_histogram(ptrs, bin_edges);
}

PoseHistogram compute_pose_histogram(const Manifest& manifest,
                                     const std::vector<double>& bin_edges) {
  std::vector<const FaceAnnotation*> ptrs;
  for (const auto& f : manifest.frames) {
    for (const auto& a : f.annotations) ptrs.push_back(&a);
  }
  return compute_pose_histogram(ptrs, bin_edges);
}

double histogram_distance(const PoseHistogram& a, const PoseHistogram& b) {
  double total = 0.0;
  for (auto [ma, mb] : {std::pair{&a.yaw, &b.yaw},
                        std::pair{&a.pitch, &b.pitch},
                        std::pair{&a.roll, &b.roll}}) {
    if (ma->edges != mb->edges) {
      throw ValidationError("histogram_distance: bin edges differ");
    }
    double l1 = 0.0;
    for (size_t i = 0; i < ma->counts.size(); ++i) {
      l1 += std::abs(ma->counts[i] - mb->counts[i]);
    }
    total += l1;
  }
  return total / 3.0;
}

}  // namespace faceval
