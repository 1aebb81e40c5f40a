#pragma once

#include <string>
#include <vector>

#include "faceval/dataset.hpp"
#include "faceval/homography.hpp"

namespace faceval {

/// Overlapping annotations that carry different identities are reported,
/// never silently merged.
struct ConflictRecord {
  std::string capture_id;
  std::string annotation_a;
  std::string annotation_b;
  std::string identity_a;
  std::string identity_b;
  double iou = 0.0;
};

struct CaptureReconciliation {
  /// Consistent annotation set in IR coordinates.
  std::vector<FaceAnnotation> ir;
  /// The same faces, warped back through H^-1 into RGB coordinates.
  /// Always the same cardinality as `ir`.
  std::vector<FaceAnnotation> rgb;
  std::vector<ConflictRecord> conflicts;
};

/// Warps the RGB annotations into IR coordinates, takes the union with
/// the IR annotations and merges duplicates (pairwise IoU >= dedup_iou,
/// same identity). The survivor is the larger box (area ties broken by
/// annotation_id); its landmarks and pose are kept, pose is copied
/// unchanged since a plane homography cannot correct 3-D pose. Output
/// annotations are tagged source=reconciled; RGB copies get the survivor
/// id plus an "@rgb" suffix.
CaptureReconciliation reconcile_capture(
    const std::vector<FaceAnnotation>& rgb_annotations,
    const std::vector<FaceAnnotation>& ir_annotations,
    const Eigen::Matrix3d& h_rgb_to_ir, double dedup_iou);

struct ReconcileResult {
  Manifest manifest;
  std::vector<ConflictRecord> conflicts;
  std::vector<std::string> warnings;
};

/// Reconciles every capture of the manifest's uncompressed source frames.
/// Compressed (qp-labelled) frames pass through unchanged. Captures with
/// a single modality are tagged reconciled as-is, with a warning.
ReconcileResult reconcile_manifest(const Manifest& manifest,
                                   const HomographyStore& homographies,
                                   double dedup_iou);

/// Estimates one homography per location from pooled correspondences
/// (capture -> location resolved through the manifest), or one per
/// capture when per_capture is set. RANSAC seeds are derived per key, so
/// estimation order cannot change results.
HomographyStore estimate_homographies(
    const Manifest& manifest, const std::vector<Correspondence>& matches,
    const RansacConfig& config, bool per_capture = false);

}  // namespace faceval
