#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "faceval/dataset.hpp"
#include "faceval/geometry.hpp"

namespace faceval {

struct MatchedPair {
  std::string detection_id;
  std::string annotation_id;
  double iou = 0.0;
};

/// Per-frame matching outcome. Each detection and each annotation appears
/// in at most one matched pair; all matched IoUs are >= iou_threshold.
struct MatchResult {
  std::vector<MatchedPair> matches;
  std::vector<std::string> unmatched_detections;   // false positives
  std::vector<std::string> unmatched_annotations;  // false negatives
  double iou_threshold = 0.5;
};

/// Greedy VOC-style matching: detections in decreasing confidence
/// (ties by detection_id) claim the unclaimed ground-truth box of highest
/// IoU >= threshold. Throws ValidationError if a detection references a
/// different frame.
MatchResult match_detections(const std::vector<DetectionRecord>& detections,
                             const FrameRecord& frame, double iou_threshold);

/// One ranked detection outcome pooled across the frames of a group.
struct DetectionOutcome {
  std::string detection_id;
  double confidence = 0.0;
  bool is_tp = false;
};

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct PRCurve {
  std::vector<PrPoint> points;  // increasing recall order
  size_t total_gt = 0;
};

PRCurve build_pr_curve(std::vector<DetectionOutcome> outcomes, size_t total_gt);

/// Area under the precision envelope with all-points interpolation:
/// precision at recall r is the maximum precision at any recall >= r,
/// integrated over the exact recall steps. Throws EvalError when
/// total_gt is zero (AP undefined).
double average_precision(std::vector<DetectionOutcome> outcomes,
                         size_t total_gt);

struct GroupDetectionStats {
  std::string group;
  bool defined = true;  // false when the group has zero ground truth
  double ap = 0.0;
  size_t n_gt = 0;
  size_t n_det = 0;
  size_t n_tp = 0;
  size_t n_fp = 0;
  size_t n_fn = 0;
};

struct DetectionEvalResult {
  std::vector<GroupDetectionStats> groups;
  bool mean_defined = false;
  double mean_ap = 0.0;  // over groups with defined AP
  std::vector<std::string> warnings;
};

/// AP per scenario group over the pooled frames of that group, plus the
/// cross-group mean. When `selected_annotations` is given (a balanced
/// subset), only frames hosting a selected annotation are evaluated;
/// unselected annotations in those frames act as ignore regions:
/// detections matching them are dropped from scoring and they never count
/// as false negatives.
DetectionEvalResult map_by_group(
    const Manifest& ground_truth,
    const std::vector<DetectionRecord>& detections, GroupAxis axis,
    double iou_threshold,
    const std::unordered_set<std::string>* selected_annotations = nullptr);

}  // namespace faceval
