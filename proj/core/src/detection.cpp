#include "faceval/detection.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "faceval/log.hpp"

namespace faceval {

MatchResult match_detections(const std::vector<DetectionRecord>& detections,
                             const FrameRecord& frame, double iou_threshold) {
  for (const DetectionRecord& d : detections) {
    if (d.frame_id != frame.frame_id) {
      throw ValidationError("detection '" + d.detection_id +
                            "' references frame '" + d.frame_id +
                            "', expected '" + frame.frame_id + "'");
    }
  }

  std::vector<const DetectionRecord*> order;
  order.reserve(detections.size());
  for (const DetectionRecord& d : detections) order.push_back(&d);
  std::sort(order.begin(), order.end(),
            [](const DetectionRecord* a, const DetectionRecord* b) {
              if (a->confidence != b->confidence) {
                return a->confidence > b->confidence;
              }
              return a->detection_id < b->detection_id;
            });

  MatchResult result;
  result.iou_threshold = iou_threshold;
  std::vector<bool> claimed(frame.annotations.size(), false);

  for (const DetectionRecord* d : order) {
    int best = -1;
    double best_iou = 0.0;
    for (size_t i = 0; i < frame.annotations.size(); ++i) {
      if (claimed[i]) continue;
      const double overlap = iou(d->bbox, frame.annotations[i].bbox);
      if (overlap < iou_threshold) continue;
      if (overlap > best_iou ||
          (overlap == best_iou && best >= 0 &&
           frame.annotations[i].annotation_id <
               frame.annotations[best].annotation_id)) {
        best = static_cast<int>(i);
        best_iou = overlap;
      }
    }
    if (best >= 0) {
      claimed[best] = true;
      result.matches.push_back(
          {d->detection_id, frame.annotations[best].annotation_id, best_iou});
    } else {
      result.unmatched_detections.push_back(d->detection_id);
    }
  }
  for (size_t i = 0; i < frame.annotations.size(); ++i) {
    if (!claimed[i]) {
      result.unmatched_annotations.push_back(frame.annotations[i].annotation_id);
    }
  }
  return result;
}

namespace {

void sort_by_rank(std::vector<DetectionOutcome>& outcomes) {
  std::sort(outcomes.begin(), outcomes.end(),
            [](const DetectionOutcome& a, const DetectionOutcome& b) {
              if (a.confidence != b.confidence) {
                return a.confidence > b.confidence;
              }
              return a.detection_id < b.detection_id;
            });
}

}  // namespace

PRCurve build_pr_curve(std::vector<DetectionOutcome> outcomes, size_t total_gt) {
  if (total_gt == 0) {
    throw EvalError("precision-recall undefined with zero ground truth");
  }
  sort_by_rank(outcomes);
  PRCurve curve;
  curve.total_gt = total_gt;
  size_t tp = 0, fp = 0;
  for (const DetectionOutcome& o : outcomes) {
    o.is_tp ? ++tp : ++fp;
    curve.points.push_back(
        {static_cast<double>(tp) / static_cast<double>(total_gt),
         static_cast<double>(tp) / static_cast<double>(tp + fp)});
  }
  return curve;
}

double average_precision(std::vector<DetectionOutcome> outcomes,
                         size_t total_gt) {
  const PRCurve curve = build_pr_curve(std::move(outcomes), total_gt);
  const auto& pts = curve.points;
  if (pts.empty()) return 0.0;

  // Precision envelope from the right: env[i] = max precision at rank >= i.
  std::vector<double> envelope(pts.size());
  double running = 0.0;
  for (size_t i = pts.size(); i-- > 0;) {
    running = std::max(running, pts[i].precision);
    envelope[i] = running;
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].recall > prev_recall) {
      ap += (pts[i].recall - prev_recall) * envelope[i];
      prev_recall = pts[i].recall;
    }
  }
  return ap;
}

DetectionEvalResult map_by_group(
    const Manifest& ground_truth,
    const std::vector<DetectionRecord>& detections, GroupAxis axis,
    double iou_threshold,
    const std::unordered_set<std::string>* selected_annotations) {
  const auto frames_by_id = frame_index(ground_truth);

  std::unordered_map<std::string, std::vector<DetectionRecord>> dets_by_frame;
  size_t off_manifest = 0;
  for (const DetectionRecord& d : detections) {
    if (!frames_by_id.contains(d.frame_id)) {
      ++off_manifest;
      continue;
    }
    dets_by_frame[d.frame_id].push_back(d);
  }
  if (off_manifest > 0 && selected_annotations == nullptr) {
    throw ValidationError(std::to_string(off_manifest) +
                          " detections reference frames absent from the manifest");
  }

  const auto is_selected = [&](const FaceAnnotation& a) {
    return selected_annotations == nullptr ||
           selected_annotations->contains(a.annotation_id);
  };

  DetectionEvalResult result;
  for (const auto& [label, frame_indices] : group_by_scenario(ground_truth, axis)) {
    std::vector<DetectionOutcome> outcomes;
    GroupDetectionStats stats;
    stats.group = label;
    size_t evaluated_frames = 0;

    for (size_t fi : frame_indices) {
      const FrameRecord& frame = ground_truth.frames[fi];
      size_t n_eval_gt = 0;
      for (const FaceAnnotation& a : frame.annotations) {
        if (is_selected(a)) ++n_eval_gt;
      }
      // Frames with no selected annotation are outside the evaluated subset.
      if (selected_annotations != nullptr && n_eval_gt == 0) continue;
      ++evaluated_frames;
      stats.n_gt += n_eval_gt;

      auto it = dets_by_frame.find(frame.frame_id);
      static const std::vector<DetectionRecord> kNone;
      const auto& frame_dets = it == dets_by_frame.end() ? kNone : it->second;
      const MatchResult mr = match_detections(frame_dets, frame, iou_threshold);

      std::unordered_map<std::string, double> conf_by_det;
      for (const DetectionRecord& d : frame_dets) {
        conf_by_det.emplace(d.detection_id, d.confidence);
      }
      std::unordered_map<std::string, const FaceAnnotation*> ann_by_id;
      for (const FaceAnnotation& a : frame.annotations) {
        ann_by_id.emplace(a.annotation_id, &a);
      }

      for (const MatchedPair& m : mr.matches) {
        const FaceAnnotation* a = ann_by_id.at(m.annotation_id);
        if (!is_selected(*a)) continue;  // matched an ignore region: dropped
        outcomes.push_back({m.detection_id, conf_by_det.at(m.detection_id), true});
        ++stats.n_tp;
      }
      for (const std::string& det_id : mr.unmatched_detections) {
        outcomes.push_back({det_id, conf_by_det.at(det_id), false});
        ++stats.n_fp;
      }
      for (const std::string& ann_id : mr.unmatched_annotations) {
        if (is_selected(*ann_by_id.at(ann_id))) ++stats.n_fn;
      }
    }

    // Groups whose frames all fall outside the subset are not evaluated.
    if (selected_annotations != nullptr && evaluated_frames == 0) continue;

    stats.n_det = stats.n_tp + stats.n_fp;
    if (stats.n_gt == 0) {
      stats.defined = false;
      result.warnings.push_back("group '" + label +
                                "': zero ground truth, AP undefined and "
                                "excluded from the mean");
    } else {
      stats.ap = average_precision(std::move(outcomes), stats.n_gt);
    }
    result.groups.push_back(std::move(stats));
  }

  size_t defined = 0;
  double sum = 0.0;
  for (const GroupDetectionStats& g : result.groups) {
    if (g.defined) {
      ++defined;
      sum += g.ap;
    }
  }
  result.mean_defined = defined > 0;
  if (result.mean_defined) result.mean_ap = sum / static_cast<double>(defined);
  return result;
}

}  // namespace faceval
