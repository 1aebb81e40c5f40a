#include "faceval/reconcile.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "faceval/rng.hpp"

namespace faceval {

namespace {

// Relative area slack under which two duplicates count as equally sized
// and the annotation_id decides the survivor. Warping a box to the other
// modality and back inflates its axis-aligned hull by well under this
// for the slight camera offsets involved, so re-reconciling an already
// consistent capture keeps the original geometry.
constexpr double kAreaTieSlack = 0.02;

}  // namespace

CaptureReconciliation reconcile_capture(
    const std::vector<FaceAnnotation>& rgb_annotations,
    const std::vector<FaceAnnotation>& ir_annotations,
    const Eigen::Matrix3d& h_rgb_to_ir, double dedup_iou) {
  const Eigen::Matrix3d h_inv = invert_homography(h_rgb_to_ir);

  // All candidates in IR coordinates.
  std::vector<FaceAnnotation> candidates;
  candidates.reserve(rgb_annotations.size() + ir_annotations.size());
  for (const FaceAnnotation& a : rgb_annotations) {
    FaceAnnotation w = a;
    w.bbox = warp_box(h_rgb_to_ir, a.bbox);
    w.landmarks = warp_landmarks(h_rgb_to_ir, a.landmarks);
    candidates.push_back(std::move(w));
  }
  candidates.insert(candidates.end(), ir_annotations.begin(),
                    ir_annotations.end());
  std::sort(candidates.begin(), candidates.end(),
            [](const FaceAnnotation& a, const FaceAnnotation& b) {
              return a.annotation_id < b.annotation_id;
            });

  // Group duplicates: a candidate joins the first cluster it overlaps
  // with the same identity; overlaps across identities become conflict
  // records and the faces stay separate.
  CaptureReconciliation result;
  std::vector<std::vector<FaceAnnotation>> clusters;
  for (const FaceAnnotation& cand : candidates) {
    bool joined = false;
    for (auto& cluster : clusters) {
      double best_same = 0.0, best_diff = 0.0;
      const FaceAnnotation* diff_member = nullptr;
      for (const FaceAnnotation& member : cluster) {
        const double overlap = iou(member.bbox, cand.bbox);
        if (overlap < dedup_iou) continue;
        if (member.identity_id == cand.identity_id) {
          best_same = std::max(best_same, overlap);
        } else if (overlap > best_diff) {
          best_diff = overlap;
          diff_member = &member;
        }
      }
      if (diff_member != nullptr) {
        result.conflicts.push_back({"", diff_member->annotation_id,
                                    cand.annotation_id,
                                    diff_member->identity_id, cand.identity_id,
                                    best_diff});
      }
      if (best_same > 0.0 && !joined) {
        cluster.push_back(cand);
        joined = true;
      }
    }
    if (!joined) clusters.push_back({cand});
  }

  // Survivor per cluster: the largest box; near-ties by annotation_id.
  std::vector<FaceAnnotation> survivors;
  for (const auto& cluster : clusters) {
    double max_area = 0.0;
    for (const FaceAnnotation& m : cluster) {
      max_area = std::max(max_area, m.bbox.area());
    }
    const FaceAnnotation* survivor = nullptr;
    for (const FaceAnnotation& m : cluster) {
      if (m.bbox.area() < max_area * (1.0 - kAreaTieSlack)) continue;
      if (survivor == nullptr || m.annotation_id < survivor->annotation_id) {
        survivor = &m;
      }
    }
    survivors.push_back(*survivor);
  }
  std::sort(survivors.begin(), survivors.end(),
            [](const FaceAnnotation& a, const FaceAnnotation& b) {
              return a.annotation_id < b.annotation_id;
            });
  for (FaceAnnotation& s : survivors) {
    s.source = AnnotationSource::reconciled;
    FaceAnnotation back = s;
    back.annotation_id = s.annotation_id + "@rgb";
    back.bbox = warp_box(h_inv, s.bbox);
    back.landmarks = warp_landmarks(h_inv, s.landmarks);
    result.rgb.push_back(std::move(back));
    result.ir.push_back(std::move(s));
  }
  return result;
}

namespace {

struct CaptureFrames {
  std::optional<size_t> rgb;
  std::optional<size_t> ir;
};

}  // namespace

ReconcileResult reconcile_manifest(const Manifest& manifest,
                                   const HomographyStore& homographies,
                                   double dedup_iou) {
  if (!(dedup_iou > 0.0 && dedup_iou <= 1.0)) {
    throw ValidationError("dedup IoU must be in (0, 1]");
  }
  ReconcileResult result;
  result.manifest = manifest;

  std::map<std::string, CaptureFrames> captures;
  bool saw_compressed = false;
  for (size_t i = 0; i < manifest.frames.size(); ++i) {
    const FrameRecord& f = manifest.frames[i];
    if (f.qp) {
      saw_compressed = true;
      continue;
    }
    CaptureFrames& c = captures[f.capture_id];
    std::optional<size_t>& slot = f.modality == Modality::rgb ? c.rgb : c.ir;
    if (slot) {
      throw ValidationError("capture '" + f.capture_id + "': multiple " +
                            to_string(f.modality) + " source frames");
    }
    slot = i;
  }
  if (saw_compressed) {
    result.warnings.push_back(
        "compressed (qp-labelled) frames passed through unreconciled");
  }

  for (auto& [capture_id, frames] : captures) {
    if (!frames.rgb || !frames.ir) {
      const size_t idx = frames.rgb ? *frames.rgb : *frames.ir;
      for (FaceAnnotation& a : result.manifest.frames[idx].annotations) {
        a.source = AnnotationSource::reconciled;
      }
      result.warnings.push_back("capture '" + capture_id +
                                "': single modality, annotations passed through");
      continue;
    }
    const FrameRecord& rgb_frame = manifest.frames[*frames.rgb];
    const Homography* h = homographies.lookup(capture_id, rgb_frame.location);
    if (h == nullptr) {
      throw ValidationError("no homography for capture '" + capture_id +
                            "' (location " + to_string(rgb_frame.location) + ")");
    }
    CaptureReconciliation rec =
        reconcile_capture(rgb_frame.annotations,
                          manifest.frames[*frames.ir].annotations, h->matrix,
                          dedup_iou);
    for (ConflictRecord& c : rec.conflicts) {
      c.capture_id = capture_id;
      result.conflicts.push_back(c);
    }
    result.manifest.frames[*frames.ir].annotations = std::move(rec.ir);
    result.manifest.frames[*frames.rgb].annotations = std::move(rec.rgb);
  }

  validate_manifest(result.manifest);
  return result;
}

HomographyStore estimate_homographies(const Manifest& manifest,
                                      const std::vector<Correspondence>& matches,
                                      const RansacConfig& config,
                                      bool per_capture) {
  std::map<std::string, Location> capture_location;
  for (const FrameRecord& f : manifest.frames) {
    capture_location.emplace(f.capture_id, f.location);
  }

  std::map<std::string, std::vector<Correspondence>> pools;
  for (const Correspondence& c : matches) {
    auto it = capture_location.find(c.capture_id);
    if (it == capture_location.end()) {
      throw ValidationError("correspondence references unknown capture '" +
                            c.capture_id + "'");
    }
    const std::string key =
        per_capture ? c.capture_id : to_string(it->second);
    pools[key].push_back(c);
  }

  HomographyStore store;
  for (const auto& [key, pool] : pools) {
    RansacConfig derived = config;
    derived.rng_seed = Rng::derive(config.rng_seed, "homography:" + key);
    Homography h = estimate_homography(pool, derived);
    if (per_capture) {
      store.by_capture[key] = h;
    } else {
      store.by_location[key] = h;
    }
  }
  return store;
}

}  // namespace faceval
