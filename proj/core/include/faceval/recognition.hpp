#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include "faceval/dataset.hpp"
#include "faceval/detection.hpp"
#include "faceval/geometry.hpp"

namespace faceval {

/// 2-D similarity map: p -> scale * R(theta) * p + (tx, ty).
struct SimilarityTransform {
  double scale = 1.0;
  double theta = 0.0;  // radians
  double tx = 0.0;
  double ty = 0.0;

  Point apply(const Point& p) const;
};

/// Least-squares similarity aligning src onto dst (Umeyama closed form):
/// centroids removed, 2x2 cross-covariance SVD, rotation from
/// U*diag(1, det(UV^T))*V^T, scale from the variance ratio, translation
/// from the centroids. Throws GeometryError when the source points are
/// (numerically) coincident.
SimilarityTransform estimate_similarity_transform(const Landmarks& src,
                                                  const Landmarks& dst);

/// Canonical 5-point landmark template in a width x height crop frame.
/// A default file ships with the toolkit; no coordinates are hardcoded.
struct LandmarkTemplate {
  double width = 0.0;
  double height = 0.0;
  Landmarks points{};
};

LandmarkTemplate load_landmark_template(const std::filesystem::path& path);

// --- pair generation -------------------------------------------------------

enum class PairPolicy { within_group, all };

std::string to_string(PairPolicy policy);
PairPolicy pair_policy_from_string(const std::string& s);

/// One annotation as a verification subject; `group` is its evaluation
/// group under the chosen axis, `cell` the full scenario cell.
struct PairSubject {
  std::string annotation_id;
  std::string identity_id;
  std::string group;
  std::string cell;
};

/// Subjects of the manifest (restricted to `selected` annotation ids when
/// given), grouped under `axis`. Deterministic order.
std::vector<PairSubject> collect_pair_subjects(
    const Manifest& manifest, GroupAxis axis,
    const std::unordered_set<std::string>* selected = nullptr);

struct PairRecord {
  std::string a;
  std::string b;
  bool genuine = false;
  std::string group;   // shared evaluation group (policy=all: "all")
  std::string cell_a;
  std::string cell_b;
};

/// Exhaustive pairs, within each evaluation group or across the whole
/// set. The pair count is checked against `ceiling` before any pair is
/// materialized; exceeding it throws EvalError naming the count.
std::vector<PairRecord> generate_pairs(const std::vector<PairSubject>& subjects,
                                       PairPolicy policy,
                                       uint64_t ceiling = 100000000ULL);

// --- scoring ---------------------------------------------------------------

/// Cosine similarity of two unit vectors (plain inner product).
double cosine_score(const std::vector<float>& a, const std::vector<float>& b);

struct TprResult {
  double tpr = 0.0;
  double threshold = 0.0;
  double achieved_fpr = 0.0;
  /// Set when no observed threshold reaches the target FPR; the reported
  /// operating point is then the closest one (lowest achievable FPR).
  bool degenerate = false;
  std::vector<std::string> warnings;
};

/// Empirical threshold selection: the smallest observed score whose
/// impostor pass rate is <= target_fpr; TPR is the fraction of genuine
/// scores at or above it. No interpolation between ranks; the achieved
/// FPR is reported to expose resolution limits.
TprResult tpr_at_fpr(const std::vector<double>& genuine,
                     const std::vector<double>& impostor, double target_fpr);

/// Scoring rule for verification pairs whose face was never detected.
enum class MissPolicy {
  /// Default: a genuine pair with a missed member scores -inf (fails at
  /// every threshold); an impostor pair with a missed member leaves the
  /// FPR denominator.
  genuine_fail,
  /// Alternative: pairs with a missed member are excluded on both sides.
  exclude_genuine,
};

std::string to_string(MissPolicy policy);
MissPolicy miss_policy_from_string(const std::string& s);

struct GroupVerificationStats {
  std::string group;
  double tpr = 0.0;
  double achieved_fpr = 0.0;
  double threshold = 0.0;
  size_t n_genuine = 0;   // genuine pairs in the TPR denominator
  size_t n_impostor = 0;  // impostor pairs in the FPR denominator
  size_t n_genuine_missed = 0;
  size_t n_impostor_excluded = 0;
  bool degenerate = false;
};

struct VerificationReport {
  std::vector<GroupVerificationStats> groups;
  MissPolicy policy = MissPolicy::genuine_fail;
  PairPolicy pair_policy = PairPolicy::within_group;
  size_t unmatched_detections = 0;  // detector false positives, never paired
  std::vector<std::string> warnings;
};

/// 1:1 verification assuming every face was detected perfectly:
/// embeddings are keyed by annotation_id and must cover every subject.
VerificationReport verify_perfect_detection(
    const Manifest& manifest,
    const std::unordered_set<std::string>* selected,
    const EmbeddingSet& embeddings, GroupAxis axis, double target_fpr,
    PairPolicy pair_policy = PairPolicy::within_group);

/// End-to-end verification on detector outputs: each annotation is
/// represented by its matched detection's embedding (greedy IoU matching
/// at iou_threshold); pairs with undetected members are scored per the
/// miss policy.
VerificationReport verify_end_to_end(
    const Manifest& manifest,
    const std::unordered_set<std::string>* selected,
    const std::vector<DetectionRecord>& detections,
    const EmbeddingSet& embeddings, double iou_threshold, GroupAxis axis,
    double target_fpr, MissPolicy miss_policy = MissPolicy::genuine_fail,
    PairPolicy pair_policy = PairPolicy::within_group);

}  // namespace faceval
