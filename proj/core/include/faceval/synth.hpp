#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "faceval/dataset.hpp"
#include "faceval/homography.hpp"

namespace faceval {

struct GaussianMixtureSpec {
  std::vector<double> means;
  std::vector<double> sds;
  std::vector<double> weights;
};

struct PoseModelSpec {
  GaussianMixtureSpec yaw;
  GaussianMixtureSpec pitch;
  GaussianMixtureSpec roll;
};

struct DetectorQpSpec {
  double miss = 0.0;
  double jitter_sd = 0.0;
};

/// Extra miss probability as a function of |yaw|: low_extra below
/// low_deg, high_extra above high_deg, linear in between.
struct PoseMissSpec {
  double low_deg = 30.0;
  double high_deg = 60.0;
  double low_extra = 0.0;
  double high_extra = 0.0;
};

struct DetectorModelSpec {
  std::map<int, DetectorQpSpec> qp_table;
  double confidence_noise_sd = 0.05;
  PoseMissSpec pose_miss;
  /// Additive miss probability per full scenario cell label.
  std::map<std::string, double> cell_miss_extra;
  /// Additive miss probability for faces human annotators also dropped;
  /// models the shared difficulty behind annotation inconsistency.
  double hard_face_miss_extra = 0.9;
};

struct EmbeddingModelSpec {
  int dim = 128;
  /// Per-component sd of the tangent-space Gaussian perturbation applied
  /// to the identity centroid before renormalization.
  double noise_sd = 0.05;
};

struct CorrespondenceModelSpec {
  int per_capture = 24;
  double noise_sd = 0.5;
  double outlier_fraction = 0.0;
};

struct SynthConfig {
  uint64_t seed = 1;
  int n_identities = 10;
  int occupants_per_capture = 2;  // must divide n_identities
  int frames_per_identity_cell = 20;
  int frame_width = 1280;
  int frame_height = 800;
  double face_min_px = 90.0;
  double face_max_px = 130.0;
  PoseModelSpec pose;  // defaulted in default_synth_config()
  /// Per-cell frame count multipliers (full-cell labels); mimics
  /// scenario imbalance. Missing cells default to 1.
  std::map<std::string, double> cell_multipliers;
  /// Row-major 3x3 RGB->IR map per location label; defaults model the
  /// slight fixed camera offsets.
  std::map<std::string, std::array<double, 9>> homographies;
  /// Probability that a face is dropped from the HUMAN annotation set,
  /// per full-cell label. Missing cells default to 0.
  std::map<std::string, double> inconsistency;
  double human_box_jitter_sd = 0.0;
  DetectorModelSpec detector;
  EmbeddingModelSpec embedding;
  CorrespondenceModelSpec correspondences;
};

/// The documented out-of-the-box configuration: 10 identities x 12 cells
/// x 20 frames (~2400 annotations), six-QP degradation table, clean
/// annotations, separable embeddings.
SynthConfig default_synth_config();

/// Throws ValidationError naming the offending field.
void validate_synth_config(const SynthConfig& config);

SynthConfig synth_config_from_json_text(const std::string& text,
                                        const std::string& context);
SynthConfig load_synth_config(const std::filesystem::path& path);
std::string synth_config_to_json(const SynthConfig& config);

struct SynthTruth {
  /// Complete, consistent annotations: every occupant annotated in every
  /// modality, IR geometry derived from RGB through the known homography.
  Manifest true_manifest;
  /// The truth minus the per-cell dropped ("hard") faces.
  Manifest human_manifest;
  std::vector<Correspondence> correspondences;
  std::map<std::string, Eigen::Matrix3d> homographies;  // by location label
  std::unordered_set<std::string> hard_annotations;
};

SynthTruth generate_truth(const SynthConfig& config);

struct SimulatedDetections {
  std::vector<DetectionRecord> detections;
  /// detection_id -> source annotation_id (generator-known ground truth).
  std::map<std::string, std::string> provenance;
};

/// Per-face detection with probability 1 - miss, where miss combines the
/// QP table entry, the pose difficulty ramp, the per-cell extra and the
/// hard-face extra. Detected boxes and landmarks are jittered with the
/// QP's sd; confidence = clamp(IoU-with-truth + N(0, noise), 0, 1), so
/// better detections rank higher. Throws EvalError on a qp missing from
/// the table.
SimulatedDetections simulate_detector(
    const Manifest& truth, const SynthConfig& config, int qp,
    const std::unordered_set<std::string>* hard_annotations = nullptr);

/// Unit embeddings: identity centroid plus tangent-space Gaussian noise,
/// renormalized. subjects are (ref id, identity id) pairs; refs may be
/// annotation ids or detection ids.
EmbeddingSet simulate_embeddings(
    const std::vector<std::pair<std::string, std::string>>& subjects,
    const EmbeddingModelSpec& model, uint64_t seed);

struct AlteredPoseResult {
  Manifest manifest;
  std::vector<std::string> warnings;
};

/// Negative-control resampling: keeps a subset of annotations whose
/// per-bin pose counts are as equal as the data allows (empty bins are
/// reported and filled as far as possible).
AlteredPoseResult altered_pose_manifest(const Manifest& truth,
                                        const std::vector<double>& bin_edges,
                                        uint64_t seed);

}  // namespace faceval
