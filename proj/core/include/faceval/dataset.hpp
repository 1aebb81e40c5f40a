#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "faceval/errors.hpp"
#include "faceval/geometry.hpp"

namespace faceval {

enum class Location { console, rearview, wheel };
enum class Modality { rgb, ir };
enum class Illumination { indoor, outdoor };
enum class AnnotationSource { human, reconciled };

std::string to_string(Location v);
std::string to_string(Modality v);
std::string to_string(Illumination v);
std::string to_string(AnnotationSource v);

Location location_from_string(const std::string& s);
Modality modality_from_string(const std::string& s);
Illumination illumination_from_string(const std::string& s);
AnnotationSource source_from_string(const std::string& s);

/// Head pose in degrees, each angle in [-180, 180].
struct Pose {
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  friend bool operator==(const Pose&, const Pose&) = default;
};

/// One identity-labelled face in a frame. Landmarks may fall outside the
/// frame bounds (partially visible faces are legal).
struct FaceAnnotation {
  std::string annotation_id;
  std::string identity_id;
  Box bbox;
  Landmarks landmarks{};
  Pose pose;
  AnnotationSource source = AnnotationSource::human;

  friend bool operator==(const FaceAnnotation&, const FaceAnnotation&) = default;
};

/// A captured frame. `capture_id` ties together the frames of the same
/// physical scene/instant across camera modalities. `qp` is the encoder
/// quantization parameter; absent means the uncompressed source.
struct FrameRecord {
  std::string frame_id;
  std::string capture_id;
  Location location = Location::console;
  Modality modality = Modality::rgb;
  Illumination illumination = Illumination::indoor;
  std::optional<int> qp;
  int width = 0;
  int height = 0;
  std::vector<FaceAnnotation> annotations;

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

/// One cell of the capture setup: (location, modality, illumination).
struct ScenarioKey {
  Location location;
  Modality modality;
  Illumination illumination;

  static ScenarioKey of(const FrameRecord& f) {
    return {f.location, f.modality, f.illumination};
  }
  std::string label() const;

  friend auto operator<=>(const ScenarioKey&, const ScenarioKey&) = default;
};

/// All 12 cells of the enum cross-product, in deterministic order.
std::vector<ScenarioKey> all_scenario_cells();

struct Manifest {
  std::vector<FrameRecord> frames;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Checks every type invariant plus manifest-level uniqueness and
/// capture agreement. Throws ValidationError naming the offending id.
void validate_manifest(const Manifest& manifest);

/// frame_id -> index into manifest.frames.
std::unordered_map<std::string, size_t> frame_index(const Manifest& manifest);

/// annotation_id -> (frame index, annotation index).
std::unordered_map<std::string, std::pair<size_t, size_t>> annotation_index(
    const Manifest& manifest);

enum class GroupAxis { illumination, modality, location, full_cell };

std::string to_string(GroupAxis axis);
GroupAxis axis_from_string(const std::string& s);

/// Group label of a frame under an axis, e.g. "rgb" or "console:rgb:indoor".
std::string group_label(const FrameRecord& frame, GroupAxis axis);

/// Partition of the manifest's frames (as indices) by group label.
/// Every frame lands in exactly one group; only occupied groups appear.
std::map<std::string, std::vector<size_t>> group_by_scenario(
    const Manifest& manifest, GroupAxis axis);

/// Externally produced detector output for one frame.
struct DetectionRecord {
  std::string detection_id;
  std::string frame_id;
  Box bbox;
  double confidence = 0.0;
  Landmarks landmarks{};

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

/// Unit-norm face descriptors keyed by detection_id or annotation_id.
/// All vectors in a set share the same dimension.
struct EmbeddingSet {
  size_t dim = 0;
  std::vector<std::pair<std::string, std::vector<float>>> records;

  const std::vector<float>* find(const std::string& ref) const;
  void add(std::string ref, std::vector<float> vector);

 private:
  mutable std::unordered_map<std::string, size_t> index_;
};

/// Throws ValidationError on norm/dimension/duplicate violations.
void validate_embeddings(const EmbeddingSet& set);

}  // namespace faceval
