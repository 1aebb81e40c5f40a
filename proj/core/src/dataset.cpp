#include "faceval/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace faceval {

std::string to_string(Location v) {
  switch (v) {
    case Location::console: return "console";
    case Location::rearview: return "rearview";
    case Location::wheel: return "wheel";
  }
  return "?";
}

std::string to_string(Modality v) {
  return v == Modality::rgb ? "rgb" : "ir";
}

std::string to_string(Illumination v) {
  return v == Illumination::indoor ? "indoor" : "outdoor";
}

std::string to_string(AnnotationSource v) {
  return v == AnnotationSource::human ? "human" : "reconciled";
}

Location location_from_string(const std::string& s) {
  if (s == "console") return Location::console;
  if (s == "rearview") return Location::rearview;
  if (s == "wheel") return Location::wheel;
  throw ValidationError("unknown location '" + s + "'");
}

Modality modality_from_string(const std::string& s) {
  if (s == "rgb") return Modality::rgb;
  if (s == "ir") return Modality::ir;
  throw ValidationError("unknown modality '" + s + "'");
}

Illumination illumination_from_string(const std::string& s) {
  if (s == "indoor") return Illumination::indoor;
  if (s == "outdoor") return Illumination::outdoor;
  throw ValidationError("unknown illumination '" + s + "'");
}

AnnotationSource source_from_string(const std::string& s) {
  if (s == "human") return AnnotationSource::human;
  if (s == "reconciled") return AnnotationSource::reconciled;
  throw ValidationError("unknown annotation source '" + s + "'");
}

std::string ScenarioKey::label() const {
  return to_string(location) + ":" + to_string(modality) + ":" +
         to_string(illumination);
}

std::vector<ScenarioKey> all_scenario_cells() {
  std::vector<ScenarioKey> cells;
  for (auto loc : {Location::console, Location::rearview, Location::wheel}) {
    for (auto mod : {Modality::rgb, Modality::ir}) {
      for (auto ill : {Illumination::indoor, Illumination::outdoor}) {
        cells.push_back({loc, mod, ill});
      }
    }
  }
  return cells;
}

namespace {

void validate_annotation(const FaceAnnotation& a) {
  if (!(a.bbox.x_min < a.bbox.x_max)) {
    throw ValidationError("annotation '" + a.annotation_id +
                          "': bbox x_min >= x_max");
  }
  if (!(a.bbox.y_min < a.bbox.y_max)) {
    throw ValidationError("annotation '" + a.annotation_id +
                          "': bbox y_min >= y_max");
  }
  for (auto [angle, name] : {std::pair{a.pose.yaw, "yaw"},
                             std::pair{a.pose.pitch, "pitch"},
                             std::pair{a.pose.roll, "roll"}}) {
    if (!(angle >= -180.0 && angle <= 180.0)) {
      throw ValidationError("annotation '" + a.annotation_id + "': " + name +
                            " outside [-180, 180]");
    }
  }
}

}  // namespace

void validate_manifest(const Manifest& manifest) {
  std::unordered_set<std::string> frame_ids;
  std::unordered_set<std::string> annotation_ids;
  // capture_id -> (location, illumination) seen first.
  std::unordered_map<std::string, std::pair<Location, Illumination>> captures;

  for (const FrameRecord& f : manifest.frames) {
    if (!frame_ids.insert(f.frame_id).second) {
      throw ValidationError("duplicate frame_id '" + f.frame_id + "'");
    }
    if (f.width <= 0 || f.height <= 0) {
      throw ValidationError("frame '" + f.frame_id +
                            "': width and height must be positive");
    }
    if (f.qp && (*f.qp < 0 || *f.qp > 51)) {
      throw ValidationError("frame '" + f.frame_id + "': qp outside [0, 51]");
    }
    auto [it, inserted] =
        captures.try_emplace(f.capture_id, f.location, f.illumination);
    if (!inserted && it->second != std::pair{f.location, f.illumination}) {
      throw ValidationError("capture '" + f.capture_id +
                            "': frames disagree on location/illumination");
    }
    for (const FaceAnnotation& a : f.annotations) {
      if (!annotation_ids.insert(a.annotation_id).second) {
        throw ValidationError("duplicate annotation_id '" + a.annotation_id +
                              "'");
      }
      validate_annotation(a);
    }
  }
}

std::unordered_map<std::string, size_t> frame_index(const Manifest& manifest) {
  std::unordered_map<std::string, size_t> index;
  index.reserve(manifest.frames.size());
  for (size_t i = 0; i < manifest.frames.size(); ++i) {
    index.emplace(manifest.frames[i].frame_id, i);
  }
  return index;
}

std::unordered_map<std::string, std::pair<size_t, size_t>> annotation_index(
    const Manifest& manifest) {
  std::unordered_map<std::string, std::pair<size_t, size_t>> index;
  for (size_t i = 0; i < manifest.frames.size(); ++i) {
    const auto& anns = manifest.frames[i].annotations;
    for (size_t j = 0; j < anns.size(); ++j) {
      index.emplace(anns[j].annotation_id, std::pair{i, j});
    }
  }
  return index;
}

std::string to_string(GroupAxis axis) {
  switch (axis) {
    case GroupAxis::illumination: return "illumination";
    case GroupAxis::modality: return "modality";
    case GroupAxis::location: return "location";
    case GroupAxis::full_cell: return "full_cell";
  }
  return "?";
}

GroupAxis axis_from_string(const std::string& s) {
  if (s == "illumination") return GroupAxis::illumination;
  if (s == "modality") return GroupAxis::modality;
  if (s == "location") return GroupAxis::location;
  if (s == "full_cell") return GroupAxis::full_cell;
  throw ValidationError("unknown group axis '" + s + "'");
}

std::string group_label(const FrameRecord& frame, GroupAxis axis) {
  switch (axis) {
    case GroupAxis::illumination: return to_string(frame.illumination);
    case GroupAxis::modality: return to_string(frame.modality);
    case GroupAxis::location: return to_string(frame.location);
    case GroupAxis::full_cell: return ScenarioKey::of(frame).label();
  }
  return "?";
}

std::map<std::string, std::vector<size_t>> group_by_scenario(
    const Manifest& manifest, GroupAxis axis) {
  std::map<std::string, std::vector<size_t>> groups;
  for (size_t i = 0; i < manifest.frames.size(); ++i) {
    groups[group_label(manifest.frames[i], axis)].push_back(i);
  }
  return groups;
}

const std::vector<float>* EmbeddingSet::find(const std::string& ref) const {
  if (index_.size() != records.size()) {
    index_.clear();
    index_.reserve(records.size());
    for (size_t i = 0; i < records.size(); ++i) {
      index_.emplace(records[i].first, i);
    }
  }
  auto it = index_.find(ref);
  return it == index_.end() ? nullptr : &records[it->second].second;
}

void EmbeddingSet::add(std::string ref, std::vector<float> vector) {
  index_.clear();
  records.emplace_back(std::move(ref), std::move(vector));
}

void validate_embeddings(const EmbeddingSet& set) {
  std::unordered_set<std::string> refs;
  for (const auto& [ref, vec] : set.records) {
    if (!refs.insert(ref).second) {
      throw ValidationError("duplicate embedding ref '" + ref + "'");
    }
    if (vec.size() != set.dim) {
      throw ValidationError("embedding '" + ref +
                            "': dimension differs from the set's");
    }
    double norm_sq = 0.0;
    for (float v : vec) norm_sq += static_cast<double>(v) * v;
    if (std::abs(std::sqrt(norm_sq) - 1.0) > 1e-6) {
      throw ValidationError("embedding '" + ref + "': vector is not unit-norm");
    }
  }
}

}  // namespace faceval
