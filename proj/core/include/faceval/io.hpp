#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "faceval/dataset.hpp"

namespace faceval {

// Manifest files are JSON Lines, UTF-8, one frame object per line:
//   {"frame_id":..., "capture_id":..., "location":..., "modality":...,
//    "illumination":..., "qp":..., "width":..., "height":...,
//    "annotations":[{"annotation_id":..., "identity_id":...,
//      "bbox":[x_min,y_min,x_max,y_max], "landmarks":[[x,y]*5],
//      "pose":{"yaw":..,"pitch":..,"roll":..}, "source":...}]}
// "qp" is omitted for uncompressed source frames.

/// Parses and fully validates a manifest. Parse errors carry the line
/// number; invariant violations name the offending id.
Manifest load_manifest(const std::filesystem::path& path);

std::string manifest_to_jsonl(const Manifest& manifest);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

// Detections: JSON Lines with detection_id, frame_id, bbox, confidence,
// landmarks.
std::vector<DetectionRecord> load_detections(const std::filesystem::path& path);
std::string detections_to_jsonl(const std::vector<DetectionRecord>& detections);
void save_detections(const std::vector<DetectionRecord>& detections,
                     const std::filesystem::path& path);

// Embeddings come in two encodings, distinguished by the leading bytes:
//  - JSON Lines: {"subject_ref":..., "vector":[...]}
//  - binary sidecar: magic "FEV1", u32 dim, u64 count, then per record a
//    u32 id length, the id bytes, and dim little-endian 32-bit floats.
EmbeddingSet load_embeddings(const std::filesystem::path& path);
void save_embeddings_jsonl(const EmbeddingSet& set,
                           const std::filesystem::path& path);
void save_embeddings_binary(const EmbeddingSet& set,
                            const std::filesystem::path& path);

}  // namespace faceval
