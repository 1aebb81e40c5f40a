#include "faceval/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "faceval/report.hpp"

namespace faceval {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

std::string ctx_of(const std::filesystem::path& path, size_t line) {
  return path.string() + ":" + std::to_string(line);
}

const json& req(const json& obj, const char* key, const std::string& ctx) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(ctx + ": missing field '" + std::string(key) + "'");
  }
  return *it;
}

double req_num(const json& obj, const char* key, const std::string& ctx) {
  const json& v = req(obj, key, ctx);
  if (!v.is_number()) {
    throw ParseError(ctx + ": field '" + std::string(key) + "' must be a number");
  }
  return v.get<double>();
}

std::string req_str(const json& obj, const char* key, const std::string& ctx) {
  const json& v = req(obj, key, ctx);
  if (!v.is_string()) {
    throw ParseError(ctx + ": field '" + std::string(key) + "' must be a string");
  }
  return v.get<std::string>();
}

Box parse_box(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.size() != 4) {
    throw ParseError(ctx + ": bbox must be [x_min,y_min,x_max,y_max]");
  }
  return Box{v[0].get<double>(), v[1].get<double>(), v[2].get<double>(),
             v[3].get<double>()};
}

Landmarks parse_landmarks(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.size() != 5) {
    throw ParseError(ctx + ": landmarks must be five [x,y] points");
  }
  Landmarks lm;
  for (size_t i = 0; i < 5; ++i) {
    if (!v[i].is_array() || v[i].size() != 2) {
      throw ParseError(ctx + ": landmarks must be five [x,y] points");
    }
    lm[i] = Point{v[i][0].get<double>(), v[i][1].get<double>()};
  }
  return lm;
}

FaceAnnotation parse_annotation(const json& v, const std::string& ctx) {
  FaceAnnotation a;
  a.annotation_id = req_str(v, "annotation_id", ctx);
  a.identity_id = req_str(v, "identity_id", ctx);
  a.bbox = parse_box(req(v, "bbox", ctx), ctx);
  a.landmarks = parse_landmarks(req(v, "landmarks", ctx), ctx);
  const json& pose = req(v, "pose", ctx);
  a.pose = Pose{req_num(pose, "yaw", ctx), req_num(pose, "pitch", ctx),
                req_num(pose, "roll", ctx)};
  a.source = source_from_string(req_str(v, "source", ctx));
  return a;
}

FrameRecord parse_frame(const json& v, const std::string& ctx) {
  FrameRecord f;
  f.frame_id = req_str(v, "frame_id", ctx);
  f.capture_id = req_str(v, "capture_id", ctx);
  f.location = location_from_string(req_str(v, "location", ctx));
  f.modality = modality_from_string(req_str(v, "modality", ctx));
  f.illumination = illumination_from_string(req_str(v, "illumination", ctx));
  if (auto it = v.find("qp"); it != v.end() && !it->is_null()) {
    if (!it->is_number_integer()) {
      throw ParseError(ctx + ": field 'qp' must be an integer");
    }
    f.qp = it->get<int>();
  }
  f.width = static_cast<int>(req_num(v, "width", ctx));
  f.height = static_cast<int>(req_num(v, "height", ctx));
  const json& anns = req(v, "annotations", ctx);
  if (!anns.is_array()) {
    throw ParseError(ctx + ": field 'annotations' must be an array");
  }
  for (const json& a : anns) {
    f.annotations.push_back(parse_annotation(a, ctx));
  }
  return f;
}

/// Applies fn to each non-empty line; fn receives (line_number, parsed json).
template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json v;
    try {
      v = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(ctx_of(path, line_no) + ": " + e.what());
    }
    fn(line_no, v);
  }
}

ojson box_json(const Box& b) {
  return ojson::array({b.x_min, b.y_min, b.x_max, b.y_max});
}

ojson landmarks_json(const Landmarks& lm) {
  ojson arr = ojson::array();
  for (const Point& p : lm) arr.push_back(ojson::array({p.x, p.y}));
  return arr;
}

ojson annotation_json(const FaceAnnotation& a) {
  ojson v;
  v["annotation_id"] = a.annotation_id;
  v["identity_id"] = a.identity_id;
  v["bbox"] = box_json(a.bbox);
  v["landmarks"] = landmarks_json(a.landmarks);
  v["pose"] = ojson{{"yaw", a.pose.yaw}, {"pitch", a.pose.pitch},
                    {"roll", a.pose.roll}};
  v["source"] = to_string(a.source);
  return v;
}

}  // namespace

Manifest load_manifest(const std::filesystem::path& path) {
  Manifest m;
  for_each_jsonl(path, [&](size_t line_no, const json& v) {
    m.frames.push_back(parse_frame(v, ctx_of(path, line_no)));
  });
  validate_manifest(m);
  return m;
}

std::string manifest_to_jsonl(const Manifest& manifest) {
  std::ostringstream out;
  for (const FrameRecord& f : manifest.frames) {
    ojson v;
    v["frame_id"] = f.frame_id;
    v["capture_id"] = f.capture_id;
    v["location"] = to_string(f.location);
    v["modality"] = to_string(f.modality);
    v["illumination"] = to_string(f.illumination);
    if (f.qp) v["qp"] = *f.qp;
    v["width"] = f.width;
    v["height"] = f.height;
    ojson anns = ojson::array();
    for (const FaceAnnotation& a : f.annotations) anns.push_back(annotation_json(a));
    v["annotations"] = std::move(anns);
    out << v.dump() << '\n';
  }
  return out.str();
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  write_text_atomic(path, manifest_to_jsonl(manifest));
}

std::vector<DetectionRecord> load_detections(const std::filesystem::path& path) {
  std::vector<DetectionRecord> detections;
  for_each_jsonl(path, [&](size_t line_no, const json& v) {
    const std::string ctx = ctx_of(path, line_no);
    DetectionRecord d;
    d.detection_id = req_str(v, "detection_id", ctx);
    d.frame_id = req_str(v, "frame_id", ctx);
    d.bbox = parse_box(req(v, "bbox", ctx), ctx);
    d.confidence = req_num(v, "confidence", ctx);
    d.landmarks = parse_landmarks(req(v, "landmarks", ctx), ctx);
    if (d.confidence < 0.0 || d.confidence > 1.0) {
      throw ValidationError("detection '" + d.detection_id +
                            "': confidence outside [0, 1]");
    }
    if (!d.bbox.valid()) {
      throw ValidationError("detection '" + d.detection_id +
                            "': degenerate bbox");
    }
    detections.push_back(std::move(d));
  });
  std::unordered_map<std::string, size_t> seen;
  for (const auto& d : detections) {
    if (!seen.emplace(d.detection_id, 1).second) {
      throw ValidationError("duplicate detection_id '" + d.detection_id + "'");
    }
  }
  return detections;
}

std::string detections_to_jsonl(const std::vector<DetectionRecord>& detections) {
  std::ostringstream out;
  for (const DetectionRecord& d : detections) {
    ojson v;
    v["detection_id"] = d.detection_id;
    v["frame_id"] = d.frame_id;
    v["bbox"] = box_json(d.bbox);
    v["confidence"] = d.confidence;
    v["landmarks"] = landmarks_json(d.landmarks);
    out << v.dump() << '\n';
  }
  return out.str();
}

void save_detections(const std::vector<DetectionRecord>& detections,
                     const std::filesystem::path& path) {
  write_text_atomic(path, detections_to_jsonl(detections));
}

namespace {

constexpr char kEmbeddingMagic[4] = {'F', 'E', 'V', '1'};

void append_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint32_t read_u32(const std::string& buf, size_t& pos, const std::string& ctx) {
  if (pos + 4 > buf.size()) throw ParseError(ctx + ": truncated embedding file");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

uint64_t read_u64(const std::string& buf, size_t& pos, const std::string& ctx) {
  if (pos + 8 > buf.size()) throw ParseError(ctx + ": truncated embedding file");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  pos += 8;
  return v;
}

EmbeddingSet load_embeddings_binary(const std::filesystem::path& path) {
  const std::string buf = read_text(path);
  const std::string ctx = path.string();
  size_t pos = 4;  // magic already checked
  EmbeddingSet set;
  set.dim = read_u32(buf, pos, ctx);
  const uint64_t n = read_u64(buf, pos, ctx);
  for (uint64_t i = 0; i < n; ++i) {
    const uint32_t id_len = read_u32(buf, pos, ctx);
    if (pos + id_len > buf.size()) throw ParseError(ctx + ": truncated embedding file");
    std::string id = buf.substr(pos, id_len);
    pos += id_len;
    if (pos + 4ull * set.dim > buf.size()) {
      throw ParseError(ctx + ": truncated embedding file");
    }
    std::vector<float> vec(set.dim);
    static_assert(sizeof(float) == 4 && std::endian::native == std::endian::little);
    std::memcpy(vec.data(), buf.data() + pos, 4ull * set.dim);
    pos += 4ull * set.dim;
    set.add(std::move(id), std::move(vec));
  }
  if (pos != buf.size()) throw ParseError(ctx + ": trailing bytes after records");
  return set;
}

}  // namespace

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open '" + path.string() + "'");
    char magic[4] = {};
    probe.read(magic, 4);
    if (probe.gcount() == 4 && std::memcmp(magic, kEmbeddingMagic, 4) == 0) {
      EmbeddingSet set = load_embeddings_binary(path);
      validate_embeddings(set);
      return set;
    }
  }
  EmbeddingSet set;
  for_each_jsonl(path, [&](size_t line_no, const json& v) {
    const std::string ctx = ctx_of(path, line_no);
    std::string ref = req_str(v, "subject_ref", ctx);
    const json& vecj = req(v, "vector", ctx);
    if (!vecj.is_array() || vecj.empty()) {
      throw ParseError(ctx + ": field 'vector' must be a non-empty array");
    }
    std::vector<float> vec;
    vec.reserve(vecj.size());
    for (const json& x : vecj) vec.push_back(x.get<float>());
    if (set.records.empty()) set.dim = vec.size();
    set.add(std::move(ref), std::move(vec));
  });
  validate_embeddings(set);
  return set;
}

void save_embeddings_jsonl(const EmbeddingSet& set,
                           const std::filesystem::path& path) {
  std::ostringstream out;
  for (const auto& [ref, vec] : set.records) {
    ojson v;
    v["subject_ref"] = ref;
    v["vector"] = vec;
    out << v.dump() << '\n';
  }
  write_text_atomic(path, out.str());
}

void save_embeddings_binary(const EmbeddingSet& set,
                            const std::filesystem::path& path) {
  std::string out;
  out.append(kEmbeddingMagic, 4);
  append_u32(out, static_cast<uint32_t>(set.dim));
  append_u64(out, set.records.size());
  for (const auto& [ref, vec] : set.records) {
    append_u32(out, static_cast<uint32_t>(ref.size()));
    out.append(ref);
    static_assert(sizeof(float) == 4 && std::endian::native == std::endian::little);
    out.append(reinterpret_cast<const char*>(vec.data()), 4 * vec.size());
  }
  write_text_atomic(path, out);
}

}  // namespace faceval
