#include "faceval/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "faceval/balancer.hpp"
#include "faceval/histogram.hpp"
#include "faceval/report.hpp"
#include "faceval/rng.hpp"

namespace faceval {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

SynthConfig default_synth_config() {
  SynthConfig c;
  c.pose.yaw = {{0.0, -55.0, 55.0}, {18.0, 20.0, 20.0}, {0.6, 0.2, 0.2}};
  c.pose.pitch = {{-8.0}, {12.0}, {1.0}};
  c.pose.roll = {{0.0}, {8.0}, {1.0}};
  // Slight fixed per-location camera offsets (affine: translation plus a
  // touch of scale/rotation), mirroring a rigid two-camera rig.
  c.homographies["console"] = {1.010, -0.003, 12.0, 0.003, 1.010, -7.0, 0, 0, 1};
  c.homographies["rearview"] = {0.994, 0.002, -9.0, -0.002, 0.994, 5.0, 0, 0, 1};
  c.homographies["wheel"] = {1.005, 0.0, 4.0, 0.0, 1.005, 10.5, 0, 0, 1};
  c.detector.qp_table = {{18, {0.05, 0.5}}, {24, {0.10, 1.0}},
                         {30, {0.16, 2.0}}, {36, {0.24, 3.0}},
                         {43, {0.32, 4.5}}, {50, {0.40, 6.0}}};
  return c;
}

namespace {

ScenarioKey parse_cell_label(const std::string& label, const char* field) {
  const size_t p1 = label.find(':');
  const size_t p2 = label.find(':', p1 == std::string::npos ? 0 : p1 + 1);
  if (p1 == std::string::npos || p2 == std::string::npos) {
    throw ValidationError(std::string(field) + ": '" + label +
                          "' is not a location:modality:illumination label");
  }
  return {location_from_string(label.substr(0, p1)),
          modality_from_string(label.substr(p1 + 1, p2 - p1 - 1)),
          illumination_from_string(label.substr(p2 + 1))};
}

void check_probability(double v, const std::string& field) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ValidationError(field + " = " + format_double(v) +
                          " outside [0, 1]");
  }
}

void check_mixture(const GaussianMixtureSpec& m, const std::string& field) {
  if (m.means.empty() || m.means.size() != m.sds.size() ||
      m.means.size() != m.weights.size()) {
    throw ValidationError(field + ": means/sds/weights sizes must match and "
                          "be non-empty");
  }
  double sum = 0.0;
  for (double w : m.weights) {
    if (w < 0.0) throw ValidationError(field + ": negative mixture weight");
    sum += w;
  }
  if (!(sum > 0.0)) throw ValidationError(field + ": weights sum to zero");
  for (double sd : m.sds) {
    if (sd < 0.0) throw ValidationError(field + ": negative sd");
  }
}

double sample_mixture(const GaussianMixtureSpec& m, Rng& rng) {
  double sum = 0.0;
  for (double w : m.weights) sum += w;
  double u = rng.uniform() * sum;
  size_t comp = m.weights.size() - 1;
  for (size_t i = 0; i < m.weights.size(); ++i) {
    if (u < m.weights[i]) {
      comp = i;
      break;
    }
    u -= m.weights[i];
  }
  return std::clamp(rng.normal(m.means[comp], m.sds[comp]), -180.0, 180.0);
}

}  // namespace

void validate_synth_config(const SynthConfig& c) {
  if (c.n_identities < 1) throw ValidationError("n_identities must be >= 1");
  if (c.occupants_per_capture < 1) {
    throw ValidationError("occupants_per_capture must be >= 1");
  }
  if (c.n_identities % c.occupants_per_capture != 0) {
    throw ValidationError("occupants_per_capture must divide n_identities");
  }
  if (c.frames_per_identity_cell < 1) {
    throw ValidationError("frames_per_identity_cell must be >= 1");
  }
  if (c.frame_width < 1 || c.frame_height < 1) {
    throw ValidationError("frame_width/frame_height must be positive");
  }
  if (!(c.face_min_px > 0.0 && c.face_max_px >= c.face_min_px)) {
    throw ValidationError("face_min_px/face_max_px must satisfy 0 < min <= max");
  }
  check_mixture(c.pose.yaw, "pose.yaw");
  check_mixture(c.pose.pitch, "pose.pitch");
  check_mixture(c.pose.roll, "pose.roll");
  for (const auto& [label, mult] : c.cell_multipliers) {
    parse_cell_label(label, "cell_multipliers");
    if (mult < 0.0) {
      throw ValidationError("cell_multipliers['" + label + "'] is negative");
    }
  }
  for (const auto& [label, p] : c.inconsistency) {
    parse_cell_label(label, "inconsistency");
    check_probability(p, "inconsistency['" + label + "']");
  }
  for (const auto& [label, mat] : c.homographies) {
    location_from_string(label);
    Eigen::Matrix3d h;
    for (int r = 0; r < 3; ++r) {
      for (int col = 0; col < 3; ++col) h(r, col) = mat[3 * r + col];
    }
    if (std::abs(h.determinant()) < 1e-12) {
      throw ValidationError("homographies['" + label + "'] is singular");
    }
  }
  if (c.human_box_jitter_sd < 0.0) {
    throw ValidationError("human_box_jitter_sd is negative");
  }
  if (c.detector.qp_table.empty()) {
    throw ValidationError("detector.qp_table must not be empty");
  }
  for (const auto& [qp, spec] : c.detector.qp_table) {
    if (qp < 0 || qp > 51) {
      throw ValidationError("detector.qp_table key " + std::to_string(qp) +
                            " outside [0, 51]");
    }
    check_probability(spec.miss, "detector.qp_table[" + std::to_string(qp) +
                                     "].miss");
    if (spec.jitter_sd < 0.0) {
      throw ValidationError("detector.qp_table[" + std::to_string(qp) +
                            "].jitter_sd is negative");
    }
  }
  if (c.detector.confidence_noise_sd < 0.0) {
    throw ValidationError("detector.confidence_noise_sd is negative");
  }
  const PoseMissSpec& pm = c.detector.pose_miss;
  if (!(pm.low_deg >= 0.0 && pm.high_deg >= pm.low_deg)) {
    throw ValidationError("detector.pose_miss: need 0 <= low_deg <= high_deg");
  }
  check_probability(pm.low_extra, "detector.pose_miss.low_extra");
  check_probability(pm.high_extra, "detector.pose_miss.high_extra");
  for (const auto& [label, extra] : c.detector.cell_miss_extra) {
    parse_cell_label(label, "detector.cell_miss_extra");
    check_probability(extra, "detector.cell_miss_extra['" + label + "']");
  }
  check_probability(c.detector.hard_face_miss_extra,
                    "detector.hard_face_miss_extra");
  if (c.embedding.dim < 8) throw ValidationError("embedding.dim must be >= 8");
  if (c.embedding.noise_sd < 0.0) {
    throw ValidationError("embedding.noise_sd is negative");
  }
  if (c.correspondences.per_capture < 0) {
    throw ValidationError("correspondences.per_capture is negative");
  }
  if (c.correspondences.noise_sd < 0.0) {
    throw ValidationError("correspondences.noise_sd is negative");
  }
  check_probability(c.correspondences.outlier_fraction,
                    "correspondences.outlier_fraction");
}

namespace {

GaussianMixtureSpec mixture_from_json(const json& v, const std::string& field) {
  GaussianMixtureSpec m;
  m.means = v.at("means").get<std::vector<double>>();
  m.sds = v.at("sds").get<std::vector<double>>();
  m.weights = v.at("weights").get<std::vector<double>>();
  check_mixture(m, field);
  return m;
}

ojson mixture_to_json(const GaussianMixtureSpec& m) {
  return ojson{{"means", m.means}, {"sds", m.sds}, {"weights", m.weights}};
}

}  // namespace

SynthConfig synth_config_from_json_text(const std::string& text,
                                        const std::string& context) {
  json v;
  try {
    v = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(context + ": " + e.what());
  }
  if (!v.is_object()) throw ParseError(context + ": expected a JSON object");

  SynthConfig c = default_synth_config();
  if (v.contains("seed")) c.seed = v["seed"].get<uint64_t>();
  if (v.contains("n_identities")) c.n_identities = v["n_identities"].get<int>();
  if (v.contains("occupants_per_capture")) {
    c.occupants_per_capture = v["occupants_per_capture"].get<int>();
  }
  if (v.contains("frames_per_identity_cell")) {
    c.frames_per_identity_cell = v["frames_per_identity_cell"].get<int>();
  }
  if (v.contains("frame_width")) c.frame_width = v["frame_width"].get<int>();
  if (v.contains("frame_height")) c.frame_height = v["frame_height"].get<int>();
  if (v.contains("face_min_px")) c.face_min_px = v["face_min_px"].get<double>();
  if (v.contains("face_max_px")) c.face_max_px = v["face_max_px"].get<double>();
  if (v.contains("pose")) {
    const json& p = v["pose"];
    if (p.contains("yaw")) c.pose.yaw = mixture_from_json(p["yaw"], "pose.yaw");
    if (p.contains("pitch")) {
      c.pose.pitch = mixture_from_json(p["pitch"], "pose.pitch");
    }
    if (p.contains("roll")) c.pose.roll = mixture_from_json(p["roll"], "pose.roll");
  }
  if (v.contains("cell_multipliers")) {
    c.cell_multipliers.clear();
    for (const auto& [key, val] : v["cell_multipliers"].items()) {
      c.cell_multipliers[key] = val.get<double>();
    }
  }
  if (v.contains("homographies")) {
    c.homographies.clear();
    for (const auto& [key, val] : v["homographies"].items()) {
      if (!val.is_array() || val.size() != 9) {
        throw ParseError(context + ": homographies['" + key +
                         "'] must hold 9 row-major values");
      }
      std::array<double, 9> mat;
      for (size_t i = 0; i < 9; ++i) mat[i] = val[i].get<double>();
      c.homographies[key] = mat;
    }
  }
  if (v.contains("inconsistency")) {
    c.inconsistency.clear();
    for (const auto& [key, val] : v["inconsistency"].items()) {
      c.inconsistency[key] = val.get<double>();
    }
  }
  if (v.contains("human_box_jitter_sd")) {
    c.human_box_jitter_sd = v["human_box_jitter_sd"].get<double>();
  }
  if (v.contains("detector")) {
    const json& d = v["detector"];
    if (d.contains("qp_table")) {
      c.detector.qp_table.clear();
      for (const auto& [key, val] : d["qp_table"].items()) {
        DetectorQpSpec spec;
        spec.miss = val.at("miss").get<double>();
        spec.jitter_sd = val.value("jitter_sd", 0.0);
        c.detector.qp_table[std::stoi(key)] = spec;
      }
    }
    if (d.contains("confidence_noise_sd")) {
      c.detector.confidence_noise_sd = d["confidence_noise_sd"].get<double>();
    }
    if (d.contains("pose_miss")) {
      const json& p = d["pose_miss"];
      c.detector.pose_miss.low_deg = p.value("low_deg", 30.0);
      c.detector.pose_miss.high_deg = p.value("high_deg", 60.0);
      c.detector.pose_miss.low_extra = p.value("low_extra", 0.0);
      c.detector.pose_miss.high_extra = p.value("high_extra", 0.0);
    }
    if (d.contains("cell_miss_extra")) {
      c.detector.cell_miss_extra.clear();
      for (const auto& [key, val] : d["cell_miss_extra"].items()) {
        c.detector.cell_miss_extra[key] = val.get<double>();
      }
    }
    if (d.contains("hard_face_miss_extra")) {
      c.detector.hard_face_miss_extra = d["hard_face_miss_extra"].get<double>();
    }
  }
  if (v.contains("embedding")) {
    const json& e = v["embedding"];
    if (e.contains("dim")) c.embedding.dim = e["dim"].get<int>();
    if (e.contains("noise_sd")) c.embedding.noise_sd = e["noise_sd"].get<double>();
  }
  if (v.contains("correspondences")) {
    const json& cr = v["correspondences"];
    if (cr.contains("per_capture")) {
      c.correspondences.per_capture = cr["per_capture"].get<int>();
    }
    if (cr.contains("noise_sd")) {
      c.correspondences.noise_sd = cr["noise_sd"].get<double>();
    }
    if (cr.contains("outlier_fraction")) {
      c.correspondences.outlier_fraction = cr["outlier_fraction"].get<double>();
    }
  }
  validate_synth_config(c);
  return c;
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
  return synth_config_from_json_text(read_text(path), path.string());
}

std::string synth_config_to_json(const SynthConfig& c) {
  ojson v;
  v["seed"] = c.seed;
  v["n_identities"] = c.n_identities;
  v["occupants_per_capture"] = c.occupants_per_capture;
  v["frames_per_identity_cell"] = c.frames_per_identity_cell;
  v["frame_width"] = c.frame_width;
  v["frame_height"] = c.frame_height;
  v["face_min_px"] = c.face_min_px;
  v["face_max_px"] = c.face_max_px;
  v["pose"] = ojson{{"yaw", mixture_to_json(c.pose.yaw)},
                    {"pitch", mixture_to_json(c.pose.pitch)},
                    {"roll", mixture_to_json(c.pose.roll)}};
  v["cell_multipliers"] = c.cell_multipliers;
  ojson homs;
  for (const auto& [label, mat] : c.homographies) homs[label] = mat;
  v["homographies"] = std::move(homs);
  v["inconsistency"] = c.inconsistency;
  v["human_box_jitter_sd"] = c.human_box_jitter_sd;
  ojson qp_table;
  for (const auto& [qp, spec] : c.detector.qp_table) {
    qp_table[std::to_string(qp)] =
        ojson{{"miss", spec.miss}, {"jitter_sd", spec.jitter_sd}};
  }
  v["detector"] = ojson{
      {"qp_table", std::move(qp_table)},
      {"confidence_noise_sd", c.detector.confidence_noise_sd},
      {"pose_miss", ojson{{"low_deg", c.detector.pose_miss.low_deg},
                          {"high_deg", c.detector.pose_miss.high_deg},
                          {"low_extra", c.detector.pose_miss.low_extra},
                          {"high_extra", c.detector.pose_miss.high_extra}}},
      {"cell_miss_extra", c.detector.cell_miss_extra},
      {"hard_face_miss_extra", c.detector.hard_face_miss_extra}};
  v["embedding"] = ojson{{"dim", c.embedding.dim},
                         {"noise_sd", c.embedding.noise_sd}};
  v["correspondences"] =
      ojson{{"per_capture", c.correspondences.per_capture},
            {"noise_sd", c.correspondences.noise_sd},
            {"outlier_fraction", c.correspondences.outlier_fraction}};
  return v.dump(2) + "\n";
}

namespace {

std::string identity_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "id%03d", i);
  return buf;
}

Landmarks canonical_landmarks(const Box& b) {
  const double w = b.width(), h = b.height();
  return Landmarks{{{b.x_min + 0.30 * w, b.y_min + 0.38 * h},
                    {b.x_min + 0.70 * w, b.y_min + 0.38 * h},
                    {b.x_min + 0.50 * w, b.y_min + 0.58 * h},
                    {b.x_min + 0.34 * w, b.y_min + 0.78 * h},
                    {b.x_min + 0.66 * w, b.y_min + 0.78 * h}}};
}

double cell_value(const std::map<std::string, double>& table,
                  const std::string& label, double fallback) {
  auto it = table.find(label);
  return it == table.end() ? fallback : it->second;
}

}  // namespace

SynthTruth generate_truth(const SynthConfig& config) {
  validate_synth_config(config);
  SynthTruth out;
  for (const auto& [label, mat] : config.homographies) {
    Eigen::Matrix3d h;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) h(r, c) = mat[3 * r + c];
    }
    out.homographies[label] = h;
  }

  const int groups = config.n_identities / config.occupants_per_capture;
  const double fw = config.frame_width, fh = config.frame_height;

  for (Location loc : {Location::console, Location::rearview, Location::wheel}) {
    const Eigen::Matrix3d h = out.homographies.count(to_string(loc))
                                  ? out.homographies.at(to_string(loc))
                                  : Eigen::Matrix3d::Identity();
    for (Illumination ill : {Illumination::indoor, Illumination::outdoor}) {
      const std::string rgb_cell =
          ScenarioKey{loc, Modality::rgb, ill}.label();
      const std::string ir_cell = ScenarioKey{loc, Modality::ir, ill}.label();
      const int n_rgb = static_cast<int>(std::lround(
          config.frames_per_identity_cell *
          cell_value(config.cell_multipliers, rgb_cell, 1.0)));
      const int n_ir = static_cast<int>(std::lround(
          config.frames_per_identity_cell *
          cell_value(config.cell_multipliers, ir_cell, 1.0)));
      const int t_max = std::max(n_rgb, n_ir);

      for (int g = 0; g < groups; ++g) {
        for (int t = 0; t < t_max; ++t) {
          const std::string capture_id = "c_" + to_string(loc) + "_" +
                                         to_string(ill) + "_g" +
                                         std::to_string(g) + "_t" +
                                         std::to_string(t);
          const bool has_rgb = t < n_rgb;
          const bool has_ir = t < n_ir;

          FrameRecord rgb_frame{capture_id + "_rgb", capture_id, loc,
                                Modality::rgb, ill, std::nullopt,
                                config.frame_width, config.frame_height, {}};
          FrameRecord ir_frame{capture_id + "_ir", capture_id, loc,
                               Modality::ir, ill, std::nullopt,
                               config.frame_width, config.frame_height, {}};

          for (int s = 0; s < config.occupants_per_capture; ++s) {
            const std::string identity =
                identity_name(g * config.occupants_per_capture + s);
            Rng rng(Rng::derive(config.seed, "face:" + capture_id + ":" + identity));

            Pose pose{sample_mixture(config.pose.yaw, rng),
                      sample_mixture(config.pose.pitch, rng),
                      sample_mixture(config.pose.roll, rng)};
            const double slot_w = fw / config.occupants_per_capture;
            const double cx = slot_w * (s + 0.5) + rng.uniform(-0.06, 0.06) * slot_w;
            const double cy = fh * 0.45 + rng.uniform(-0.09, 0.09) * fh;
            const double w = rng.uniform(config.face_min_px, config.face_max_px);
            const double hgt = 1.25 * w;
            const Box rgb_box{cx - w / 2, cy - hgt / 2, cx + w / 2, cy + hgt / 2};
            const bool hard_rgb = rng.bernoulli(
                cell_value(config.inconsistency, rgb_cell, 0.0));
            const bool hard_ir =
                rng.bernoulli(cell_value(config.inconsistency, ir_cell, 0.0));

            if (has_rgb) {
              FaceAnnotation a;
              a.annotation_id = capture_id + "_" + identity + "_rgb";
              a.identity_id = identity;
              a.bbox = rgb_box;
              a.landmarks = canonical_landmarks(rgb_box);
              a.pose = pose;
              rgb_frame.annotations.push_back(a);
              if (hard_rgb) out.hard_annotations.insert(a.annotation_id);
            }
            if (has_ir) {
              FaceAnnotation a;
              a.annotation_id = capture_id + "_" + identity + "_ir";
              a.identity_id = identity;
              a.bbox = warp_box(h, rgb_box);
              a.landmarks = warp_landmarks(h, canonical_landmarks(rgb_box));
              a.pose = pose;
              ir_frame.annotations.push_back(a);
              if (hard_ir) out.hard_annotations.insert(a.annotation_id);
            }
          }
          if (has_rgb) out.true_manifest.frames.push_back(std::move(rgb_frame));
          if (has_ir) out.true_manifest.frames.push_back(std::move(ir_frame));

          if (has_rgb && has_ir && config.correspondences.per_capture > 0) {
            Rng rng(Rng::derive(config.seed, "corr:" + capture_id));
            for (int i = 0; i < config.correspondences.per_capture; ++i) {
              Correspondence c;
              c.capture_id = capture_id;
              c.src = {rng.uniform(0.0, fw), rng.uniform(0.0, fh)};
              if (rng.bernoulli(config.correspondences.outlier_fraction)) {
                c.dst = {rng.uniform(0.0, fw), rng.uniform(0.0, fh)};
              } else {
                const Point mapped = warp_point(h, c.src);
                c.dst = {mapped.x + rng.normal(0.0, config.correspondences.noise_sd),
                         mapped.y + rng.normal(0.0, config.correspondences.noise_sd)};
              }
              out.correspondences.push_back(std::move(c));
            }
          }
        }
      }
    }
  }

  // Human manifest: the truth minus the hard faces, optionally with
  // annotation jitter.
  out.human_manifest = out.true_manifest;
  for (FrameRecord& f : out.human_manifest.frames) {
    std::vector<FaceAnnotation> kept;
    for (FaceAnnotation& a : f.annotations) {
      if (out.hard_annotations.contains(a.annotation_id)) continue;
      if (config.human_box_jitter_sd > 0.0) {
        Rng rng(Rng::derive(config.seed, "humanjitter:" + a.annotation_id));
        a.bbox.x_min += rng.normal(0.0, config.human_box_jitter_sd);
        a.bbox.y_min += rng.normal(0.0, config.human_box_jitter_sd);
        a.bbox.x_max += rng.normal(0.0, config.human_box_jitter_sd);
        a.bbox.y_max += rng.normal(0.0, config.human_box_jitter_sd);
        if (a.bbox.x_min >= a.bbox.x_max) a.bbox.x_max = a.bbox.x_min + 1.0;
        if (a.bbox.y_min >= a.bbox.y_max) a.bbox.y_max = a.bbox.y_min + 1.0;
      }
      kept.push_back(std::move(a));
    }
    f.annotations = std::move(kept);
  }

  validate_manifest(out.true_manifest);
  validate_manifest(out.human_manifest);
  return out;
}

namespace {

double pose_miss_extra(const PoseMissSpec& pm, double yaw) {
  const double a = std::abs(yaw);
  if (a <= pm.low_deg) return pm.low_extra;
  if (a >= pm.high_deg) return pm.high_extra;
  const double t = (a - pm.low_deg) / (pm.high_deg - pm.low_deg);
  return pm.low_extra + t * (pm.high_extra - pm.low_extra);
}

}  // namespace

SimulatedDetections simulate_detector(
    const Manifest& truth, const SynthConfig& config, int qp,
    const std::unordered_set<std::string>* hard_annotations) {
  auto it = config.detector.qp_table.find(qp);
  if (it == config.detector.qp_table.end()) {
    throw EvalError("qp " + std::to_string(qp) +
                    " is not in the detector model's table");
  }
  const DetectorQpSpec& qp_spec = it->second;

  SimulatedDetections out;
  for (const FrameRecord& frame : truth.frames) {
    Rng rng(Rng::derive(config.seed,
                        "det:qp" + std::to_string(qp) + ":" + frame.frame_id));
    const std::string cell = ScenarioKey::of(frame).label();
    const double cell_extra =
        cell_value(config.detector.cell_miss_extra, cell, 0.0);

    for (const FaceAnnotation& a : frame.annotations) {
      double miss = qp_spec.miss + cell_extra +
                    pose_miss_extra(config.detector.pose_miss, a.pose.yaw);
      if (hard_annotations != nullptr &&
          hard_annotations->contains(a.annotation_id)) {
        miss += config.detector.hard_face_miss_extra;
      }
      if (rng.bernoulli(std::clamp(miss, 0.0, 1.0))) continue;

      DetectionRecord d;
      d.detection_id = "d_qp" + std::to_string(qp) + "_" + a.annotation_id;
      d.frame_id = frame.frame_id;
      d.bbox = a.bbox;
      d.bbox.x_min += rng.normal(0.0, qp_spec.jitter_sd);
      d.bbox.y_min += rng.normal(0.0, qp_spec.jitter_sd);
      d.bbox.x_max += rng.normal(0.0, qp_spec.jitter_sd);
      d.bbox.y_max += rng.normal(0.0, qp_spec.jitter_sd);
      if (d.bbox.x_min >= d.bbox.x_max) d.bbox.x_max = d.bbox.x_min + 1.0;
      if (d.bbox.y_min >= d.bbox.y_max) d.bbox.y_max = d.bbox.y_min + 1.0;
      for (size_t i = 0; i < 5; ++i) {
        d.landmarks[i] = {a.landmarks[i].x + rng.normal(0.0, qp_spec.jitter_sd),
                          a.landmarks[i].y + rng.normal(0.0, qp_spec.jitter_sd)};
      }
      d.confidence = std::clamp(
          iou(d.bbox, a.bbox) + rng.normal(0.0, config.detector.confidence_noise_sd),
          0.0, 1.0);
      out.provenance[d.detection_id] = a.annotation_id;
      out.detections.push_back(std::move(d));
    }
  }
  return out;
}

EmbeddingSet simulate_embeddings(
    const std::vector<std::pair<std::string, std::string>>& subjects,
    const EmbeddingModelSpec& model, uint64_t seed) {
  const int d = model.dim;
  std::map<std::string, std::vector<double>> centroids;
  const auto centroid_of = [&](const std::string& identity)
      -> const std::vector<double>& {
    auto it = centroids.find(identity);
    if (it != centroids.end()) return it->second;
    Rng rng(Rng::derive(seed, "centroid:" + identity));
    std::vector<double> c(d);
    double norm = 0.0;
    for (double& x : c) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : c) x /= norm;
    return centroids.emplace(identity, std::move(c)).first->second;
  };

  EmbeddingSet set;
  set.dim = static_cast<size_t>(d);
  for (const auto& [ref, identity] : subjects) {
    const std::vector<double>& c = centroid_of(identity);
    std::vector<double> v = c;
    if (model.noise_sd > 0.0) {
      Rng rng(Rng::derive(seed, "embedding:" + ref));
      std::vector<double> g(d);
      double dot = 0.0;
      for (int i = 0; i < d; ++i) {
        g[i] = rng.normal();
        dot += g[i] * c[i];
      }
      double norm = 0.0;
      for (int i = 0; i < d; ++i) {
        v[i] = c[i] + model.noise_sd * (g[i] - dot * c[i]);
        norm += v[i] * v[i];
      }
      norm = std::sqrt(norm);
      for (double& x : v) x /= norm;
    }
    // Normalize in float space so the stored 32-bit vector is unit-norm
    // within the validator's tolerance.
    std::vector<float> f(d);
    for (int i = 0; i < d; ++i) f[i] = static_cast<float>(v[i]);
    double norm = 0.0;
    for (float x : f) norm += static_cast<double>(x) * x;
    norm = std::sqrt(norm);
    for (float& x : f) x = static_cast<float>(x / norm);
    set.add(ref, std::move(f));
  }
  validate_embeddings(set);
  return set;
}

AlteredPoseResult altered_pose_manifest(const Manifest& truth,
                                        const std::vector<double>& bin_edges,
                                        uint64_t seed) {
  std::vector<const FaceAnnotation*> annotations;
  for (const FrameRecord& f : truth.frames) {
    if (f.qp) continue;
    for (const FaceAnnotation& a : f.annotations) annotations.push_back(&a);
  }
  if (annotations.empty()) {
    throw EvalError("altered-pose control: manifest has no source annotations");
  }

  const size_t n_bins = bin_edges.size() - 1;
  AlteredPoseResult result;

  // Per-bin quota from the scarcest occupied yaw bin; empty bins can only
  // be reported, not filled.
  std::vector<size_t> yaw_counts(n_bins, 0);
  for (const FaceAnnotation* a : annotations) {
    ++yaw_counts[bin_index(bin_edges, a->pose.yaw)];
  }
  size_t occupied = 0;
  size_t quota = std::numeric_limits<size_t>::max();
  for (size_t c : yaw_counts) {
    if (c > 0) {
      ++occupied;
      quota = std::min(quota, c);
    }
  }
  const size_t empty_bins = n_bins - occupied;
  if (empty_bins > 0) {
    result.warnings.push_back(
        std::to_string(empty_bins) +
        " yaw bins have no source samples; bins filled as far as possible");
  }
  const int n_select = static_cast<int>(quota * occupied);

  PoseHistogram uniform;
  for (Histogram1D* m : {&uniform.yaw, &uniform.pitch, &uniform.roll}) {
    m->edges = bin_edges;
    m->counts.assign(n_bins, 1.0 / static_cast<double>(n_bins));
  }
  const auto picked = greedy_pose_select(annotations, n_select, uniform,
                                         Rng::derive(seed, "altered_pose"));
  std::unordered_set<std::string> keep;
  for (const FaceAnnotation* a : picked) keep.insert(a->annotation_id);

  result.manifest = truth;
  for (FrameRecord& f : result.manifest.frames) {
    if (f.qp) continue;
    std::erase_if(f.annotations, [&](const FaceAnnotation& a) {
      return !keep.contains(a.annotation_id);
    });
  }
  return result;
}

}  // namespace faceval
