#include "faceval/recognition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <unordered_map>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "faceval/report.hpp"

namespace faceval {

Point SimilarityTransform::apply(const Point& p) const {
  const double c = std::cos(theta), s = std::sin(theta);
  return Point{scale * (c * p.x - s * p.y) + tx,
               scale * (s * p.x + c * p.y) + ty};
}

SimilarityTransform estimate_similarity_transform(const Landmarks& src,
                                                  const Landmarks& dst) {
  constexpr size_t n = 5;
  for (size_t i = 0; i < n; ++i) {
    if (!std::isfinite(src[i].x) || !std::isfinite(src[i].y) ||
        !std::isfinite(dst[i].x) || !std::isfinite(dst[i].y)) {
      throw GeometryError("similarity fit: points must be finite");
    }
  }
  Eigen::Vector2d mu_src = Eigen::Vector2d::Zero();
  Eigen::Vector2d mu_dst = Eigen::Vector2d::Zero();
  for (size_t i = 0; i < n; ++i) {
    mu_src += Eigen::Vector2d(src[i].x, src[i].y);
    mu_dst += Eigen::Vector2d(dst[i].x, dst[i].y);
  }
  mu_src /= n;
  mu_dst /= n;

  double var_src = 0.0;
  Eigen::Matrix2d sigma = Eigen::Matrix2d::Zero();
  for (size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d x = Eigen::Vector2d(src[i].x, src[i].y) - mu_src;
    const Eigen::Vector2d y = Eigen::Vector2d(dst[i].x, dst[i].y) - mu_dst;
    var_src += x.squaredNorm();
    sigma += y * x.transpose();
  }
  var_src /= n;
  sigma /= n;
  if (var_src < 1e-12) {
    throw GeometryError("similarity fit: source points are coincident");
  }

  Eigen::JacobiSVD<Eigen::Matrix2d> svd(
      sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix2d u = svd.matrixU();
  const Eigen::Matrix2d v = svd.matrixV();
  Eigen::Matrix2d s_fix = Eigen::Matrix2d::Identity();
  if ((u * v.transpose()).determinant() < 0.0) s_fix(1, 1) = -1.0;

  const Eigen::Matrix2d r = u * s_fix * v.transpose();
  const double scale =
      (svd.singularValues().asDiagonal().toDenseMatrix() * s_fix).trace() /
      var_src;
  if (!(scale > 0.0)) {
    throw GeometryError("similarity fit: non-positive scale (degenerate input)");
  }
  const Eigen::Vector2d t = mu_dst - scale * r * mu_src;

  SimilarityTransform out;
  out.scale = scale;
  out.theta = std::atan2(r(1, 0), r(0, 0));
  out.tx = t(0);
  out.ty = t(1);
  return out;
}

LandmarkTemplate load_landmark_template(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  LandmarkTemplate tpl;
  tpl.width = doc.at("width").get<double>();
  tpl.height = doc.at("height").get<double>();
  const auto& pts = doc.at("points");
  if (!pts.is_array() || pts.size() != 5) {
    throw ParseError(path.string() + ": 'points' must hold five [x, y] pairs");
  }
  for (size_t i = 0; i < 5; ++i) {
    tpl.points[i] = {pts[i][0].get<double>(), pts[i][1].get<double>()};
  }
  if (!(tpl.width > 0.0) || !(tpl.height > 0.0)) {
    throw ValidationError(path.string() + ": template width/height must be positive");
  }
  return tpl;
}

std::string to_string(PairPolicy policy) {
  return policy == PairPolicy::within_group ? "within_group" : "all";
}

PairPolicy pair_policy_from_string(const std::string& s) {
  if (s == "within_group") return PairPolicy::within_group;
  if (s == "all") return PairPolicy::all;
  throw ValidationError("unknown pair policy '" + s + "'");
}

std::vector<PairSubject> collect_pair_subjects(
    const Manifest& manifest, GroupAxis axis,
    const std::unordered_set<std::string>* selected) {
  std::vector<PairSubject> subjects;
  for (const FrameRecord& f : manifest.frames) {
    for (const FaceAnnotation& a : f.annotations) {
      if (selected != nullptr && !selected->contains(a.annotation_id)) continue;
      subjects.push_back({a.annotation_id, a.identity_id,
                          group_label(f, axis), ScenarioKey::of(f).label()});
    }
  }
  std::sort(subjects.begin(), subjects.end(),
            [](const PairSubject& a, const PairSubject& b) {
              return a.annotation_id < b.annotation_id;
            });
  return subjects;
}

std::vector<PairRecord> generate_pairs(const std::vector<PairSubject>& subjects,
                                       PairPolicy policy, uint64_t ceiling) {
  std::map<std::string, std::vector<const PairSubject*>> groups;
  if (policy == PairPolicy::within_group) {
    for (const PairSubject& s : subjects) groups[s.group].push_back(&s);
  } else {
    for (const PairSubject& s : subjects) groups["all"].push_back(&s);
  }

  uint64_t count = 0;
  for (const auto& [label, members] : groups) {
    const uint64_t n = members.size();
    count += n * (n - 1) / 2;
  }
  if (count > ceiling) {
    throw EvalError("pair count " + std::to_string(count) +
                    " exceeds the configured ceiling of " +
                    std::to_string(ceiling));
  }

  std::vector<PairRecord> pairs;
  pairs.reserve(count);
  for (const auto& [label, members] : groups) {
    for (size_t i = 0; i < members.size(); ++i) {
      for (size_t j = i + 1; j < members.size(); ++j) {
        pairs.push_back({members[i]->annotation_id, members[j]->annotation_id,
                         members[i]->identity_id == members[j]->identity_id,
                         label, members[i]->cell, members[j]->cell});
      }
    }
  }
  return pairs;
}

double cosine_score(const std::vector<float>& a, const std::vector<float>& b) {
  double dot = 0.0;
  const size_t n = std::min(a.size(), b.size());
  for (size_t i = 0; i < n; ++i) {
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return dot;
}

TprResult tpr_at_fpr(const std::vector<double>& genuine,
                     const std::vector<double>& impostor, double target_fpr) {
  if (genuine.empty() || impostor.empty()) {
    throw EvalError("tpr_at_fpr: empty score set");
  }
  if (!(target_fpr > 0.0 && target_fpr < 1.0)) {
    throw ValidationError("target FPR must be in (0, 1)");
  }

  TprResult result;
  if (static_cast<double>(impostor.size()) < 1.0 / target_fpr) {
    result.warnings.push_back(
        "resolution warning: " + std::to_string(impostor.size()) +
        " impostor pairs cannot resolve FPR " + format_double(target_fpr));
  }

  std::vector<double> gen_sorted = genuine;
  std::vector<double> imp_sorted = impostor;
  std::sort(gen_sorted.begin(), gen_sorted.end());
  std::sort(imp_sorted.begin(), imp_sorted.end());

  // Candidate thresholds: every distinct finite observed score, ascending.
  std::vector<double> candidates;
  candidates.reserve(gen_sorted.size() + imp_sorted.size());
  for (double s : gen_sorted) {
    if (std::isfinite(s)) candidates.push_back(s);
  }
  for (double s : imp_sorted) {
    if (std::isfinite(s)) candidates.push_back(s);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  const auto count_ge = [](const std::vector<double>& sorted, double t) {
    return static_cast<double>(
        sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), t));
  };
  const double n_imp = static_cast<double>(imp_sorted.size());
  const double n_gen = static_cast<double>(gen_sorted.size());

  for (double t : candidates) {
    const double fpr = count_ge(imp_sorted, t) / n_imp;
    if (fpr <= target_fpr) {
      result.threshold = t;
      result.achieved_fpr = fpr;
      result.tpr = count_ge(gen_sorted, t) / n_gen;
      return result;
    }
  }

  // No observed threshold reaches the target: report the operating point
  // with the lowest achievable FPR and flag it.
  result.degenerate = true;
  if (candidates.empty()) {
    result.threshold = std::numeric_limits<double>::infinity();
    result.achieved_fpr = 0.0;
    result.tpr = 0.0;
  } else {
    const double t = candidates.back();
    result.threshold = t;
    result.achieved_fpr = count_ge(imp_sorted, t) / n_imp;
    result.tpr = count_ge(gen_sorted, t) / n_gen;
  }
  result.warnings.push_back(
      "degenerate threshold: no observed score reaches the target FPR");
  return result;
}

std::string to_string(MissPolicy policy) {
  return policy == MissPolicy::genuine_fail ? "genuine_fail" : "exclude_genuine";
}

MissPolicy miss_policy_from_string(const std::string& s) {
  if (s == "genuine_fail") return MissPolicy::genuine_fail;
  if (s == "exclude_genuine") return MissPolicy::exclude_genuine;
  throw ValidationError("unknown miss policy '" + s + "'");
}

namespace {

struct GroupScores {
  std::vector<double> genuine;
  std::vector<double> impostor;
  size_t n_genuine_missed = 0;
  size_t n_impostor_excluded = 0;
};

VerificationReport finalize_report(std::map<std::string, GroupScores>& by_group,
                                   double target_fpr, MissPolicy policy,
                                   PairPolicy pair_policy) {
  VerificationReport report;
  report.policy = policy;
  report.pair_policy = pair_policy;
  for (auto& [label, scores] : by_group) {
    if (scores.genuine.empty() || scores.impostor.empty()) {
      report.warnings.push_back("group '" + label +
                                "': no scorable genuine/impostor pairs, skipped");
      continue;
    }
    TprResult r = tpr_at_fpr(scores.genuine, scores.impostor, target_fpr);
    for (std::string& w : r.warnings) {
      report.warnings.push_back("group '" + label + "': " + std::move(w));
    }
    report.groups.push_back({label, r.tpr, r.achieved_fpr, r.threshold,
                             scores.genuine.size(), scores.impostor.size(),
                             scores.n_genuine_missed,
                             scores.n_impostor_excluded, r.degenerate});
  }
  return report;
}

}  // namespace

VerificationReport verify_perfect_detection(
    const Manifest& manifest, const std::unordered_set<std::string>* selected,
    const EmbeddingSet& embeddings, GroupAxis axis, double target_fpr,
    PairPolicy pair_policy) {
  const auto subjects = collect_pair_subjects(manifest, axis, selected);
  std::unordered_map<std::string, const std::vector<float>*> reps;
  reps.reserve(subjects.size());
  for (const PairSubject& s : subjects) {
    const std::vector<float>* vec = embeddings.find(s.annotation_id);
    if (vec == nullptr) {
      throw EvalError("missing embedding for annotation '" + s.annotation_id +
                      "'");
    }
    reps.emplace(s.annotation_id, vec);
  }

  std::map<std::string, GroupScores> by_group;
  for (const PairRecord& p : generate_pairs(subjects, pair_policy)) {
    const double score = cosine_score(*reps.at(p.a), *reps.at(p.b));
    GroupScores& g = by_group[p.group];
    (p.genuine ? g.genuine : g.impostor).push_back(score);
  }
  return finalize_report(by_group, target_fpr, MissPolicy::genuine_fail,
                         pair_policy);
}

VerificationReport verify_end_to_end(
    const Manifest& manifest, const std::unordered_set<std::string>* selected,
    const std::vector<DetectionRecord>& detections,
    const EmbeddingSet& embeddings, double iou_threshold, GroupAxis axis,
    double target_fpr, MissPolicy miss_policy, PairPolicy pair_policy) {
  const auto frames_by_id = frame_index(manifest);
  std::unordered_map<std::string, std::vector<DetectionRecord>> dets_by_frame;
  size_t off_manifest = 0;
  for (const DetectionRecord& d : detections) {
    if (!frames_by_id.contains(d.frame_id)) {
      ++off_manifest;
      continue;
    }
    dets_by_frame[d.frame_id].push_back(d);
  }
  if (off_manifest > 0 && selected == nullptr) {
    throw ValidationError(std::to_string(off_manifest) +
                          " detections reference frames absent from the manifest");
  }

  // Resolve each annotation to its matched detection's embedding. Frames
  // without a selected subject sit outside the evaluation entirely.
  std::unordered_map<std::string, const std::vector<float>*> reps;
  size_t unmatched = 0;
  for (const FrameRecord& frame : manifest.frames) {
    if (selected != nullptr) {
      bool any_selected = false;
      for (const FaceAnnotation& a : frame.annotations) {
        any_selected |= selected->contains(a.annotation_id);
      }
      if (!any_selected) continue;
    }
    auto it = dets_by_frame.find(frame.frame_id);
    static const std::vector<DetectionRecord> kNone;
    const auto& frame_dets = it == dets_by_frame.end() ? kNone : it->second;
    if (frame_dets.empty() && frame.annotations.empty()) continue;
    const MatchResult mr = match_detections(frame_dets, frame, iou_threshold);
    unmatched += mr.unmatched_detections.size();
    for (const MatchedPair& m : mr.matches) {
      const std::vector<float>* vec = embeddings.find(m.detection_id);
      if (vec == nullptr) {
        throw EvalError("missing embedding for matched detection '" +
                        m.detection_id + "'");
      }
      reps.emplace(m.annotation_id, vec);
    }
  }

  const auto subjects = collect_pair_subjects(manifest, axis, selected);
  std::map<std::string, GroupScores> by_group;
  for (const PairRecord& p : generate_pairs(subjects, pair_policy)) {
    GroupScores& g = by_group[p.group];
    auto ita = reps.find(p.a);
    auto itb = reps.find(p.b);
    const bool both = ita != reps.end() && itb != reps.end();
    if (both) {
      const double score = cosine_score(*ita->second, *itb->second);
      (p.genuine ? g.genuine : g.impostor).push_back(score);
      continue;
    }
    if (p.genuine) {
      ++g.n_genuine_missed;
      if (miss_policy == MissPolicy::genuine_fail) {
        g.genuine.push_back(-std::numeric_limits<double>::infinity());
      }
    } else {
      ++g.n_impostor_excluded;
    }
  }

  VerificationReport report =
      finalize_report(by_group, target_fpr, miss_policy, pair_policy);
  report.unmatched_detections = unmatched;
  return report;
}

}  // namespace faceval
