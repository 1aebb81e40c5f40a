#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "faceval/balancer.hpp"
#include "faceval/detection.hpp"
#include "faceval/histogram.hpp"
#include "faceval/io.hpp"
#include "faceval/log.hpp"
#include "faceval/recognition.hpp"
#include "faceval/reconcile.hpp"
#include "faceval/report.hpp"
#include "faceval/synth.hpp"

namespace faceval::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string qp_filename(int qp) {
  return "detections_qp" + std::to_string(qp) + ".jsonl";
}

/// "source" or an integer in [0, 51].
void check_qp_label(const std::string& label) {
  if (label == "source") return;
  int qp = -1;
  try {
    size_t pos = 0;
    qp = std::stoi(label, &pos);
    if (pos != label.size()) qp = -1;
  } catch (const std::exception&) {
    qp = -1;
  }
  if (qp < 0 || qp > 51) {
    throw ValidationError("qp label '" + label +
                          "' must be 'source' or an integer in [0, 51]");
  }
}

std::vector<int> parse_qp_list(const std::string& csv) {
  std::vector<int> qps;
  std::stringstream ss(csv);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    size_t pos = 0;
    int qp;
    try {
      qp = std::stoi(part, &pos);
    } catch (const std::exception&) {
      throw ValidationError("qp list entry '" + part + "' is not an integer");
    }
    if (pos != part.size() || qp < 0 || qp > 51) {
      throw ValidationError("qp list entry '" + part + "' outside [0, 51]");
    }
    qps.push_back(qp);
  }
  if (qps.empty()) throw ValidationError("qp list is empty");
  return qps;
}

std::string substitute(std::string templ, const std::string& key,
                       const std::string& value) {
  const std::string token = "{" + key + "}";
  size_t pos;
  while ((pos = templ.find(token)) != std::string::npos) {
    templ.replace(pos, token.size(), value);
  }
  return templ;
}

struct GtChoice {
  Manifest manifest;
  std::string label;  // "human" | "reconciled"
};

/// Resolves which manifest acts as ground truth. Default: the reconciled
/// one when it was provided, otherwise the human manifest.
GtChoice resolve_gt(const std::string& manifest_path,
                    const std::string& reconciled_path, std::string gt) {
  if (gt.empty()) gt = reconciled_path.empty() ? "human" : "reconciled";
  if (gt != "human" && gt != "reconciled") {
    throw ValidationError("--gt must be 'human' or 'reconciled', got '" + gt +
                          "'");
  }
  if (gt == "reconciled") {
    require_input_file(reconciled_path, "reconciled manifest (--reconciled)");
    return {load_manifest(reconciled_path), "reconciled"};
  }
  require_input_file(manifest_path, "manifest (--manifest)");
  return {load_manifest(manifest_path), "human"};
}

struct SubsetChoice {
  std::optional<SubsetSpec> spec;
  std::unordered_set<std::string> ids;
  std::string id = "full";

  const std::unordered_set<std::string>* selection() const {
    return spec ? &ids : nullptr;
  }
};

SubsetChoice resolve_subset(const std::string& subset_path) {
  SubsetChoice choice;
  if (subset_path.empty()) return choice;
  require_input_file(subset_path, "subset (--subset)");
  choice.spec = load_subset(subset_path);
  choice.ids = selected_annotation_ids(*choice.spec);
  choice.id = choice.spec->subset_id;
  return choice;
}

std::vector<std::string> detection_report_columns() {
  return {"group_axis", "group", "qp", "subset_id", "ap",
          "n_gt",       "n_det", "n_tp", "n_fp",     "n_fn"};
}

void append_detection_rows(CsvTable& csv, const DetectionEvalResult& result,
                           const std::string& axis, const std::string& qp,
                           const std::string& subset_id) {
  for (const GroupDetectionStats& g : result.groups) {
    csv.rows.push_back({axis, g.group, qp, subset_id,
                        g.defined ? format_double(g.ap) : "",
                        std::to_string(g.n_gt), std::to_string(g.n_det),
                        std::to_string(g.n_tp), std::to_string(g.n_fp),
                        std::to_string(g.n_fn)});
  }
  size_t gt = 0, det = 0, tp = 0, fp = 0, fn = 0;
  for (const GroupDetectionStats& g : result.groups) {
    gt += g.n_gt;
    det += g.n_det;
    tp += g.n_tp;
    fp += g.n_fp;
    fn += g.n_fn;
  }
  csv.rows.push_back({axis, "mean_over_groups", qp, subset_id,
                      result.mean_defined ? format_double(result.mean_ap) : "",
                      std::to_string(gt), std::to_string(det),
                      std::to_string(tp), std::to_string(fp),
                      std::to_string(fn)});
}

std::vector<std::string> verification_report_columns() {
  return {"group_axis", "group",      "qp",
          "subset_id",  "tpr",        "achieved_fpr",
          "threshold",  "n_genuine",  "n_impostor",
          "n_genuine_missed", "n_impostor_excluded", "policy"};
}

void append_verification_rows(CsvTable& csv, const VerificationReport& report,
                              const std::string& axis, const std::string& qp,
                              const std::string& subset_id) {
  for (const GroupVerificationStats& g : report.groups) {
    csv.rows.push_back({axis, g.group, qp, subset_id, format_double(g.tpr),
                        format_double(g.achieved_fpr),
                        format_double(g.threshold),
                        std::to_string(g.n_genuine),
                        std::to_string(g.n_impostor),
                        std::to_string(g.n_genuine_missed),
                        std::to_string(g.n_impostor_excluded),
                        to_string(report.policy)});
  }
}

ojson plot_series(const std::map<std::string, std::vector<std::pair<std::string, double>>>&
                      by_group) {
  ojson series = ojson::array();
  for (const auto& [group, points] : by_group) {
    ojson s;
    s["group"] = group;
    ojson xs = ojson::array(), ys = ojson::array();
    for (const auto& [x, y] : points) {
      xs.push_back(x);
      ys.push_back(y);
    }
    s["x"] = std::move(xs);
    s["y"] = std::move(ys);
    series.push_back(std::move(s));
  }
  return series;
}

void write_plot(const fs::path& path, const std::string& metric,
                const std::string& axis, const ojson& series,
                const std::vector<std::string>& warnings,
                const ojson& config_echo) {
  ojson doc;
  doc["metric"] = metric;
  doc["x_label"] = "qp";
  doc["group_axis"] = axis;
  doc["series"] = series;
  doc["warnings"] = warnings;
  doc["config"] = config_echo;
  write_text_atomic(path, doc.dump(2) + "\n");
}

}  // namespace

int cmd_synth(const SynthOpts& opts) {
  SynthConfig config;
  if (opts.config_path.empty()) {
    config = default_synth_config();
  } else {
    require_input_file(opts.config_path, "synth config (--config)");
    const std::string text = read_text(opts.config_path);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(opts.config_path + ": " + e.what());
    }
    // Accept either a bare generator config or a run config holding one
    // under "synth".
    if (doc.is_object() && doc.contains("synth")) {
      config = synth_config_from_json_text(doc["synth"].dump(), opts.config_path);
    } else {
      config = synth_config_from_json_text(text, opts.config_path);
    }
  }
  if (opts.seed) config.seed = *opts.seed;
  validate_synth_config(config);

  const fs::path out(opts.out_dir);
  const SynthTruth truth = generate_truth(config);
  save_manifest(truth.true_manifest, out / "true_manifest.jsonl");
  save_manifest(truth.human_manifest, out / "human_manifest.jsonl");
  save_correspondences(truth.correspondences, out / "correspondences.jsonl");

  // Identity of every annotation, for embedding generation.
  std::map<std::string, std::string> identity_of;
  std::vector<std::pair<std::string, std::string>> subjects;
  for (const FrameRecord& f : truth.true_manifest.frames) {
    for (const FaceAnnotation& a : f.annotations) {
      identity_of[a.annotation_id] = a.identity_id;
      subjects.emplace_back(a.annotation_id, a.identity_id);
    }
  }

  ojson provenance;
  for (const auto& [qp, spec] : config.detector.qp_table) {
    (void)spec;
    const SimulatedDetections sim =
        simulate_detector(truth.true_manifest, config, qp, &truth.hard_annotations);
    save_detections(sim.detections, out / qp_filename(qp));
    ojson prov_qp;
    for (const auto& [det, ann] : sim.provenance) {
      prov_qp[det] = ann;
      subjects.emplace_back(det, identity_of.at(ann));
    }
    provenance["qp" + std::to_string(qp)] = std::move(prov_qp);
  }

  const EmbeddingSet embeddings =
      simulate_embeddings(subjects, config.embedding, config.seed);
  save_embeddings_jsonl(embeddings, out / "embeddings.jsonl");

  ojson sidecar;
  sidecar["config"] = ojson::parse(synth_config_to_json(config));
  ojson homs;
  for (const auto& [label, h] : truth.homographies) {
    ojson mat = ojson::array();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) mat.push_back(h(r, c));
    }
    homs[label] = std::move(mat);
  }
  sidecar["homographies"] = std::move(homs);
  std::vector<std::string> hard(truth.hard_annotations.begin(),
                                truth.hard_annotations.end());
  std::sort(hard.begin(), hard.end());
  sidecar["hard_annotations"] = hard;
  sidecar["provenance"] = std::move(provenance);
  size_t n_annotations = 0;
  for (const FrameRecord& f : truth.true_manifest.frames) {
    n_annotations += f.annotations.size();
  }
  sidecar["counts"] = ojson{{"frames", truth.true_manifest.frames.size()},
                            {"annotations", n_annotations}};
  write_text_atomic(out / "truth.json", sidecar.dump(2) + "\n");

  std::vector<std::string> warnings;
  if (!opts.altered_pose_out.empty()) {
    AlteredPoseResult altered = altered_pose_manifest(
        truth.true_manifest, uniform_pose_edges(opts.altered_pose_bins),
        config.seed);
    save_manifest(altered.manifest, opts.altered_pose_out);
    warnings.insert(warnings.end(), altered.warnings.begin(),
                    altered.warnings.end());
  }
  return finish_with_warnings(warnings);
}

int cmd_balance(const BalanceOpts& opts) {
  require_input_file(opts.manifest, "manifest (--manifest)");
  const Manifest manifest = load_manifest(opts.manifest);

  BalanceConfig config;
  config.cells = axis_from_string(opts.axis);
  if (opts.k != "auto") {
    try {
      size_t pos = 0;
      config.k = std::stoi(opts.k, &pos);
      if (pos != opts.k.size()) throw std::invalid_argument(opts.k);
    } catch (const std::exception&) {
      throw ValidationError("--k must be 'auto' or a positive integer, got '" +
                            opts.k + "'");
    }
  }
  config.pose_bin_edges = uniform_pose_edges(opts.pose_bins);
  config.pose_tolerance = opts.pose_tolerance;
  config.rng_seed = opts.seed;
  config.pose_mode = pose_mode_from_string(opts.pose_mode);
  validate_balance_config(config);

  const DisjointSubsetsResult result =
      extract_disjoint_subsets(manifest, config, opts.subsets);

  const fs::path out(opts.out_dir);
  std::vector<std::string> warnings;
  ojson summary;
  ojson ids = ojson::array();
  for (const SubsetSpec& spec : result.subsets) {
    char name[32];
    std::snprintf(name, sizeof(name), "%s.json", spec.subset_id.c_str());
    save_subset(spec, out / name);
    ids.push_back(spec.subset_id);
    for (const std::string& w : spec.warnings) {
      warnings.push_back(spec.subset_id + ": " + w);
    }
  }
  summary["subsets"] = std::move(ids);
  if (result.insufficient_data) {
    summary["insufficient_data"] = *result.insufficient_data;
    warnings.push_back(*result.insufficient_data);
  }
  summary["warnings"] = warnings;
  summary["config"] = ojson{{"axis", opts.axis},
                            {"k", opts.k},
                            {"subsets", opts.subsets},
                            {"pose_mode", opts.pose_mode},
                            {"pose_bins", opts.pose_bins},
                            {"pose_tolerance", opts.pose_tolerance},
                            {"seed", opts.seed},
                            {"manifest", opts.manifest}};
  write_text_atomic(out / "balance_summary.json", summary.dump(2) + "\n");
  return finish_with_warnings(warnings);
}

int cmd_reconcile(const ReconcileOpts& opts) {
  require_input_file(opts.manifest, "manifest (--manifest)");
  require_input_file(opts.correspondences,
                     "correspondences (--correspondences)");
  const Manifest manifest = load_manifest(opts.manifest);
  const std::vector<Correspondence> matches =
      load_correspondences(opts.correspondences);

  RansacConfig ransac;
  ransac.inlier_threshold_px = opts.ransac_threshold_px;
  ransac.max_iterations = opts.ransac_max_iterations;
  ransac.confidence = opts.ransac_confidence;
  ransac.min_inliers = opts.ransac_min_inliers;
  ransac.rng_seed = opts.seed;
  validate_ransac_config(ransac);

  const HomographyStore store =
      estimate_homographies(manifest, matches, ransac, opts.per_capture);
  const ReconcileResult result =
      reconcile_manifest(manifest, store, opts.dedup_iou);

  const fs::path out(opts.out_dir);
  save_manifest(result.manifest, out / "reconciled_manifest.jsonl");
  save_homography_store(store, out / "homographies.json");

  std::vector<std::string> warnings = result.warnings;
  ojson summary;
  ojson conflicts = ojson::array();
  for (const ConflictRecord& c : result.conflicts) {
    conflicts.push_back(ojson{{"capture_id", c.capture_id},
                              {"annotation_a", c.annotation_a},
                              {"annotation_b", c.annotation_b},
                              {"identity_a", c.identity_a},
                              {"identity_b", c.identity_b},
                              {"iou", c.iou}});
    warnings.push_back("identity conflict in capture '" + c.capture_id +
                       "': '" + c.annotation_a + "' (" + c.identity_a +
                       ") overlaps '" + c.annotation_b + "' (" + c.identity_b +
                       ")");
  }
  summary["conflicts"] = std::move(conflicts);
  summary["warnings"] = warnings;
  summary["config"] = ojson{{"manifest", opts.manifest},
                            {"correspondences", opts.correspondences},
                            {"dedup_iou", opts.dedup_iou},
                            {"per_capture", opts.per_capture},
                            {"ransac",
                             ojson{{"threshold_px", opts.ransac_threshold_px},
                                   {"max_iterations", opts.ransac_max_iterations},
                                   {"confidence", opts.ransac_confidence},
                                   {"min_inliers", opts.ransac_min_inliers}}},
                            {"seed", opts.seed}};
  write_text_atomic(out / "reconcile_summary.json", summary.dump(2) + "\n");
  return finish_with_warnings(warnings);
}

int cmd_eval_detect(const EvalDetectOpts& opts) {
  check_qp_label(opts.qp_label);
  require_input_file(opts.detections, "detections (--detections)");
  const GtChoice gt = resolve_gt(opts.manifest, opts.reconciled, opts.gt);
  const SubsetChoice subset = resolve_subset(opts.subset);
  const std::vector<DetectionRecord> detections =
      load_detections(opts.detections);
  const GroupAxis axis = axis_from_string(opts.axis);

  const DetectionEvalResult result = map_by_group(
      gt.manifest, detections, axis, opts.iou, subset.selection());

  ojson echo = ojson{{"command", "eval-detect"},
                     {"gt", gt.label},
                     {"detections", opts.detections},
                     {"subset", opts.subset},
                     {"group_axis", opts.axis},
                     {"iou_threshold", opts.iou},
                     {"qp", opts.qp_label}};

  CsvTable csv;
  csv.columns = detection_report_columns();
  append_detection_rows(csv, result, opts.axis, opts.qp_label, subset.id);

  std::map<std::string, std::vector<std::pair<std::string, double>>> by_group;
  for (const GroupDetectionStats& g : result.groups) {
    if (g.defined) by_group[g.group].push_back({opts.qp_label, g.ap});
  }

  const fs::path out(opts.out_dir);
  write_text_atomic(out / "detection_report.csv", csv.to_string());
  write_plot(out / "detection_plot.json", "ap", opts.axis,
             plot_series(by_group), result.warnings, echo);
  return finish_with_warnings(result.warnings);
}

namespace {

void export_alignments(const std::vector<DetectionRecord>& detections,
                       const LandmarkTemplate& tpl, const fs::path& path,
                       std::vector<std::string>& warnings) {
  std::vector<const DetectionRecord*> order;
  for (const DetectionRecord& d : detections) order.push_back(&d);
  std::sort(order.begin(), order.end(),
            [](const DetectionRecord* a, const DetectionRecord* b) {
              return a->detection_id < b->detection_id;
            });
  std::ostringstream outs;
  for (const DetectionRecord* d : order) {
    try {
      const SimilarityTransform t =
          estimate_similarity_transform(d->landmarks, tpl.points);
      ojson v;
      v["detection_id"] = d->detection_id;
      v["s"] = t.scale;
      v["theta"] = t.theta;
      v["tx"] = t.tx;
      v["ty"] = t.ty;
      outs << v.dump() << '\n';
    } catch (const GeometryError& e) {
      warnings.push_back("alignment skipped for detection '" +
                         d->detection_id + "': " + e.what());
    }
  }
  write_text_atomic(path, outs.str());
}

}  // namespace

int cmd_eval_verify(const EvalVerifyOpts& opts) {
  check_qp_label(opts.qp_label);
  if (opts.mode != "perfect" && opts.mode != "e2e") {
    throw ValidationError("--mode must be 'perfect' or 'e2e'");
  }
  if (!(opts.target_fpr > 0.0 && opts.target_fpr <= 0.5)) {
    throw ValidationError("--target-fpr must be in (0, 0.5]");
  }
  require_input_file(opts.embeddings, "embeddings (--embeddings)");
  if (opts.mode == "e2e") {
    require_input_file(opts.detections, "detections (--detections)");
  }
  if (!opts.align_out.empty() && opts.template_path.empty()) {
    throw ValidationError("--align-out requires --template");
  }
  if (!opts.align_out.empty() && opts.mode != "e2e") {
    throw ValidationError("--align-out requires --mode e2e (detector landmarks)");
  }
  if (!opts.template_path.empty()) {
    require_input_file(opts.template_path, "landmark template (--template)");
  }

  const GtChoice gt = resolve_gt(opts.manifest, opts.reconciled, opts.gt);
  const SubsetChoice subset = resolve_subset(opts.subset);
  const EmbeddingSet embeddings = load_embeddings(opts.embeddings);
  const GroupAxis axis = axis_from_string(opts.axis);
  const PairPolicy pair_policy = pair_policy_from_string(opts.pair_policy);
  const MissPolicy miss_policy = miss_policy_from_string(opts.miss_policy);

  VerificationReport report;
  std::vector<DetectionRecord> detections;
  if (opts.mode == "perfect") {
    report = verify_perfect_detection(gt.manifest, subset.selection(),
                                      embeddings, axis, opts.target_fpr,
                                      pair_policy);
  } else {
    detections = load_detections(opts.detections);
    report = verify_end_to_end(gt.manifest, subset.selection(), detections,
                               embeddings, opts.iou, axis, opts.target_fpr,
                               miss_policy, pair_policy);
  }

  std::vector<std::string> warnings = report.warnings;
  if (!opts.align_out.empty()) {
    const LandmarkTemplate tpl = load_landmark_template(opts.template_path);
    export_alignments(detections, tpl, opts.align_out, warnings);
  }

  ojson echo = ojson{{"command", opts.mode == "e2e" ? "eval-e2e" : "eval-verify"},
                     {"mode", opts.mode},
                     {"gt", gt.label},
                     {"embeddings", opts.embeddings},
                     {"detections", opts.detections},
                     {"subset", opts.subset},
                     {"group_axis", opts.axis},
                     {"target_fpr", opts.target_fpr},
                     {"iou_threshold", opts.iou},
                     {"miss_policy", opts.miss_policy},
                     {"pair_policy", opts.pair_policy},
                     {"qp", opts.qp_label}};

  CsvTable csv;
  csv.columns = verification_report_columns();
  append_verification_rows(csv, report, opts.axis, opts.qp_label, subset.id);

  std::map<std::string, std::vector<std::pair<std::string, double>>> by_group;
  for (const GroupVerificationStats& g : report.groups) {
    by_group[g.group].push_back({opts.qp_label, g.tpr});
  }

  const fs::path out(opts.out_dir);
  write_text_atomic(out / "verification_report.csv", csv.to_string());
  ojson plot;
  plot["metric"] = "tpr_at_fpr";
  plot["target_fpr"] = opts.target_fpr;
  plot["x_label"] = "qp";
  plot["group_axis"] = opts.axis;
  plot["series"] = plot_series(by_group);
  plot["unmatched_detections"] = report.unmatched_detections;
  plot["warnings"] = warnings;
  plot["config"] = echo;
  write_text_atomic(out / "verification_plot.json", plot.dump(2) + "\n");
  return finish_with_warnings(warnings);
}

int cmd_sweep(const SweepOpts& opts) {
  const std::vector<int> qps = parse_qp_list(opts.qp_list);
  if (opts.metric != "detect" && opts.metric != "e2e" && opts.metric != "both") {
    throw ValidationError("--metric must be 'detect', 'e2e' or 'both'");
  }
  const bool want_detect = opts.metric != "e2e";
  const bool want_e2e = opts.metric != "detect";
  if (opts.detections_pattern.find("{qp}") == std::string::npos) {
    throw ValidationError("--detections must contain a {qp} placeholder");
  }
  if (want_e2e) {
    require_input_file(opts.embeddings, "embeddings (--embeddings)");
  }
  if (!(opts.target_fpr > 0.0 && opts.target_fpr <= 0.5)) {
    throw ValidationError("--target-fpr must be in (0, 0.5]");
  }

  // Optional encoder shim: outputs are opaque inputs for external
  // detector runs, never consumed here.
  if (!opts.encoder_cmd.empty()) {
    if (opts.encoder_input.empty() || opts.encoder_output_pattern.empty()) {
      throw ValidationError(
          "--encoder-cmd requires --encoder-input and --encoder-output");
    }
    require_input_file(opts.encoder_input, "encoder input (--encoder-input)");
    for (int qp : qps) {
      std::string cmd = substitute(opts.encoder_cmd, "qp", std::to_string(qp));
      cmd = substitute(cmd, "input", opts.encoder_input);
      cmd = substitute(cmd, "output",
                       substitute(opts.encoder_output_pattern, "qp",
                                  std::to_string(qp)));
      log_info("encoder shim: " + cmd);
      if (std::system(cmd.c_str()) != 0) {
        throw ValidationError("encoder command failed for qp " +
                              std::to_string(qp));
      }
    }
  }

  // Every per-qp input must exist before any evaluation starts.
  std::vector<std::string> missing;
  std::map<int, std::string> det_paths;
  for (int qp : qps) {
    const std::string path =
        substitute(opts.detections_pattern, "qp", std::to_string(qp));
    det_paths[qp] = path;
    if (!fs::exists(path)) missing.push_back(std::to_string(qp));
  }
  if (!missing.empty()) {
    std::string list;
    for (size_t i = 0; i < missing.size(); ++i) {
      if (i) list += ", ";
      list += missing[i];
    }
    throw ValidationError("missing detections for qp(s): " + list);
  }

  const GtChoice gt = resolve_gt(opts.manifest, opts.reconciled, opts.gt);
  const SubsetChoice subset = resolve_subset(opts.subset);
  const GroupAxis axis = axis_from_string(opts.axis);
  EmbeddingSet embeddings;
  if (want_e2e) embeddings = load_embeddings(opts.embeddings);
  const PairPolicy pair_policy = pair_policy_from_string(opts.pair_policy);
  const MissPolicy miss_policy = miss_policy_from_string(opts.miss_policy);

  std::vector<std::string> warnings;
  CsvTable csv;
  csv.columns = {"metric", "group_axis", "group", "qp", "subset_id", "value"};
  // (metric, group) -> [(qp, value)]
  std::map<std::string, std::map<std::string, std::vector<std::pair<std::string, double>>>>
      series;

  for (int qp : qps) {
    const std::vector<DetectionRecord> detections =
        load_detections(det_paths.at(qp));
    const std::string qp_str = std::to_string(qp);
    if (want_detect) {
      const DetectionEvalResult result = map_by_group(
          gt.manifest, detections, axis, opts.iou, subset.selection());
      for (const GroupDetectionStats& g : result.groups) {
        if (!g.defined) continue;
        csv.rows.push_back({"ap", opts.axis, g.group, qp_str, subset.id,
                            format_double(g.ap)});
        series["ap"][g.group].push_back({qp_str, g.ap});
      }
      for (const std::string& w : result.warnings) {
        warnings.push_back("qp " + qp_str + ": " + w);
      }
    }
    if (want_e2e) {
      const VerificationReport report = verify_end_to_end(
          gt.manifest, subset.selection(), detections, embeddings, opts.iou,
          axis, opts.target_fpr, miss_policy, pair_policy);
      for (const GroupVerificationStats& g : report.groups) {
        csv.rows.push_back({"tpr_at_fpr", opts.axis, g.group, qp_str,
                            subset.id, format_double(g.tpr)});
        series["tpr_at_fpr"][g.group].push_back({qp_str, g.tpr});
      }
      for (const std::string& w : report.warnings) {
        warnings.push_back("qp " + qp_str + ": " + w);
      }
    }
  }

  ojson echo = ojson{{"command", "sweep"},
                     {"metric", opts.metric},
                     {"gt", gt.label},
                     {"detections_pattern", opts.detections_pattern},
                     {"embeddings", opts.embeddings},
                     {"subset", opts.subset},
                     {"group_axis", opts.axis},
                     {"iou_threshold", opts.iou},
                     {"target_fpr", opts.target_fpr},
                     {"miss_policy", opts.miss_policy},
                     {"pair_policy", opts.pair_policy},
                     {"qp_list", qps}};

  const fs::path out(opts.out_dir);
  write_text_atomic(out / "sweep_report.csv", csv.to_string());
  ojson plot;
  plot["x_label"] = "qp";
  plot["group_axis"] = opts.axis;
  ojson metrics = ojson::array();
  for (const auto& [metric, by_group] : series) {
    ojson m;
    m["metric"] = metric;
    m["series"] = plot_series(by_group);
    metrics.push_back(std::move(m));
  }
  plot["metrics"] = std::move(metrics);
  plot["warnings"] = warnings;
  plot["config"] = echo;
  write_text_atomic(out / "sweep_plot.json", plot.dump(2) + "\n");
  return finish_with_warnings(warnings);
}

}  // namespace faceval::cli
