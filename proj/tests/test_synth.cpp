#include <doctest.h>

#include "faceval/detection.hpp"
#include "faceval/histogram.hpp"
#include "faceval/io.hpp"
#include "faceval/recognition.hpp"
#include "faceval/reconcile.hpp"
#include "faceval/synth.hpp"
#include "helpers.hpp"

using namespace faceval;
using namespace faceval::testing;

namespace {

SynthConfig small_config(uint64_t seed) {
  SynthConfig c = default_synth_config();
  c.seed = seed;
  c.n_identities = 4;
  c.occupants_per_capture = 2;
  c.frames_per_identity_cell = 6;
  c.embedding.dim = 32;
  return c;
}

size_t annotation_count(const Manifest& m) {
  size_t n = 0;
  for (const auto& f : m.frames) n += f.annotations.size();
  return n;
}

}  // namespace

TEST_CASE("generation is deterministic given the seed") {
  const SynthConfig config = small_config(7);
  const SynthTruth a = generate_truth(config);
  const SynthTruth b = generate_truth(config);
  CHECK(a.true_manifest == b.true_manifest);
  CHECK(a.human_manifest == b.human_manifest);
  CHECK(manifest_to_jsonl(a.true_manifest) == manifest_to_jsonl(b.true_manifest));
  CHECK(a.correspondences.size() == b.correspondences.size());

  const auto da = simulate_detector(a.true_manifest, config, 30);
  const auto db = simulate_detector(b.true_manifest, config, 30);
  CHECK(da.detections == db.detections);

  std::vector<std::pair<std::string, std::string>> subjects;
  for (const auto& f : a.true_manifest.frames) {
    for (const auto& ann : f.annotations) {
      subjects.emplace_back(ann.annotation_id, ann.identity_id);
    }
  }
  const auto ea = simulate_embeddings(subjects, config.embedding, config.seed);
  const auto eb = simulate_embeddings(subjects, config.embedding, config.seed);
  CHECK(ea.records == eb.records);

  SUBCASE("a different seed changes the data") {
    SynthConfig other = config;
    other.seed = 8;
    CHECK_FALSE(generate_truth(other).true_manifest == a.true_manifest);
  }
}

TEST_CASE("the default scale is 10 identities x 12 cells x 20 frames") {
  SynthConfig config = default_synth_config();
  config.correspondences.per_capture = 4;
  const SynthTruth truth = generate_truth(config);
  CHECK(annotation_count(truth.true_manifest) == 2400);
  // Every identity holds exactly 20 annotations in each of the 12 cells.
  std::map<std::string, std::map<std::string, int>> counts;
  for (const auto& f : truth.true_manifest.frames) {
    const std::string cell = ScenarioKey::of(f).label();
    for (const auto& a : f.annotations) counts[a.identity_id][cell] += 1;
  }
  CHECK(counts.size() == 10);
  for (const auto& [identity, by_cell] : counts) {
    CHECK(by_cell.size() == 12);
    for (const auto& [cell, n] : by_cell) CHECK(n == 20);
  }
}

TEST_CASE("no pathology means the human manifest equals the truth") {
  const SynthConfig config = small_config(3);
  const SynthTruth truth = generate_truth(config);
  CHECK(truth.human_manifest == truth.true_manifest);
  CHECK(truth.hard_annotations.empty());
}

TEST_CASE("the drop pathology empties the affected human cells") {
  SynthConfig config = small_config(4);
  config.occupants_per_capture = 4;
  config.frames_per_identity_cell = 30;
  for (Location loc : {Location::console, Location::rearview, Location::wheel}) {
    config.inconsistency[ScenarioKey{loc, Modality::rgb, Illumination::indoor}
                             .label()] = 0.75;
  }
  const SynthTruth truth = generate_truth(config);

  size_t true_affected = 0, human_affected = 0, true_ir = 0, human_ir = 0;
  for (size_t i = 0; i < truth.true_manifest.frames.size(); ++i) {
    const FrameRecord& tf = truth.true_manifest.frames[i];
    const FrameRecord& hf = truth.human_manifest.frames[i];
    if (tf.illumination == Illumination::indoor && tf.modality == Modality::rgb) {
      true_affected += tf.annotations.size();
      human_affected += hf.annotations.size();
    }
    if (tf.modality == Modality::ir) {
      true_ir += tf.annotations.size();
      human_ir += hf.annotations.size();
    }
  }
  // Roughly one of four occupants survives annotation in the affected
  // cells; the IR side is untouched, which is what reconciliation
  // later exploits.
  CHECK(true_affected > 0);
  const double keep_rate =
      static_cast<double>(human_affected) / static_cast<double>(true_affected);
  CHECK(keep_rate > 0.15);
  CHECK(keep_rate < 0.35);
  CHECK(human_ir == true_ir);
}

TEST_CASE("exact correspondences reproduce the known homography entrywise") {
  SynthConfig config = small_config(15);
  config.correspondences.per_capture = 12;
  config.correspondences.noise_sd = 0.0;
  config.correspondences.outlier_fraction = 0.0;
  const SynthTruth truth = generate_truth(config);
  RansacConfig ransac;
  ransac.rng_seed = 2;
  const HomographyStore store =
      estimate_homographies(truth.human_manifest, truth.correspondences, ransac);
  for (const auto& [loc, h] : truth.homographies) {
    CHECK((store.by_location.at(loc).matrix - h).cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("the reconciler closes the loop on synthetic pathologies") {
  SynthConfig config = small_config(5);
  config.occupants_per_capture = 4;
  config.frames_per_identity_cell = 12;
  config.correspondences.per_capture = 30;
  config.correspondences.noise_sd = 0.5;
  config.correspondences.outlier_fraction = 0.30;
  for (Location loc : {Location::console, Location::rearview, Location::wheel}) {
    config.inconsistency[ScenarioKey{loc, Modality::rgb, Illumination::indoor}
                             .label()] = 0.75;
  }
  const SynthTruth truth = generate_truth(config);

  RansacConfig ransac;
  ransac.rng_seed = 11;
  const HomographyStore store =
      estimate_homographies(truth.human_manifest, truth.correspondences, ransac);
  for (const auto& [loc, h] : truth.homographies) {
    REQUIRE(store.by_location.contains(loc));
    // Recovery is judged by reprojection against the generating map.
    double err = 0.0;
    int count = 0;
    for (int gx = 0; gx <= 7; ++gx) {
      for (int gy = 0; gy <= 7; ++gy) {
        const Point p{gx * 1280.0 / 7, gy * 800.0 / 7};
        const Point a = warp_point(store.by_location.at(loc).matrix, p);
        const Point b = warp_point(h, p);
        err += std::hypot(a.x - b.x, a.y - b.y);
        ++count;
      }
    }
    CHECK(err / count < 1.0);
  }

  const ReconcileResult rec =
      reconcile_manifest(truth.human_manifest, store, 0.5);

  std::map<std::string, size_t> true_counts, rec_counts;
  for (const auto& f : truth.true_manifest.frames) {
    if (f.modality == Modality::ir) {
      true_counts[f.capture_id] = f.annotations.size();
    }
  }
  for (const auto& f : rec.manifest.frames) {
    if (f.modality == Modality::ir) {
      rec_counts[f.capture_id] = f.annotations.size();
    }
  }
  size_t agree = 0;
  for (const auto& [capture, n] : true_counts) {
    if (rec_counts.at(capture) == n) ++agree;
  }
  CHECK(static_cast<double>(agree) / true_counts.size() >= 0.99);
}

TEST_CASE("detector simulation endpoints") {
  SynthConfig config = small_config(6);
  config.detector.qp_table = {{0, {0.0, 0.0}}, {50, {1.0, 0.0}}};
  const SynthTruth truth = generate_truth(config);

  SUBCASE("no miss and no jitter reproduces the ground truth exactly") {
    const auto sim = simulate_detector(truth.true_manifest, config, 0);
    CHECK(sim.detections.size() == annotation_count(truth.true_manifest));
    const auto index = annotation_index(truth.true_manifest);
    for (const auto& d : sim.detections) {
      const auto [fi, ai] = index.at(sim.provenance.at(d.detection_id));
      CHECK(d.bbox == truth.true_manifest.frames[fi].annotations[ai].bbox);
    }
    const auto eval = map_by_group(truth.true_manifest, sim.detections,
                                   GroupAxis::full_cell, 0.5);
    for (const auto& g : eval.groups) CHECK(g.ap == 1.0);
  }
  SUBCASE("certain miss produces zero detections and zero AP") {
    const auto sim = simulate_detector(truth.true_manifest, config, 50);
    CHECK(sim.detections.empty());
    const auto eval = map_by_group(truth.true_manifest, sim.detections,
                                   GroupAxis::modality, 0.5);
    for (const auto& g : eval.groups) CHECK(g.ap == 0.0);
  }
  SUBCASE("a qp missing from the table is an error") {
    CHECK(throws_with<EvalError>(
        [&] { simulate_detector(truth.true_manifest, config, 33); },
        "33"));
  }
}

TEST_CASE("detection AP degrades monotonically with qp") {
  SynthConfig config = small_config(9);
  config.frames_per_identity_cell = 25;
  const SynthTruth truth = generate_truth(config);
  double previous = 1.1;
  for (int qp : {18, 24, 30, 36, 43, 50}) {
    const auto sim = simulate_detector(truth.true_manifest, config, qp);
    const auto eval = map_by_group(truth.true_manifest, sim.detections,
                                   GroupAxis::illumination, 0.5);
    CHECK(eval.mean_ap <= previous + 0.03);
    previous = eval.mean_ap;
  }
}

TEST_CASE("embedding simulation") {
  EmbeddingModelSpec model;
  model.dim = 64;

  SUBCASE("noiseless embeddings collapse onto the identity centroid") {
    model.noise_sd = 0.0;
    const auto set = simulate_embeddings(
        {{"r1", "ida"}, {"r2", "ida"}, {"r3", "idb"}}, model, 21);
    const double same = cosine_score(*set.find("r1"), *set.find("r2"));
    const double cross = cosine_score(*set.find("r1"), *set.find("r3"));
    CHECK(std::abs(same - 1.0) < 1e-6);
    CHECK(std::abs(cross) < 0.5);
  }
  SUBCASE("near-uniform noise drives verification to chance") {
    model.noise_sd = 50.0;
    std::vector<std::pair<std::string, std::string>> subjects;
    for (int i = 0; i < 10; ++i) {
      for (int s = 0; s < 10; ++s) {
        subjects.emplace_back("r" + std::to_string(i) + "_" + std::to_string(s),
                              "id" + std::to_string(i));
      }
    }
    const auto set = simulate_embeddings(subjects, model, 22);
    std::vector<double> genuine, impostor;
    for (size_t i = 0; i < subjects.size(); ++i) {
      for (size_t j = i + 1; j < subjects.size(); ++j) {
        const double s = cosine_score(*set.find(subjects[i].first),
                                      *set.find(subjects[j].first));
        (subjects[i].second == subjects[j].second ? genuine : impostor)
            .push_back(s);
      }
    }
    const auto r = tpr_at_fpr(genuine, impostor, 0.01);
    CHECK(std::abs(r.tpr - 0.01) < 0.05);
  }
}

TEST_CASE("altered-pose control flattens the yaw histogram") {
  SynthConfig config = small_config(12);
  config.frames_per_identity_cell = 25;
  const SynthTruth truth = generate_truth(config);
  const auto edges = uniform_pose_edges(36);
  const AlteredPoseResult altered =
      altered_pose_manifest(truth.true_manifest, edges, 1);

  // The synthetic pose mixture never reaches the extreme bins.
  REQUIRE_FALSE(altered.warnings.empty());
  CHECK(altered.warnings[0].find("filled as far as possible") !=
        std::string::npos);

  PoseHistogram uniform;
  for (Histogram1D* m : {&uniform.yaw, &uniform.pitch, &uniform.roll}) {
    m->edges = edges;
    m->counts.assign(36, 1.0 / 36.0);
  }
  const auto before = compute_pose_histogram(truth.true_manifest, edges);
  const auto after = compute_pose_histogram(altered.manifest, edges);
  CHECK(histogram_distance(after, uniform) <
        histogram_distance(before, uniform));
  CHECK(annotation_count(altered.manifest) > 0);
  CHECK(annotation_count(altered.manifest) <
        annotation_count(truth.true_manifest));
}

TEST_CASE("config validation names the offending field") {
  SynthConfig config = small_config(1);
  SUBCASE("probability above one") {
    config.inconsistency["console:rgb:indoor"] = 1.5;
    CHECK(throws_with<ValidationError>([&] { validate_synth_config(config); },
                                       "inconsistency['console:rgb:indoor']"));
  }
  SUBCASE("occupants must divide identities") {
    config.occupants_per_capture = 3;
    CHECK(throws_with<ValidationError>([&] { validate_synth_config(config); },
                                       "occupants_per_capture"));
  }
  SUBCASE("embedding dimension floor") {
    config.embedding.dim = 4;
    CHECK(throws_with<ValidationError>([&] { validate_synth_config(config); },
                                       "embedding.dim"));
  }
  SUBCASE("bad cell label") {
    config.cell_multipliers["console/rgb/indoor"] = 1.0;
    CHECK(throws_with<ValidationError>([&] { validate_synth_config(config); },
                                       "cell_multipliers"));
  }
}

TEST_CASE("pose-dependent difficulty shows up only on the altered manifest") {
  SynthConfig config = small_config(18);
  config.frames_per_identity_cell = 30;
  config.detector.qp_table = {{30, {0.1, 0.5}}};
  const auto edges = uniform_pose_edges(36);

  const auto evaluate = [&](const PoseMissSpec& pose_miss) {
    SynthConfig arm = config;
    arm.detector.pose_miss = pose_miss;
    const SynthTruth truth = generate_truth(arm);
    const auto sim = simulate_detector(truth.true_manifest, arm, 30);
    const AlteredPoseResult altered =
        altered_pose_manifest(truth.true_manifest, edges, 4);
    // The altered manifest keeps a subset of the true annotations, so
    // detections of removed faces must be ignored, not counted as FPs.
    std::unordered_set<std::string> kept;
    for (const auto& f : altered.manifest.frames) {
      for (const auto& a : f.annotations) kept.insert(a.annotation_id);
    }
    const double ap_original =
        map_by_group(truth.true_manifest, sim.detections, GroupAxis::modality,
                     0.5)
            .mean_ap;
    const double ap_altered =
        map_by_group(truth.true_manifest, sim.detections, GroupAxis::modality,
                     0.5, &kept)
            .mean_ap;
    return std::pair{ap_original, ap_altered};
  };

  SUBCASE("a pose-blind detector scores the same on both") {
    const auto [orig, altered] = evaluate({30.0, 60.0, 0.0, 0.0});
    CHECK(std::abs(orig - altered) < 0.05);
  }
  SUBCASE("a pose-sensitive detector is underestimated on the control") {
    const auto [orig, altered] = evaluate({30.0, 60.0, 0.05, 0.5});
    CHECK(altered < orig - 0.05);
  }
}

TEST_CASE("the shipped config files load and stay in sync") {
  const std::filesystem::path root(FACEVAL_SOURCE_DIR);
  const SynthConfig shipped =
      load_synth_config(root / "configs" / "synth_default.json");
  CHECK(synth_config_to_json(shipped) ==
        synth_config_to_json(default_synth_config()));
  const SynthConfig pathology =
      load_synth_config(root / "configs" / "synth_pathologies.json");
  CHECK(pathology.inconsistency.at("console:rgb:indoor") == 0.75);
  const LandmarkTemplate tpl =
      load_landmark_template(root / "data" / "face_template_112.json");
  CHECK(tpl.width == 112.0);
}

TEST_CASE("synth config JSON round-trips") {
  SynthConfig config = small_config(77);
  config.inconsistency["wheel:rgb:indoor"] = 0.4;
  config.detector.cell_miss_extra["wheel:ir:outdoor"] = 0.2;
  const std::string text = synth_config_to_json(config);
  const SynthConfig loaded = synth_config_from_json_text(text, "inline");
  CHECK(synth_config_to_json(loaded) == text);
}

TEST_CASE("cell multipliers skew per-cell frame counts") {
  SynthConfig config = small_config(13);
  config.cell_multipliers["console:rgb:indoor"] = 2.0;
  config.cell_multipliers["wheel:ir:outdoor"] = 0.5;
  const SynthTruth truth = generate_truth(config);
  std::map<std::string, int> per_cell;
  for (const auto& f : truth.true_manifest.frames) {
    per_cell[ScenarioKey::of(f).label()] +=
        static_cast<int>(f.annotations.size());
  }
  const int base = per_cell.at("console:ir:indoor");
  CHECK(per_cell.at("console:rgb:indoor") == 2 * base);
  CHECK(per_cell.at("wheel:ir:outdoor") == base / 2);
}
