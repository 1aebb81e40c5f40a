#include <doctest.h>

#include "faceval/io.hpp"
#include "faceval/reconcile.hpp"
#include "helpers.hpp"

using namespace faceval;
using namespace faceval::testing;

namespace {

Eigen::Matrix3d affine_offset() {
  Eigen::Matrix3d h;
  h << 1.010, -0.004, 12.0, 0.004, 1.010, -7.0, 0.0, 0.0, 1.0;
  return h;
}

}  // namespace

TEST_CASE("one RGB face against four IR faces yields four consistent faces") {
  // The classic low-light situation: the RGB stream carries a single
  // annotation while the IR stream shows all four occupants.
  std::vector<FaceAnnotation> rgb{
      make_annotation("r1", "p1", {100, 100, 200, 220})};
  std::vector<FaceAnnotation> ir;
  for (int i = 0; i < 4; ++i) {
    const double x = 100 + 300.0 * i;
    ir.push_back(make_annotation("i" + std::to_string(i + 1),
                                 "p" + std::to_string(i + 1),
                                 {x, 100, x + 100, 220}));
  }
  const auto rec =
      reconcile_capture(rgb, ir, Eigen::Matrix3d::Identity(), 0.5);
  CHECK(rec.ir.size() == 4);
  CHECK(rec.rgb.size() == 4);
  CHECK(rec.conflicts.empty());
  for (const FaceAnnotation& a : rec.ir) {
    CHECK(a.source == AnnotationSource::reconciled);
  }
}

TEST_CASE("identical sets under the identity map dedup one-to-one") {
  std::vector<FaceAnnotation> anns{
      make_annotation("a1", "p1", {0, 0, 50, 60}),
      make_annotation("a2", "p2", {200, 10, 260, 80})};
  const auto rec =
      reconcile_capture(anns, anns, Eigen::Matrix3d::Identity(), 0.5);
  CHECK(rec.ir.size() == 2);
  CHECK(rec.rgb.size() == 2);
  for (size_t i = 0; i < rec.ir.size(); ++i) {
    CHECK(rec.ir[i].bbox == anns[i].bbox);
  }
}

TEST_CASE("disjoint faces union to the combined count") {
  std::vector<FaceAnnotation> rgb{
      make_annotation("r1", "p1", {0, 0, 50, 60}),
      make_annotation("r2", "p2", {100, 0, 150, 60})};
  std::vector<FaceAnnotation> ir{
      make_annotation("i1", "p3", {300, 300, 360, 380})};
  const auto rec =
      reconcile_capture(rgb, ir, Eigen::Matrix3d::Identity(), 0.5);
  // Brute-force check that no pair overlaps at the threshold.
  for (const auto& a : rec.ir) {
    for (const auto& b : rec.ir) {
      if (a.annotation_id != b.annotation_id) CHECK(iou(a.bbox, b.bbox) < 0.5);
    }
  }
  CHECK(rec.ir.size() == 3);
  CHECK(rec.rgb.size() == 3);
}

TEST_CASE("overlapping faces with different identities become conflicts") {
  std::vector<FaceAnnotation> rgb{
      make_annotation("r1", "alice", {0, 0, 100, 120})};
  std::vector<FaceAnnotation> ir{
      make_annotation("i1", "bob", {2, 2, 100, 120})};
  const auto rec =
      reconcile_capture(rgb, ir, Eigen::Matrix3d::Identity(), 0.5);
  REQUIRE(rec.conflicts.size() == 1);
  CHECK(rec.conflicts[0].identity_a != rec.conflicts[0].identity_b);
  // Not silently merged: both faces survive.
  CHECK(rec.ir.size() == 2);
}

TEST_CASE("the survivor is the larger box and keeps its landmarks") {
  FaceAnnotation small = make_annotation("small", "p1", {0, 0, 80, 100});
  FaceAnnotation large = make_annotation("large", "p1", {-5, -5, 90, 110});
  const auto rec = reconcile_capture({small}, {large},
                                     Eigen::Matrix3d::Identity(), 0.5);
  REQUIRE(rec.ir.size() == 1);
  CHECK(rec.ir[0].annotation_id == "large");
  CHECK(rec.ir[0].bbox == large.bbox);
  CHECK(rec.ir[0].landmarks == large.landmarks);
}

TEST_CASE("reconciling its own output is a no-op") {
  const Eigen::Matrix3d h = affine_offset();
  std::vector<FaceAnnotation> rgb{
      make_annotation("r1", "p1", {100, 100, 200, 220}, 10, 2, -1),
      make_annotation("r2", "p2", {400, 120, 510, 240})};
  std::vector<FaceAnnotation> ir{
      // p1 annotated in IR too (offset geometry), p3 only in IR.
      make_annotation("i1", "p1", warp_box(h, {101, 99, 201, 221})),
      make_annotation("i3", "p3", {800, 100, 900, 230})};

  const auto first = reconcile_capture(rgb, ir, h, 0.5);
  CHECK(first.ir.size() == 3);
  const auto second = reconcile_capture(first.rgb, first.ir, h, 0.5);
  CHECK(second.ir == first.ir);
  CHECK(second.rgb == first.rgb);
}

TEST_CASE("RGB and IR outputs always have the same cardinality") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  const Eigen::Matrix3d h = affine_offset();
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<FaceAnnotation> rgb, ir;
    for (int i = 0; i < static_cast<int>(rng() % 5); ++i) {
      const double x = u(rng), y = u(rng);
      rgb.push_back(make_annotation("r" + std::to_string(i),
                                    "p" + std::to_string(rng() % 4),
                                    {x, y, x + 60, y + 80}));
    }
    for (int i = 0; i < static_cast<int>(rng() % 5); ++i) {
      const double x = u(rng), y = u(rng);
      ir.push_back(make_annotation("i" + std::to_string(i),
                                   "p" + std::to_string(rng() % 4),
                                   {x, y, x + 60, y + 80}));
    }
    const auto rec = reconcile_capture(rgb, ir, h, 0.5);
    CHECK(rec.ir.size() == rec.rgb.size());
    CHECK(rec.ir.size() <= rgb.size() + ir.size());
  }
}

TEST_CASE("reconcile_manifest pairs frames per capture") {
  Manifest m;
  m.frames.push_back(make_frame(
      "f_rgb", "cap1", Location::console, Modality::rgb, Illumination::indoor,
      {make_annotation("r1", "p1", {100, 100, 200, 220})}));
  m.frames.push_back(make_frame(
      "f_ir", "cap1", Location::console, Modality::ir, Illumination::indoor,
      {make_annotation("i1", "p1",
                       warp_box(affine_offset(), {100, 100, 200, 220})),
       make_annotation("i2", "p2", {700, 100, 800, 220})}));
  // A single-modality capture passes through with a warning.
  m.frames.push_back(make_frame(
      "f_solo", "cap2", Location::wheel, Modality::ir, Illumination::outdoor,
      {make_annotation("s1", "p9", {10, 10, 90, 110})}));

  HomographyStore store;
  Homography h;
  h.matrix = affine_offset();
  store.by_location["console"] = h;

  const ReconcileResult result = reconcile_manifest(m, store, 0.5);
  CHECK(result.conflicts.empty());
  REQUIRE(result.manifest.frames.size() == 3);
  CHECK(result.manifest.frames[0].annotations.size() == 2);
  CHECK(result.manifest.frames[1].annotations.size() == 2);
  CHECK(result.manifest.frames[2].annotations.size() == 1);
  CHECK(result.manifest.frames[2].annotations[0].source ==
        AnnotationSource::reconciled);
  bool solo_warned = false;
  for (const auto& w : result.warnings) {
    solo_warned |= w.find("cap2") != std::string::npos;
  }
  CHECK(solo_warned);

  SUBCASE("a second pass changes nothing") {
    const ReconcileResult again =
        reconcile_manifest(result.manifest, store, 0.5);
    CHECK(manifest_to_jsonl(again.manifest) ==
          manifest_to_jsonl(result.manifest));
  }
  SUBCASE("a missing homography is an error") {
    HomographyStore empty;
    CHECK(throws_with<ValidationError>(
        [&] { reconcile_manifest(m, empty, 0.5); }, "cap1"));
  }
  SUBCASE("two source frames of one modality in a capture are rejected") {
    Manifest bad = m;
    bad.frames.push_back(make_frame("f_rgb2", "cap1", Location::console,
                                    Modality::rgb, Illumination::indoor));
    CHECK(throws_with<ValidationError>(
        [&] { reconcile_manifest(bad, store, 0.5); }, "multiple rgb"));
  }
}

TEST_CASE("estimate_homographies pools by location via the manifest") {
  Manifest m;
  m.frames.push_back(make_frame("f1", "cap1", Location::console, Modality::rgb,
                                Illumination::indoor));
  m.frames.push_back(make_frame("f2", "cap2", Location::console, Modality::rgb,
                                Illumination::outdoor));

  const Eigen::Matrix3d truth = affine_offset();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  std::vector<Correspondence> matches;
  for (int i = 0; i < 30; ++i) {
    Correspondence c;
    c.capture_id = i % 2 == 0 ? "cap1" : "cap2";
    c.src = {u(rng), u(rng)};
    c.dst = warp_point(truth, c.src);
    matches.push_back(c);
  }

  RansacConfig config;
  config.rng_seed = 4;
  const HomographyStore store = estimate_homographies(m, matches, config);
  REQUIRE(store.by_location.contains("console"));
  CHECK((store.by_location.at("console").matrix - truth).cwiseAbs().maxCoeff() <
        1e-6);

  SUBCASE("per-capture mode keys by capture id") {
    const HomographyStore pc = estimate_homographies(m, matches, config, true);
    CHECK(pc.by_capture.contains("cap1"));
    CHECK(pc.by_capture.contains("cap2"));
  }
  SUBCASE("an unknown capture id is an error") {
    matches[0].capture_id = "capX";
    CHECK(throws_with<ValidationError>(
        [&] { estimate_homographies(m, matches, config); }, "capX"));
  }
}
