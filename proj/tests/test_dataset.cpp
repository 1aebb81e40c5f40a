#include <doctest.h>

#include <fstream>
#include <set>

#include "faceval/dataset.hpp"
#include "faceval/io.hpp"
#include "faceval/report.hpp"
#include "helpers.hpp"

using namespace faceval;
using namespace faceval::testing;

namespace {

Manifest two_frame_manifest() {
  Manifest m;
  m.frames.push_back(make_frame(
      "f1", "cap1", Location::console, Modality::rgb, Illumination::indoor,
      {make_annotation("a1", "alice", {10, 20, 110, 140}, 5.5, -2.25, 0.125)}));
  FrameRecord f2 = make_frame("f2", "cap1", Location::console, Modality::ir,
                              Illumination::indoor,
                              {make_annotation("a2", "bob", {30, 40, 90, 120},
                                               -44.5, 10, -3)});
  f2.qp = 30;
  m.frames.push_back(f2);
  return m;
}

}  // namespace

TEST_CASE("manifest round-trips through JSONL byte-for-byte") {
  const Manifest m = two_frame_manifest();
  TempDir dir("manifest_rt");
  const auto path = dir.path() / "m.jsonl";
  save_manifest(m, path);

  const Manifest loaded = load_manifest(path);
  CHECK(loaded == m);
  CHECK(manifest_to_jsonl(loaded) == manifest_to_jsonl(m));
}

TEST_CASE("load_manifest accepts a two-frame file") {
  TempDir dir("manifest_ok");
  const auto path = dir.path() / "m.jsonl";
  save_manifest(two_frame_manifest(), path);
  CHECK(load_manifest(path).frames.size() == 2);
}

TEST_CASE("load_manifest rejects invariant violations with the offending id") {
  TempDir dir("manifest_bad");
  const auto path = dir.path() / "m.jsonl";

  SUBCASE("inverted bbox names the annotation") {
    Manifest m = two_frame_manifest();
    m.frames[0].annotations[0].bbox = {110, 20, 10, 140};
    save_manifest(m, path);
    CHECK(throws_with<ValidationError>([&] { load_manifest(path); }, "a1"));
  }
  SUBCASE("duplicate frame_id") {
    Manifest m = two_frame_manifest();
    m.frames[1].frame_id = "f1";
    m.frames[1].annotations[0].annotation_id = "a9";
    save_manifest(m, path);
    CHECK(throws_with<ValidationError>([&] { load_manifest(path); },
                                       "duplicate frame_id 'f1'"));
  }
  SUBCASE("duplicate annotation_id") {
    Manifest m = two_frame_manifest();
    m.frames[1].annotations[0].annotation_id = "a1";
    save_manifest(m, path);
    CHECK(throws_with<ValidationError>([&] { load_manifest(path); },
                                       "duplicate annotation_id 'a1'"));
  }
  SUBCASE("qp out of range") {
    Manifest m = two_frame_manifest();
    m.frames[1].qp = 52;
    save_manifest(m, path);
    CHECK(throws_with<ValidationError>([&] { load_manifest(path); }, "qp"));
  }
  SUBCASE("capture frames must agree on location and illumination") {
    Manifest m = two_frame_manifest();
    m.frames[1].location = Location::wheel;
    save_manifest(m, path);
    CHECK(throws_with<ValidationError>([&] { load_manifest(path); }, "cap1"));
  }
  SUBCASE("pose angle outside [-180, 180]") {
    Manifest m = two_frame_manifest();
    m.frames[0].annotations[0].pose.yaw = 181.0;
    save_manifest(m, path);
    CHECK(throws_with<ValidationError>([&] { load_manifest(path); }, "yaw"));
  }
}

TEST_CASE("parse errors carry the line number") {
  TempDir dir("manifest_parse");
  const auto path = dir.path() / "m.jsonl";
  save_manifest(two_frame_manifest(), path);
  {
    std::ofstream app(path, std::ios::app);
    app << "{not json\n";
  }
  CHECK(throws_with<ParseError>([&] { load_manifest(path); }, ":3:"));
}

TEST_CASE("group_by_scenario partitions frames") {
  Manifest m;
  m.frames.push_back(make_frame("f1", "c1", Location::console, Modality::rgb,
                                Illumination::indoor));
  m.frames.push_back(make_frame("f2", "c1", Location::console, Modality::ir,
                                Illumination::indoor));
  m.frames.push_back(make_frame("f3", "c2", Location::console, Modality::rgb,
                                Illumination::outdoor));
  m.frames.push_back(make_frame("f4", "c2", Location::console, Modality::ir,
                                Illumination::outdoor));

  SUBCASE("modality axis splits 2/2") {
    const auto groups = group_by_scenario(m, GroupAxis::modality);
    REQUIRE(groups.size() == 2);
    CHECK(groups.at("rgb").size() == 2);
    CHECK(groups.at("ir").size() == 2);
  }
  SUBCASE("location axis on console-only frames is a single group") {
    const auto groups = group_by_scenario(m, GroupAxis::location);
    REQUIRE(groups.size() == 1);
    CHECK(groups.at("console").size() == 4);
  }
  SUBCASE("full_cell covers the occupied triples and sums to the total") {
    // Three distinct triples: add one more cell.
    Manifest m3 = m;
    m3.frames.resize(3);
    const auto groups = group_by_scenario(m3, GroupAxis::full_cell);
    CHECK(groups.size() == 3);
    size_t total = 0;
    for (const auto& [label, idx] : groups) total += idx.size();
    CHECK(total == m3.frames.size());
  }
  SUBCASE("every axis yields a partition on a random manifest") {
    std::mt19937_64 rng(99);
    Manifest big;
    for (int i = 0; i < 60; ++i) {
      big.frames.push_back(make_frame(
          "f" + std::to_string(i), "c" + std::to_string(i),
          static_cast<Location>(rng() % 3), static_cast<Modality>(rng() % 2),
          static_cast<Illumination>(rng() % 2)));
    }
    for (GroupAxis axis : {GroupAxis::illumination, GroupAxis::modality,
                           GroupAxis::location, GroupAxis::full_cell}) {
      std::set<size_t> seen;
      size_t total = 0;
      for (const auto& [label, idx] : group_by_scenario(big, axis)) {
        total += idx.size();
        seen.insert(idx.begin(), idx.end());
      }
      CHECK(total == big.frames.size());
      CHECK(seen.size() == big.frames.size());
    }
  }
}

TEST_CASE("detections file round-trips and validates") {
  TempDir dir("det_io");
  const auto path = dir.path() / "d.jsonl";
  std::vector<DetectionRecord> dets;
  DetectionRecord d;
  d.detection_id = "d1";
  d.frame_id = "f1";
  d.bbox = {1, 2, 3, 4};
  d.confidence = 0.75;
  d.landmarks = make_annotation("x", "x", d.bbox).landmarks;
  dets.push_back(d);
  save_detections(dets, path);
  CHECK(load_detections(path) == dets);

  SUBCASE("confidence outside [0,1] is rejected") {
    dets[0].confidence = 1.5;
    save_detections(dets, path);
    CHECK(throws_with<ValidationError>([&] { load_detections(path); }, "d1"));
  }
  SUBCASE("duplicate detection ids are rejected") {
    dets.push_back(dets[0]);
    save_detections(dets, path);
    CHECK(throws_with<ValidationError>([&] { load_detections(path); },
                                       "duplicate detection_id"));
  }
}

TEST_CASE("embeddings round-trip in both encodings") {
  EmbeddingSet set;
  set.dim = 4;
  set.add("a", {0.5f, 0.5f, 0.5f, 0.5f});
  set.add("b", {1.0f, 0.0f, 0.0f, 0.0f});
  validate_embeddings(set);

  TempDir dir("emb_io");
  const auto jsonl = dir.path() / "e.jsonl";
  const auto binary = dir.path() / "e.fev";
  save_embeddings_jsonl(set, jsonl);
  save_embeddings_binary(set, binary);

  for (const auto& path : {jsonl, binary}) {
    const EmbeddingSet loaded = load_embeddings(path);
    REQUIRE(loaded.records.size() == 2);
    CHECK(loaded.dim == 4);
    CHECK(*loaded.find("a") == set.records[0].second);
    CHECK(*loaded.find("b") == set.records[1].second);
    CHECK(loaded.find("missing") == nullptr);
  }

  SUBCASE("non-unit vectors are rejected") {
    set.records[0].second = {1.0f, 1.0f, 0.0f, 0.0f};
    save_embeddings_jsonl(set, jsonl);
    CHECK(throws_with<ValidationError>([&] { load_embeddings(jsonl); },
                                       "unit-norm"));
  }
  SUBCASE("dimension changes within a file are rejected") {
    set.records[1].second = {1.0f, 0.0f, 0.0f};
    save_embeddings_jsonl(set, jsonl);
    CHECK(throws_with<ValidationError>([&] { load_embeddings(jsonl); },
                                       "dimension"));
  }
  SUBCASE("truncated binary file is a parse error") {
    save_embeddings_binary(set, binary);
    auto content = read_text(binary);
    content.resize(content.size() - 3);
    write_text_atomic(binary, content);
    CHECK(throws_with<ParseError>([&] { load_embeddings(binary); },
                                  "truncated"));
  }
}
