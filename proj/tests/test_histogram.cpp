#include <doctest.h>

#include <random>

#include "faceval/histogram.hpp"
#include "helpers.hpp"

using namespace faceval;
using namespace faceval::testing;

namespace {

std::vector<FaceAnnotation> annotations_with_yaw(const std::vector<double>& yaws) {
  std::vector<FaceAnnotation> anns;
  for (size_t i = 0; i < yaws.size(); ++i) {
    anns.push_back(make_annotation("a" + std::to_string(i), "x",
                                   {0, 0, 10, 10}, yaws[i]));
  }
  return anns;
}

PoseHistogram random_histogram(std::mt19937_64& rng, int bins) {
  std::vector<FaceAnnotation> anns;
  std::uniform_real_distribution<double> u(-180.0, 180.0);
  const int n = 5 + static_cast<int>(rng() % 40);
  for (int i = 0; i < n; ++i) {
    anns.push_back(make_annotation("a" + std::to_string(i), "x", {0, 0, 1, 1},
                                   u(rng), u(rng), u(rng)));
  }
  return compute_pose_histogram(anns, uniform_pose_edges(bins));
}

}  // namespace

TEST_CASE("a value on an interior edge lands in the higher bin") {
  const auto h = compute_pose_histogram(annotations_with_yaw({0.0}),
                                        {-180.0, 0.0, 180.0});
  CHECK(h.yaw.counts == std::vector<double>{0.0, 1.0});
}

TEST_CASE("symmetric samples split evenly") {
  const auto h = compute_pose_histogram(annotations_with_yaw({-90.0, 90.0}),
                                        {-180.0, 0.0, 180.0});
  CHECK(h.yaw.counts == std::vector<double>{0.5, 0.5});
}

TEST_CASE("the boundary values fall into the first and last bins") {
  const auto h = compute_pose_histogram(annotations_with_yaw({-180.0, 180.0}),
                                        uniform_pose_edges(36));
  CHECK(h.yaw.counts.front() == 0.5);
  CHECK(h.yaw.counts.back() == 0.5);
}

TEST_CASE("uniform random yaw fills 36 bins evenly (direct-count oracle)") {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> u(-180.0, 180.0);
  std::vector<double> yaws(1000);
  for (double& y : yaws) y = u(rng);

  const auto edges = uniform_pose_edges(36);
  const auto h = compute_pose_histogram(annotations_with_yaw(yaws), edges);

  // Oracle: count directly against the same edge rule.
  std::vector<double> expected(36, 0.0);
  for (double y : yaws) {
    size_t b = 35;
    for (size_t i = 1; i < edges.size(); ++i) {
      if (y < edges[i]) {
        b = i - 1;
        break;
      }
    }
    expected[b] += 1.0 / 1000.0;
  }
  for (size_t b = 0; b < 36; ++b) {
    CHECK(h.yaw.counts[b] == doctest::Approx(expected[b]).epsilon(1e-12));
    CHECK(std::abs(h.yaw.counts[b] - 1.0 / 36.0) <= 0.05);
  }
}

TEST_CASE("marginals sum to one") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto h = random_histogram(rng, 12);
    for (const Histogram1D* m : {&h.yaw, &h.pitch, &h.roll}) {
      double sum = 0.0;
      for (double c : m->counts) sum += c;
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("empty input is an error") {
  CHECK(throws_with<ValidationError>(
      [] {
        compute_pose_histogram(std::vector<FaceAnnotation>{},
                               uniform_pose_edges(36));
      },
      "zero annotations"));
}

TEST_CASE("histogram_distance on the worked example is 2/3") {
  // yaw marginals [1,0] vs [0,1]; pitch and roll equal.
  const auto a = compute_pose_histogram(
      annotations_with_yaw({-90.0}), {-180.0, 0.0, 180.0});
  const auto b = compute_pose_histogram(
      annotations_with_yaw({90.0}), {-180.0, 0.0, 180.0});
  CHECK(histogram_distance(a, a) == 0.0);
  CHECK(histogram_distance(a, b) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("histogram_distance satisfies the metric axioms") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_histogram(rng, 8);
    const auto b = random_histogram(rng, 8);
    const auto c = random_histogram(rng, 8);
    const double ab = histogram_distance(a, b);
    const double ba = histogram_distance(b, a);
    const double ac = histogram_distance(a, c);
    const double cb = histogram_distance(c, b);
    CHECK(ab >= 0.0);
    CHECK(ab <= 2.0);
    CHECK(ab == ba);
    CHECK(ab <= ac + cb + 1e-12);
    if (ab == 0.0) CHECK(a == b);
  }
}

TEST_CASE("histogram_distance requires identical edges") {
  const auto a = compute_pose_histogram(annotations_with_yaw({0.0}),
                                        uniform_pose_edges(4));
  const auto b = compute_pose_histogram(annotations_with_yaw({0.0}),
                                        uniform_pose_edges(8));
  CHECK(throws_with<ValidationError>([&] { histogram_distance(a, b); },
                                     "edges"));
}
