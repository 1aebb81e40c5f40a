#include <benchmark/benchmark.h>

#include <random>

#include "faceval/balancer.hpp"
#include "faceval/detection.hpp"
#include "faceval/homography.hpp"
#include "faceval/recognition.hpp"
#include "faceval/synth.hpp"

using namespace faceval;

namespace {

SynthConfig bench_config() {
  SynthConfig c = default_synth_config();
  c.seed = 1234;
  c.correspondences.per_capture = 0;
  return c;
}

const SynthTruth& bench_truth() {
  static const SynthTruth truth = generate_truth(bench_config());
  return truth;
}

void BM_Iou(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 500.0);
  std::vector<Box> boxes(1024);
  for (Box& b : boxes) {
    const double x = u(rng), y = u(rng);
    b = {x, y, x + 30 + u(rng) / 10, y + 30 + u(rng) / 10};
  }
  size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        iou(boxes[i % boxes.size()], boxes[(i + 7) % boxes.size()]));
    ++i;
  }
}
BENCHMARK(BM_Iou);

void BM_MatchFrame(benchmark::State& state) {
  const int faces = static_cast<int>(state.range(0));
  FrameRecord frame;
  frame.frame_id = "f";
  frame.width = 1920;
  frame.height = 1080;
  std::vector<DetectionRecord> dets;
  for (int i = 0; i < faces; ++i) {
    const double x = 10.0 + 60.0 * i;
    FaceAnnotation a;
    a.annotation_id = "a" + std::to_string(i);
    a.identity_id = "p";
    a.bbox = {x, 10, x + 50, 70};
    frame.annotations.push_back(a);
    DetectionRecord d;
    d.detection_id = "d" + std::to_string(i);
    d.frame_id = "f";
    d.bbox = {x + 2, 12, x + 52, 72};
    d.confidence = 0.5 + 0.4 * (i % 7) / 7.0;
    dets.push_back(d);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(match_detections(dets, frame, 0.5));
  }
}
BENCHMARK(BM_MatchFrame)->Arg(4)->Arg(16);

void BM_AveragePrecision(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::vector<DetectionOutcome> outcomes;
  for (size_t i = 0; i < n; ++i) {
    outcomes.push_back({"d" + std::to_string(i), (rng() % 1000) / 1000.0,
                        (rng() % 3) != 0});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(average_precision(outcomes, n));
  }
}
BENCHMARK(BM_AveragePrecision)->Arg(1000)->Arg(10000);

void BM_RansacHomography(benchmark::State& state) {
  Eigen::Matrix3d truth;
  truth << 1.0, 0.0, 12.0, 0.0, 1.0, -7.0, 1e-5, -8e-6, 1.0;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> span(0.0, 1000.0);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::vector<Correspondence> matches;
  for (int i = 0; i < 200; ++i) {
    Correspondence c;
    c.capture_id = "cap";
    c.src = {span(rng), span(rng)};
    if (i % 4 == 0) {
      c.dst = {span(rng), span(rng)};
    } else {
      const Point m = warp_point(truth, c.src);
      c.dst = {m.x + noise(rng), m.y + noise(rng)};
    }
    matches.push_back(c);
  }
  RansacConfig config;
  config.rng_seed = 7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_homography(matches, config));
  }
}
BENCHMARK(BM_RansacHomography);

void BM_TprAtFpr(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> genuine(n / 10), impostor(n);
  for (double& s : genuine) s = u(rng) + 0.5;
  for (double& s : impostor) s = u(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tpr_at_fpr(genuine, impostor, 0.01));
  }
}
BENCHMARK(BM_TprAtFpr)->Arg(10000)->Arg(100000);

void BM_PlanBalancedSubset(benchmark::State& state) {
  const Manifest& manifest = bench_truth().true_manifest;
  BalanceConfig config;
  config.k = 8;
  config.rng_seed = 9;
  for (auto _ : state) {
    benchmark::DoNotOptimize(plan_balanced_subset(manifest, config));
  }
}
BENCHMARK(BM_PlanBalancedSubset);

void BM_SimulateDetector(benchmark::State& state) {
  const SynthConfig config = bench_config();
  const Manifest& manifest = bench_truth().true_manifest;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_detector(manifest, config, 30, nullptr));
  }
}
BENCHMARK(BM_SimulateDetector);

}  // namespace

BENCHMARK_MAIN();
