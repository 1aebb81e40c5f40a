#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "common.hpp"

namespace faceval::cli {

struct SynthOpts {
  std::string config_path;
  std::string out_dir;
  std::optional<uint64_t> seed;
  std::string altered_pose_out;
  int altered_pose_bins = 36;
};
int cmd_synth(const SynthOpts& opts);

struct BalanceOpts {
  std::string manifest;
  std::string out_dir;
  std::string k = "auto";
  int subsets = 1;
  std::string axis = "full_cell";
  std::string pose_mode = "preserve_original";
  int pose_bins = 36;
  double pose_tolerance = 0.15;
  uint64_t seed = 0;
};
int cmd_balance(const BalanceOpts& opts);

struct ReconcileOpts {
  std::string manifest;
  std::string correspondences;
  std::string out_dir;
  double dedup_iou = 0.5;
  bool per_capture = false;
  double ransac_threshold_px = 3.0;
  int ransac_max_iterations = 2000;
  double ransac_confidence = 0.999;
  int ransac_min_inliers = 10;
  uint64_t seed = 0;
};
int cmd_reconcile(const ReconcileOpts& opts);

struct EvalDetectOpts {
  std::string manifest;
  std::string reconciled;  // optional second manifest
  std::string gt;          // "human" | "reconciled"; default depends on inputs
  std::string detections;
  std::string subset;
  std::string out_dir;
  std::string axis = "full_cell";
  double iou = 0.5;
  std::string qp_label = "source";
};
int cmd_eval_detect(const EvalDetectOpts& opts);

struct EvalVerifyOpts {
  std::string manifest;
  std::string reconciled;
  std::string gt;
  std::string subset;
  std::string embeddings;
  std::string detections;  // e2e mode only
  std::string out_dir;
  std::string mode = "perfect";  // "perfect" | "e2e"
  std::string axis = "full_cell";
  double target_fpr = 0.01;
  double iou = 0.5;
  std::string miss_policy = "genuine_fail";
  std::string pair_policy = "within_group";
  std::string qp_label = "source";
  std::string template_path;
  std::string align_out;
};
int cmd_eval_verify(const EvalVerifyOpts& opts);

struct SweepOpts {
  std::string manifest;
  std::string reconciled;
  std::string gt;
  std::string detections_pattern;  // must contain {qp}
  std::string embeddings;          // required for metric e2e/both
  std::string subset;
  std::string out_dir;
  std::string metric = "detect";  // "detect" | "e2e" | "both"
  std::string qp_list = "18,24,30,36,43,50";
  std::string axis = "full_cell";
  double iou = 0.5;
  double target_fpr = 0.01;
  std::string miss_policy = "genuine_fail";
  std::string pair_policy = "within_group";
  // Optional external encoder shim: the template is run once per qp with
  // {qp}, {input} and {output} substituted; outputs are opaque to the
  // toolkit.
  std::string encoder_cmd;
  std::string encoder_input;
  std::string encoder_output_pattern;
};
int cmd_sweep(const SweepOpts& opts);

}  // namespace faceval::cli
